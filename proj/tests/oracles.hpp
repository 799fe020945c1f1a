#pragma once

// Test-only reference implementations, kept independent of the library's
// GEMM/vectorized paths: plain nested loops in double precision, and a
// central finite-difference gradient checker.

#include <cmath>
#include <functional>
#include <vector>

#include "insnn/tensor.hpp"

namespace oracle {

using insnn::Tensor;

inline Tensor conv2d_loops(const Tensor& input, const Tensor& weights, int stride, int padding) {
    const int c_in = input.dim(0), h = input.dim(1), w = input.dim(2);
    const int c_out = weights.dim(0), kh = weights.dim(2), kw = weights.dim(3);
    const int oh = (h + 2 * padding - kh) / stride + 1;
    const int ow = (w + 2 * padding - kw) / stride + 1;
    Tensor out({c_out, oh, ow});
    for (int oc = 0; oc < c_out; ++oc)
        for (int y = 0; y < oh; ++y)
            for (int x = 0; x < ow; ++x) {
                double acc = 0.0;
                for (int ic = 0; ic < c_in; ++ic)
                    for (int ky = 0; ky < kh; ++ky)
                        for (int kx = 0; kx < kw; ++kx) {
                            const int iy = y * stride + ky - padding;
                            const int ix = x * stride + kx - padding;
                            if (iy < 0 || iy >= h || ix < 0 || ix >= w) continue;
                            acc += static_cast<double>(input(ic, iy, ix)) *
                                   weights(oc, ic, ky, kx);
                        }
                out(oc, y, x) = static_cast<float>(acc);
            }
    return out;
}

inline Tensor maxpool2d_loops(const Tensor& input, int window, int stride) {
    const int c = input.dim(0), h = input.dim(1), w = input.dim(2);
    const int oh = (h - window) / stride + 1;
    const int ow = (w - window) / stride + 1;
    Tensor out({c, oh, ow});
    for (int ch = 0; ch < c; ++ch)
        for (int y = 0; y < oh; ++y)
            for (int x = 0; x < ow; ++x) {
                float best = input(ch, y * stride, x * stride);
                for (int ky = 0; ky < window; ++ky)
                    for (int kx = 0; kx < window; ++kx)
                        best = std::max(best, input(ch, y * stride + ky, x * stride + kx));
                out(ch, y, x) = best;
            }
    return out;
}

// Central finite differences of a scalar-valued function with respect to the
// entries of x, evaluated in place.
inline Tensor finite_difference(Tensor& x, const std::function<double()>& f, double h = 1e-2) {
    Tensor grad(x.shape());
    for (std::int64_t i = 0; i < x.numel(); ++i) {
        const float saved = x[i];
        const double step = h * std::max(1.0, std::abs(static_cast<double>(saved)));
        x[i] = static_cast<float>(saved + step);
        const double fp = f();
        x[i] = static_cast<float>(saved - step);
        const double fm = f();
        x[i] = saved;
        grad[i] = static_cast<float>((fp - fm) / (2.0 * step));
    }
    return grad;
}

// Relative max-norm agreement between an analytic and a numeric gradient.
inline double gradient_error(const Tensor& analytic, const Tensor& numeric) {
    double num = 0.0, den = 0.0;
    for (std::int64_t i = 0; i < analytic.numel(); ++i) {
        num = std::max(num, std::abs(static_cast<double>(analytic[i]) - numeric[i]));
        den = std::max({den, std::abs(static_cast<double>(analytic[i])),
                        std::abs(static_cast<double>(numeric[i]))});
    }
    return num / std::max(den, 1e-4);
}

} // namespace oracle
