#include "insnn/analog.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Dense>

namespace insnn::analog {

namespace {

double poly_eval(const CurveModel& m, double w, double x) {
    // Horner over x inside Horner over w on the (deg_w+1) x (deg_x+1) grid.
    double acc = 0.0;
    for (int i = m.deg_w; i >= 0; --i) {
        double row = 0.0;
        for (int j = m.deg_x; j >= 0; --j)
            row = row * x + m.coefficients[static_cast<std::size_t>(i) * (m.deg_x + 1) + j];
        acc = acc * w + row;
    }
    return acc;
}

} // namespace

const char* curve_family_name(CurveFamily f) {
    switch (f) {
        case CurveFamily::ideal: return "ideal";
        case CurveFamily::saturating: return "saturating";
        case CurveFamily::polynomial: return "polynomial";
    }
    return "?";
}

CurveFamily curve_family_from_name(const std::string& name) {
    if (name == "ideal") return CurveFamily::ideal;
    if (name == "saturating") return CurveFamily::saturating;
    if (name == "polynomial") return CurveFamily::polynomial;
    throw ParameterError("unknown curve family '" + name + "'");
}

CurveModel CurveModel::ideal() {
    CurveModel m;
    m.family = CurveFamily::ideal;
    m.v_max = 0.0; // no clamp
    m.v_min = 0.0;
    return m;
}

CurveModel CurveModel::saturating(double v_max, double k) {
    if (v_max <= 0.0 || k <= 0.0)
        throw ParameterError("saturating curve needs v_max > 0 and k > 0");
    CurveModel m;
    m.family = CurveFamily::saturating;
    m.coefficients = {k};
    m.v_max = v_max;
    m.v_min = 0.0;
    return m;
}

double CurveModel::operator()(double w, double x) const {
    switch (family) {
        case CurveFamily::ideal:
            return w * x;
        case CurveFamily::saturating:
            return v_max * (1.0 - std::exp(-coefficients[0] * w * x));
        case CurveFamily::polynomial:
            return poly_eval(*this, w, x);
    }
    return 0.0;
}

double CurveModel::small_signal_gain() const {
    switch (family) {
        case CurveFamily::ideal:
            return 1.0;
        case CurveFamily::saturating:
            return v_max * coefficients[0];
        case CurveFamily::polynomial: {
            // coefficient of the w*x term
            if (deg_w >= 1 && deg_x >= 1)
                return coefficients[static_cast<std::size_t>(deg_x + 1) + 1];
            return 1.0;
        }
    }
    return 1.0;
}

double behavioral_pixel_model(double w, double x, const CurveModel& params) {
    if (!(w >= 0.0) || !std::isfinite(w))
        throw ParameterError("pixel weight must be finite and >= 0, got " + std::to_string(w));
    if (!(x >= 0.0 && x <= 1.0))
        throw ParameterError("pixel input must lie in [0,1], got " + std::to_string(x));
    return params(w, x);
}

FitResult fit_curve(std::span<const CurveSample> samples, CurveFamily family, int deg_w,
                    int deg_x) {
    if (family == CurveFamily::ideal)
        throw ParameterError("the ideal family has no parameters to fit");

    if (family == CurveFamily::polynomial) {
        if (deg_w < 0 || deg_x < 0) throw ParameterError("polynomial degrees must be >= 0");
        const int terms = (deg_w + 1) * (deg_x + 1);
        if (static_cast<int>(samples.size()) < terms)
            throw FitError("need at least " + std::to_string(terms) + " samples to fit " +
                           std::to_string(terms) + " coefficients, got " +
                           std::to_string(samples.size()));

        Eigen::MatrixXd design(samples.size(), terms);
        Eigen::VectorXd target(samples.size());
        for (std::size_t s = 0; s < samples.size(); ++s) {
            double wp = 1.0;
            for (int i = 0; i <= deg_w; ++i) {
                double xp = 1.0;
                for (int j = 0; j <= deg_x; ++j) {
                    design(static_cast<Eigen::Index>(s), i * (deg_x + 1) + j) = wp * xp;
                    xp *= samples[s].x;
                }
                wp *= samples[s].w;
            }
            target(static_cast<Eigen::Index>(s)) = samples[s].volts;
        }

        Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
        if (qr.rank() < terms)
            throw FitError("rank-deficient design matrix: rank " + std::to_string(qr.rank()) +
                           " < " + std::to_string(terms) +
                           " coefficients; sample a wider (w,x) grid");
        Eigen::VectorXd coef = qr.solve(target);

        CurveModel m;
        m.family = CurveFamily::polynomial;
        m.deg_w = deg_w;
        m.deg_x = deg_x;
        m.coefficients.assign(coef.data(), coef.data() + terms);
        double vmax = 0.0;
        for (const auto& s : samples) vmax = std::max(vmax, s.volts);
        m.v_max = vmax;
        m.v_min = 0.0;

        double sq = 0.0;
        for (const auto& s : samples) {
            const double r = m(s.w, s.x) - s.volts;
            sq += r * r;
        }
        return FitResult{std::move(m), std::sqrt(sq / static_cast<double>(samples.size()))};
    }

    // Saturating family: Gauss-Newton on (v_max, k) for v = v_max(1 - e^{-k u}),
    // u = w*x.
    if (samples.size() < 2) throw FitError("need at least 2 samples to fit (v_max, k)");
    double peak = 0.0, slope_num = 0.0, slope_den = 0.0;
    for (const auto& s : samples) {
        peak = std::max(peak, s.volts);
        const double u = s.w * s.x;
        slope_num += u * s.volts;
        slope_den += u * u;
    }
    if (peak <= 0.0 || slope_den <= 0.0)
        throw FitError("degenerate samples: responses or products are all zero");
    double vmax = peak * 1.05;
    double k = std::max(1e-3, (slope_num / slope_den) / vmax);

    for (int iter = 0; iter < 200; ++iter) {
        Eigen::Matrix2d jtj = Eigen::Matrix2d::Zero();
        Eigen::Vector2d jtr = Eigen::Vector2d::Zero();
        for (const auto& s : samples) {
            const double u = s.w * s.x;
            const double e = std::exp(-k * u);
            const double r = vmax * (1.0 - e) - s.volts;
            const double d_vmax = 1.0 - e;
            const double d_k = vmax * u * e;
            jtj(0, 0) += d_vmax * d_vmax;
            jtj(0, 1) += d_vmax * d_k;
            jtj(1, 0) += d_vmax * d_k;
            jtj(1, 1) += d_k * d_k;
            jtr(0) += d_vmax * r;
            jtr(1) += d_k * r;
        }
        if (std::abs(jtj.determinant()) < 1e-300)
            throw FitError("singular normal equations while fitting the saturating family");
        const Eigen::Vector2d step = jtj.ldlt().solve(jtr);
        vmax -= step(0);
        k -= step(1);
        vmax = std::max(vmax, 1e-9);
        k = std::max(k, 1e-9);
        if (step.cwiseAbs().maxCoeff() < 1e-14) break;
    }

    CurveModel m = CurveModel::saturating(vmax, k);
    double sq = 0.0;
    for (const auto& s : samples) {
        const double r = m(s.w, s.x) - s.volts;
        sq += r * r;
    }
    return FitResult{std::move(m), std::sqrt(sq / static_cast<double>(samples.size()))};
}

WeightBanks split_weights(const Tensor& theta_fused) {
    for (std::int64_t i = 0; i < theta_fused.numel(); ++i)
        if (!std::isfinite(theta_fused[i]))
            throw ParameterError("split_weights requires finite entries");
    WeightBanks banks{Tensor(theta_fused.shape()), Tensor(theta_fused.shape())};
    for (std::int64_t i = 0; i < theta_fused.numel(); ++i) {
        banks.positive[i] = std::max(theta_fused[i], 0.0f);
        banks.negative[i] = std::max(-theta_fused[i], 0.0f);
    }
    return banks;
}

Tensor quantize_symmetric(const Tensor& w, int bits, float scale) {
    if (bits == 0) return w;
    if (bits < 2 || bits > 16) throw ParameterError("quantization bits must be 0 or in [2,16]");
    if (!(scale > 0.0f)) throw ParameterError("quantization scale must be > 0");
    const float levels = static_cast<float>((1 << (bits - 1)) - 1);
    const float step = scale / levels;
    Tensor out(w.shape());
    for (std::int64_t i = 0; i < w.numel(); ++i) {
        // round half to even on the integer grid, then clamp to the range
        const float q = std::nearbyintf(w[i] / step);
        out[i] = std::clamp(q, -levels, levels) * step;
    }
    return out;
}

FusedFrontend fuse_bn(const Tensor& theta, const BNParams& bn, double v_th,
                      const FuseOptions& opts) {
    if (theta.rank() != 4)
        throw DimensionError("fuse_bn weights must be [C_out,C_in,kH,kW]");
    const int c_out = theta.dim(0);
    if (bn.gamma.dim(0) != c_out)
        throw DimensionError("BN parameter length " + std::to_string(bn.gamma.dim(0)) +
                             " does not match " + std::to_string(c_out) + " output channels");
    std::vector<double> a, b;
    batchnorm_coefficients(bn.gamma, bn.beta, bn.mu, bn.sigma2, bn.eps, a, b);

    const std::int64_t per_channel = theta.numel() / c_out;
    Tensor fused(theta.shape());
    for (int c = 0; c < c_out; ++c)
        for (std::int64_t i = 0; i < per_channel; ++i)
            fused[c * per_channel + i] =
                static_cast<float>(a[static_cast<std::size_t>(c)]) * theta[c * per_channel + i];

    // Range normalization maps the weights into the analog drive range;
    // the inverse factor rides along in voltage_scale so decisions match.
    double weight_scale = 1.0;
    if (opts.normalize_range) {
        float peak = 0.0f;
        for (std::int64_t i = 0; i < fused.numel(); ++i)
            peak = std::max(peak, std::abs(fused[i]));
        if (peak > 0.0f) {
            weight_scale = opts.drive / static_cast<double>(peak);
            for (std::int64_t i = 0; i < fused.numel(); ++i)
                fused[i] = static_cast<float>(fused[i] * weight_scale);
        }
    }
    if (opts.quant_bits > 0) {
        float peak = 0.0f;
        for (std::int64_t i = 0; i < fused.numel(); ++i)
            peak = std::max(peak, std::abs(fused[i]));
        if (peak > 0.0f) fused = quantize_symmetric(fused, opts.quant_bits, peak);
    }

    FusedFrontend fe;
    fe.banks = split_weights(fused);
    fe.v_th = v_th;
    fe.curve = opts.curve;
    fe.stride = opts.stride;
    fe.padding = opts.padding;
    fe.pool_window = opts.pool_window;
    fe.quant_bits = opts.quant_bits;
    fe.voltage_scale = opts.voltage_scale * opts.curve.small_signal_gain() * weight_scale;
    fe.shift.resize(c_out);
    fe.trip_points.resize(c_out);
    for (int c = 0; c < c_out; ++c) {
        fe.shift[static_cast<std::size_t>(c)] = v_th - b[static_cast<std::size_t>(c)];
        fe.trip_points[static_cast<std::size_t>(c)] =
            fe.voltage_scale * fe.shift[static_cast<std::size_t>(c)];
    }
    return fe;
}

FusedFrontend with_curve(const FusedFrontend& fe, const CurveModel& curve) {
    FusedFrontend out = fe;
    out.curve = curve;
    const double old_gain = fe.curve.small_signal_gain();
    const double rescale = curve.small_signal_gain() / old_gain;
    out.voltage_scale = fe.voltage_scale * rescale;
    for (std::size_t c = 0; c < out.trip_points.size(); ++c)
        out.trip_points[c] = out.voltage_scale * out.shift[c];
    return out;
}

double recommend_drive(const WeightBanks& unit_banks, std::span<const Tensor> probe,
                       const CurveModel& curve, int stride, int padding,
                       double target_fraction, double quantile) {
    if (probe.empty()) throw ParameterError("drive calibration needs probe images");
    if (!(target_fraction > 0.0 && target_fraction < 1.0))
        throw ParameterError("target_fraction must lie in (0,1)");
    if (!curve.clamps()) return 1.0; // unclamped curves have no usable ceiling

    const double target = target_fraction * curve.v_max;

    // Unclamped phase accumulations at a given drive, over every channel and
    // output position of every probe image.
    auto phase_quantile = [&](double d) {
        std::vector<double> sums;
        for (const Tensor& image : probe) {
            const ConvGeometry g = conv_geometry(image.shape(), unit_banks.positive.shape(),
                                                 stride, padding);
            const std::int64_t per =
                static_cast<std::int64_t>(g.in_channels) * g.k_h * g.k_w;
            for (int oc = 0; oc < g.out_channels; ++oc) {
                const float* wp = unit_banks.positive.data() + oc * per;
                const float* wn = unit_banks.negative.data() + oc * per;
                for (int oh = 0; oh < g.out_h; ++oh)
                    for (int ow = 0; ow < g.out_w; ++ow) {
                        double pos = 0.0, neg = 0.0;
                        std::int64_t k = 0;
                        for (int c = 0; c < g.in_channels; ++c)
                            for (int kh = 0; kh < g.k_h; ++kh)
                                for (int kw = 0; kw < g.k_w; ++kw, ++k) {
                                    const int ih = oh * g.stride + kh - g.padding;
                                    const int iw = ow * g.stride + kw - g.padding;
                                    if (ih < 0 || ih >= g.in_h || iw < 0 || iw >= g.in_w)
                                        continue;
                                    const double x =
                                        image(c, ih, iw);
                                    if (wp[k] != 0.0f) pos += curve(d * wp[k], x);
                                    if (wn[k] != 0.0f) neg += curve(d * wn[k], x);
                                }
                        sums.push_back(std::max(pos, neg));
                    }
            }
        }
        std::sort(sums.begin(), sums.end());
        const std::size_t idx = static_cast<std::size_t>(
            quantile * static_cast<double>(sums.size() - 1));
        return sums[idx];
    };

    if (phase_quantile(1.0) <= target) return 1.0; // full scale already gentle
    double lo = 1e-4, hi = 1.0;
    for (int iter = 0; iter < 40; ++iter) {
        const double mid = 0.5 * (lo + hi);
        if (phase_quantile(mid) > target)
            hi = mid;
        else
            lo = mid;
    }
    return 0.5 * (lo + hi);
}

double pixel_accumulate(const Tensor& patch, const Tensor& bank, const CurveModel& curve) {
    if (!patch.same_shape(bank))
        throw DimensionError("pixel_accumulate patch shape " +
                             Tensor::shape_string(patch.shape()) + " != bank shape " +
                             Tensor::shape_string(bank.shape()));
    double sum = 0.0;
    for (std::int64_t i = 0; i < patch.numel(); ++i) sum += curve(bank[i], patch[i]);
    if (curve.clamps()) sum = std::clamp(sum, curve.v_min, curve.v_max);
    return sum;
}

double cds_subtract(double v_pos, double v_neg) { return v_pos - v_neg; }

double cds_subtract(double v_pos, double v_neg, double noise_sigma, Rng& rng) {
    if (noise_sigma <= 0.0) return v_pos - v_neg;
    std::normal_distribution<double> noise(0.0, noise_sigma);
    return v_pos - v_neg + noise(rng);
}

int comparator(double diff, double trip_point) { return diff >= trip_point ? 1 : 0; }

namespace {

Tensor frontend_forward_impl(const Tensor& image, const FusedFrontend& fe, double noise_sigma,
                             Rng* rng) {
    if (image.rank() != 3)
        throw DimensionError("frontend input must be [C,H,W]");
    for (std::int64_t i = 0; i < image.numel(); ++i)
        if (!(image[i] >= 0.0f && image[i] <= 1.0f))
            throw ParameterError("frontend input values must lie in [0,1]");

    const ConvGeometry g =
        conv_geometry(image.shape(), fe.banks.positive.shape(), fe.stride, fe.padding);
    const CurveModel& curve = fe.curve;
    const bool clamp = curve.clamps();

    Tensor spikes({g.out_channels, g.out_h, g.out_w});
    // Ideal and saturating responses vanish when either input is zero, so
    // empty bank slots and padded pixels can be skipped. Fitted polynomials
    // have no such guarantee and must be evaluated everywhere, matching
    // pixel_accumulate over a zero-padded patch.
    const bool skip_zeros = curve.family != CurveFamily::polynomial;
    const std::int64_t per_channel =
        static_cast<std::int64_t>(g.in_channels) * g.k_h * g.k_w;
    for (int oc = 0; oc < g.out_channels; ++oc) {
        const float* wp = fe.banks.positive.data() + oc * per_channel;
        const float* wn = fe.banks.negative.data() + oc * per_channel;
        const double trip = fe.trip_points[static_cast<std::size_t>(oc)];
        for (int oh = 0; oh < g.out_h; ++oh) {
            for (int ow = 0; ow < g.out_w; ++ow) {
                double v_pos = 0.0, v_neg = 0.0;
                std::int64_t k = 0;
                for (int c = 0; c < g.in_channels; ++c) {
                    const float* plane = image.data() + static_cast<std::int64_t>(c) * g.in_h * g.in_w;
                    for (int kh = 0; kh < g.k_h; ++kh) {
                        const int ih = oh * g.stride + kh - g.padding;
                        for (int kw = 0; kw < g.k_w; ++kw, ++k) {
                            const int iw = ow * g.stride + kw - g.padding;
                            const bool inside =
                                ih >= 0 && ih < g.in_h && iw >= 0 && iw < g.in_w;
                            if (skip_zeros && !inside) continue;
                            const double x = inside ? plane[ih * g.in_w + iw] : 0.0;
                            if (!skip_zeros || wp[k] != 0.0f) v_pos += curve(wp[k], x);
                            if (!skip_zeros || wn[k] != 0.0f) v_neg += curve(wn[k], x);
                        }
                    }
                }
                if (clamp) {
                    v_pos = std::clamp(v_pos, curve.v_min, curve.v_max);
                    v_neg = std::clamp(v_neg, curve.v_min, curve.v_max);
                }
                const double diff = rng ? cds_subtract(v_pos, v_neg, noise_sigma, *rng)
                                        : cds_subtract(v_pos, v_neg);
                spikes(oc, oh, ow) = static_cast<float>(comparator(diff, trip));
            }
        }
    }
    if (fe.pool_window > 1) return maxpool2d(spikes, fe.pool_window, fe.pool_window);
    return spikes;
}

} // namespace

Tensor frontend_forward(const Tensor& image, const FusedFrontend& fe) {
    return frontend_forward_impl(image, fe, 0.0, nullptr);
}

Tensor frontend_forward(const Tensor& image, const FusedFrontend& fe, double noise_sigma,
                        Rng& rng) {
    return frontend_forward_impl(image, fe, noise_sigma, &rng);
}

} // namespace insnn::analog
