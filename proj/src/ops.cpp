#include "insnn/ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace insnn {

namespace {

bool is_batched(const Tensor& t, int unbatched_rank) { return t.rank() == unbatched_rank + 1; }

// Gathers conv patches: cols is [C_in*kH*kW, out_h*out_w] for one image.
void im2col(const float* img, const ConvGeometry& g, float* cols) {
    const int positions = g.out_h * g.out_w;
    for (int c = 0; c < g.in_channels; ++c) {
        const float* plane = img + static_cast<std::size_t>(c) * g.in_h * g.in_w;
        for (int kh = 0; kh < g.k_h; ++kh) {
            for (int kw = 0; kw < g.k_w; ++kw) {
                const int row = (c * g.k_h + kh) * g.k_w + kw;
                float* dst = cols + static_cast<std::size_t>(row) * positions;
                for (int oh = 0; oh < g.out_h; ++oh) {
                    const int ih = oh * g.stride + kh - g.padding;
                    for (int ow = 0; ow < g.out_w; ++ow) {
                        const int iw = ow * g.stride + kw - g.padding;
                        const bool inside = ih >= 0 && ih < g.in_h && iw >= 0 && iw < g.in_w;
                        dst[oh * g.out_w + ow] =
                            inside ? plane[ih * g.in_w + iw] : 0.0f;
                    }
                }
            }
        }
    }
}

// Scatter-adds column gradients back into an image gradient.
void col2im_add(const float* cols, const ConvGeometry& g, float* img) {
    const int positions = g.out_h * g.out_w;
    for (int c = 0; c < g.in_channels; ++c) {
        float* plane = img + static_cast<std::size_t>(c) * g.in_h * g.in_w;
        for (int kh = 0; kh < g.k_h; ++kh) {
            for (int kw = 0; kw < g.k_w; ++kw) {
                const int row = (c * g.k_h + kh) * g.k_w + kw;
                const float* src = cols + static_cast<std::size_t>(row) * positions;
                for (int oh = 0; oh < g.out_h; ++oh) {
                    const int ih = oh * g.stride + kh - g.padding;
                    if (ih < 0 || ih >= g.in_h) continue;
                    for (int ow = 0; ow < g.out_w; ++ow) {
                        const int iw = ow * g.stride + kw - g.padding;
                        if (iw < 0 || iw >= g.in_w) continue;
                        plane[ih * g.in_w + iw] += src[oh * g.out_w + ow];
                    }
                }
            }
        }
    }
}

int channel_count(const Tensor& t) {
    switch (t.rank()) {
        case 2: return t.dim(1);            // [N,F]
        case 3: return t.dim(0);            // [C,H,W]
        case 4: return t.dim(1);            // [N,C,H,W]
        default:
            throw DimensionError("batchnorm expects rank 2, 3 or 4, got rank " +
                                 std::to_string(t.rank()));
    }
}

// Iteration extents for per-channel reductions: n_groups ("batch"),
// group stride, inner spatial extent.
struct ChannelLayout {
    int groups;    // N (1 for rank-3)
    int channels;
    int spatial;   // H*W (1 for rank-2)
};

ChannelLayout channel_layout(const Tensor& t) {
    switch (t.rank()) {
        case 2: return {t.dim(0), t.dim(1), 1};
        case 3: return {1, t.dim(0), t.dim(1) * t.dim(2)};
        case 4: return {t.dim(0), t.dim(1), t.dim(2) * t.dim(3)};
        default:
            throw DimensionError("batchnorm expects rank 2, 3 or 4");
    }
}

void check_bn_params(const Tensor& v, int channels, const char* name) {
    if (v.rank() != 1 || v.dim(0) != channels)
        throw DimensionError(std::string("batchnorm ") + name + " must be a length-" +
                             std::to_string(channels) + " vector, got " +
                             Tensor::shape_string(v.shape()));
}

} // namespace

ConvGeometry conv_geometry(const std::vector<int>& input_shape, const std::vector<int>& weight_shape,
                           int stride, int padding) {
    if (weight_shape.size() != 4)
        throw DimensionError("conv weights must be rank 4 [C_out,C_in,kH,kW], got " +
                             Tensor::shape_string(weight_shape));
    if (input_shape.size() != 3)
        throw DimensionError("conv input must be rank 3 [C,H,W], got " +
                             Tensor::shape_string(input_shape));
    if (stride < 1) throw ParameterError("conv stride must be >= 1");
    if (padding < 0) throw ParameterError("conv padding must be >= 0");

    ConvGeometry g;
    g.in_channels = input_shape[0];
    g.in_h = input_shape[1];
    g.in_w = input_shape[2];
    g.out_channels = weight_shape[0];
    g.k_h = weight_shape[2];
    g.k_w = weight_shape[3];
    g.stride = stride;
    g.padding = padding;

    if (weight_shape[1] != g.in_channels)
        throw DimensionError("conv input has " + std::to_string(g.in_channels) +
                             " channels but weights expect " + std::to_string(weight_shape[1]));
    if (g.k_h > g.in_h + 2 * padding || g.k_w > g.in_w + 2 * padding)
        throw DimensionError("conv kernel " + std::to_string(g.k_h) + "x" + std::to_string(g.k_w) +
                             " exceeds padded input " + std::to_string(g.in_h + 2 * padding) + "x" +
                             std::to_string(g.in_w + 2 * padding));

    g.out_h = (g.in_h + 2 * padding - g.k_h) / stride + 1;
    g.out_w = (g.in_w + 2 * padding - g.k_w) / stride + 1;
    return g;
}

Tensor conv2d(const Tensor& input, const Tensor& weights, int stride, int padding) {
    const bool batched = is_batched(input, 3);
    const int n = batched ? input.dim(0) : 1;
    std::vector<int> image_shape = batched
        ? std::vector<int>{input.dim(1), input.dim(2), input.dim(3)}
        : input.shape();
    const ConvGeometry g = conv_geometry(image_shape, weights.shape(), stride, padding);

    const int patch = g.in_channels * g.k_h * g.k_w;
    const int positions = g.out_h * g.out_w;
    const std::int64_t img_elems = static_cast<std::int64_t>(g.in_channels) * g.in_h * g.in_w;
    const std::int64_t out_elems = static_cast<std::int64_t>(g.out_channels) * positions;

    Tensor cols({patch, n * positions});
    {
        static thread_local std::vector<float> scratch;
        scratch.resize(static_cast<std::size_t>(patch) * positions);
        MatMap colview = cols.mat(patch, n * positions);
        for (int i = 0; i < n; ++i) {
            im2col(input.data() + i * img_elems, g, scratch.data());
            colview.block(0, i * positions, patch, positions) =
                ConstMatMap(scratch.data(), patch, positions);
        }
    }

    Tensor out(batched ? std::vector<int>{n, g.out_channels, g.out_h, g.out_w}
                       : std::vector<int>{g.out_channels, g.out_h, g.out_w});
    MatrixRM prod(g.out_channels, n * positions);
    prod.noalias() = weights.mat(g.out_channels, patch) * cols.mat(patch, n * positions);
    for (int i = 0; i < n; ++i) {
        MatMap outview(out.data() + i * out_elems, g.out_channels, positions);
        outview = prod.block(0, i * positions, g.out_channels, positions);
    }
    return out;
}

ConvGrads conv2d_backward(const Tensor& grad_out, const Tensor& input, const Tensor& weights,
                          int stride, int padding) {
    const bool batched = is_batched(input, 3);
    const int n = batched ? input.dim(0) : 1;
    std::vector<int> image_shape = batched
        ? std::vector<int>{input.dim(1), input.dim(2), input.dim(3)}
        : input.shape();
    const ConvGeometry g = conv_geometry(image_shape, weights.shape(), stride, padding);

    const std::vector<int> expect = batched
        ? std::vector<int>{n, g.out_channels, g.out_h, g.out_w}
        : std::vector<int>{g.out_channels, g.out_h, g.out_w};
    if (grad_out.shape() != expect)
        throw DimensionError("conv2d_backward grad_out shape " +
                             Tensor::shape_string(grad_out.shape()) + " does not match output " +
                             Tensor::shape_string(expect));

    const int patch = g.in_channels * g.k_h * g.k_w;
    const int positions = g.out_h * g.out_w;
    const std::int64_t img_elems = static_cast<std::int64_t>(g.in_channels) * g.in_h * g.in_w;
    const std::int64_t out_elems = static_cast<std::int64_t>(g.out_channels) * positions;

    Tensor cols({patch, n * positions});
    Tensor gout({g.out_channels, n * positions});
    {
        static thread_local std::vector<float> scratch;
        scratch.resize(static_cast<std::size_t>(patch) * positions);
        MatMap colview = cols.mat(patch, n * positions);
        MatMap goutview = gout.mat(g.out_channels, n * positions);
        for (int i = 0; i < n; ++i) {
            im2col(input.data() + i * img_elems, g, scratch.data());
            colview.block(0, i * positions, patch, positions) =
                ConstMatMap(scratch.data(), patch, positions);
            goutview.block(0, i * positions, g.out_channels, positions) =
                ConstMatMap(grad_out.data() + i * out_elems, g.out_channels, positions);
        }
    }

    ConvGrads grads{Tensor(input.shape()), Tensor(weights.shape())};
    grads.grad_weights.mat(g.out_channels, patch).noalias() =
        gout.mat(g.out_channels, n * positions) * cols.mat(patch, n * positions).transpose();

    MatrixRM dcols(patch, n * positions);
    dcols.noalias() =
        weights.mat(g.out_channels, patch).transpose() * gout.mat(g.out_channels, n * positions);
    for (int i = 0; i < n; ++i) {
        MatrixRM slice = dcols.block(0, i * positions, patch, positions);
        col2im_add(slice.data(), g, grads.grad_input.data() + i * img_elems);
    }
    return grads;
}

Tensor maxpool2d(const Tensor& input, int window, int stride) {
    const bool batched = is_batched(input, 3);
    const int n = batched ? input.dim(0) : 1;
    const int c = batched ? input.dim(1) : input.dim(0);
    const int h = batched ? input.dim(2) : input.dim(1);
    const int w = batched ? input.dim(3) : input.dim(2);
    if (window < 1 || stride < 1) throw ParameterError("pool window and stride must be >= 1");
    if (window > h || window > w)
        throw DimensionError("pool window " + std::to_string(window) + " exceeds input " +
                             std::to_string(h) + "x" + std::to_string(w));
    const int oh = (h - window) / stride + 1;
    const int ow = (w - window) / stride + 1;

    Tensor out(batched ? std::vector<int>{n, c, oh, ow} : std::vector<int>{c, oh, ow});
    const std::int64_t plane = static_cast<std::int64_t>(h) * w;
    const std::int64_t oplane = static_cast<std::int64_t>(oh) * ow;
    for (std::int64_t nc = 0; nc < static_cast<std::int64_t>(n) * c; ++nc) {
        const float* src = input.data() + nc * plane;
        float* dst = out.data() + nc * oplane;
        for (int y = 0; y < oh; ++y) {
            for (int x = 0; x < ow; ++x) {
                float best = -std::numeric_limits<float>::infinity();
                for (int ky = 0; ky < window; ++ky)
                    for (int kx = 0; kx < window; ++kx)
                        best = std::max(best, src[(y * stride + ky) * w + (x * stride + kx)]);
                dst[y * ow + x] = best;
            }
        }
    }
    return out;
}

Tensor maxpool2d_backward(const Tensor& grad_out, const Tensor& input, int window, int stride) {
    const bool batched = is_batched(input, 3);
    const int n = batched ? input.dim(0) : 1;
    const int c = batched ? input.dim(1) : input.dim(0);
    const int h = batched ? input.dim(2) : input.dim(1);
    const int w = batched ? input.dim(3) : input.dim(2);
    const int oh = (h - window) / stride + 1;
    const int ow = (w - window) / stride + 1;
    const std::vector<int> expect = batched ? std::vector<int>{n, c, oh, ow}
                                            : std::vector<int>{c, oh, ow};
    if (grad_out.shape() != expect)
        throw DimensionError("maxpool backward grad_out shape mismatch");

    Tensor grad_in(input.shape());
    const std::int64_t plane = static_cast<std::int64_t>(h) * w;
    const std::int64_t oplane = static_cast<std::int64_t>(oh) * ow;
    for (std::int64_t nc = 0; nc < static_cast<std::int64_t>(n) * c; ++nc) {
        const float* src = input.data() + nc * plane;
        const float* gsrc = grad_out.data() + nc * oplane;
        float* gdst = grad_in.data() + nc * plane;
        for (int y = 0; y < oh; ++y) {
            for (int x = 0; x < ow; ++x) {
                // first maximum in row-major window order takes the gradient
                int best_idx = -1;
                float best = -std::numeric_limits<float>::infinity();
                for (int ky = 0; ky < window; ++ky) {
                    for (int kx = 0; kx < window; ++kx) {
                        const int idx = (y * stride + ky) * w + (x * stride + kx);
                        if (src[idx] > best) {
                            best = src[idx];
                            best_idx = idx;
                        }
                    }
                }
                gdst[best_idx] += gsrc[y * ow + x];
            }
        }
    }
    return grad_in;
}

Tensor batchnorm_train(const Tensor& input, const Tensor& gamma, const Tensor& beta,
                       Tensor& running_mean, Tensor& running_var, float momentum, float eps,
                       BNStats* stats_out) {
    if (eps <= 0.0f) throw ParameterError("batchnorm eps must be > 0");
    if (momentum < 0.0f || momentum > 1.0f)
        throw ParameterError("batchnorm momentum must be in [0,1]");
    if (input.rank() != 2 && input.rank() != 4)
        throw DimensionError("batchnorm_train expects a batched input [N,C,H,W] or [N,F]");
    const ChannelLayout lay = channel_layout(input);
    check_bn_params(gamma, lay.channels, "gamma");
    check_bn_params(beta, lay.channels, "beta");
    check_bn_params(running_mean, lay.channels, "running_mean");
    check_bn_params(running_var, lay.channels, "running_var");

    const std::int64_t reduce = static_cast<std::int64_t>(lay.groups) * lay.spatial;
    Tensor mean({lay.channels});
    Tensor var({lay.channels});
    for (int ch = 0; ch < lay.channels; ++ch) {
        double sum = 0.0, sumsq = 0.0;
        for (int g = 0; g < lay.groups; ++g) {
            const float* p = input.data() +
                (static_cast<std::int64_t>(g) * lay.channels + ch) * lay.spatial;
            for (int s = 0; s < lay.spatial; ++s) {
                sum += p[s];
                sumsq += static_cast<double>(p[s]) * p[s];
            }
        }
        const double m = sum / static_cast<double>(reduce);
        const double v = std::max(0.0, sumsq / static_cast<double>(reduce) - m * m);
        mean(ch) = static_cast<float>(m);
        var(ch) = static_cast<float>(v);
        running_mean(ch) = (1.0f - momentum) * running_mean(ch) + momentum * mean(ch);
        running_var(ch) = (1.0f - momentum) * running_var(ch) + momentum * var(ch);
    }

    Tensor out(input.shape());
    for (int ch = 0; ch < lay.channels; ++ch) {
        const float inv = 1.0f / std::sqrt(var(ch) + eps);
        const float a = gamma(ch) * inv;
        const float b = beta(ch) - mean(ch) * a;
        for (int g = 0; g < lay.groups; ++g) {
            const std::int64_t base =
                (static_cast<std::int64_t>(g) * lay.channels + ch) * lay.spatial;
            for (int s = 0; s < lay.spatial; ++s)
                out[base + s] = a * input[base + s] + b;
        }
    }
    if (stats_out) *stats_out = BNStats{std::move(mean), std::move(var)};
    return out;
}

Tensor batchnorm_infer(const Tensor& input, const Tensor& gamma, const Tensor& beta,
                       const Tensor& mu, const Tensor& sigma2, float eps) {
    if (eps <= 0.0f) throw ParameterError("batchnorm eps must be > 0");
    const ChannelLayout lay = channel_layout(input);
    check_bn_params(gamma, lay.channels, "gamma");
    check_bn_params(beta, lay.channels, "beta");
    check_bn_params(mu, lay.channels, "mu");
    check_bn_params(sigma2, lay.channels, "sigma2");
    for (int ch = 0; ch < lay.channels; ++ch)
        if (sigma2(ch) < 0.0f)
            throw ParameterError("batchnorm sigma2 must be >= 0, got " +
                                 std::to_string(sigma2(ch)) + " at channel " + std::to_string(ch));

    Tensor out(input.shape());
    for (int ch = 0; ch < lay.channels; ++ch) {
        const float a = gamma(ch) / std::sqrt(sigma2(ch) + eps);
        const float b = beta(ch) - mu(ch) * a;
        for (int g = 0; g < lay.groups; ++g) {
            const std::int64_t base =
                (static_cast<std::int64_t>(g) * lay.channels + ch) * lay.spatial;
            for (int s = 0; s < lay.spatial; ++s)
                out[base + s] = a * input[base + s] + b;
        }
    }
    return out;
}

BNGrads batchnorm_backward(const Tensor& grad_out, const Tensor& input, const Tensor& gamma,
                           const BNStats& stats, float eps) {
    if (!grad_out.same_shape(input))
        throw DimensionError("batchnorm backward grad_out shape mismatch");
    const ChannelLayout lay = channel_layout(input);
    const std::int64_t reduce = static_cast<std::int64_t>(lay.groups) * lay.spatial;

    BNGrads grads{Tensor(input.shape()), Tensor({lay.channels}), Tensor({lay.channels})};
    for (int ch = 0; ch < lay.channels; ++ch) {
        const double inv = 1.0 / std::sqrt(static_cast<double>(stats.var(ch)) + eps);
        const double mu = stats.mean(ch);
        double sum_dy = 0.0, sum_dy_xhat = 0.0;
        for (int g = 0; g < lay.groups; ++g) {
            const std::int64_t base =
                (static_cast<std::int64_t>(g) * lay.channels + ch) * lay.spatial;
            for (int s = 0; s < lay.spatial; ++s) {
                const double dy = grad_out[base + s];
                const double xhat = (input[base + s] - mu) * inv;
                sum_dy += dy;
                sum_dy_xhat += dy * xhat;
            }
        }
        grads.grad_beta(ch) = static_cast<float>(sum_dy);
        grads.grad_gamma(ch) = static_cast<float>(sum_dy_xhat);

        const double mean_dy = sum_dy / static_cast<double>(reduce);
        const double mean_dy_xhat = sum_dy_xhat / static_cast<double>(reduce);
        const double scale = gamma(ch) * inv;
        for (int g = 0; g < lay.groups; ++g) {
            const std::int64_t base =
                (static_cast<std::int64_t>(g) * lay.channels + ch) * lay.spatial;
            for (int s = 0; s < lay.spatial; ++s) {
                const double dy = grad_out[base + s];
                const double xhat = (input[base + s] - mu) * inv;
                grads.grad_input[base + s] =
                    static_cast<float>(scale * (dy - mean_dy - xhat * mean_dy_xhat));
            }
        }
    }
    return grads;
}

void batchnorm_coefficients(const Tensor& gamma, const Tensor& beta, const Tensor& mu,
                            const Tensor& sigma2, float eps, std::vector<double>& a_out,
                            std::vector<double>& b_out) {
    if (eps <= 0.0f) throw ParameterError("batchnorm eps must be > 0");
    const int channels = gamma.dim(0);
    check_bn_params(beta, channels, "beta");
    check_bn_params(mu, channels, "mu");
    check_bn_params(sigma2, channels, "sigma2");
    a_out.resize(channels);
    b_out.resize(channels);
    for (int ch = 0; ch < channels; ++ch) {
        const double denom = static_cast<double>(sigma2(ch)) + eps;
        if (denom <= 0.0)
            throw ParameterError("batchnorm sigma2 + eps must be > 0 at channel " +
                                 std::to_string(ch));
        a_out[ch] = gamma(ch) / std::sqrt(denom);
        b_out[ch] = beta(ch) - mu(ch) * a_out[ch];
    }
}

Tensor dense(const Tensor& input, const Tensor& weights, const Tensor& bias) {
    if (weights.rank() != 2) throw DimensionError("dense weights must be [U,F]");
    const int units = weights.dim(0);
    const int features = weights.dim(1);
    if (bias.rank() != 1 || bias.dim(0) != units)
        throw DimensionError("dense bias must be a length-" + std::to_string(units) + " vector");

    const bool batched = input.rank() == 2;
    const int n = batched ? input.dim(0) : 1;
    const int in_f = batched ? input.dim(1) : input.dim(0);
    if (input.rank() > 2 || in_f != features)
        throw DimensionError("dense input features " + Tensor::shape_string(input.shape()) +
                             " do not match weights [" + std::to_string(units) + "," +
                             std::to_string(features) + "]");

    Tensor out(batched ? std::vector<int>{n, units} : std::vector<int>{units});
    MatMap o(out.data(), n, units);
    o.noalias() = ConstMatMap(input.data(), n, features) * weights.mat(units, features).transpose();
    o.rowwise() += Eigen::Map<const Eigen::RowVectorXf>(bias.data(), units);
    return out;
}

DenseGrads dense_backward(const Tensor& grad_out, const Tensor& input, const Tensor& weights) {
    const int units = weights.dim(0);
    const int features = weights.dim(1);
    const bool batched = input.rank() == 2;
    const int n = batched ? input.dim(0) : 1;
    const std::vector<int> expect = batched ? std::vector<int>{n, units}
                                            : std::vector<int>{units};
    if (grad_out.shape() != expect) throw DimensionError("dense backward grad_out shape mismatch");

    DenseGrads grads{Tensor(input.shape()), Tensor(weights.shape()), Tensor({units})};
    ConstMatMap g(grad_out.data(), n, units);
    ConstMatMap x(input.data(), n, features);
    grads.grad_weights.mat(units, features).noalias() = g.transpose() * x;
    MatMap(grads.grad_input.data(), n, features).noalias() = g * weights.mat(units, features);
    Eigen::Map<Eigen::RowVectorXf>(grads.grad_bias.data(), units) = g.colwise().sum();
    return grads;
}

float softmax_cross_entropy(const Tensor& logits, int label) {
    if (logits.rank() != 1)
        throw DimensionError("single-sample cross entropy expects rank-1 logits");
    const int k = logits.dim(0);
    if (label < 0 || label >= k)
        throw ParameterError("label " + std::to_string(label) + " out of range [0," +
                             std::to_string(k) + ")");
    const float m = logits.vec().maxCoeff();
    double sum = 0.0;
    for (int i = 0; i < k; ++i) sum += std::exp(static_cast<double>(logits(i)) - m);
    return static_cast<float>(std::log(sum) - (logits(label) - m));
}

float softmax_cross_entropy(const Tensor& logits, std::span<const int> labels) {
    if (logits.rank() != 2) throw DimensionError("batched cross entropy expects [N,K] logits");
    const int n = logits.dim(0);
    const int k = logits.dim(1);
    if (static_cast<int>(labels.size()) != n)
        throw DimensionError("labels size does not match batch");
    double total = 0.0;
    for (int i = 0; i < n; ++i) {
        if (labels[i] < 0 || labels[i] >= k)
            throw ParameterError("label " + std::to_string(labels[i]) + " out of range [0," +
                                 std::to_string(k) + ") at sample " + std::to_string(i));
        const float* row = logits.data() + static_cast<std::int64_t>(i) * k;
        float m = row[0];
        for (int j = 1; j < k; ++j) m = std::max(m, row[j]);
        double sum = 0.0;
        for (int j = 0; j < k; ++j) sum += std::exp(static_cast<double>(row[j]) - m);
        total += std::log(sum) - (row[labels[i]] - m);
    }
    return static_cast<float>(total / n);
}

Tensor softmax_cross_entropy_backward(const Tensor& logits, std::span<const int> labels) {
    if (logits.rank() != 2) throw DimensionError("batched cross entropy expects [N,K] logits");
    const int n = logits.dim(0);
    const int k = logits.dim(1);
    if (static_cast<int>(labels.size()) != n)
        throw DimensionError("labels size does not match batch");
    Tensor grad(logits.shape());
    for (int i = 0; i < n; ++i) {
        const float* row = logits.data() + static_cast<std::int64_t>(i) * k;
        float* grow = grad.data() + static_cast<std::int64_t>(i) * k;
        float m = row[0];
        for (int j = 1; j < k; ++j) m = std::max(m, row[j]);
        double sum = 0.0;
        for (int j = 0; j < k; ++j) sum += std::exp(static_cast<double>(row[j]) - m);
        for (int j = 0; j < k; ++j) {
            const double p = std::exp(static_cast<double>(row[j]) - m) / sum;
            grow[j] = static_cast<float>((p - (labels[i] == j ? 1.0 : 0.0)) / n);
        }
    }
    return grad;
}

void sgd_step(Tensor& param, const Tensor& grad, Tensor& velocity, const SgdOptions& opts) {
    if (opts.lr < 0.0f) throw ParameterError("sgd lr must be >= 0");
    if (!param.same_shape(grad))
        throw DimensionError("sgd param/grad shape mismatch: " +
                             Tensor::shape_string(param.shape()) + " vs " +
                             Tensor::shape_string(grad.shape()));
    if (velocity.numel() == 0) velocity = Tensor(param.shape());
    if (!velocity.same_shape(param)) throw DimensionError("sgd velocity shape mismatch");

    const std::int64_t n = param.numel();
    for (std::int64_t i = 0; i < n; ++i) {
        if (!std::isfinite(grad[i]))
            throw TrainingError("non-finite gradient at element " + std::to_string(i));
        velocity[i] = opts.momentum * velocity[i] + grad[i] + opts.weight_decay * param[i];
        param[i] -= opts.lr * velocity[i];
    }
}

} // namespace insnn
