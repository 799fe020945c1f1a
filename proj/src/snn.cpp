#include "insnn/snn.hpp"

#include <algorithm>
#include <cmath>

namespace insnn::net {

Tensor spike_forward(const Tensor& u, const SpikingActivation& act) {
    Tensor out(u.shape());
    for (std::int64_t i = 0; i < u.numel(); ++i)
        out[i] = u[i] >= act.v_th ? 1.0f : 0.0f;
    return out;
}

Tensor spike_backward(const Tensor& grad_out, const Tensor& u, const SpikingActivation& act) {
    if (!grad_out.same_shape(u)) throw DimensionError("spike backward shape mismatch");
    if (!(act.surrogate_width > 0.0f))
        throw ParameterError("surrogate width must be > 0");
    const float a = act.surrogate_width;
    const float s = 1.0f / (2.0f * a);
    Tensor grad(u.shape());
    for (std::int64_t i = 0; i < u.numel(); ++i)
        grad[i] = std::abs(u[i] - act.v_th) <= a ? grad_out[i] * s : 0.0f;
    return grad;
}

float spike_threshold_grad(const Tensor& grad_out, const Tensor& u, const SpikingActivation& act) {
    const float a = act.surrogate_width;
    const float s = 1.0f / (2.0f * a);
    double g = 0.0;
    for (std::int64_t i = 0; i < u.numel(); ++i)
        if (std::abs(u[i] - act.v_th) <= a) g -= static_cast<double>(grad_out[i]) * s;
    return static_cast<float>(g);
}

float hoyer_regularizer(const Tensor& pre_acts) {
    double l1 = 0.0, l2 = 0.0;
    for (std::int64_t i = 0; i < pre_acts.numel(); ++i) {
        l1 += std::abs(pre_acts[i]);
        l2 += static_cast<double>(pre_acts[i]) * pre_acts[i];
    }
    if (l2 == 0.0) return 0.0f;
    return static_cast<float>(l1 * l1 / l2);
}

Tensor hoyer_backward(const Tensor& pre_acts) {
    double l1 = 0.0, l2 = 0.0;
    for (std::int64_t i = 0; i < pre_acts.numel(); ++i) {
        l1 += std::abs(pre_acts[i]);
        l2 += static_cast<double>(pre_acts[i]) * pre_acts[i];
    }
    Tensor grad(pre_acts.shape());
    if (l2 == 0.0) return grad;
    // d/da_i [(sum|a|)^2 / sum a^2] = 2 sign(a_i) L1/L2 - 2 a_i L1^2/L2^2
    const double c1 = 2.0 * l1 / l2;
    const double c2 = 2.0 * l1 * l1 / (l2 * l2);
    for (std::int64_t i = 0; i < pre_acts.numel(); ++i) {
        const double sgn = pre_acts[i] > 0.0f ? 1.0 : (pre_acts[i] < 0.0f ? -1.0 : 0.0);
        grad[i] = static_cast<float>(sgn * c1 - pre_acts[i] * c2);
    }
    return grad;
}

// ---------------------------------------------------------------------------
// Configuration.
// ---------------------------------------------------------------------------

NetworkConfig NetworkConfig::vgg6_lite(int first_channels, std::vector<int> input_shape,
                                       int num_classes) {
    NetworkConfig cfg;
    cfg.input_shape = std::move(input_shape);
    cfg.num_classes = num_classes;
    auto conv = [](int ch, int k, int s, int p) {
        LayerSpec l;
        l.kind = LayerKind::conv;
        l.channels = ch;
        l.kernel = k;
        l.stride = s;
        l.padding = p;
        return l;
    };
    auto bn = [] { return LayerSpec{LayerKind::batchnorm}; };
    auto spike = [] { return LayerSpec{LayerKind::spike}; };
    auto pool = [](int w) {
        LayerSpec l;
        l.kind = LayerKind::maxpool;
        l.window = w;
        return l;
    };
    cfg.layers = {
        conv(first_channels, 5, 2, 2), bn(), spike(), pool(2),
        conv(32, 3, 1, 1), bn(), spike(),
        conv(32, 3, 1, 1), bn(), spike(), pool(2),
        conv(64, 3, 1, 1), bn(), spike(),
        conv(64, 3, 1, 1), bn(), spike(), pool(2),
        conv(64, 3, 1, 1), bn(), spike(),
    };
    LayerSpec head;
    head.kind = LayerKind::dense;
    head.units = num_classes;
    cfg.layers.push_back(LayerSpec{LayerKind::flatten});
    cfg.layers.push_back(head);
    return cfg;
}

NetworkConfig NetworkConfig::resnet8_lite(int first_channels, std::vector<int> input_shape,
                                          int num_classes) {
    NetworkConfig cfg;
    cfg.input_shape = std::move(input_shape);
    cfg.num_classes = num_classes;
    auto conv = [](int ch, int k, int s, int p) {
        LayerSpec l;
        l.kind = LayerKind::conv;
        l.channels = ch;
        l.kernel = k;
        l.stride = s;
        l.padding = p;
        return l;
    };
    auto push = [&cfg](LayerSpec l) {
        cfg.layers.push_back(l);
        return static_cast<int>(cfg.layers.size()) - 1;
    };
    auto block = [&](int ch, int k, int s, int p, bool pooled) {
        push(conv(ch, k, s, p));
        push(LayerSpec{LayerKind::batchnorm});
        int end = push(LayerSpec{LayerKind::spike});
        if (pooled) {
            LayerSpec l;
            l.kind = LayerKind::maxpool;
            l.window = 2;
            end = push(l);
        }
        return end;
    };

    block(first_channels, 5, 2, 2, true); // in-sensor candidate, 32x32 -> 8x8
    int stage1 = block(32, 3, 1, 1, false);
    {
        block(32, 3, 1, 1, false);
        LayerSpec join;
        join.kind = LayerKind::residual_or;
        join.from = stage1;
        push(join);
    }
    int stage2 = block(64, 3, 1, 1, true); // 8x8 -> 4x4
    {
        block(64, 3, 1, 1, false);
        LayerSpec join;
        join.kind = LayerKind::residual_or;
        join.from = stage2;
        push(join);
    }
    block(64, 3, 1, 1, false);
    push(LayerSpec{LayerKind::flatten});
    LayerSpec head;
    head.kind = LayerKind::dense;
    head.units = num_classes;
    push(head);
    return cfg;
}

namespace {

std::string layer_kind_name(LayerKind k) {
    switch (k) {
        case LayerKind::conv: return "conv";
        case LayerKind::batchnorm: return "batchnorm";
        case LayerKind::spike: return "spike";
        case LayerKind::maxpool: return "maxpool";
        case LayerKind::dense: return "dense";
        case LayerKind::flatten: return "flatten";
        case LayerKind::residual_or: return "residual_or";
    }
    return "?";
}

[[noreturn]] void config_fail(int index, LayerKind kind, const std::string& why) {
    throw ConfigError("layer " + std::to_string(index) + " (" + layer_kind_name(kind) + "): " +
                      why);
}

} // namespace

std::vector<std::vector<int>> NetworkConfig::validate() const {
    if (input_shape.size() != 3)
        throw ConfigError("input shape must be [C,H,W]");
    for (int d : input_shape)
        if (d < 1) throw ConfigError("input dimensions must be >= 1");
    if (num_classes < 2) throw ConfigError("need at least 2 classes");
    if (layers.empty()) throw ConfigError("network has no layers");
    if (layers.front().kind != LayerKind::conv)
        throw ConfigError("the first layer must be a convolution (the in-sensor candidate)");

    std::vector<std::vector<int>> shapes;
    std::vector<int> cur = input_shape;
    for (std::size_t i = 0; i < layers.size(); ++i) {
        const LayerSpec& l = layers[i];
        const int idx = static_cast<int>(i);
        switch (l.kind) {
            case LayerKind::conv: {
                if (cur.size() != 3) config_fail(idx, l.kind, "needs a [C,H,W] input");
                if (l.channels < 1 || l.kernel < 1)
                    config_fail(idx, l.kind, "channels and kernel must be >= 1");
                try {
                    ConvGeometry g = conv_geometry(
                        cur, {l.channels, cur[0], l.kernel, l.kernel}, l.stride, l.padding);
                    cur = {g.out_channels, g.out_h, g.out_w};
                } catch (const Error& e) {
                    config_fail(idx, l.kind, e.what());
                }
                break;
            }
            case LayerKind::batchnorm:
                if (cur.empty()) config_fail(idx, l.kind, "no input");
                break;
            case LayerKind::spike:
                break;
            case LayerKind::maxpool: {
                if (cur.size() != 3) config_fail(idx, l.kind, "needs a [C,H,W] input");
                if (l.window < 1) config_fail(idx, l.kind, "window must be >= 1");
                if (l.window > cur[1] || l.window > cur[2])
                    config_fail(idx, l.kind,
                                "window " + std::to_string(l.window) + " exceeds input " +
                                    std::to_string(cur[1]) + "x" + std::to_string(cur[2]));
                cur = {cur[0], (cur[1] - l.window) / l.window + 1,
                       (cur[2] - l.window) / l.window + 1};
                break;
            }
            case LayerKind::flatten: {
                if (cur.size() != 3) config_fail(idx, l.kind, "needs a [C,H,W] input");
                cur = {cur[0] * cur[1] * cur[2]};
                break;
            }
            case LayerKind::dense: {
                if (cur.size() != 1)
                    config_fail(idx, l.kind, "needs a flattened input (insert flatten)");
                if (l.units < 1) config_fail(idx, l.kind, "units must be >= 1");
                cur = {l.units};
                break;
            }
            case LayerKind::residual_or: {
                if (l.from < 0 || l.from >= idx)
                    config_fail(idx, l.kind, "'from' must reference an earlier layer");
                if (shapes[static_cast<std::size_t>(l.from)] != cur)
                    config_fail(idx, l.kind,
                                "joined shapes differ: " +
                                    Tensor::shape_string(shapes[static_cast<std::size_t>(l.from)]) +
                                    " vs " + Tensor::shape_string(cur));
                break;
            }
        }
        shapes.push_back(cur);
    }
    if (layers.back().kind != LayerKind::dense || cur != std::vector<int>{num_classes})
        throw ConfigError("the last layer must be dense with units == num_classes");
    return shapes;
}

// ---------------------------------------------------------------------------
// Construction.
// ---------------------------------------------------------------------------

Network build_network(const NetworkConfig& cfg, Rng& rng) {
    const auto shapes = cfg.validate();

    Network net;
    net.config = cfg;
    std::vector<int> cur = cfg.input_shape;
    for (std::size_t i = 0; i < cfg.layers.size(); ++i) {
        const LayerSpec& l = cfg.layers[i];
        switch (l.kind) {
            case LayerKind::conv: {
                ConvLayer layer;
                layer.w = Tensor({l.channels, cur[0], l.kernel, l.kernel});
                fill_kaiming(layer.w, rng);
                layer.stride = l.stride;
                layer.padding = l.padding;
                net.layers.emplace_back(std::move(layer));
                break;
            }
            case LayerKind::batchnorm: {
                const int ch = cur[0]; // channel axis for [C,H,W], feature axis for [F]
                BatchNormLayer layer;
                layer.gamma = Tensor::full({ch}, 1.0f);
                layer.beta = Tensor({ch});
                layer.running_mean = Tensor({ch});
                layer.running_var = Tensor::full({ch}, 1.0f);
                net.layers.emplace_back(std::move(layer));
                break;
            }
            case LayerKind::spike: {
                SpikeLayer layer;
                layer.v_th = Tensor::scalar(l.v_th);
                layer.trainable = cfg.trainable_thresholds;
                layer.surrogate_width = cfg.surrogate_width;
                net.layers.emplace_back(std::move(layer));
                break;
            }
            case LayerKind::maxpool:
                net.layers.emplace_back(PoolLayer{l.window});
                break;
            case LayerKind::flatten:
                net.layers.emplace_back(FlattenLayer{});
                break;
            case LayerKind::dense: {
                DenseLayer layer;
                layer.w = Tensor({l.units, cur[0]});
                fill_kaiming(layer.w, rng);
                layer.b = Tensor({l.units});
                net.layers.emplace_back(std::move(layer));
                break;
            }
            case LayerKind::residual_or:
                net.layers.emplace_back(ResidualOrLayer{l.from});
                break;
        }
        cur = shapes[i];
    }

    // Block boundaries: a block closes at a pool or residual join, or at a
    // spike not followed by one.
    for (std::size_t i = 0; i < cfg.layers.size(); ++i) {
        const LayerKind k = cfg.layers[i].kind;
        const LayerKind next =
            i + 1 < cfg.layers.size() ? cfg.layers[i + 1].kind : LayerKind::flatten;
        const bool closes =
            k == LayerKind::maxpool || k == LayerKind::residual_or ||
            (k == LayerKind::spike && next != LayerKind::maxpool &&
             next != LayerKind::residual_or);
        if (closes) net.block_ends.push_back(static_cast<int>(i));
    }
    net.first_block_end = net.block_ends.empty() ? 0 : net.block_ends.front() + 1;
    return net;
}

Network build_network(const NetworkConfig& cfg, std::uint64_t seed) {
    Rng rng = make_rng(seed);
    return build_network(cfg, rng);
}

std::vector<std::pair<std::string, Tensor*>> Network::parameters() {
    std::vector<std::pair<std::string, Tensor*>> out;
    for (std::size_t i = 0; i < layers.size(); ++i) {
        const std::string prefix = "layer" + std::to_string(i) + ".";
        std::visit(
            [&](auto& l) {
                using T = std::decay_t<decltype(l)>;
                if constexpr (std::is_same_v<T, ConvLayer>) {
                    out.emplace_back(prefix + "conv.weight", &l.w);
                } else if constexpr (std::is_same_v<T, BatchNormLayer>) {
                    out.emplace_back(prefix + "bn.gamma", &l.gamma);
                    out.emplace_back(prefix + "bn.beta", &l.beta);
                } else if constexpr (std::is_same_v<T, SpikeLayer>) {
                    if (l.trainable) out.emplace_back(prefix + "spike.v_th", &l.v_th);
                } else if constexpr (std::is_same_v<T, DenseLayer>) {
                    out.emplace_back(prefix + "dense.weight", &l.w);
                    out.emplace_back(prefix + "dense.bias", &l.b);
                }
            },
            layers[i]);
    }
    return out;
}

std::vector<std::pair<std::string, Tensor*>> Network::state_tensors() {
    auto out = parameters();
    for (std::size_t i = 0; i < layers.size(); ++i) {
        const std::string prefix = "layer" + std::to_string(i) + ".";
        if (auto* bn = std::get_if<BatchNormLayer>(&layers[i])) {
            out.emplace_back(prefix + "bn.running_mean", &bn->running_mean);
            out.emplace_back(prefix + "bn.running_var", &bn->running_var);
        }
        if (auto* sp = std::get_if<SpikeLayer>(&layers[i])) {
            if (!sp->trainable) out.emplace_back(prefix + "spike.v_th", &sp->v_th);
        }
    }
    return out;
}

void Network::zero_grads() {
    for (auto& [name, t] : parameters()) {
        t->alloc_grad();
        t->zero_grad();
    }
}

// ---------------------------------------------------------------------------
// Execution.
// ---------------------------------------------------------------------------

namespace {

Tensor flatten_batch(const Tensor& t) {
    const int n = t.dim(0);
    return t.reshaped({n, static_cast<int>(t.numel() / n)});
}

Tensor residual_or_forward(const Tensor& a, const Tensor& b) {
    if (!a.same_shape(b)) throw DimensionError("residual join shape mismatch");
    Tensor out(a.shape());
    for (std::int64_t i = 0; i < a.numel(); ++i) out[i] = std::max(a[i], b[i]);
    return out;
}

} // namespace

Tensor forward_batch(Network& net, const Tensor& batch, bool training, ForwardTrace* trace) {
    if (batch.rank() != 4) throw DimensionError("forward expects a [N,C,H,W] batch");
    const bool in_sensor = net.config.first_layer_mode == FirstLayerMode::in_sensor;
    if (in_sensor && training)
        throw TrainingError("in-sensor networks are inference-only; train in digital mode");
    if (in_sensor && !net.frontend)
        throw ParameterError("in-sensor mode requires a fused frontend (run fuse first)");

    std::vector<Tensor> outputs(net.layers.size());
    std::vector<BNStats> bn_stats(trace ? net.layers.size() : 0);

    std::size_t start = 0;
    Tensor x;
    if (in_sensor) {
        const int n = batch.dim(0);
        const std::int64_t img = batch.numel() / n;
        std::vector<int> img_shape{batch.dim(1), batch.dim(2), batch.dim(3)};
        for (int i = 0; i < n; ++i) {
            Tensor image(img_shape,
                         std::vector<float>(batch.data() + i * img,
                                            batch.data() + (i + 1) * img));
            Tensor spikes = analog::frontend_forward(image, *net.frontend);
            if (i == 0)
                x = Tensor({n, spikes.dim(0), spikes.dim(1), spikes.dim(2)});
            std::copy(spikes.data(), spikes.data() + spikes.numel(),
                      x.data() + i * spikes.numel());
        }
        start = static_cast<std::size_t>(net.first_block_end);
        for (std::size_t i = 0; i < start; ++i) outputs[i] = x;
    } else {
        x = batch;
    }

    for (std::size_t i = start; i < net.layers.size(); ++i) {
        std::visit(
            [&](auto& l) {
                using T = std::decay_t<decltype(l)>;
                if constexpr (std::is_same_v<T, ConvLayer>) {
                    x = conv2d(x, l.w, l.stride, l.padding);
                } else if constexpr (std::is_same_v<T, BatchNormLayer>) {
                    if (training) {
                        BNStats stats;
                        x = batchnorm_train(x, l.gamma, l.beta, l.running_mean, l.running_var,
                                            l.momentum, l.eps, &stats);
                        if (trace) bn_stats[i] = std::move(stats);
                    } else {
                        x = batchnorm_infer(x, l.gamma, l.beta, l.running_mean, l.running_var,
                                            l.eps);
                    }
                } else if constexpr (std::is_same_v<T, SpikeLayer>) {
                    x = spike_forward(x, l.activation());
                } else if constexpr (std::is_same_v<T, PoolLayer>) {
                    x = maxpool2d(x, l.window, l.window);
                } else if constexpr (std::is_same_v<T, DenseLayer>) {
                    x = dense(x, l.w, l.b);
                } else if constexpr (std::is_same_v<T, FlattenLayer>) {
                    x = flatten_batch(x);
                } else if constexpr (std::is_same_v<T, ResidualOrLayer>) {
                    x = residual_or_forward(x, outputs[static_cast<std::size_t>(l.from)]);
                }
            },
            net.layers[i]);
        outputs[i] = x;
    }
    if (trace) {
        trace->outputs = std::move(outputs);
        trace->bn_stats = std::move(bn_stats);
    }
    return x;
}

void backward_batch(Network& net, const Tensor& batch, const ForwardTrace& trace,
                    const Tensor& grad_logits,
                    const std::map<int, Tensor>* extra_output_grads) {
    if (trace.outputs.size() != net.layers.size())
        throw TrainingError("trace does not match network");
    const int last = static_cast<int>(net.layers.size()) - 1;

    std::vector<Tensor> out_grads(net.layers.size());
    auto add_grad = [&](int idx, const Tensor& g) {
        Tensor& slot = out_grads[static_cast<std::size_t>(idx)];
        if (slot.numel() == 0) {
            slot = g;
        } else {
            if (!slot.same_shape(g)) throw DimensionError("gradient shape mismatch at join");
            slot.vec() += g.vec();
        }
    };
    add_grad(last, grad_logits);
    if (extra_output_grads)
        for (const auto& [idx, g] : *extra_output_grads) add_grad(idx, g);

    for (int i = last; i >= 0; --i) {
        Tensor& g = out_grads[static_cast<std::size_t>(i)];
        if (g.numel() == 0) continue; // dead branch
        const Tensor& input = i == 0 ? batch : trace.outputs[static_cast<std::size_t>(i - 1)];
        std::visit(
            [&](auto& l) {
                using T = std::decay_t<decltype(l)>;
                if constexpr (std::is_same_v<T, ConvLayer>) {
                    ConvGrads cg = conv2d_backward(g, input, l.w, l.stride, l.padding);
                    l.w.grad_vec() += cg.grad_weights.vec();
                    if (i > 0) add_grad(i - 1, cg.grad_input);
                } else if constexpr (std::is_same_v<T, BatchNormLayer>) {
                    BNGrads bg = batchnorm_backward(g, input, l.gamma,
                                                    trace.bn_stats[static_cast<std::size_t>(i)],
                                                    l.eps);
                    l.gamma.grad_vec() += bg.grad_gamma.vec();
                    l.beta.grad_vec() += bg.grad_beta.vec();
                    if (i > 0) add_grad(i - 1, bg.grad_input);
                } else if constexpr (std::is_same_v<T, SpikeLayer>) {
                    const SpikingActivation act = l.activation();
                    if (l.trainable)
                        l.v_th.grad()[0] += spike_threshold_grad(g, input, act);
                    if (i > 0) add_grad(i - 1, spike_backward(g, input, act));
                } else if constexpr (std::is_same_v<T, PoolLayer>) {
                    if (i > 0) add_grad(i - 1, maxpool2d_backward(g, input, l.window, l.window));
                } else if constexpr (std::is_same_v<T, DenseLayer>) {
                    DenseGrads dg = dense_backward(g, input, l.w);
                    l.w.grad_vec() += dg.grad_weights.vec();
                    l.b.grad_vec() += dg.grad_bias.vec();
                    if (i > 0) add_grad(i - 1, dg.grad_input);
                } else if constexpr (std::is_same_v<T, FlattenLayer>) {
                    if (i > 0) add_grad(i - 1, g.reshaped(input.shape()));
                } else if constexpr (std::is_same_v<T, ResidualOrLayer>) {
                    // max-join: the first (main-path) input wins ties
                    const Tensor& other = trace.outputs[static_cast<std::size_t>(l.from)];
                    Tensor ga(input.shape());
                    Tensor gb(other.shape());
                    for (std::int64_t e = 0; e < input.numel(); ++e) {
                        if (input[e] >= other[e])
                            ga[e] = g[e];
                        else
                            gb[e] = g[e];
                    }
                    if (i > 0) add_grad(i - 1, ga);
                    add_grad(l.from, gb);
                }
            },
            net.layers[i]);
        g = Tensor(); // release as we go
    }
}

Tensor inference(const Network& net, const Tensor& image) {
    if (image.rank() != 3) throw DimensionError("inference expects a [C,H,W] image");
    Tensor batch({1, image.dim(0), image.dim(1), image.dim(2)}, image.values());
    Network& mut = const_cast<Network&>(net); // eval forward does not mutate parameters
    ForwardTrace trace;
    Tensor logits = forward_batch(mut, batch, false, &trace);
    return logits.reshaped({logits.dim(1)});
}

double SparsityProfile::mean_spike_rate() const {
    if (spike_rates.empty()) return 0.0;
    double s = 0.0;
    for (double r : spike_rates) s += r;
    return s / static_cast<double>(spike_rates.size());
}

SparsityProfile sparsity_profile(Network& net, const std::vector<Tensor>& sample) {
    if (sample.empty()) throw ParameterError("sparsity profile needs at least one image");
    const bool in_sensor = net.config.first_layer_mode == FirstLayerMode::in_sensor;

    // Static per-layer op/read counts from the shape walk.
    const auto shapes = net.config.validate();
    SparsityProfile profile;
    std::vector<int> conv_or_dense; // layer indices
    std::vector<int> cur = net.config.input_shape;
    bool first_compute = true;
    for (std::size_t i = 0; i < net.layers.size(); ++i) {
        const LayerSpec& spec = net.config.layers[i];
        if (spec.kind == LayerKind::conv || spec.kind == LayerKind::dense) {
            SparsityProfile::Entry e;
            e.name = "layer" + std::to_string(i) + "." +
                     (spec.kind == LayerKind::conv ? "conv" : "dense");
            std::int64_t in_elems = 1;
            for (int d : cur) in_elems *= d;
            std::int64_t weight_elems = 0;
            if (spec.kind == LayerKind::conv) {
                const auto& out = shapes[i];
                weight_elems = static_cast<std::int64_t>(spec.channels) * cur[0] * spec.kernel *
                               spec.kernel;
                e.ops = static_cast<double>(weight_elems) * out[1] * out[2];
            } else {
                weight_elems = static_cast<std::int64_t>(spec.units) * cur[0];
                e.ops = static_cast<double>(weight_elems);
            }
            e.reads = static_cast<double>(in_elems + weight_elems);
            e.is_mac = first_compute;
            e.in_sensor = first_compute && in_sensor;
            e.input_rate = first_compute ? 1.0 : 0.0; // measured below
            conv_or_dense.push_back(static_cast<int>(i));
            profile.layers.push_back(e);
            first_compute = false;
        }
        cur = shapes[i];
    }

    // Measured input activity and spike rates over the sample.
    std::vector<double> nonzero(profile.layers.size(), 0.0);
    std::vector<double> counts(profile.layers.size(), 0.0);
    std::vector<double> spike_sum;
    std::vector<double> spike_count;
    for (const Tensor& image : sample) {
        Tensor batch({1, image.dim(0), image.dim(1), image.dim(2)}, image.values());
        ForwardTrace trace;
        forward_batch(net, batch, false, &trace);
        std::size_t spike_idx = 0;
        for (std::size_t i = 0; i < net.layers.size(); ++i) {
            if (std::holds_alternative<SpikeLayer>(net.layers[i])) {
                const Tensor& s = trace.outputs[i];
                if (spike_sum.size() <= spike_idx) {
                    spike_sum.push_back(0.0);
                    spike_count.push_back(0.0);
                }
                for (std::int64_t e = 0; e < s.numel(); ++e) spike_sum[spike_idx] += s[e];
                spike_count[spike_idx] += static_cast<double>(s.numel());
                ++spike_idx;
            }
        }
        for (std::size_t p = 0; p < conv_or_dense.size(); ++p) {
            const int li = conv_or_dense[p];
            if (profile.layers[p].is_mac) continue; // analog input, rate pinned to 1
            const Tensor& in = li == 0 ? batch : trace.outputs[static_cast<std::size_t>(li - 1)];
            for (std::int64_t e = 0; e < in.numel(); ++e)
                if (in[e] != 0.0f) nonzero[p] += 1.0;
            counts[p] += static_cast<double>(in.numel());
        }
    }
    for (std::size_t p = 0; p < profile.layers.size(); ++p)
        if (!profile.layers[p].is_mac && counts[p] > 0.0)
            profile.layers[p].input_rate = nonzero[p] / counts[p];
    profile.spike_rates.resize(spike_sum.size());
    for (std::size_t s = 0; s < spike_sum.size(); ++s)
        profile.spike_rates[s] = spike_count[s] > 0.0 ? spike_sum[s] / spike_count[s] : 0.0;
    return profile;
}

} // namespace insnn::net
