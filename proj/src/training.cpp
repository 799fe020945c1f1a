#include "insnn/training.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "insnn/datasets.hpp"

namespace insnn::training {

Tensor adapter_1x1(const Tensor& student_map, const Tensor& adapter_weights) {
    if (adapter_weights.rank() != 4 || adapter_weights.dim(2) != 1 || adapter_weights.dim(3) != 1)
        throw DimensionError("adapter weights must be [C_t,C_s,1,1]");
    return conv2d(student_map, adapter_weights, 1, 0);
}

namespace {

// Per-map L2 normalization over everything but the batch axis. Maps with
// (near) zero norm normalize to zero and pass no gradient.
constexpr double kNormFloor = 1e-12;

struct MapDiffResult {
    double loss = 0.0; // mean squared difference, already divided by N*D
    Tensor grad;       // wrt the student map; empty if not requested
};

MapDiffResult map_difference(const Tensor& s, const Tensor& t, bool normalize, bool want_grad) {
    if (!s.same_shape(t))
        throw DimensionError("matched activation maps differ in shape: " +
                             Tensor::shape_string(s.shape()) + " vs " +
                             Tensor::shape_string(t.shape()));
    const int n = s.rank() >= 2 ? s.dim(0) : 1;
    const std::int64_t d = s.numel() / n;

    MapDiffResult res;
    if (want_grad) res.grad = Tensor(s.shape());
    double total = 0.0;
    for (int i = 0; i < n; ++i) {
        const float* sp = s.data() + static_cast<std::int64_t>(i) * d;
        const float* tp = t.data() + static_cast<std::int64_t>(i) * d;
        float* gp = want_grad ? res.grad.data() + static_cast<std::int64_t>(i) * d : nullptr;
        if (!normalize) {
            for (std::int64_t e = 0; e < d; ++e) {
                const double diff = static_cast<double>(sp[e]) - tp[e];
                total += diff * diff;
                if (gp) gp[e] = static_cast<float>(2.0 * diff / (static_cast<double>(n) * d));
            }
            continue;
        }
        double ns = 0.0, nt = 0.0;
        for (std::int64_t e = 0; e < d; ++e) {
            ns += static_cast<double>(sp[e]) * sp[e];
            nt += static_cast<double>(tp[e]) * tp[e];
        }
        ns = std::sqrt(ns);
        nt = std::sqrt(nt);
        const bool s_dead = ns < kNormFloor;
        const double rs = s_dead ? 1.0 : ns;
        const double rt = nt < kNormFloor ? 1.0 : nt;
        double dot_gs = 0.0; // (s_hat . g_hat) accumulator for the projection term
        for (std::int64_t e = 0; e < d; ++e) {
            const double sh = sp[e] / rs;
            const double th = tp[e] / rt;
            const double diff = sh - th;
            total += diff * diff;
            if (gp) {
                const double gh = 2.0 * diff / (static_cast<double>(n) * d);
                gp[e] = static_cast<float>(gh);
                dot_gs += sh * gh;
            }
        }
        if (gp && !s_dead) {
            for (std::int64_t e = 0; e < d; ++e) {
                const double sh = sp[e] / rs;
                gp[e] = static_cast<float>((gp[e] - sh * dot_gs) / rs);
            }
        } else if (gp) {
            for (std::int64_t e = 0; e < d; ++e) gp[e] = 0.0f;
        }
    }
    res.loss = total / (static_cast<double>(n) * d);
    return res;
}

} // namespace

float kd_loss(const Tensor& student_logits, const Tensor& teacher_logits,
              const std::vector<Tensor>& student_maps, const std::vector<Tensor>& teacher_maps,
              std::span<const int> labels, const KDConfig& cfg) {
    return kd_loss_backward(student_logits, teacher_logits, student_maps, teacher_maps, labels,
                            cfg)
        .loss;
}

KDGrads kd_loss_backward(const Tensor& student_logits, const Tensor& teacher_logits,
                         const std::vector<Tensor>& student_maps,
                         const std::vector<Tensor>& teacher_maps, std::span<const int> labels,
                         const KDConfig& cfg) {
    if (cfg.lambda_logit < 0.0f || cfg.lambda_act < 0.0f)
        throw ParameterError("KD loss weights must be >= 0");
    if (student_maps.size() != teacher_maps.size())
        throw DimensionError("matched map lists differ in length");
    if (!student_logits.same_shape(teacher_logits))
        throw DimensionError("student/teacher logit shapes differ");

    KDGrads out;
    out.ce = softmax_cross_entropy(student_logits, labels);
    out.loss = out.ce;
    out.grad_logits = softmax_cross_entropy_backward(student_logits, labels);

    if (cfg.lambda_logit > 0.0f) {
        double sq = 0.0;
        const std::int64_t n = student_logits.numel();
        for (std::int64_t i = 0; i < n; ++i) {
            const double diff = static_cast<double>(student_logits[i]) - teacher_logits[i];
            sq += diff * diff;
            out.grad_logits[i] +=
                static_cast<float>(cfg.lambda_logit * 2.0 * diff / static_cast<double>(n));
        }
        out.loss += cfg.lambda_logit * static_cast<float>(sq / static_cast<double>(n));
    }

    out.grad_maps.resize(student_maps.size());
    if (cfg.lambda_act > 0.0f) {
        for (std::size_t b = 0; b < student_maps.size(); ++b) {
            MapDiffResult r =
                map_difference(student_maps[b], teacher_maps[b], cfg.normalize_maps, true);
            out.loss += cfg.lambda_act * static_cast<float>(r.loss);
            r.grad.vec() *= cfg.lambda_act;
            out.grad_maps[b] = std::move(r.grad);
        }
    } else {
        for (std::size_t b = 0; b < student_maps.size(); ++b)
            out.grad_maps[b] = Tensor(student_maps[b].shape());
    }
    return out;
}

// ---------------------------------------------------------------------------
// Shared training machinery.
// ---------------------------------------------------------------------------

namespace {

Tensor make_batch(const io::Dataset& data, std::span<const std::size_t> idx,
                  std::vector<int>& labels_out) {
    const Tensor& first = data.images[idx[0]];
    Tensor batch({static_cast<int>(idx.size()), first.dim(0), first.dim(1), first.dim(2)});
    labels_out.resize(idx.size());
    const std::int64_t per = first.numel();
    for (std::size_t i = 0; i < idx.size(); ++i) {
        const Tensor& img = data.images[idx[i]];
        std::copy(img.data(), img.data() + per, batch.data() + static_cast<std::int64_t>(i) * per);
        labels_out[i] = data.labels[idx[i]];
    }
    return batch;
}

int correct_count(const Tensor& logits, std::span<const int> labels) {
    const int n = logits.dim(0);
    const int k = logits.dim(1);
    int correct = 0;
    for (int i = 0; i < n; ++i) {
        const float* row = logits.data() + static_cast<std::int64_t>(i) * k;
        int arg = 0;
        for (int j = 1; j < k; ++j)
            if (row[j] > row[arg]) arg = j;
        if (arg == labels[static_cast<std::size_t>(i)]) ++correct;
    }
    return correct;
}

struct SpikeRateAccum {
    double sum = 0.0;
    double count = 0.0;
    void add(const net::Network& net, const net::ForwardTrace& trace) {
        for (std::size_t i = 0; i < net.layers.size(); ++i) {
            if (!std::holds_alternative<net::SpikeLayer>(net.layers[i])) continue;
            const Tensor& s = trace.outputs[i];
            for (std::int64_t e = 0; e < s.numel(); ++e) sum += s[e];
            count += static_cast<double>(s.numel());
        }
    }
    float rate() const { return count > 0.0 ? static_cast<float>(sum / count) : 0.0f; }
};

// Per-sample Hoyer term on every spike layer's pre-activation, averaged over
// the batch. Returns the summed value and accumulates gradients keyed by the
// pre-activation's layer index.
float hoyer_terms(const net::Network& net, const net::ForwardTrace& trace, const Tensor& batch,
                  float lambda, std::map<int, Tensor>& extra_grads) {
    if (lambda <= 0.0f) return 0.0f;
    double total = 0.0;
    for (std::size_t i = 0; i < net.layers.size(); ++i) {
        if (!std::holds_alternative<net::SpikeLayer>(net.layers[i])) continue;
        const Tensor& u = i == 0 ? batch : trace.outputs[i - 1];
        const int n = u.dim(0);
        const std::int64_t per = u.numel() / n;
        Tensor grad(u.shape());
        for (int s = 0; s < n; ++s) {
            Tensor view({static_cast<int>(per)},
                        std::vector<float>(u.data() + s * per, u.data() + (s + 1) * per));
            total += net::hoyer_regularizer(view) / n;
            Tensor g = net::hoyer_backward(view);
            for (std::int64_t e = 0; e < per; ++e)
                grad[s * per + e] = g[e] * lambda / static_cast<float>(n);
        }
        if (i == 0) continue; // pre-activation is the input image; nothing to train there
        auto [it, fresh] = extra_grads.try_emplace(static_cast<int>(i) - 1, std::move(grad));
        if (!fresh) it->second.vec() += grad.vec();
    }
    return lambda * static_cast<float>(total);
}

ParamSnapshot snapshot(net::Network& net) {
    ParamSnapshot snap;
    for (auto& [name, t] : net.state_tensors()) snap.tensors.emplace_back(name, *t);
    return snap;
}

float cosine_lr(const Hyperparams& hp, int epoch) {
    if (!hp.cosine_lr || hp.epochs <= 1) return hp.lr;
    const double t = static_cast<double>(epoch) / hp.epochs;
    return static_cast<float>(hp.lr * 0.5 * (1.0 + std::cos(3.14159265358979323846 * t)));
}

struct KDContext {
    net::Network* teacher = nullptr;
    const KDConfig* cfg = nullptr;
    Tensor* adapter = nullptr;        // may be empty tensor when channels match
    Tensor adapter_velocity;
    std::vector<int> blocks;          // resolved matched block indices (1-based)
};

// Matching taps per block. Block 1 exposes the in-sensor convolution's raw
// output (the adapter's input); later blocks expose either the block output
// or the pre-threshold membrane map, per KDConfig.
int tap_layer_index(const net::Network& net, int block, bool pre_threshold) {
    if (block == 1) return 0;
    const int end = net.block_ends[static_cast<std::size_t>(block) - 1];
    if (!pre_threshold) return end;
    const int begin = net.block_ends[static_cast<std::size_t>(block) - 2] + 1;
    for (int i = end; i >= begin; --i)
        if (std::holds_alternative<net::SpikeLayer>(net.layers[static_cast<std::size_t>(i)]))
            return i - 1;
    return end;
}

// One optimization pass over the whole dataset; shared by train() and
// distill(). When kd is non-null the loss gains the logit and activation
// matching terms.
void run_epoch(net::Network& net, const io::Dataset& data, const Hyperparams& hp, int epoch,
               Rng& rng, std::vector<Tensor>& velocities, KDContext* kd, EpochRow& row_out) {
    std::vector<std::size_t> order(data.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::shuffle(order.begin(), order.end(), rng);

    auto params = net.parameters();
    if (velocities.size() != params.size()) velocities.assign(params.size(), Tensor());

    SgdOptions sgd;
    sgd.lr = cosine_lr(hp, epoch);
    sgd.momentum = hp.momentum;
    sgd.weight_decay = hp.weight_decay;

    double loss_sum = 0.0;
    int seen = 0, correct = 0;
    SpikeRateAccum spikes;

    const int bs = std::max(1, hp.batch_size);
    for (std::size_t off = 0; off < order.size(); off += static_cast<std::size_t>(bs)) {
        const std::size_t take = std::min<std::size_t>(bs, order.size() - off);
        std::vector<int> labels;
        Tensor batch = make_batch(data, {order.data() + off, take}, labels);
        const int batch_index = static_cast<int>(off / static_cast<std::size_t>(bs));

        net::ForwardTrace trace;
        Tensor logits = forward_batch(net, batch, true, &trace);

        net.zero_grads();
        if (kd && kd->adapter->numel() > 0) {
            kd->adapter->alloc_grad();
            kd->adapter->zero_grad();
        }

        std::map<int, Tensor> extra;
        float loss;
        Tensor grad_logits;
        if (kd) {
            net::ForwardTrace t_trace;
            Tensor t_logits = forward_batch(*kd->teacher, batch, false, &t_trace);
            std::vector<Tensor> s_maps, t_maps;
            std::vector<int> tap_layers;
            for (int b : kd->blocks) {
                const int sl = tap_layer_index(net, b, kd->cfg->match_pre_threshold);
                const int tl = tap_layer_index(*kd->teacher, b, kd->cfg->match_pre_threshold);
                Tensor s_map = trace.outputs[static_cast<std::size_t>(sl)];
                if (b == 1 && kd->adapter->numel() > 0)
                    s_map = adapter_1x1(s_map, *kd->adapter);
                s_maps.push_back(std::move(s_map));
                t_maps.push_back(t_trace.outputs[static_cast<std::size_t>(tl)]);
                tap_layers.push_back(sl);
            }
            KDGrads g = kd_loss_backward(logits, t_logits, s_maps, t_maps, labels, *kd->cfg);
            loss = g.loss;
            grad_logits = std::move(g.grad_logits);
            for (std::size_t m = 0; m < tap_layers.size(); ++m) {
                Tensor map_grad = std::move(g.grad_maps[m]);
                if (kd->blocks[m] == 1 && kd->adapter->numel() > 0) {
                    ConvGrads ag =
                        conv2d_backward(map_grad, trace.outputs[0], *kd->adapter, 1, 0);
                    kd->adapter->grad_vec() += ag.grad_weights.vec();
                    map_grad = std::move(ag.grad_input);
                }
                auto [it, fresh] =
                    extra.try_emplace(tap_layers[m], std::move(map_grad));
                if (!fresh) it->second.vec() += map_grad.vec();
            }
        } else {
            loss = softmax_cross_entropy(logits, labels);
            grad_logits = softmax_cross_entropy_backward(logits, labels);
        }
        loss += hoyer_terms(net, trace, batch, hp.lambda_hoyer, extra);

        if (!std::isfinite(loss))
            throw TrainingError("non-finite loss at epoch " + std::to_string(epoch) + " batch " +
                                std::to_string(batch_index));

        backward_batch(net, batch, trace, grad_logits, extra.empty() ? nullptr : &extra);

        try {
            for (std::size_t p = 0; p < params.size(); ++p) {
                Tensor grad(params[p].second->shape(),
                            std::vector<float>(params[p].second->grad(),
                                               params[p].second->grad() +
                                                   params[p].second->numel()));
                sgd_step(*params[p].second, grad, velocities[p], sgd);
            }
            if (kd && kd->adapter->numel() > 0) {
                Tensor grad(kd->adapter->shape(),
                            std::vector<float>(kd->adapter->grad(),
                                               kd->adapter->grad() + kd->adapter->numel()));
                sgd_step(*kd->adapter, grad, kd->adapter_velocity, sgd);
            }
        } catch (const TrainingError& e) {
            throw TrainingError(std::string(e.what()) + " (epoch " + std::to_string(epoch) +
                                " batch " + std::to_string(batch_index) + ")");
        }

        loss_sum += static_cast<double>(loss) * take;
        seen += static_cast<int>(take);
        correct += correct_count(logits, labels);
        spikes.add(net, trace);
    }

    row_out.epoch = epoch;
    row_out.split = "train";
    row_out.loss = static_cast<float>(loss_sum / std::max(1, seen));
    row_out.accuracy = seen > 0 ? static_cast<float>(correct) / seen : 0.0f;
    row_out.mean_spike_rate = spikes.rate();
}

} // namespace

EvalResult evaluate(net::Network& net, const io::Dataset& data, int batch_size) {
    if (data.size() == 0) return {};
    double loss_sum = 0.0;
    int correct = 0;
    SpikeRateAccum spikes;
    const int bs = std::max(1, batch_size);
    std::vector<std::size_t> order(data.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    for (std::size_t off = 0; off < order.size(); off += static_cast<std::size_t>(bs)) {
        const std::size_t take = std::min<std::size_t>(bs, order.size() - off);
        std::vector<int> labels;
        Tensor batch = make_batch(data, {order.data() + off, take}, labels);
        net::ForwardTrace trace;
        Tensor logits = forward_batch(net, batch, false, &trace);
        loss_sum += static_cast<double>(softmax_cross_entropy(logits, labels)) * take;
        correct += correct_count(logits, labels);
        spikes.add(net, trace);
    }
    EvalResult res;
    res.loss = static_cast<float>(loss_sum / static_cast<double>(data.size()));
    res.accuracy = static_cast<float>(correct) / static_cast<float>(data.size());
    res.mean_spike_rate = spikes.rate();
    return res;
}

namespace {

TrainResult training_loop(net::Network& net, const io::Dataset& train_set,
                          const io::Dataset& test_set, const Hyperparams& hp, KDContext* kd) {
    if (train_set.size() == 0) throw ParameterError("training dataset is empty");
    TrainResult result;
    Rng rng = make_rng(hp.seed);
    std::vector<Tensor> velocities;
    for (int epoch = 0; epoch < hp.epochs; ++epoch) {
        EpochRow train_row;
        run_epoch(net, train_set, hp, epoch, rng, velocities, kd, train_row);
        result.history.push_back(train_row);

        EpochRow test_row{epoch, "test", 0.0f, 0.0f, 0.0f};
        float monitored = train_row.accuracy;
        if (test_set.size() > 0) {
            EvalResult ev = evaluate(net, test_set);
            test_row.loss = ev.loss;
            test_row.accuracy = ev.accuracy;
            test_row.mean_spike_rate = ev.mean_spike_rate;
            result.history.push_back(test_row);
            monitored = ev.accuracy;
        }
        if (monitored > result.best_accuracy || result.best_epoch < 0) {
            result.best_accuracy = monitored;
            result.best_epoch = epoch;
            result.best_params = snapshot(net);
        }
    }
    return result;
}

} // namespace

TrainResult train(net::Network& net, const io::Dataset& train_set, const io::Dataset& test_set,
                  const Hyperparams& hp) {
    return training_loop(net, train_set, test_set, hp, nullptr);
}

DistillResult distill(const net::Network& teacher, const net::NetworkConfig& student_cfg,
                      const io::Dataset& train_set, const io::Dataset& test_set,
                      const KDConfig& kd, const Hyperparams& hp) {
    if (teacher.config.input_shape != student_cfg.input_shape ||
        teacher.config.num_classes != student_cfg.num_classes)
        throw ConfigError("teacher and student must share input shape and class count");
    const int teacher_c = teacher.config.layers.front().channels;
    const int student_c = student_cfg.layers.front().channels;
    if (student_c > teacher_c)
        throw ConfigError("student first-layer channels (" + std::to_string(student_c) +
                          ") exceed the teacher's (" + std::to_string(teacher_c) + ")");

    Rng init_rng = make_rng(hp.seed);
    DistillResult out;
    out.student = net::build_network(student_cfg, init_rng);

    if (student_c < teacher_c) {
        out.adapter = Tensor({teacher_c, student_c, 1, 1});
        fill_kaiming(out.adapter, init_rng);
    }

    net::Network teacher_copy = teacher; // frozen; the caller's network is untouched

    KDContext ctx;
    ctx.teacher = &teacher_copy;
    ctx.cfg = &kd;
    ctx.adapter = &out.adapter;
    if (kd.matched_blocks.empty()) {
        const int blocks = static_cast<int>(
            std::min(out.student.block_ends.size(), teacher_copy.block_ends.size()));
        for (int b = 1; b <= blocks; ++b) ctx.blocks.push_back(b);
    } else {
        for (int b : kd.matched_blocks) {
            if (b < 1 || b > static_cast<int>(out.student.block_ends.size()) ||
                b > static_cast<int>(teacher_copy.block_ends.size()))
                throw ConfigError("matched block " + std::to_string(b) +
                                  " does not exist in both networks");
            ctx.blocks.push_back(b);
        }
    }

    out.result = training_loop(out.student, train_set, test_set, hp, &ctx);
    return out;
}

void restore_snapshot(net::Network& net, const ParamSnapshot& snap) {
    auto named = net.state_tensors();
    for (const auto& [name, value] : snap.tensors) {
        bool found = false;
        for (auto& [n2, t] : named) {
            if (n2 == name) {
                if (!t->same_shape(value))
                    throw DimensionError("snapshot tensor " + name + " shape mismatch");
                *t = value;
                found = true;
                break;
            }
        }
        if (!found) throw ParameterError("snapshot tensor " + name + " not found in network");
    }
}

} // namespace insnn::training
