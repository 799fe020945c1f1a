// End-to-end acceptance suite. Each criterion prints one PASS/FAIL line; the
// exit code is the number of failures.
//
//   acceptance --work-dir <dir> --cli <path to the insnn binary>
//              [--data-dir <dir with real cifar10/ and mnist/>] [--only N]
//
// Without --data-dir (or when the standard files are absent) the suite
// generates the synthetic stand-in corpora in the exact on-disk formats, so
// it runs self-contained.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <vector>

#include "insnn/analysis.hpp"
#include "insnn/checkpoint.hpp"
#include "insnn/config.hpp"
#include "insnn/datasets.hpp"
#include "insnn/snn.hpp"
#include "insnn/training.hpp"

using namespace insnn;
namespace fs = std::filesystem;

namespace {

struct Context {
    fs::path work_dir;
    fs::path data_dir;
    std::string cli;
    std::string data_root; // directory actually holding cifar10/ and mnist/

    io::DatasetPair cifar;
    io::DatasetPair mnist;

    // artifacts shared across criteria
    net::Network teacher;
    training::TrainResult teacher_result;
    bool teacher_ready = false;
};

double now_s() {
    return std::chrono::duration<double>(
               std::chrono::steady_clock::now().time_since_epoch())
        .count();
}

Tensor random_tensor(std::vector<int> shape, Rng& rng, float lo, float hi) {
    Tensor t(std::move(shape));
    fill_uniform(t, rng, lo, hi);
    return t;
}

// ---------------------------------------------------------------------------
// Criterion 1: fusion equivalence on 100 random instances.
// ---------------------------------------------------------------------------

Tensor digital_block_oracle(const Tensor& image, const Tensor& theta,
                            const analog::BNParams& bn, double v_th, int stride, int padding,
                            int pool_window) {
    const int c_in = image.dim(0), h = image.dim(1), w = image.dim(2);
    const int c_out = theta.dim(0), kh = theta.dim(2), kw = theta.dim(3);
    const int oh = (h + 2 * padding - kh) / stride + 1;
    const int ow = (w + 2 * padding - kw) / stride + 1;
    Tensor spikes({c_out, oh, ow});
    for (int oc = 0; oc < c_out; ++oc) {
        const double a = static_cast<double>(bn.gamma(oc)) /
                         std::sqrt(static_cast<double>(bn.sigma2(oc)) + bn.eps);
        const double b = static_cast<double>(bn.beta(oc)) - static_cast<double>(bn.mu(oc)) * a;
        for (int y = 0; y < oh; ++y)
            for (int x = 0; x < ow; ++x) {
                double acc = 0.0;
                for (int ic = 0; ic < c_in; ++ic)
                    for (int ky = 0; ky < kh; ++ky)
                        for (int kx = 0; kx < kw; ++kx) {
                            const int iy = y * stride + ky - padding;
                            const int ix = x * stride + kx - padding;
                            if (iy < 0 || iy >= h || ix < 0 || ix >= w) continue;
                            acc += static_cast<double>(image(ic, iy, ix)) *
                                   theta(oc, ic, ky, kx);
                        }
                spikes(oc, y, x) = (a * acc + b >= v_th) ? 1.0f : 0.0f;
            }
    }
    if (pool_window > 1) return maxpool2d(spikes, pool_window, pool_window);
    return spikes;
}

bool criterion_fusion_equivalence(Context&, std::string& detail) {
    Rng rng = make_rng(2024);
    long mismatches = 0;
    long elements = 0;
    for (int trial = 0; trial < 100; ++trial) {
        const int c_in = 1 + trial % 3;
        const int c_out = 1 + (trial * 5) % 8;
        const int k = (trial % 3 == 0) ? 5 : 3;
        const int stride = 1 + trial % 2;
        const int padding = (trial % 4 == 0) ? k / 2 : 0;
        const int pool = (trial % 2 == 0) ? 2 : 1;
        const int hw = 8 + (trial % 4) * 2;

        Tensor theta = random_tensor({c_out, c_in, k, k}, rng, -0.8f, 0.8f);
        analog::BNParams bn;
        bn.gamma = random_tensor({c_out}, rng, 0.3f, 2.0f);
        bn.beta = random_tensor({c_out}, rng, -1.0f, 1.0f);
        bn.mu = random_tensor({c_out}, rng, -0.5f, 0.5f);
        bn.sigma2 = random_tensor({c_out}, rng, 0.1f, 1.5f);
        bn.eps = 1e-5f;
        const double v_th = 0.1 + 0.07 * (trial % 9);
        Tensor image = random_tensor({c_in, hw, hw}, rng, 0.0f, 1.0f);

        analog::FuseOptions opts;
        opts.stride = stride;
        opts.padding = padding;
        opts.pool_window = pool;
        analog::FusedFrontend fe = analog::fuse_bn(theta, bn, v_th, opts);

        Tensor got = analog::frontend_forward(image, fe);
        Tensor want = digital_block_oracle(image, theta, bn, v_th, stride, padding, pool);
        for (std::int64_t i = 0; i < got.numel(); ++i) {
            ++elements;
            if (got[i] != want[i]) ++mismatches;
        }
    }
    char buf[160];
    std::snprintf(buf, sizeof(buf), "%ld mismatches over 100 instances (%ld elements)",
                  mismatches, elements);
    detail = buf;
    return mismatches == 0;
}

// ---------------------------------------------------------------------------
// Criterion 2: gradient suite against central finite differences.
// ---------------------------------------------------------------------------

Tensor finite_difference(Tensor& x, const std::function<double()>& f, double h = 1e-2) {
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

double grad_error(const Tensor& analytic, const Tensor& numeric) {
    double num = 0.0, den = 0.0;
    for (std::int64_t i = 0; i < analytic.numel(); ++i) {
        num = std::max(num, std::abs(static_cast<double>(analytic[i]) - numeric[i]));
        den = std::max({den, std::abs(static_cast<double>(analytic[i])),
                        std::abs(static_cast<double>(numeric[i]))});
    }
    return num / std::max(den, 1e-4);
}

bool criterion_gradients(Context&, std::string& detail) {
    Rng rng = make_rng(77);
    double worst = 0.0;
    auto track = [&worst](double e) { worst = std::max(worst, e); };

    for (int trial = 0; trial < 20; ++trial) {
        // conv
        {
            Tensor x = random_tensor({2, 4, 4}, rng, -1.0f, 1.0f);
            Tensor w = random_tensor({3, 2, 3, 3}, rng, -1.0f, 1.0f);
            Tensor probe = random_tensor({3, 2, 2}, rng, -1.0f, 1.0f);
            auto loss = [&] {
                Tensor out = conv2d(x, w, 1, 0);
                double acc = 0.0;
                for (std::int64_t i = 0; i < out.numel(); ++i)
                    acc += static_cast<double>(out[i]) * probe[i];
                return acc;
            };
            ConvGrads g = conv2d_backward(probe, x, w, 1, 0);
            track(grad_error(g.grad_weights, finite_difference(w, loss)));
            track(grad_error(g.grad_input, finite_difference(x, loss)));
        }
        // dense + CE
        {
            Tensor x = random_tensor({3, 5}, rng, -1.0f, 1.0f);
            Tensor w = random_tensor({4, 5}, rng, -1.0f, 1.0f);
            Tensor b = random_tensor({4}, rng, -1.0f, 1.0f);
            std::vector<int> labels = {trial % 4, (trial + 1) % 4, (trial + 2) % 4};
            auto loss = [&] {
                Tensor logits = dense(x, w, b);
                return static_cast<double>(
                    softmax_cross_entropy(logits, std::span<const int>(labels)));
            };
            Tensor logits = dense(x, w, b);
            Tensor dlogits = softmax_cross_entropy_backward(logits, labels);
            DenseGrads g = dense_backward(dlogits, x, w);
            track(grad_error(g.grad_weights, finite_difference(w, loss)));
            track(grad_error(g.grad_bias, finite_difference(b, loss)));
            track(grad_error(g.grad_input, finite_difference(x, loss)));
        }
        // batchnorm (training statistics)
        {
            Tensor x = random_tensor({4, 2, 3, 3}, rng, -1.0f, 1.0f);
            Tensor gamma = random_tensor({2}, rng, 0.5f, 1.5f);
            Tensor beta = random_tensor({2}, rng, -0.5f, 0.5f);
            Tensor probe = random_tensor(x.shape(), rng, -1.0f, 1.0f);
            const float eps = 1e-3f;
            auto loss = [&] {
                Tensor rm({2});
                Tensor rv = Tensor::full({2}, 1.0f);
                Tensor out = batchnorm_train(x, gamma, beta, rm, rv, 0.1f, eps);
                double acc = 0.0;
                for (std::int64_t i = 0; i < out.numel(); ++i)
                    acc += static_cast<double>(out[i]) * probe[i];
                return acc;
            };
            Tensor rm({2});
            Tensor rv = Tensor::full({2}, 1.0f);
            BNStats stats;
            batchnorm_train(x, gamma, beta, rm, rv, 0.1f, eps, &stats);
            BNGrads g = batchnorm_backward(probe, x, gamma, stats, eps);
            track(grad_error(g.grad_input, finite_difference(x, loss)));
            track(grad_error(g.grad_gamma, finite_difference(gamma, loss)));
            track(grad_error(g.grad_beta, finite_difference(beta, loss)));
        }
        // spike surrogate within its support: the boxcar is the derivative of
        // a hard-sigmoid ramp; compare against differences of that primitive
        {
            const net::SpikingActivation act{1.0f, true, 1.0f};
            Tensor u = random_tensor({32}, rng, 0.2f, 1.8f); // inside the support
            Tensor probe = random_tensor({32}, rng, -1.0f, 1.0f);
            auto ramp_loss = [&] {
                double acc = 0.0;
                for (std::int64_t i = 0; i < u.numel(); ++i) {
                    const double r = std::clamp(
                        (static_cast<double>(u[i]) - act.v_th + act.surrogate_width) /
                            (2.0 * act.surrogate_width),
                        0.0, 1.0);
                    acc += r * probe[i];
                }
                return acc;
            };
            Tensor analytic = net::spike_backward(probe, u, act);
            track(grad_error(analytic, finite_difference(u, ramp_loss, 1e-3)));
        }
        // adapter
        {
            Tensor map = random_tensor({1, 2, 3, 3}, rng, -1.0f, 1.0f);
            Tensor adapter = random_tensor({4, 2, 1, 1}, rng, -1.0f, 1.0f);
            Tensor probe = random_tensor({1, 4, 3, 3}, rng, -1.0f, 1.0f);
            auto loss = [&] {
                Tensor out = training::adapter_1x1(map, adapter);
                double acc = 0.0;
                for (std::int64_t i = 0; i < out.numel(); ++i)
                    acc += static_cast<double>(out[i]) * probe[i];
                return acc;
            };
            ConvGrads g = conv2d_backward(probe, map, adapter, 1, 0);
            track(grad_error(g.grad_weights, finite_difference(adapter, loss)));
            track(grad_error(g.grad_input, finite_difference(map, loss)));
        }
    }
    char buf[96];
    std::snprintf(buf, sizeof(buf), "worst relative error %.2e (bound 1e-3)", worst);
    detail = buf;
    return worst < 1e-3;
}

// ---------------------------------------------------------------------------
// Criterion 3: compression golden values and the channel-scaling law.
// ---------------------------------------------------------------------------

bool criterion_compression(Context& ctx, std::string& detail) {
    using energy::CompressionInputs;
    bool ok = true;
    std::string why;

    CompressionInputs identity{{16, 16, 8}, {16, 16, 8}, 8, 8, false};
    if (energy::compression_ratio(identity) != 1.0) {
        ok = false;
        why += "identity != 1; ";
    }

    CompressionInputs desk{{32, 32, 3}, {8, 8, 16}, 12, 1, true};
    const double c48 = energy::compression_ratio(desk);
    if (std::abs(c48 - 48.0) > 1e-9) {
        ok = false;
        why += "desk config != 48; ";
    }

    const fs::path preset = ctx.data_dir / "presets" / "vgg16_compression.json";
    const double c12 =
        energy::compression_ratio(io::load_compression_preset(preset.string()));
    if (std::abs(c12 - 12.0) > 1e-9) {
        ok = false;
        why += "preset != 12; ";
    }

    for (int kf : {2, 4, 8}) {
        CompressionInputs scaled = desk;
        scaled.out_shape.channels = desk.out_shape.channels * kf;
        if (energy::compression_ratio(scaled) * kf != c48) {
            ok = false;
            why += "scaling k=" + std::to_string(kf) + " not exact; ";
        }
    }
    char buf[160];
    std::snprintf(buf, sizeof(buf), "C(identity)=1, C(desk)=%.1f, C(preset)=%.1f%s%s", c48, c12,
                  why.empty() ? "" : " — ", why.c_str());
    detail = buf;
    return ok;
}

// ---------------------------------------------------------------------------
// Criterion 4: distillation direction on the CIFAR-10 subset.
// ---------------------------------------------------------------------------

training::Hyperparams cifar_hyper(std::uint64_t seed) {
    training::Hyperparams hp;
    hp.epochs = 12;
    hp.batch_size = 32;
    hp.lr = 0.08f;
    hp.momentum = 0.9f;
    hp.weight_decay = 5e-4f;
    hp.seed = seed;
    return hp;
}

void ensure_teacher(Context& ctx) {
    if (ctx.teacher_ready) return;
    net::NetworkConfig cfg = net::NetworkConfig::vgg6_lite(16, {3, 32, 32}, 10);
    ctx.teacher = net::build_network(cfg, 1);
    ctx.teacher_result = training::train(ctx.teacher, ctx.cifar.train, ctx.cifar.test,
                                         cifar_hyper(1));
    training::restore_snapshot(ctx.teacher, ctx.teacher_result.best_params);
    ctx.teacher_ready = true;
}

bool criterion_kd_direction(Context& ctx, std::string& detail) {
    ensure_teacher(ctx);
    const float teacher_acc = ctx.teacher_result.best_accuracy;

    const net::NetworkConfig student_cfg = net::NetworkConfig::vgg6_lite(4, {3, 32, 32}, 10);
    double plain_sum = 0.0, kd_sum = 0.0;
    for (std::uint64_t seed : {11ull, 12ull, 13ull}) {
        net::Network plain = net::build_network(student_cfg, seed);
        plain_sum += training::train(plain, ctx.cifar.train, ctx.cifar.test, cifar_hyper(seed))
                         .best_accuracy;
        training::KDConfig kd; // library defaults
        kd_sum += training::distill(ctx.teacher, student_cfg, ctx.cifar.train, ctx.cifar.test,
                                    kd, cifar_hyper(seed))
                      .result.best_accuracy;
    }
    const double plain_mean = plain_sum / 3.0;
    const double kd_mean = kd_sum / 3.0;

    char buf[200];
    std::snprintf(buf, sizeof(buf),
                  "teacher %.3f, student %.3f, student+KD %.3f (means over 3 seeds)",
                  teacher_acc, plain_mean, kd_mean);
    detail = buf;
    return kd_mean >= plain_mean && plain_mean <= teacher_acc;
}

// ---------------------------------------------------------------------------
// Criterion 5: bounded degradation under the saturating curve.
// ---------------------------------------------------------------------------

analog::FusedFrontend fuse_teacher(Context& ctx, const io::FrontendConfig& fcfg,
                                   std::span<const Tensor> probe) {
    net::ConvLayer* conv = nullptr;
    net::BatchNormLayer* bn = nullptr;
    net::SpikeLayer* spike = nullptr;
    int pool = 1;
    for (int i = 0; i < ctx.teacher.first_block_end; ++i) {
        if (auto* c = std::get_if<net::ConvLayer>(&ctx.teacher.layers[i])) conv = c;
        if (auto* b = std::get_if<net::BatchNormLayer>(&ctx.teacher.layers[i])) bn = b;
        if (auto* s = std::get_if<net::SpikeLayer>(&ctx.teacher.layers[i])) spike = s;
        if (auto* p = std::get_if<net::PoolLayer>(&ctx.teacher.layers[i])) pool = p->window;
    }
    analog::BNParams bnp{bn->gamma, bn->beta, bn->running_mean, bn->running_var, bn->eps};
    analog::FuseOptions opts = fcfg.fuse_options(conv->stride, conv->padding, pool);
    if (fcfg.auto_drive && opts.curve.clamps()) {
        analog::FuseOptions unit = opts;
        unit.normalize_range = true;
        unit.drive = 1.0;
        unit.quant_bits = 0;
        analog::FusedFrontend coarse = analog::fuse_bn(conv->w, bnp, spike->v_th(0), unit);
        opts.normalize_range = true;
        opts.drive = analog::recommend_drive(coarse.banks, probe, opts.curve, opts.stride,
                                             opts.padding, fcfg.drive_target);
    }
    return analog::fuse_bn(conv->w, bnp, spike->v_th(0), opts);
}

float eval_in_sensor(Context& ctx, const analog::FusedFrontend& fe) {
    net::Network fused = ctx.teacher;
    fused.config.first_layer_mode = net::FirstLayerMode::in_sensor;
    fused.frontend = fe;
    return training::evaluate(fused, ctx.cifar.test).accuracy;
}

bool criterion_nonideality(Context& ctx, std::string& detail) {
    ensure_teacher(ctx);
    io::FrontendConfig fcfg; // defaults: saturating v_max=1, k=2, 4-bit, auto drive
    std::vector<Tensor> probe(ctx.cifar.test.images.begin(),
                              ctx.cifar.test.images.begin() +
                                  std::min<std::size_t>(8, ctx.cifar.test.size()));
    analog::FusedFrontend sat = fuse_teacher(ctx, fcfg, probe);
    analog::FusedFrontend ideal = analog::with_curve(sat, analog::CurveModel::ideal());

    const float acc_ideal = eval_in_sensor(ctx, ideal);
    const float acc_sat = eval_in_sensor(ctx, sat);
    const float drop = (acc_ideal - acc_sat) * 100.0f;

    char buf[160];
    std::snprintf(buf, sizeof(buf),
                  "ideal-curve %.3f, saturating %.3f, drop %.2f points (bound 5)", acc_ideal,
                  acc_sat, drop);
    detail = buf;
    return drop <= 5.0f;
}

// ---------------------------------------------------------------------------
// Criterion 6: binary activations after the first layer, 1000-image fuzz.
// ---------------------------------------------------------------------------

bool criterion_binary(Context& ctx, std::string& detail) {
    ensure_teacher(ctx);
    Rng rng = make_rng(4242);
    long checked = 0;
    long violations = 0;
    const std::size_t n = 1000;
    for (std::size_t i = 0; i < n; ++i) {
        Tensor image = i < ctx.cifar.test.size()
                           ? ctx.cifar.test.images[i]
                           : random_tensor({3, 32, 32}, rng, 0.0f, 1.0f);
        Tensor batch({1, 3, 32, 32}, image.values());
        net::ForwardTrace trace;
        forward_batch(ctx.teacher, batch, false, &trace);
        for (std::size_t l = static_cast<std::size_t>(ctx.teacher.first_block_end) - 1;
             l < ctx.teacher.layers.size(); ++l) {
            const bool spiking = std::holds_alternative<net::SpikeLayer>(ctx.teacher.layers[l]) ||
                                 std::holds_alternative<net::PoolLayer>(ctx.teacher.layers[l]);
            if (!spiking) continue;
            const Tensor& t = trace.outputs[l];
            for (std::int64_t e = 0; e < t.numel(); ++e) {
                ++checked;
                if (t[e] != 0.0f && t[e] != 1.0f) ++violations;
            }
        }
    }
    char buf[128];
    std::snprintf(buf, sizeof(buf), "%ld violations over %ld activations from %zu images",
                  violations, checked, n);
    detail = buf;
    return violations == 0;
}

// ---------------------------------------------------------------------------
// Criterion 7: energy model structure with the shipped parameter file.
// ---------------------------------------------------------------------------

bool criterion_energy(Context& ctx, std::string& detail) {
    ensure_teacher(ctx);
    energy::EnergyParams params =
        io::load_energy_params((ctx.data_dir / "energy_params.json").string());
    energy::CompressionInputs comp = energy::compression_from_network(ctx.teacher.config);
    std::vector<Tensor> sample(ctx.cifar.test.images.begin(),
                               ctx.cifar.test.images.begin() +
                                   std::min<std::size_t>(32, ctx.cifar.test.size()));
    energy::ModeInputs base =
        energy::mode_inputs(ctx.teacher, sample, energy::SensorMode::baseline, comp);
    energy::ModeInputs fused =
        energy::mode_inputs(ctx.teacher, sample, energy::SensorMode::in_sensor, comp);
    energy::EnergyReport rep = energy::energy_report(base, fused, params);

    const bool ordering = rep.sensor_ratio > rep.communication_ratio &&
                          rep.communication_ratio > rep.processing_ratio &&
                          rep.processing_ratio > 1.0;
    const bool exact_total =
        rep.baseline.total() ==
            rep.baseline.sensor + rep.baseline.communication + rep.baseline.processing &&
        rep.in_sensor.total() ==
            rep.in_sensor.sensor + rep.in_sensor.communication + rep.in_sensor.processing;

    energy::EnergyParams half = params;
    half.e_comm_bit = params.e_comm_bit / 2.0;
    energy::EnergyReport rep_half = energy::energy_report(base, fused, half);
    const bool linear = rep_half.baseline.communication == rep.baseline.communication / 2.0 &&
                        rep_half.in_sensor.communication == rep.in_sensor.communication / 2.0 &&
                        rep_half.baseline.sensor == rep.baseline.sensor &&
                        rep_half.baseline.processing == rep.baseline.processing;

    char buf[200];
    std::snprintf(buf, sizeof(buf),
                  "ratios sensor %.1f > comm %.1f > processing %.2f > 1; totals exact %s; "
                  "comm linearity %s",
                  rep.sensor_ratio, rep.communication_ratio, rep.processing_ratio,
                  exact_total ? "yes" : "NO", linear ? "yes" : "NO");
    detail = buf;
    return ordering && exact_total && linear;
}

// ---------------------------------------------------------------------------
// Criterion 8: byte-identical metrics from two seeded CLI train runs.
// ---------------------------------------------------------------------------

bool criterion_determinism(Context& ctx, std::string& detail) {
    if (ctx.cli.empty()) {
        detail = "no --cli given";
        return false;
    }
    const fs::path cfg_path = ctx.work_dir / "mnist_determinism.json";
    {
        std::ofstream out(cfg_path);
        out << R"({
  "seed": 5,
  "deterministic": true,
  "dataset": {"name": "mnist", "path": ")" << (ctx.data_root + "/mnist") << R"(",
              "train_subset": 10000, "test_subset": 2000, "synthesize_if_missing": true},
  "network": {
    "input": [1, 28, 28], "classes": 10,
    "layers": [
      {"type": "conv", "channels": 8, "kernel": 5, "stride": 2, "padding": 2},
      {"type": "batchnorm"}, {"type": "spike"}, {"type": "maxpool", "window": 2},
      {"type": "conv", "channels": 16, "kernel": 3, "stride": 1, "padding": 1},
      {"type": "batchnorm"}, {"type": "spike"},
      {"type": "flatten"}, {"type": "dense", "units": 10}
    ]
  },
  "training": {"epochs": 5, "batch_size": 32, "lr": 0.08}
})";
    }
    auto run = [&](const std::string& out_dir) {
        const std::string cmd = ctx.cli + " train --config " + cfg_path.string() + " --seed 5" +
                                " --deterministic --out-dir " + out_dir + " > /dev/null 2>&1";
        return std::system(cmd.c_str());
    };
    const std::string dir_a = (ctx.work_dir / "det_a").string();
    const std::string dir_b = (ctx.work_dir / "det_b").string();
    if (run(dir_a) != 0 || run(dir_b) != 0) {
        detail = "CLI train run failed";
        return false;
    }
    auto slurp = [](const std::string& p) {
        std::ifstream in(p, std::ios::binary);
        return std::string(std::istreambuf_iterator<char>(in),
                           std::istreambuf_iterator<char>());
    };
    const std::string a = slurp(dir_a + "/metrics.csv");
    const std::string b = slurp(dir_b + "/metrics.csv");
    char buf[128];
    std::snprintf(buf, sizeof(buf), "metrics.csv %zu bytes, byte-identical: %s", a.size(),
                  (!a.empty() && a == b) ? "yes" : "NO");
    detail = buf;
    return !a.empty() && a == b;
}

// ---------------------------------------------------------------------------
// Criterion 9: cubic polynomial fit quality on the default generator.
// ---------------------------------------------------------------------------

bool criterion_curve_fit(Context&, std::string& detail) {
    const analog::CurveModel gen = analog::CurveModel::saturating(1.0, 2.0);
    std::vector<analog::CurveSample> samples;
    for (int wi = 0; wi < 50; ++wi)
        for (int xi = 0; xi < 50; ++xi) {
            const double w = wi / 49.0;
            const double x = xi / 49.0;
            samples.push_back({w, x, analog::behavioral_pixel_model(w, x, gen)});
        }
    analog::FitResult fit =
        analog::fit_curve(samples, analog::CurveFamily::polynomial, 3, 3);
    char buf[96];
    std::snprintf(buf, sizeof(buf), "RMSE %.5f of v_max %.1f (bound 0.01)", fit.rmse, gen.v_max);
    detail = buf;
    return fit.rmse < 0.01 * gen.v_max;
}

} // namespace

int main(int argc, char** argv) {
    Context ctx;
    ctx.work_dir = fs::temp_directory_path() / "insnn_acceptance";
    ctx.data_dir = "data";
    int only = 0;
    for (int i = 1; i < argc; ++i) {
        const std::string arg = argv[i];
        auto next = [&] { return std::string(i + 1 < argc ? argv[++i] : ""); };
        if (arg == "--work-dir") ctx.work_dir = next();
        else if (arg == "--data-dir") ctx.data_dir = next();
        else if (arg == "--cli") ctx.cli = next();
        else if (arg == "--only") only = std::atoi(next().c_str());
    }
    fs::create_directories(ctx.work_dir);

    // Resolve datasets: prefer real files under <data-dir>, otherwise
    // synthesize the stand-in corpus in the work directory.
    const bool real_cifar = fs::exists(ctx.data_dir / "cifar10" / "data_batch_1.bin");
    const bool real_mnist = fs::exists(ctx.data_dir / "mnist" / "train-images-idx3-ubyte");
    ctx.data_root = (real_cifar && real_mnist) ? ctx.data_dir.string()
                                               : (ctx.work_dir / "datasets").string();
    {
        io::DatasetConfig dc;
        dc.name = "cifar10";
        dc.path = (real_cifar ? (ctx.data_dir / "cifar10") : fs::path(ctx.data_root) / "cifar10")
                      .string();
        dc.train_subset = 5000;
        dc.test_subset = 1000;
        dc.synthesize_if_missing = !real_cifar;
        ctx.cifar = io::load_dataset(dc, 1);
        std::printf("# cifar10: %s (%zu train / %zu test)\n",
                    real_cifar ? "real data" : "synthetic stand-in", ctx.cifar.train.size(),
                    ctx.cifar.test.size());
    }
    {
        io::DatasetConfig dc;
        dc.name = "mnist";
        dc.path = (real_mnist ? (ctx.data_dir / "mnist") : fs::path(ctx.data_root) / "mnist")
                      .string();
        dc.train_subset = 10000;
        dc.test_subset = 2000;
        dc.synthesize_if_missing = !real_mnist;
        ctx.mnist = io::load_dataset(dc, 1);
        std::printf("# mnist: %s (%zu train / %zu test)\n",
                    real_mnist ? "real data" : "synthetic stand-in", ctx.mnist.train.size(),
                    ctx.mnist.test.size());
    }

    struct Criterion {
        int id;
        const char* name;
        std::function<bool(Context&, std::string&)> run;
    };
    const std::vector<Criterion> criteria = {
        {1, "fusion equivalence (ideal curve vs digital oracle)", criterion_fusion_equivalence},
        {2, "gradient suite vs central finite differences", criterion_gradients},
        {3, "bandwidth compression golden values and scaling", criterion_compression},
        {4, "distillation direction on the CIFAR-10 subset", criterion_kd_direction},
        {5, "bounded saturating-curve degradation", criterion_nonideality},
        {6, "binary activations after the first layer", criterion_binary},
        {7, "energy component ordering and exactness", criterion_energy},
        {8, "byte-identical seeded training runs", criterion_determinism},
        {9, "cubic curve-fit quality on the default generator", criterion_curve_fit},
    };

    int failures = 0;
    for (const auto& c : criteria) {
        if (only != 0 && c.id != only) continue;
        const double t0 = now_s();
        std::string detail;
        bool ok = false;
        try {
            ok = c.run(ctx, detail);
        } catch (const std::exception& e) {
            detail = std::string("exception: ") + e.what();
        }
        const double dt = now_s() - t0;
        std::printf("criterion %d %s — %s: %s (%.1f s)\n", c.id, ok ? "PASS" : "FAIL", c.name,
                    detail.c_str(), dt);
        std::fflush(stdout);
        if (!ok) ++failures;
    }
    return failures;
}
