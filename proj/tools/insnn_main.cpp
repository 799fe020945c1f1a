// insnn: train, distill, fuse and analyze in-sensor one-time-step SNNs.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

#include <CLI11.hpp>
#include <json.hpp>

#include "insnn/analysis.hpp"
#include "insnn/checkpoint.hpp"
#include "insnn/config.hpp"
#include "insnn/datasets.hpp"
#include "insnn/snn.hpp"
#include "insnn/training.hpp"

using namespace insnn;
namespace fs = std::filesystem;

namespace {

struct CommonArgs {
    std::string config_path;
    std::string checkpoint;
    std::string out_dir_override;
    std::optional<std::uint64_t> seed_override;
    bool deterministic = false;
};

io::ExperimentConfig load_config(const CommonArgs& args) {
    if (args.config_path.empty()) throw ConfigError("--config is required");
    io::ExperimentConfig cfg = io::load_experiment_config(args.config_path);
    if (args.seed_override) cfg.hyper.seed = *args.seed_override;
    if (!args.out_dir_override.empty()) cfg.out_dir = args.out_dir_override;
    if (args.deterministic) cfg.deterministic = true;
    cfg.echo["seed"] = cfg.hyper.seed;
    return cfg;
}

nlohmann::json metrics_json(const training::TrainResult& result) {
    nlohmann::json m;
    m["best_accuracy"] = result.best_accuracy;
    m["best_epoch"] = result.best_epoch;
    return m;
}

void write_outputs(const io::ExperimentConfig& cfg, net::Network& netw,
                   const training::TrainResult& result) {
    fs::create_directories(cfg.out_dir);
    io::write_metrics_csv(cfg.out_dir + "/metrics.csv", result.history);

    io::Checkpoint last = io::checkpoint_from_network(netw, cfg.echo, metrics_json(result));
    last.save(cfg.out_dir + "/final.ckpt");

    net::Network best_net = netw;
    training::restore_snapshot(best_net, result.best_params);
    io::Checkpoint best = io::checkpoint_from_network(best_net, cfg.echo, metrics_json(result));
    best.save(cfg.out_dir + "/best.ckpt");
}

net::Network network_from_checkpoint(const io::Checkpoint& ckpt, std::uint64_t seed) {
    net::NetworkConfig cfg = io::network_config_from_json(ckpt.config_echo.at("network"));
    net::Network netw = net::build_network(cfg, seed);
    io::apply_to_network(ckpt, netw);
    if (io::has_frontend(ckpt)) netw.frontend = io::frontend_from_checkpoint(ckpt);
    return netw;
}

struct FirstBlock {
    net::ConvLayer* conv = nullptr;
    net::BatchNormLayer* bn = nullptr;
    net::SpikeLayer* spike = nullptr;
    int pool_window = 1;
};

FirstBlock first_block(net::Network& netw) {
    FirstBlock blk;
    for (int i = 0; i < netw.first_block_end; ++i) {
        if (auto* c = std::get_if<net::ConvLayer>(&netw.layers[static_cast<std::size_t>(i)]))
            blk.conv = c;
        if (auto* b = std::get_if<net::BatchNormLayer>(&netw.layers[static_cast<std::size_t>(i)]))
            blk.bn = b;
        if (auto* s = std::get_if<net::SpikeLayer>(&netw.layers[static_cast<std::size_t>(i)]))
            blk.spike = s;
        if (auto* p = std::get_if<net::PoolLayer>(&netw.layers[static_cast<std::size_t>(i)]))
            blk.pool_window = p->window;
    }
    if (!blk.conv || !blk.bn || !blk.spike)
        throw ConfigError("first block must contain conv, batchnorm and spike layers to fuse");
    return blk;
}

analog::FusedFrontend fuse_network(net::Network& netw, const io::FrontendConfig& frontend,
                                   std::span<const Tensor> probe) {
    FirstBlock blk = first_block(netw);
    analog::BNParams bn{blk.bn->gamma, blk.bn->beta, blk.bn->running_mean, blk.bn->running_var,
                        blk.bn->eps};
    analog::FuseOptions opts =
        frontend.fuse_options(blk.conv->stride, blk.conv->padding, blk.pool_window);
    if (frontend.auto_drive && opts.curve.clamps() && !probe.empty()) {
        analog::FuseOptions unit = opts;
        unit.normalize_range = true;
        unit.drive = 1.0;
        unit.quant_bits = 0;
        analog::FusedFrontend coarse = analog::fuse_bn(blk.conv->w, bn, blk.spike->v_th(0), unit);
        opts.normalize_range = true;
        opts.drive = analog::recommend_drive(coarse.banks, probe, opts.curve, opts.stride,
                                             opts.padding, frontend.drive_target);
    }
    return analog::fuse_bn(blk.conv->w, bn, blk.spike->v_th(0), opts);
}

// Double-precision digital recomputation of the fused decision rule: spike
// iff sum((pos-neg) .* patch) >= trip under the ideal curve (all scaling
// already lives in the stored trip points), pooled, then the remaining
// digital layers. The fuse gate compares the analog path against this.
Tensor fused_rule_reference(net::Network& netw, const analog::FusedFrontend& fe,
                            const Tensor& image) {
    const ConvGeometry g =
        conv_geometry(image.shape(), fe.banks.positive.shape(), fe.stride, fe.padding);
    Tensor spikes({g.out_channels, g.out_h, g.out_w});
    const std::int64_t per = static_cast<std::int64_t>(g.in_channels) * g.k_h * g.k_w;
    for (int oc = 0; oc < g.out_channels; ++oc) {
        const float* wp = fe.banks.positive.data() + oc * per;
        const float* wn = fe.banks.negative.data() + oc * per;
        for (int oh = 0; oh < g.out_h; ++oh)
            for (int ow = 0; ow < g.out_w; ++ow) {
                double acc = 0.0;
                std::int64_t k = 0;
                for (int c = 0; c < g.in_channels; ++c)
                    for (int kh = 0; kh < g.k_h; ++kh)
                        for (int kw = 0; kw < g.k_w; ++kw, ++k) {
                            const int ih = oh * g.stride + kh - g.padding;
                            const int iw = ow * g.stride + kw - g.padding;
                            if (ih < 0 || ih >= g.in_h || iw < 0 || iw >= g.in_w) continue;
                            acc += (static_cast<double>(wp[k]) - wn[k]) * image(c, ih, iw);
                        }
                spikes(oc, oh, ow) =
                    acc >= fe.trip_points[static_cast<std::size_t>(oc)] ? 1.0f : 0.0f;
            }
    }
    Tensor pooled =
        fe.pool_window > 1 ? maxpool2d(spikes, fe.pool_window, fe.pool_window) : spikes;

    // remaining layers, digital, inference mode
    Tensor cur({1, pooled.dim(0), pooled.dim(1), pooled.dim(2)}, pooled.values());
    for (std::size_t i = static_cast<std::size_t>(netw.first_block_end);
         i < netw.layers.size(); ++i) {
        std::visit(
            [&](auto& l) {
                using T = std::decay_t<decltype(l)>;
                if constexpr (std::is_same_v<T, net::ConvLayer>) {
                    cur = conv2d(cur, l.w, l.stride, l.padding);
                } else if constexpr (std::is_same_v<T, net::BatchNormLayer>) {
                    cur = batchnorm_infer(cur, l.gamma, l.beta, l.running_mean, l.running_var,
                                          l.eps);
                } else if constexpr (std::is_same_v<T, net::SpikeLayer>) {
                    cur = net::spike_forward(cur, l.activation());
                } else if constexpr (std::is_same_v<T, net::PoolLayer>) {
                    cur = maxpool2d(cur, l.window, l.window);
                } else if constexpr (std::is_same_v<T, net::DenseLayer>) {
                    cur = dense(cur, l.w, l.b);
                } else if constexpr (std::is_same_v<T, net::FlattenLayer>) {
                    cur = cur.reshaped({cur.dim(0), static_cast<int>(cur.numel() / cur.dim(0))});
                } else if constexpr (std::is_same_v<T, net::ResidualOrLayer>) {
                    throw ConfigError("fuse gate does not support residual joins yet");
                }
            },
            netw.layers[i]);
    }
    return cur.reshaped({cur.dim(1)});
}

double fuse_equivalence_gate(net::Network& netw, const analog::FusedFrontend& fe,
                             const std::vector<Tensor>& probe) {
    analog::FusedFrontend ideal = analog::with_curve(fe, analog::CurveModel::ideal());
    net::Network fused = netw;
    fused.config.first_layer_mode = net::FirstLayerMode::in_sensor;
    fused.frontend = ideal;

    double worst = 0.0;
    for (const Tensor& image : probe) {
        Tensor a = net::inference(fused, image);
        Tensor b = fused_rule_reference(netw, ideal, image);
        for (std::int64_t i = 0; i < a.numel(); ++i)
            worst = std::max(worst, std::abs(static_cast<double>(a[i]) - b[i]));
    }
    return worst;
}

std::vector<Tensor> probe_images(const io::Dataset& data, std::size_t count) {
    std::vector<Tensor> probe;
    for (std::size_t i = 0; i < std::min(count, data.size()); ++i)
        probe.push_back(data.images[i]);
    return probe;
}

nlohmann::json profile_json(const net::SparsityProfile& profile) {
    nlohmann::json layers = nlohmann::json::array();
    for (const auto& e : profile.layers) {
        nlohmann::json l;
        l["name"] = e.name;
        l["kind"] = e.in_sensor ? "in_sensor" : (e.is_mac ? "mac" : "ac");
        l["ops"] = e.ops;
        l["reads"] = e.reads;
        l["input_rate"] = e.input_rate;
        layers.push_back(l);
    }
    nlohmann::json j;
    j["layers"] = layers;
    j["spike_rates"] = profile.spike_rates;
    j["mean_spike_rate"] = profile.mean_spike_rate();
    return j;
}

int cmd_train(const CommonArgs& args) {
    io::ExperimentConfig cfg = load_config(args);
    io::DatasetPair data = io::load_dataset(cfg.dataset, cfg.hyper.seed);
    net::Network netw = net::build_network(cfg.network, cfg.hyper.seed);
    training::TrainResult result = training::train(netw, data.train, data.test, cfg.hyper);
    write_outputs(cfg, netw, result);
    std::printf("trained %d epochs, best accuracy %.4f (epoch %d)\n", cfg.hyper.epochs,
                result.best_accuracy, result.best_epoch);
    return 0;
}

int cmd_distill(const CommonArgs& args, const std::string& teacher_path, bool compare_plain) {
    io::ExperimentConfig cfg = load_config(args);
    const std::string teacher_file =
        !teacher_path.empty() ? teacher_path : cfg.teacher_checkpoint;
    if (teacher_file.empty())
        throw ConfigError("distill needs --teacher or kd.teacher_checkpoint");
    io::Checkpoint tckpt = io::Checkpoint::load(teacher_file);
    net::Network teacher = network_from_checkpoint(tckpt, cfg.hyper.seed);

    io::DatasetPair data = io::load_dataset(cfg.dataset, cfg.hyper.seed);
    training::DistillResult result =
        training::distill(teacher, cfg.network, data.train, data.test, cfg.kd, cfg.hyper);

    fs::create_directories(cfg.out_dir);
    io::write_metrics_csv(cfg.out_dir + "/metrics.csv", result.result.history);
    io::Checkpoint out =
        io::checkpoint_from_network(result.student, cfg.echo, metrics_json(result.result));
    if (result.adapter.numel() > 0) out.add("kd.adapter", result.adapter);
    out.save(cfg.out_dir + "/final.ckpt");

    net::Network best = result.student;
    training::restore_snapshot(best, result.result.best_params);
    io::Checkpoint best_ckpt =
        io::checkpoint_from_network(best, cfg.echo, metrics_json(result.result));
    if (result.adapter.numel() > 0) best_ckpt.add("kd.adapter", result.adapter);
    best_ckpt.save(cfg.out_dir + "/best.ckpt");

    std::printf("distilled %d epochs, best accuracy %.4f (epoch %d)\n", cfg.hyper.epochs,
                result.result.best_accuracy, result.result.best_epoch);

    if (compare_plain) {
        net::Network plain = net::build_network(cfg.network, cfg.hyper.seed);
        training::TrainResult plain_res =
            training::train(plain, data.train, data.test, cfg.hyper);
        io::write_metrics_csv(cfg.out_dir + "/metrics_plain.csv", plain_res.history);
        std::printf("same student without distillation: best accuracy %.4f (epoch %d)\n",
                    plain_res.best_accuracy, plain_res.best_epoch);
    }
    return 0;
}

int cmd_eval(const CommonArgs& args, bool in_sensor) {
    io::ExperimentConfig cfg = load_config(args);
    if (args.checkpoint.empty()) throw ConfigError("eval needs --checkpoint");
    io::Checkpoint ckpt = io::Checkpoint::load(args.checkpoint);
    // the config describes the expected architecture; applying the checkpoint
    // onto it surfaces any shape disagreement as a dimension error
    net::Network netw = net::build_network(cfg.network, cfg.hyper.seed);
    io::apply_to_network(ckpt, netw);
    if (io::has_frontend(ckpt)) netw.frontend = io::frontend_from_checkpoint(ckpt);
    if (in_sensor) {
        if (!netw.frontend)
            throw ConfigError("--in-sensor requires a fused checkpoint (run fuse first)");
        netw.config.first_layer_mode = net::FirstLayerMode::in_sensor;
    }

    io::DatasetPair data = io::load_dataset(cfg.dataset, cfg.hyper.seed);
    training::EvalResult ev = training::evaluate(netw, data.test);
    net::SparsityProfile profile = net::sparsity_profile(netw, probe_images(data.test, 64));

    nlohmann::json out;
    out["accuracy"] = ev.accuracy;
    out["loss"] = ev.loss;
    out["mode"] = netw.config.first_layer_mode == net::FirstLayerMode::in_sensor ? "in_sensor"
                                                                                 : "digital";
    out["sparsity"] = profile_json(profile);
    std::cout << out.dump(2) << "\n";
    return 0;
}

int cmd_fuse(const CommonArgs& args) {
    io::ExperimentConfig cfg = load_config(args);
    if (args.checkpoint.empty()) throw ConfigError("fuse needs --checkpoint");
    io::Checkpoint ckpt = io::Checkpoint::load(args.checkpoint);
    net::Network netw = network_from_checkpoint(ckpt, cfg.hyper.seed);

    io::DatasetPair data = io::load_dataset(cfg.dataset, cfg.hyper.seed);
    const std::vector<Tensor> probe = probe_images(data.test, 8);
    analog::FusedFrontend fe = fuse_network(netw, cfg.frontend, probe);

    const double worst = fuse_equivalence_gate(netw, fe, probe);
    if (worst > 1e-4)
        throw ParameterError("fusion equivalence check failed: max |dlogit| = " +
                             std::to_string(worst) + " > 1e-4; refusing to write");

    fs::create_directories(cfg.out_dir);
    nlohmann::json echo = cfg.echo;
    echo["network"]["first_layer_mode"] = "in_sensor";
    net::Network fused_net = netw;
    fused_net.config.first_layer_mode = net::FirstLayerMode::in_sensor;
    io::Checkpoint out = io::checkpoint_from_network(fused_net, echo, ckpt.metrics);
    io::add_frontend(out, fe);
    const std::string path = cfg.out_dir + "/fused.ckpt";
    out.save(path);
    std::printf("fused frontend written to %s (equivalence max |dlogit| = %.3g)\n", path.c_str(),
                worst);
    return 0;
}

int cmd_simulate_frontend(const CommonArgs& args, int count) {
    io::ExperimentConfig cfg = load_config(args);
    if (args.checkpoint.empty()) throw ConfigError("simulate-frontend needs --checkpoint");
    io::Checkpoint ckpt = io::Checkpoint::load(args.checkpoint);
    if (!io::has_frontend(ckpt))
        throw ConfigError("checkpoint has no fused frontend (run fuse first)");
    analog::FusedFrontend fe = io::frontend_from_checkpoint(ckpt);

    io::DatasetPair data = io::load_dataset(cfg.dataset, cfg.hyper.seed);
    const std::vector<Tensor> batch = probe_images(data.test, static_cast<std::size_t>(count));
    if (batch.empty()) throw ParameterError("no test images available");

    Rng rng = make_rng(cfg.hyper.seed);
    std::vector<Tensor> spike_maps;
    double rate = 0.0;
    std::int64_t total = 0;
    for (const Tensor& image : batch) {
        Tensor spikes = cfg.frontend.noise_sigma > 0.0
                            ? analog::frontend_forward(image, fe, cfg.frontend.noise_sigma, rng)
                            : analog::frontend_forward(image, fe);
        for (std::int64_t i = 0; i < spikes.numel(); ++i) rate += spikes[i];
        total += spikes.numel();
        spike_maps.push_back(std::move(spikes));
    }
    rate /= static_cast<double>(total);

    fs::create_directories(cfg.out_dir);
    io::Checkpoint out;
    out.config_echo = cfg.echo;
    const auto& shape = spike_maps.front().shape();
    Tensor stacked({static_cast<int>(spike_maps.size()), shape[0], shape[1], shape[2]});
    for (std::size_t i = 0; i < spike_maps.size(); ++i)
        std::copy(spike_maps[i].data(), spike_maps[i].data() + spike_maps[i].numel(),
                  stacked.data() + static_cast<std::int64_t>(i) * spike_maps[i].numel());
    out.add("spikes", stacked);
    out.metrics = {{"spike_rate", rate}, {"images", spike_maps.size()}};
    const std::string path = cfg.out_dir + "/spikes.ckpt";
    out.save(path);

    nlohmann::json summary;
    summary["images"] = spike_maps.size();
    summary["shape"] = shape;
    summary["spike_rate"] = rate;
    summary["output"] = path;
    std::cout << summary.dump(2) << "\n";
    return 0;
}

int cmd_report_compression(const CommonArgs& args, const std::string& preset) {
    energy::CompressionInputs inputs;
    nlohmann::json source;
    if (!preset.empty()) {
        inputs = io::load_compression_preset(preset);
        source = preset;
    } else {
        io::ExperimentConfig cfg = load_config(args);
        inputs = energy::compression_from_network(cfg.network);
        source = "network";
    }
    const double c = energy::compression_ratio(inputs);
    nlohmann::json out;
    out["source"] = source;
    out["input"] = {inputs.in_shape.height, inputs.in_shape.width, inputs.in_shape.channels};
    out["output"] = {inputs.out_shape.height, inputs.out_shape.width, inputs.out_shape.channels};
    out["n_im"] = inputs.n_im;
    out["n_sp"] = inputs.n_sp;
    out["bayer"] = inputs.bayer;
    out["compression_ratio"] = c;
    std::cout << out.dump(2) << "\n";
    std::printf("C = %.1f\n", c);
    return 0;
}

int cmd_report_energy(const CommonArgs& args) {
    io::ExperimentConfig cfg = load_config(args);
    if (cfg.energy_params_path.empty())
        throw ConfigError("report-energy needs energy_params in the config");
    energy::EnergyParams params = io::load_energy_params(cfg.energy_params_path);

    net::Network netw = net::build_network(cfg.network, cfg.hyper.seed);
    if (!args.checkpoint.empty())
        io::apply_to_network(io::Checkpoint::load(args.checkpoint), netw);

    io::DatasetPair data = io::load_dataset(cfg.dataset, cfg.hyper.seed);
    const std::vector<Tensor> sample = probe_images(data.test, 32);
    energy::CompressionInputs comp = energy::compression_from_network(netw.config);

    energy::ModeInputs base =
        energy::mode_inputs(netw, sample, energy::SensorMode::baseline, comp);
    energy::ModeInputs fused =
        energy::mode_inputs(netw, sample, energy::SensorMode::in_sensor, comp);
    energy::EnergyReport rep = energy::energy_report(base, fused, params);

    nlohmann::json out;
    auto breakdown = [](const energy::EnergyBreakdown& b) {
        return nlohmann::json{{"sensor", b.sensor},
                              {"communication", b.communication},
                              {"processing", b.processing},
                              {"total", b.total()}};
    };
    out["baseline"] = breakdown(rep.baseline);
    out["in_sensor"] = breakdown(rep.in_sensor);
    out["ratios"] = {{"sensor", rep.sensor_ratio},
                     {"communication", rep.communication_ratio},
                     {"processing", rep.processing_ratio},
                     {"total", rep.total_ratio}};
    out["compression_ratio"] = energy::compression_ratio(comp);
    out["baseline_profile"] = profile_json(base.profile);
    out["in_sensor_profile"] = profile_json(fused.profile);

    fs::create_directories(cfg.out_dir);
    {
        std::ofstream f(cfg.out_dir + "/report.json");
        f << out.dump(2) << "\n";
    }
    {
        std::ofstream f(cfg.out_dir + "/breakdown.csv", std::ios::binary);
        f << "component,baseline_j,in_sensor_j,ratio\n";
        char line[200];
        std::snprintf(line, sizeof(line), "sensor,%.6e,%.6e,%.4f\n", rep.baseline.sensor,
                      rep.in_sensor.sensor, rep.sensor_ratio);
        f << line;
        std::snprintf(line, sizeof(line), "communication,%.6e,%.6e,%.4f\n",
                      rep.baseline.communication, rep.in_sensor.communication,
                      rep.communication_ratio);
        f << line;
        std::snprintf(line, sizeof(line), "processing,%.6e,%.6e,%.4f\n",
                      rep.baseline.processing, rep.in_sensor.processing, rep.processing_ratio);
        f << line;
        std::snprintf(line, sizeof(line), "total,%.6e,%.6e,%.4f\n", rep.baseline.total(),
                      rep.in_sensor.total(), rep.total_ratio);
        f << line;
    }
    std::cout << out.dump(2) << "\n";
    return 0;
}

int cmd_synth_data(const CommonArgs& args) {
    io::ExperimentConfig cfg = load_config(args);
    const int train_n = cfg.dataset.train_subset > 0 ? cfg.dataset.train_subset : 10000;
    const int test_n = cfg.dataset.test_subset > 0 ? cfg.dataset.test_subset : 2000;
    if (cfg.dataset.name == "cifar10")
        io::write_synthetic_cifar10(cfg.dataset.path, train_n, test_n, cfg.hyper.seed);
    else
        io::write_synthetic_mnist(cfg.dataset.path, train_n, test_n, cfg.hyper.seed);
    std::printf("wrote synthetic %s corpus (%d train, %d test) under %s\n",
                cfg.dataset.name.c_str(), train_n, test_n, cfg.dataset.path.c_str());
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"in-sensor one-time-step SNN trainer and analyzer"};
    app.require_subcommand(1);

    CommonArgs common;
    std::string teacher_path, preset_path;
    bool in_sensor = false;
    bool compare_plain = false;
    int sim_count = 16;

    auto add_common = [&common](CLI::App* cmd) {
        cmd->add_option("--config", common.config_path, "experiment config file");
        cmd->add_option("--checkpoint", common.checkpoint, "checkpoint file");
        cmd->add_option("--out-dir", common.out_dir_override, "output directory override");
        cmd->add_option("--seed", common.seed_override, "seed override");
        cmd->add_flag("--deterministic", common.deterministic, "force deterministic mode");
    };

    CLI::App* train = app.add_subcommand("train", "train a digital SNN");
    add_common(train);
    CLI::App* distill = app.add_subcommand("distill", "train a student under a frozen teacher");
    add_common(distill);
    distill->add_option("--teacher", teacher_path, "teacher checkpoint");
    distill->add_flag("--compare-plain", compare_plain,
                      "also train the student without distillation and report both");
    CLI::App* eval = app.add_subcommand("eval", "evaluate a checkpoint");
    add_common(eval);
    eval->add_flag("--in-sensor", in_sensor, "evaluate through the fused frontend");
    CLI::App* fuse = app.add_subcommand("fuse", "fold BN into a deployable frontend");
    add_common(fuse);
    CLI::App* sim = app.add_subcommand("simulate-frontend", "run the analog frontend on a batch");
    add_common(sim);
    sim->add_option("--count", sim_count, "number of images");
    CLI::App* repc = app.add_subcommand("report-compression", "bandwidth compression ratio");
    add_common(repc);
    repc->add_option("--preset", preset_path, "compression preset file");
    CLI::App* repe = app.add_subcommand("report-energy", "sensor/communication/processing energy");
    add_common(repe);
    CLI::App* synth = app.add_subcommand("synth-data", "write the synthetic stand-in corpus");
    add_common(synth);

    CLI11_PARSE(app, argc, argv);

    try {
        if (train->parsed()) return cmd_train(common);
        if (distill->parsed()) return cmd_distill(common, teacher_path, compare_plain);
        if (eval->parsed()) return cmd_eval(common, in_sensor);
        if (fuse->parsed()) return cmd_fuse(common);
        if (sim->parsed()) return cmd_simulate_frontend(common, sim_count);
        if (repc->parsed()) return cmd_report_compression(common, preset_path);
        if (repe->parsed()) return cmd_report_energy(common);
        if (synth->parsed()) return cmd_synth_data(common);
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: internal: " << e.what() << "\n";
        return 3;
    }
    return 1;
}
