#include "insnn/config.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>

namespace insnn::io {

namespace {

std::string read_text(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path);
    return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

int line_of_offset(const std::string& text, std::size_t offset) {
    int line = 1;
    for (std::size_t i = 0; i < offset && i < text.size(); ++i)
        if (text[i] == '\n') ++line;
    return line;
}

nlohmann::json parse_json_file(const std::string& path) {
    const std::string text = read_text(path);
    try {
        return nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError(path + ":" + std::to_string(line_of_offset(text, e.byte)) + ": " +
                          e.what());
    }
}

[[noreturn]] void key_fail(const std::string& path, const std::string& why) {
    throw ConfigError(path + ": " + why);
}

net::LayerKind layer_kind_from_name(const std::string& s) {
    if (s == "conv") return net::LayerKind::conv;
    if (s == "batchnorm") return net::LayerKind::batchnorm;
    if (s == "spike") return net::LayerKind::spike;
    if (s == "maxpool") return net::LayerKind::maxpool;
    if (s == "dense") return net::LayerKind::dense;
    if (s == "flatten") return net::LayerKind::flatten;
    if (s == "residual_or") return net::LayerKind::residual_or;
    throw ConfigError("unknown layer kind '" + s + "'");
}

const char* layer_kind_to_name(net::LayerKind k) {
    switch (k) {
        case net::LayerKind::conv: return "conv";
        case net::LayerKind::batchnorm: return "batchnorm";
        case net::LayerKind::spike: return "spike";
        case net::LayerKind::maxpool: return "maxpool";
        case net::LayerKind::dense: return "dense";
        case net::LayerKind::flatten: return "flatten";
        case net::LayerKind::residual_or: return "residual_or";
    }
    return "?";
}

} // namespace

analog::CurveModel FrontendConfig::curve() const {
    const analog::CurveFamily family = analog::curve_family_from_name(curve_family);
    switch (family) {
        case analog::CurveFamily::ideal: return analog::CurveModel::ideal();
        case analog::CurveFamily::saturating: return analog::CurveModel::saturating(v_max, k);
        case analog::CurveFamily::polynomial:
            throw ConfigError("polynomial frontends come from fit_curve, not the config file");
    }
    return analog::CurveModel::ideal();
}

analog::FuseOptions FrontendConfig::fuse_options(int stride, int padding, int pool_window) const {
    analog::FuseOptions opts;
    opts.curve = curve();
    opts.stride = stride;
    opts.padding = padding;
    opts.pool_window = pool_window;
    opts.voltage_scale = voltage_scale;
    opts.quant_bits = quant_bits;
    opts.normalize_range = normalize_range;
    opts.drive = drive;
    return opts;
}

net::NetworkConfig network_config_from_json(const nlohmann::json& j) {
    net::NetworkConfig cfg;
    if (!j.contains("input")) throw ConfigError("network.input is required ([C,H,W])");
    cfg.input_shape = j.at("input").get<std::vector<int>>();
    cfg.num_classes = j.value("classes", 10);
    cfg.surrogate_width = j.value("surrogate_width", 1.0f);
    cfg.trainable_thresholds = j.value("trainable_thresholds", true);
    const std::string mode = j.value("first_layer_mode", "digital");
    if (mode == "digital")
        cfg.first_layer_mode = net::FirstLayerMode::digital;
    else if (mode == "in_sensor")
        cfg.first_layer_mode = net::FirstLayerMode::in_sensor;
    else
        throw ConfigError("network.first_layer_mode must be 'digital' or 'in_sensor'");

    if (j.contains("preset")) {
        const std::string preset = j.at("preset").get<std::string>();
        const int first_channels = j.value("first_channels", 16);
        if (preset == "vgg6_lite") {
            auto built =
                net::NetworkConfig::vgg6_lite(first_channels, cfg.input_shape, cfg.num_classes);
            built.first_layer_mode = cfg.first_layer_mode;
            built.surrogate_width = cfg.surrogate_width;
            built.trainable_thresholds = cfg.trainable_thresholds;
            return built;
        }
        if (preset == "resnet8_lite") {
            auto built =
                net::NetworkConfig::resnet8_lite(first_channels, cfg.input_shape, cfg.num_classes);
            built.first_layer_mode = cfg.first_layer_mode;
            built.surrogate_width = cfg.surrogate_width;
            built.trainable_thresholds = cfg.trainable_thresholds;
            return built;
        }
        throw ConfigError("unknown network preset '" + preset + "'");
    }

    if (!j.contains("layers")) throw ConfigError("network needs either a preset or a layer list");
    for (const auto& lj : j.at("layers")) {
        net::LayerSpec l;
        l.kind = layer_kind_from_name(lj.at("type").get<std::string>());
        l.channels = lj.value("channels", 0);
        l.kernel = lj.value("kernel", 0);
        l.stride = lj.value("stride", 1);
        l.padding = lj.value("padding", 0);
        l.window = lj.value("window", 0);
        l.units = lj.value("units", 0);
        l.from = lj.value("from", -1);
        l.v_th = lj.value("v_th", 1.0f);
        cfg.layers.push_back(l);
    }
    return cfg;
}

nlohmann::json network_config_to_json(const net::NetworkConfig& cfg) {
    nlohmann::json j;
    j["input"] = cfg.input_shape;
    j["classes"] = cfg.num_classes;
    j["surrogate_width"] = cfg.surrogate_width;
    j["trainable_thresholds"] = cfg.trainable_thresholds;
    j["first_layer_mode"] =
        cfg.first_layer_mode == net::FirstLayerMode::in_sensor ? "in_sensor" : "digital";
    nlohmann::json layers = nlohmann::json::array();
    for (const auto& l : cfg.layers) {
        nlohmann::json lj;
        lj["type"] = layer_kind_to_name(l.kind);
        switch (l.kind) {
            case net::LayerKind::conv:
                lj["channels"] = l.channels;
                lj["kernel"] = l.kernel;
                lj["stride"] = l.stride;
                lj["padding"] = l.padding;
                break;
            case net::LayerKind::maxpool: lj["window"] = l.window; break;
            case net::LayerKind::dense: lj["units"] = l.units; break;
            case net::LayerKind::residual_or: lj["from"] = l.from; break;
            case net::LayerKind::spike: lj["v_th"] = l.v_th; break;
            default: break;
        }
        layers.push_back(lj);
    }
    j["layers"] = layers;
    return j;
}

ExperimentConfig load_experiment_config(const std::string& path) {
    const nlohmann::json j = parse_json_file(path);
    ExperimentConfig cfg;
    cfg.echo = j;

    if (!j.contains("seed")) key_fail(path, "top-level 'seed' is mandatory");
    cfg.hyper.seed = j.at("seed").get<std::uint64_t>();
    cfg.deterministic = j.value("deterministic", false);
    cfg.out_dir = j.value("out_dir", std::string("out"));

    if (!j.contains("dataset")) key_fail(path, "'dataset' section is required");
    const auto& dj = j.at("dataset");
    cfg.dataset.name = dj.value("name", std::string());
    if (cfg.dataset.name != "cifar10" && cfg.dataset.name != "mnist")
        key_fail(path, "dataset.name must be 'cifar10' or 'mnist'");
    cfg.dataset.path = dj.value("path", std::string());
    if (cfg.dataset.path.empty()) key_fail(path, "dataset.path is required");
    cfg.dataset.train_subset = dj.value("train_subset", 0);
    cfg.dataset.test_subset = dj.value("test_subset", 0);
    cfg.dataset.synthesize_if_missing = dj.value("synthesize_if_missing", false);
    if (!cfg.dataset.synthesize_if_missing &&
        !std::filesystem::exists(cfg.dataset.path))
        key_fail(path, "dataset.path '" + cfg.dataset.path + "' does not exist");

    if (!j.contains("network")) key_fail(path, "'network' section is required");
    try {
        cfg.network = network_config_from_json(j.at("network"));
    } catch (const Error& e) {
        key_fail(path, std::string("network: ") + e.what());
    }

    if (j.contains("training")) {
        const auto& tj = j.at("training");
        cfg.hyper.epochs = tj.value("epochs", cfg.hyper.epochs);
        cfg.hyper.batch_size = tj.value("batch_size", cfg.hyper.batch_size);
        cfg.hyper.lr = tj.value("lr", cfg.hyper.lr);
        cfg.hyper.momentum = tj.value("momentum", cfg.hyper.momentum);
        cfg.hyper.weight_decay = tj.value("weight_decay", cfg.hyper.weight_decay);
        cfg.hyper.lambda_hoyer = tj.value("lambda_hoyer", cfg.hyper.lambda_hoyer);
        cfg.hyper.cosine_lr = tj.value("cosine_lr", cfg.hyper.cosine_lr);
        if (cfg.hyper.epochs < 1) key_fail(path, "training.epochs must be >= 1");
        if (cfg.hyper.batch_size < 1) key_fail(path, "training.batch_size must be >= 1");
        if (cfg.hyper.lr < 0.0f) key_fail(path, "training.lr must be >= 0");
    }

    if (j.contains("kd")) {
        const auto& kj = j.at("kd");
        cfg.kd.lambda_logit = kj.value("lambda_logit", cfg.kd.lambda_logit);
        cfg.kd.lambda_act = kj.value("lambda_act", cfg.kd.lambda_act);
        cfg.kd.normalize_maps = kj.value("normalize_maps", cfg.kd.normalize_maps);
        cfg.kd.match_pre_threshold = kj.value("match_pre_threshold", cfg.kd.match_pre_threshold);
        cfg.kd.matched_blocks =
            kj.value("matched_blocks", std::vector<int>{});
        cfg.teacher_checkpoint = kj.value("teacher_checkpoint", std::string());
        if (!cfg.teacher_checkpoint.empty() &&
            !std::filesystem::exists(cfg.teacher_checkpoint))
            key_fail(path, "kd.teacher_checkpoint '" + cfg.teacher_checkpoint +
                               "' does not exist");
    }

    if (j.contains("frontend")) {
        const auto& fj = j.at("frontend");
        cfg.frontend.curve_family = fj.value("curve_family", cfg.frontend.curve_family);
        cfg.frontend.v_max = fj.value("v_max", cfg.frontend.v_max);
        cfg.frontend.k = fj.value("k", cfg.frontend.k);
        cfg.frontend.quant_bits = fj.value("quant_bits", cfg.frontend.quant_bits);
        cfg.frontend.normalize_range = fj.value("normalize_range", cfg.frontend.normalize_range);
        cfg.frontend.drive = fj.value("drive", cfg.frontend.drive);
        cfg.frontend.auto_drive = fj.value("auto_drive", cfg.frontend.auto_drive);
        cfg.frontend.drive_target = fj.value("drive_target", cfg.frontend.drive_target);
        cfg.frontend.voltage_scale = fj.value("voltage_scale", cfg.frontend.voltage_scale);
        cfg.frontend.noise_sigma = fj.value("noise_sigma", cfg.frontend.noise_sigma);
    }

    cfg.energy_params_path = j.value("energy_params", std::string());
    if (!cfg.energy_params_path.empty() && !std::filesystem::exists(cfg.energy_params_path))
        key_fail(path, "energy_params file '" + cfg.energy_params_path + "' does not exist");
    return cfg;
}

energy::EnergyParams load_energy_params(const std::string& path) {
    const nlohmann::json j = parse_json_file(path);
    energy::EnergyParams p;
    p.e_readout = j.value("e_readout", 0.0);
    p.e_adc = j.value("e_adc", 0.0);
    p.e_pixconv = j.value("e_pixconv", 0.0);
    p.e_cds = j.value("e_cds", 0.0);
    p.e_comp = j.value("e_comp", 0.0);
    p.e_mem = j.value("e_mem", 0.0);
    p.e_mac = j.value("e_mac", 0.0);
    p.e_ac = j.value("e_ac", 0.0);
    p.e_comm_bit = j.value("e_comm_bit", 0.0);
    p.validate();
    return p;
}

energy::CompressionInputs load_compression_preset(const std::string& path) {
    const nlohmann::json j = parse_json_file(path);
    energy::CompressionInputs c;
    auto shape = [&](const char* key) {
        const auto v = j.at(key).get<std::vector<int>>();
        if (v.size() != 3) throw ConfigError(std::string(path) + ": " + key + " must be [H,W,C]");
        return ShapeInfo{v[0], v[1], v[2]};
    };
    c.in_shape = shape("input");
    c.out_shape = shape("output");
    c.n_im = j.value("n_im", 12);
    c.n_sp = j.value("n_sp", 1);
    c.bayer = j.value("bayer", true);
    return c;
}

DatasetPair load_dataset(const DatasetConfig& cfg, std::uint64_t seed) {
    namespace fs = std::filesystem;
    DatasetPair pair;
    if (cfg.name == "cifar10") {
        const fs::path dir(cfg.path);
        if (cfg.synthesize_if_missing && !fs::exists(dir / "data_batch_1.bin")) {
            const int train_n = cfg.train_subset > 0 ? cfg.train_subset : 10000;
            const int test_n = cfg.test_subset > 0 ? cfg.test_subset : 2000;
            write_synthetic_cifar10(dir.string(), train_n, test_n, seed);
        }
        bool any = false;
        for (int b = 1; b <= 5; ++b) {
            const fs::path f = dir / ("data_batch_" + std::to_string(b) + ".bin");
            if (!fs::exists(f)) continue;
            Dataset part = load_cifar10(f.string());
            if (!any) {
                pair.train = std::move(part);
            } else {
                pair.train.images.insert(pair.train.images.end(), part.images.begin(),
                                         part.images.end());
                pair.train.labels.insert(pair.train.labels.end(), part.labels.begin(),
                                         part.labels.end());
            }
            any = true;
        }
        if (!any) throw IoError("no data_batch_*.bin under " + cfg.path);
        pair.test = load_cifar10((dir / "test_batch.bin").string());
    } else if (cfg.name == "mnist") {
        const fs::path dir(cfg.path);
        if (cfg.synthesize_if_missing && !fs::exists(dir / "train-images-idx3-ubyte")) {
            const int train_n = cfg.train_subset > 0 ? cfg.train_subset : 10000;
            const int test_n = cfg.test_subset > 0 ? cfg.test_subset : 2000;
            write_synthetic_mnist(dir.string(), train_n, test_n, seed);
        }
        pair.train = load_mnist((dir / "train-images-idx3-ubyte").string(),
                                (dir / "train-labels-idx1-ubyte").string());
        pair.test = load_mnist((dir / "t10k-images-idx3-ubyte").string(),
                               (dir / "t10k-labels-idx1-ubyte").string());
    } else {
        throw ConfigError("unknown dataset '" + cfg.name + "'");
    }
    if (cfg.train_subset > 0)
        pair.train = subset(pair.train, static_cast<std::size_t>(cfg.train_subset), seed);
    if (cfg.test_subset > 0)
        pair.test = subset(pair.test, static_cast<std::size_t>(cfg.test_subset), seed + 1);
    return pair;
}

void write_metrics_csv(const std::string& path,
                       const std::vector<training::EpochRow>& history) {
    std::ofstream out(path, std::ios::binary); // binary keeps line endings stable
    if (!out) throw IoError("cannot write " + path);
    out << "epoch,split,loss,accuracy,mean_spike_rate\n";
    char line[160];
    for (const auto& row : history) {
        std::snprintf(line, sizeof(line), "%d,%s,%.6f,%.6f,%.6f\n", row.epoch,
                      row.split.c_str(), row.loss, row.accuracy, row.mean_spike_rate);
        out << line;
    }
    if (!out) throw IoError("write failed on " + path);
}

} // namespace insnn::io
