#pragma once

#include <cstdint>
#include <string>

#include <json.hpp>

#include "insnn/analysis.hpp"
#include "insnn/datasets.hpp"
#include "insnn/snn.hpp"
#include "insnn/training.hpp"

namespace insnn::io {

struct DatasetConfig {
    std::string name; // "cifar10" | "mnist"
    std::string path; // directory with the standard files
    int train_subset = 0; // 0 = all
    int test_subset = 0;
    bool synthesize_if_missing = false; // generate format-identical stand-in data
};

struct FrontendConfig {
    std::string curve_family = "saturating";
    double v_max = 1.0;
    double k = 2.0;
    int quant_bits = 4;
    bool normalize_range = true;
    double drive = 1.0;
    bool auto_drive = true;     // calibrate drive on probe images at fuse time
    double drive_target = 0.5;  // accumulation-phase quantile target, fraction of v_max
    double voltage_scale = 1.0;
    double noise_sigma = 0.0; // volts; 0 disables

    analog::CurveModel curve() const;
    analog::FuseOptions fuse_options(int stride, int padding, int pool_window) const;
};

struct ExperimentConfig {
    DatasetConfig dataset;
    net::NetworkConfig network;
    training::Hyperparams hyper;
    training::KDConfig kd;
    std::string teacher_checkpoint;
    FrontendConfig frontend;
    std::string energy_params_path;
    std::string out_dir = "out";
    bool deterministic = false;
    nlohmann::json echo; // the raw document, for checkpoint headers
};

// Parses and validates the experiment file. Syntax errors carry the line
// number; semantic errors carry the offending key path.
ExperimentConfig load_experiment_config(const std::string& path);

net::NetworkConfig network_config_from_json(const nlohmann::json& j);
nlohmann::json network_config_to_json(const net::NetworkConfig& cfg);

energy::EnergyParams load_energy_params(const std::string& path);
energy::CompressionInputs load_compression_preset(const std::string& path);

// Resolves the dataset named in the config: loads the standard files under
// dataset.path, optionally generating the synthetic stand-in corpus first.
struct DatasetPair {
    Dataset train;
    Dataset test;
};
DatasetPair load_dataset(const DatasetConfig& cfg, std::uint64_t seed);

void write_metrics_csv(const std::string& path,
                       const std::vector<training::EpochRow>& history);

} // namespace insnn::io
