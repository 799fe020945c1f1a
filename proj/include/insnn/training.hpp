#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "insnn/snn.hpp"
#include "insnn/tensor.hpp"

namespace insnn::io {
struct Dataset;
}

namespace insnn::training {

// ---------------------------------------------------------------------------
// Knowledge distillation: match teacher logits (pre-softmax) and per-block
// activation maps; a trainable 1x1 convolution lifts the student's reduced
// first-layer channels to the teacher's.
// ---------------------------------------------------------------------------

struct KDConfig {
    // Raw-logit regression overwhelms the surrogate-gradient CE signal well
    // before lambda_logit reaches 1; 0.25 trains stably and still transfers.
    float lambda_logit = 0.25f;
    float lambda_act = 0.5f;
    std::vector<int> matched_blocks; // 1-based; empty selects every block
    bool normalize_maps = true;      // per-map L2 normalization before the difference
    // Match binary block outputs (false) or the pre-threshold membrane maps
    // feeding each block's spike layer (true). Block 1 always matches the
    // raw convolution output through the adapter.
    bool match_pre_threshold = false;
};

// student_map [C_s,H,W] or [N,C_s,H,W]; adapter_weights [C_t,C_s,1,1].
Tensor adapter_1x1(const Tensor& student_map, const Tensor& adapter_weights);

float kd_loss(const Tensor& student_logits, const Tensor& teacher_logits,
              const std::vector<Tensor>& student_maps, const std::vector<Tensor>& teacher_maps,
              std::span<const int> labels, const KDConfig& cfg);

struct KDGrads {
    float loss = 0.0f;
    float ce = 0.0f;
    Tensor grad_logits;
    std::vector<Tensor> grad_maps; // wrt the (post-adapter) student maps
};

KDGrads kd_loss_backward(const Tensor& student_logits, const Tensor& teacher_logits,
                         const std::vector<Tensor>& student_maps,
                         const std::vector<Tensor>& teacher_maps, std::span<const int> labels,
                         const KDConfig& cfg);

// ---------------------------------------------------------------------------
// Training loops.
// ---------------------------------------------------------------------------

struct Hyperparams {
    int epochs = 10;
    int batch_size = 32;
    float lr = 0.05f;
    float momentum = 0.9f;
    float weight_decay = 5e-4f;
    float lambda_hoyer = 1e-8f;
    bool cosine_lr = true;
    std::uint64_t seed = 0;
};

struct EpochRow {
    int epoch;
    std::string split; // "train" or "test"
    float loss;
    float accuracy;
    float mean_spike_rate;
};

struct ParamSnapshot {
    std::vector<std::pair<std::string, Tensor>> tensors;
};

struct TrainResult {
    std::vector<EpochRow> history;
    float best_accuracy = 0.0f;
    int best_epoch = -1;
    ParamSnapshot best_params; // state of the best-accuracy epoch
};

struct EvalResult {
    float loss = 0.0f;
    float accuracy = 0.0f;
    float mean_spike_rate = 0.0f;
};

EvalResult evaluate(net::Network& net, const io::Dataset& data, int batch_size = 64);

// Shuffled mini-batch SGD with the Hoyer sparsity term. Deterministic for a
// fixed seed. Throws TrainingError with an epoch/batch diagnostic if the loss
// or a gradient goes non-finite.
TrainResult train(net::Network& net, const io::Dataset& train_set, const io::Dataset& test_set,
                  const Hyperparams& hp);

struct DistillResult {
    net::Network student;
    Tensor adapter; // empty when channel counts match
    TrainResult result;
};

// Builds the student from student_cfg (seeded by hp.seed) and trains it under
// kd_loss against the frozen teacher.
DistillResult distill(const net::Network& teacher, const net::NetworkConfig& student_cfg,
                      const io::Dataset& train_set, const io::Dataset& test_set,
                      const KDConfig& kd, const Hyperparams& hp);

void restore_snapshot(net::Network& net, const ParamSnapshot& snap);

} // namespace insnn::training
