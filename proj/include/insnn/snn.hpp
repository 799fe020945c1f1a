#pragma once

#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "insnn/analog.hpp"
#include "insnn/ops.hpp"
#include "insnn/rng.hpp"
#include "insnn/tensor.hpp"

namespace insnn::net {

// ---------------------------------------------------------------------------
// One-time-step spiking nonlinearity: a thresholded comparison with a boxcar
// surrogate derivative of half-width surrogate_width around v_th.
// ---------------------------------------------------------------------------

struct SpikingActivation {
    float v_th = 1.0f;
    bool trainable = true;
    float surrogate_width = 1.0f;
};

Tensor spike_forward(const Tensor& u, const SpikingActivation& act);
Tensor spike_backward(const Tensor& grad_out, const Tensor& u, const SpikingActivation& act);
// d(loss)/d(v_th) under the same boxcar surrogate.
float spike_threshold_grad(const Tensor& grad_out, const Tensor& u, const SpikingActivation& act);

// (sum |a|)^2 / sum a^2, 0 for all-zero input. Lies in [1, N] otherwise.
float hoyer_regularizer(const Tensor& pre_acts);
Tensor hoyer_backward(const Tensor& pre_acts);

// ---------------------------------------------------------------------------
// Network configuration.
// ---------------------------------------------------------------------------

enum class LayerKind { conv, batchnorm, spike, maxpool, dense, flatten, residual_or };

struct LayerSpec {
    LayerKind kind;
    int channels = 0;  // conv
    int kernel = 0;    // conv
    int stride = 1;    // conv
    int padding = 0;   // conv
    int window = 0;    // maxpool
    int units = 0;     // dense
    int from = -1;     // residual_or: layer index whose output joins
    float v_th = 1.0f; // spike
};

enum class FirstLayerMode { digital, in_sensor };

struct NetworkConfig {
    std::vector<int> input_shape; // [C,H,W]
    int num_classes = 10;
    FirstLayerMode first_layer_mode = FirstLayerMode::digital;
    float surrogate_width = 1.0f;
    bool trainable_thresholds = true;
    std::vector<LayerSpec> layers;

    static NetworkConfig vgg6_lite(int first_channels, std::vector<int> input_shape,
                                   int num_classes);
    static NetworkConfig resnet8_lite(int first_channels, std::vector<int> input_shape,
                                      int num_classes);

    // Shape-checks the layer graph; throws ConfigError naming the offending
    // layer. Returns the per-layer output shapes (sample shapes, no batch dim).
    std::vector<std::vector<int>> validate() const;
};

// ---------------------------------------------------------------------------
// Runtime layers (value types held in a variant).
// ---------------------------------------------------------------------------

struct ConvLayer {
    Tensor w; // [C_out,C_in,kH,kW]
    int stride = 1, padding = 0;
};
struct BatchNormLayer {
    Tensor gamma, beta, running_mean, running_var;
    float momentum = 0.1f;
    float eps = 1e-5f;
};
struct SpikeLayer {
    Tensor v_th; // single element; a tensor so SGD treats it like any parameter
    bool trainable = true;
    float surrogate_width = 1.0f;
    SpikingActivation activation() const {
        return SpikingActivation{v_th(0), trainable, surrogate_width};
    }
};
struct PoolLayer {
    int window = 2;
};
struct DenseLayer {
    Tensor w, b;
};
struct FlattenLayer {};
struct ResidualOrLayer {
    int from = -1;
};

using Layer = std::variant<ConvLayer, BatchNormLayer, SpikeLayer, PoolLayer, DenseLayer,
                           FlattenLayer, ResidualOrLayer>;

struct Network {
    NetworkConfig config;
    std::vector<Layer> layers;
    std::optional<analog::FusedFrontend> frontend; // used when first_layer_mode == in_sensor
    int first_block_end = 0; // one past the first conv+BN+spike(+pool) group
    std::vector<int> block_ends; // layer index of each block's last layer

    std::vector<std::pair<std::string, Tensor*>> parameters();
    std::vector<std::pair<std::string, Tensor*>> state_tensors(); // parameters + running stats
    void zero_grads();
};

Network build_network(const NetworkConfig& cfg, Rng& rng);
Network build_network(const NetworkConfig& cfg, std::uint64_t seed = 0);

// ---------------------------------------------------------------------------
// Execution. Forward keeps per-layer outputs when a trace is supplied;
// backward consumes the trace and accumulates parameter gradients.
// extra_output_grads maps a layer index to an additional gradient on that
// layer's output (used for distillation taps and the Hoyer term).
// ---------------------------------------------------------------------------

struct ForwardTrace {
    std::vector<Tensor> outputs;  // one per layer
    std::vector<BNStats> bn_stats;
};

Tensor forward_batch(Network& net, const Tensor& batch, bool training,
                     ForwardTrace* trace = nullptr);

void backward_batch(Network& net, const Tensor& batch, const ForwardTrace& trace,
                    const Tensor& grad_logits,
                    const std::map<int, Tensor>* extra_output_grads = nullptr);

// Single-image inference (eval mode; runs the fused frontend when the config
// says in_sensor). Returns logits [K].
Tensor inference(const Network& net, const Tensor& image);

// ---------------------------------------------------------------------------
// Activity profiling for the energy model. Op counts are per image; the
// first layer performs MACs on analog input, later layers accumulate only
// where input spikes arrive.
// ---------------------------------------------------------------------------

struct SparsityProfile {
    struct Entry {
        std::string name;
        bool is_mac = false;     // dense analog input, no sparsity gating
        bool in_sensor = false;  // cost accounted inside the sensor
        double ops = 0.0;        // MAC or AC count per image
        double reads = 0.0;      // memory reads per image (inputs + weights)
        double input_rate = 1.0; // fraction of nonzero inputs
    };
    std::vector<Entry> layers;
    std::vector<double> spike_rates; // per spike layer, post-activation
    double mean_spike_rate() const;
};

SparsityProfile sparsity_profile(Network& net, const std::vector<Tensor>& sample);

} // namespace insnn::net
