#pragma once

#include <span>

#include "insnn/tensor.hpp"

namespace insnn {

// ---------------------------------------------------------------------------
// Convolution (cross-correlation, no kernel flip). Input [C,H,W] or batched
// [N,C,H,W]; weights [C_out,C_in,kH,kW]; no bias (affine terms come from BN).
// ---------------------------------------------------------------------------

struct ConvGeometry {
    int in_channels, in_h, in_w;
    int out_channels, k_h, k_w;
    int stride, padding;
    int out_h, out_w;
};

ConvGeometry conv_geometry(const std::vector<int>& input_shape, const std::vector<int>& weight_shape,
                           int stride, int padding);

Tensor conv2d(const Tensor& input, const Tensor& weights, int stride, int padding);

struct ConvGrads {
    Tensor grad_input;
    Tensor grad_weights;
};

ConvGrads conv2d_backward(const Tensor& grad_out, const Tensor& input, const Tensor& weights,
                          int stride, int padding);

// ---------------------------------------------------------------------------
// Max pooling. Ties route the gradient to the first maximum in row-major
// window order.
// ---------------------------------------------------------------------------

Tensor maxpool2d(const Tensor& input, int window, int stride);
Tensor maxpool2d_backward(const Tensor& grad_out, const Tensor& input, int window, int stride);

// ---------------------------------------------------------------------------
// Batch normalization over the channel axis. Input [N,C,H,W] or [N,F].
// ---------------------------------------------------------------------------

struct BNStats {
    Tensor mean;  // per channel, batch statistics of the normalized forward
    Tensor var;   // biased
};

// Normalizes with batch statistics and updates the running stats in place:
// running = (1 - momentum) * running + momentum * batch.
Tensor batchnorm_train(const Tensor& input, const Tensor& gamma, const Tensor& beta,
                       Tensor& running_mean, Tensor& running_var, float momentum, float eps,
                       BNStats* stats_out = nullptr);

// Inference form Y = A*X + B with A = gamma/sqrt(sigma2+eps),
// B = beta - gamma*mu/sqrt(sigma2+eps).
Tensor batchnorm_infer(const Tensor& input, const Tensor& gamma, const Tensor& beta,
                       const Tensor& mu, const Tensor& sigma2, float eps);

struct BNGrads {
    Tensor grad_input;
    Tensor grad_gamma;
    Tensor grad_beta;
};

BNGrads batchnorm_backward(const Tensor& grad_out, const Tensor& input, const Tensor& gamma,
                           const BNStats& stats, float eps);

// Per-channel inference coefficients, exposed for fusion.
void batchnorm_coefficients(const Tensor& gamma, const Tensor& beta, const Tensor& mu,
                            const Tensor& sigma2, float eps, std::vector<double>& a_out,
                            std::vector<double>& b_out);

// ---------------------------------------------------------------------------
// Dense layer and softmax cross-entropy.
// ---------------------------------------------------------------------------

// input [F] or [N,F]; weights [U,F]; bias [U].
Tensor dense(const Tensor& input, const Tensor& weights, const Tensor& bias);

struct DenseGrads {
    Tensor grad_input;
    Tensor grad_weights;
    Tensor grad_bias;
};

DenseGrads dense_backward(const Tensor& grad_out, const Tensor& input, const Tensor& weights);

// logits [K], single sample. Stabilized by max-subtraction.
float softmax_cross_entropy(const Tensor& logits, int label);

// logits [N,K]; returns the mean loss over the batch.
float softmax_cross_entropy(const Tensor& logits, std::span<const int> labels);

// d(mean CE)/d(logits), shape [N,K].
Tensor softmax_cross_entropy_backward(const Tensor& logits, std::span<const int> labels);

// ---------------------------------------------------------------------------
// SGD with classical momentum: v = momentum*v + grad + weight_decay*param,
// param -= lr*v. Throws TrainingError on non-finite gradients.
// ---------------------------------------------------------------------------

struct SgdOptions {
    float lr = 0.1f;
    float momentum = 0.0f;
    float weight_decay = 0.0f;
};

void sgd_step(Tensor& param, const Tensor& grad, Tensor& velocity, const SgdOptions& opts);

} // namespace insnn
