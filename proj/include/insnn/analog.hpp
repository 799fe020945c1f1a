#pragma once

#include <optional>
#include <span>
#include <vector>

#include "insnn/ops.hpp"
#include "insnn/rng.hpp"
#include "insnn/tensor.hpp"

namespace insnn::analog {

// ---------------------------------------------------------------------------
// Pixel response curves. A curve maps an unsigned weight w >= 0 and a
// normalized pixel value x in [0,1] to an output voltage. The ideal family
// computes exactly w*x (unclamped); the saturating family is the synthetic
// stand-in for measured transistor behavior; polynomial models come out of
// fit_curve.
// ---------------------------------------------------------------------------

enum class CurveFamily { ideal, saturating, polynomial };

const char* curve_family_name(CurveFamily f);
CurveFamily curve_family_from_name(const std::string& name);

struct CurveModel {
    CurveFamily family = CurveFamily::ideal;
    std::vector<double> coefficients; // saturating: {k}; polynomial: (deg_w+1)x(deg_x+1) row-major
    int deg_w = 0;
    int deg_x = 0;
    double v_max = 0.0; // clamp ceiling; <= v_min means "no clamp" for ideal
    double v_min = 0.0;

    // Pixel response in volts, no domain checks (hot path).
    double operator()(double w, double x) const;

    // dV/d(w*x) at the origin; used to calibrate comparator trip points.
    double small_signal_gain() const;

    bool clamps() const { return family != CurveFamily::ideal; }

    static CurveModel ideal();
    static CurveModel saturating(double v_max = 1.0, double k = 2.0);
};

// Domain-checked single-pixel response: w >= 0, x in [0,1].
double behavioral_pixel_model(double w, double x, const CurveModel& params);

// ---------------------------------------------------------------------------
// Curve fitting. Polynomial fits are linear least squares over the bivariate
// basis w^i * x^j (i <= deg_w, j <= deg_x); saturating fits run Gauss-Newton
// on (v_max, k).
// ---------------------------------------------------------------------------

struct CurveSample {
    double w, x, volts;
};

struct FitResult {
    CurveModel model;
    double rmse;
};

FitResult fit_curve(std::span<const CurveSample> samples, CurveFamily family, int deg_w = 3,
                    int deg_x = 3);

// ---------------------------------------------------------------------------
// Signed weights split across two unsigned banks, accumulated in separate
// CDS phases.
// ---------------------------------------------------------------------------

struct WeightBanks {
    Tensor positive;
    Tensor negative;
};

WeightBanks split_weights(const Tensor& theta_fused);

struct BNParams {
    Tensor gamma, beta, mu, sigma2; // per output channel
    float eps = 1e-5f;
};

// Symmetric uniform quantizer, round-to-nearest with ties to even.
// bits == 0 disables quantization. scale is the full-scale magnitude.
Tensor quantize_symmetric(const Tensor& w, int bits, float scale);

// ---------------------------------------------------------------------------
// The deployable in-sensor first layer.
// ---------------------------------------------------------------------------

struct FusedFrontend {
    WeightBanks banks;               // quantized, range-normalized fused weights
    std::vector<double> trip_points; // volts, one per output channel
    std::vector<double> shift;       // v_th - B[c], activation units (pre-scale)
    double v_th = 1.0;
    CurveModel curve;
    int stride = 1;
    int padding = 0;
    int pool_window = 1;
    double voltage_scale = 1.0; // volts per unit activation, all scaling folded in
    int quant_bits = 0;

    int out_channels() const { return banks.positive.dim(0); }
};

struct FuseOptions {
    CurveModel curve = CurveModel::ideal();
    int stride = 1;
    int padding = 0;
    int pool_window = 1;
    double voltage_scale = 1.0; // user scale on top of curve gain / normalization
    int quant_bits = 0;         // 0 = off
    bool normalize_range = false; // rescale weights so max |w| == drive
    double drive = 1.0;           // analog weight full-scale after normalization
};

// Fuses BN into the weights (A*theta) and the comparator trip points
// (voltage_scale * (v_th - B)). Optional range normalization and curve-gain
// calibration fold into the stored voltage_scale so the decision rule is
// unchanged in the ideal linear limit.
FusedFrontend fuse_bn(const Tensor& theta, const BNParams& bn, double v_th,
                      const FuseOptions& opts = {});

// Same banks under a different curve; trip points recalibrated to the new
// curve's small-signal gain.
FusedFrontend with_curve(const FusedFrontend& fe, const CurveModel& curve);

// Picks the analog full-scale weight ("drive") so that the busiest
// accumulation phases land near target_fraction of the curve's ceiling on
// the probe images: large enough to exercise the curve, small enough that
// the per-phase clamp rarely saturates. unit_banks must hold max-normalized
// weights (fuse with normalize_range, drive 1, quantization off).
double recommend_drive(const WeightBanks& unit_banks, std::span<const Tensor> probe,
                       const CurveModel& curve, int stride, int padding,
                       double target_fraction = 0.5, double quantile = 0.95);

// ---------------------------------------------------------------------------
// Analog evaluation path.
// ---------------------------------------------------------------------------

// clamp(sum_i curve(bank_i, patch_i), v_min, v_max); ideal curves do not clamp.
double pixel_accumulate(const Tensor& patch, const Tensor& bank, const CurveModel& curve);

// Phase-II (positive bank) minus Phase-I (negative bank) sample.
double cds_subtract(double v_pos, double v_neg);
double cds_subtract(double v_pos, double v_neg, double noise_sigma, Rng& rng);

// 1 iff diff >= trip_point (ties spike).
int comparator(double diff, double trip_point);

// Full first-layer pass: per-channel two-phase accumulation, CDS subtraction,
// comparison, then max pooling. Image values must lie in [0,1]. Output is
// binary, [C_out, H'', W''].
Tensor frontend_forward(const Tensor& image, const FusedFrontend& fe);
Tensor frontend_forward(const Tensor& image, const FusedFrontend& fe, double noise_sigma,
                        Rng& rng);

} // namespace insnn::analog
