#pragma once

#include <string>
#include <vector>

#include "insnn/snn.hpp"
#include "insnn/tensor.hpp"

namespace insnn::energy {

// ---------------------------------------------------------------------------
// Bandwidth compression between the sensor and the processing unit: input
// pixel volume over output spike volume, scaled by the bit-precision ratio
// and the optional Bayer mosaic factor of 4/3.
// ---------------------------------------------------------------------------

struct CompressionInputs {
    ShapeInfo in_shape;  // H^i, W^i, C^i
    ShapeInfo out_shape; // H^o, W^o, C^o after the in-sensor conv/BN/spike/pool
    int n_im = 12;       // pixel bit precision
    int n_sp = 1;        // spike bit precision
    bool bayer = true;   // apply the 4/3 RGGB-to-RGB factor
};

double compression_ratio(const CompressionInputs& in);

// Bits leaving the sensor per frame in each mode; their ratio equals the
// compression ratio by construction.
double baseline_bits(const CompressionInputs& in);
double in_sensor_bits(const CompressionInputs& in);

// ---------------------------------------------------------------------------
// Energy decomposition: sensor + communication + processing.
// ---------------------------------------------------------------------------

struct EnergyParams {
    double e_readout = 0.0;  // J per pixel read-out
    double e_adc = 0.0;      // J per pixel conversion
    double e_pixconv = 0.0;  // J per in-pixel multiply-accumulate event
    double e_cds = 0.0;      // J per analog CDS output element
    double e_comp = 0.0;     // J per comparator output element
    double e_mem = 0.0;      // J per on-chip memory read
    double e_mac = 0.0;      // J per digital MAC
    double e_ac = 0.0;       // J per digital AC
    double e_comm_bit = 0.0; // J per transferred bit

    void validate() const;
};

enum class SensorMode { baseline, in_sensor };

struct SensorDims {
    double pixel_reads = 0.0;        // physical pixel samples per frame (Bayer-adjusted)
    double conv_events = 0.0;        // in-pixel MAC events per frame
    double comparator_outputs = 0.0; // CDS/comparator evaluations per frame
};

double sensor_energy(SensorMode mode, const SensorDims& dims, const EnergyParams& p);

double comm_energy(double bits, const EnergyParams& p);

// Off-chip layer processing: per layer, memory reads plus arithmetic. The
// first digital layer runs dense MACs; spiking layers accumulate only where
// input spikes arrive. Profile entries marked in_sensor are excluded (their
// cost already lives in sensor_energy).
double processing_energy(const net::SparsityProfile& profile, const EnergyParams& p);

struct EnergyBreakdown {
    double sensor = 0.0;
    double communication = 0.0;
    double processing = 0.0;
    double total() const { return sensor + communication + processing; }
};

struct ModeInputs {
    SensorMode mode = SensorMode::baseline;
    SensorDims dims;
    double comm_bits = 0.0;
    net::SparsityProfile profile;
};

struct EnergyReport {
    EnergyBreakdown baseline;
    EnergyBreakdown in_sensor;
    double sensor_ratio = 0.0;
    double communication_ratio = 0.0;
    double processing_ratio = 0.0;
    double total_ratio = 0.0;
};

EnergyReport energy_report(const ModeInputs& baseline, const ModeInputs& in_sensor,
                           const EnergyParams& p);

// Builds the per-mode inputs for a network evaluated over a dataset sample.
ModeInputs mode_inputs(net::Network& net, const std::vector<Tensor>& sample, SensorMode mode,
                       const CompressionInputs& compression);

// Derives the compression geometry from a network config: the in-sensor
// output is the first block's output shape.
CompressionInputs compression_from_network(const net::NetworkConfig& cfg, int n_im = 12,
                                           int n_sp = 1, bool bayer = true);

} // namespace insnn::energy
