#include "insnn/analysis.hpp"

#include <cmath>

namespace insnn::energy {

double compression_ratio(const CompressionInputs& in) {
    in.in_shape.validate();
    in.out_shape.validate();
    if (in.n_im < 1 || in.n_sp < 1) throw ParameterError("bit precisions must be >= 1");
    const double out_volume = static_cast<double>(in.out_shape.volume());
    if (out_volume <= 0.0) throw ParameterError("output volume must be positive");
    const double dims = static_cast<double>(in.in_shape.volume()) / out_volume;
    const double bits = static_cast<double>(in.n_im) / static_cast<double>(in.n_sp);
    return dims * bits * (in.bayer ? 4.0 / 3.0 : 1.0);
}

double baseline_bits(const CompressionInputs& in) {
    const double bayer = in.bayer ? 4.0 / 3.0 : 1.0;
    return static_cast<double>(in.in_shape.volume()) * bayer * in.n_im;
}

double in_sensor_bits(const CompressionInputs& in) {
    return static_cast<double>(in.out_shape.volume()) * in.n_sp;
}

void EnergyParams::validate() const {
    const double vals[] = {e_readout, e_adc, e_pixconv, e_cds, e_comp,
                           e_mem,     e_mac, e_ac,      e_comm_bit};
    for (double v : vals)
        if (!(v >= 0.0) || !std::isfinite(v))
            throw ParameterError("energy parameters must be finite and >= 0");
}

double sensor_energy(SensorMode mode, const SensorDims& dims, const EnergyParams& p) {
    if (dims.pixel_reads < 0.0 || dims.conv_events < 0.0 || dims.comparator_outputs < 0.0)
        throw ParameterError("sensor dimensions must be >= 0");
    if (mode == SensorMode::baseline)
        return dims.pixel_reads * (p.e_readout + p.e_adc);
    return dims.conv_events * p.e_pixconv + dims.comparator_outputs * (p.e_cds + p.e_comp);
}

double comm_energy(double bits, const EnergyParams& p) {
    if (bits < 0.0) throw ParameterError("bit count must be >= 0");
    return bits * p.e_comm_bit;
}

double processing_energy(const net::SparsityProfile& profile, const EnergyParams& p) {
    if (profile.layers.empty()) throw ParameterError("profile has no layers");
    double total = 0.0;
    for (const auto& layer : profile.layers) {
        if (layer.in_sensor) continue;
        if (layer.ops < 0.0 || layer.reads < 0.0 || layer.input_rate < 0.0 ||
            layer.input_rate > 1.0)
            throw ParameterError("malformed profile entry for " + layer.name);
        const double arithmetic =
            layer.is_mac ? layer.ops * p.e_mac : layer.ops * p.e_ac * layer.input_rate;
        total += layer.reads * p.e_mem + arithmetic;
    }
    return total;
}

namespace {

double ratio(double a, double b) { return b > 0.0 ? a / b : 0.0; }

} // namespace

EnergyReport energy_report(const ModeInputs& baseline, const ModeInputs& in_sensor,
                           const EnergyParams& p) {
    p.validate();
    EnergyReport rep;
    rep.baseline.sensor = sensor_energy(baseline.mode, baseline.dims, p);
    rep.baseline.communication = comm_energy(baseline.comm_bits, p);
    rep.baseline.processing = processing_energy(baseline.profile, p);
    rep.in_sensor.sensor = sensor_energy(in_sensor.mode, in_sensor.dims, p);
    rep.in_sensor.communication = comm_energy(in_sensor.comm_bits, p);
    rep.in_sensor.processing = processing_energy(in_sensor.profile, p);
    rep.sensor_ratio = ratio(rep.baseline.sensor, rep.in_sensor.sensor);
    rep.communication_ratio = ratio(rep.baseline.communication, rep.in_sensor.communication);
    rep.processing_ratio = ratio(rep.baseline.processing, rep.in_sensor.processing);
    rep.total_ratio = ratio(rep.baseline.total(), rep.in_sensor.total());
    return rep;
}

CompressionInputs compression_from_network(const net::NetworkConfig& cfg, int n_im, int n_sp,
                                           bool bayer) {
    const auto shapes = cfg.validate();
    // First block: everything up to and including the first pool (or spike).
    std::size_t end = 0;
    for (std::size_t i = 0; i < cfg.layers.size(); ++i) {
        const net::LayerKind k = cfg.layers[i].kind;
        if (k == net::LayerKind::maxpool ||
            (k == net::LayerKind::spike &&
             (i + 1 >= cfg.layers.size() || cfg.layers[i + 1].kind != net::LayerKind::maxpool))) {
            end = i;
            break;
        }
    }
    const auto& out = shapes[end];
    CompressionInputs c;
    c.in_shape = ShapeInfo{cfg.input_shape[1], cfg.input_shape[2], cfg.input_shape[0]};
    c.out_shape = ShapeInfo{out[1], out[2], out[0]};
    c.n_im = n_im;
    c.n_sp = n_sp;
    c.bayer = bayer;
    return c;
}

ModeInputs mode_inputs(net::Network& net, const std::vector<Tensor>& sample, SensorMode mode,
                       const CompressionInputs& compression) {
    ModeInputs mi;
    mi.mode = mode;

    const net::FirstLayerMode saved = net.config.first_layer_mode;
    const bool run_fused = mode == SensorMode::in_sensor && net.frontend.has_value();
    net.config.first_layer_mode =
        run_fused ? net::FirstLayerMode::in_sensor : net::FirstLayerMode::digital;
    try {
        mi.profile = net::sparsity_profile(net, sample);
    } catch (...) {
        net.config.first_layer_mode = saved;
        throw;
    }
    net.config.first_layer_mode = saved;
    if (mode == SensorMode::in_sensor && !run_fused && !mi.profile.layers.empty()) {
        // No fused frontend attached: reuse the digital activity trace and
        // account the first layer inside the sensor.
        mi.profile.layers.front().in_sensor = true;
    }

    mi.dims.pixel_reads = baseline_bits(compression) / compression.n_im;
    if (mode == SensorMode::in_sensor) {
        // In-pixel MAC events = the first conv's op count; one CDS+comparator
        // evaluation per pre-pool conv output element.
        const auto shapes = net.config.validate();
        const auto& spec = net.config.layers.front();
        const auto& conv_out = shapes.front();
        mi.dims.conv_events = static_cast<double>(spec.channels) * net.config.input_shape[0] *
                              spec.kernel * spec.kernel * conv_out[1] * conv_out[2];
        mi.dims.comparator_outputs =
            static_cast<double>(conv_out[0]) * conv_out[1] * conv_out[2];
        mi.comm_bits = in_sensor_bits(compression);
    } else {
        mi.comm_bits = baseline_bits(compression);
    }
    return mi;
}

} // namespace insnn::energy
