#include "insnn/checkpoint.hpp"

#include <cstring>
#include <fstream>

namespace insnn::io {

namespace {

constexpr const char* kMagic = "INSNN-CKPT 1";

void write_f32_le(std::ofstream& out, const float* data, std::int64_t count) {
    for (std::int64_t i = 0; i < count; ++i) {
        std::uint32_t bits;
        std::memcpy(&bits, &data[i], 4);
        const unsigned char b[4] = {static_cast<unsigned char>(bits),
                                    static_cast<unsigned char>(bits >> 8),
                                    static_cast<unsigned char>(bits >> 16),
                                    static_cast<unsigned char>(bits >> 24)};
        out.write(reinterpret_cast<const char*>(b), 4);
    }
}

void read_f32_le(const unsigned char* src, float* dst, std::int64_t count) {
    for (std::int64_t i = 0; i < count; ++i) {
        const unsigned char* b = src + i * 4;
        const std::uint32_t bits = static_cast<std::uint32_t>(b[0]) |
                                   (static_cast<std::uint32_t>(b[1]) << 8) |
                                   (static_cast<std::uint32_t>(b[2]) << 16) |
                                   (static_cast<std::uint32_t>(b[3]) << 24);
        std::memcpy(&dst[i], &bits, 4);
    }
}

} // namespace

const Tensor* Checkpoint::find(const std::string& name) const {
    for (const auto& [n, t] : tensors)
        if (n == name) return &t;
    return nullptr;
}

const Tensor& Checkpoint::require(const std::string& name) const {
    const Tensor* t = find(name);
    if (!t) throw FormatError("checkpoint is missing tensor '" + name + "'");
    return *t;
}

void Checkpoint::save(const std::string& path) const {
    nlohmann::json header;
    header["version"] = version;
    header["config"] = config_echo;
    header["metrics"] = metrics;
    nlohmann::json table = nlohmann::json::array();
    std::int64_t offset = 0;
    for (const auto& [name, t] : tensors) {
        nlohmann::json entry;
        entry["name"] = name;
        entry["shape"] = t.shape();
        entry["offset"] = offset;
        table.push_back(entry);
        offset += t.numel() * 4;
    }
    header["tensors"] = table;
    const std::string header_text = header.dump();

    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path);
    out << kMagic << "\n" << header_text.size() << "\n" << header_text;
    for (const auto& [name, t] : tensors) write_f32_le(out, t.data(), t.numel());
    if (!out) throw IoError("write failed on " + path);
}

Checkpoint Checkpoint::load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path);
    std::string magic, header_len_line;
    if (!std::getline(in, magic) || magic != kMagic)
        throw FormatError(path + ": not an INSNN checkpoint (bad magic line)");
    if (!std::getline(in, header_len_line))
        throw FormatError(path + ": missing header length line");
    std::size_t header_len = 0;
    try {
        header_len = std::stoul(header_len_line);
    } catch (...) {
        throw FormatError(path + ": malformed header length '" + header_len_line + "'");
    }
    std::string header_text(header_len, '\0');
    in.read(header_text.data(), static_cast<std::streamsize>(header_len));
    if (!in) throw FormatError(path + ": truncated header");

    nlohmann::json header;
    try {
        header = nlohmann::json::parse(header_text);
    } catch (const nlohmann::json::parse_error& e) {
        throw FormatError(path + ": header JSON: " + e.what());
    }

    Checkpoint ckpt;
    ckpt.version = header.value("version", 0);
    if (ckpt.version != 1)
        throw FormatError(path + ": unsupported checkpoint version " +
                          std::to_string(ckpt.version));
    ckpt.config_echo = header.value("config", nlohmann::json());
    ckpt.metrics = header.value("metrics", nlohmann::json());

    std::vector<unsigned char> payload{std::istreambuf_iterator<char>(in),
                                       std::istreambuf_iterator<char>()};
    for (const auto& entry : header.at("tensors")) {
        const std::string name = entry.at("name").get<std::string>();
        const std::vector<int> shape = entry.at("shape").get<std::vector<int>>();
        const std::int64_t offset = entry.at("offset").get<std::int64_t>();
        Tensor t(shape);
        if (offset < 0 || offset + t.numel() * 4 > static_cast<std::int64_t>(payload.size()))
            throw FormatError(path + ": tensor '" + name + "' payload out of bounds at offset " +
                              std::to_string(offset));
        read_f32_le(payload.data() + offset, t.data(), t.numel());
        ckpt.tensors.emplace_back(name, std::move(t));
    }
    return ckpt;
}

Checkpoint checkpoint_from_network(net::Network& net, nlohmann::json config_echo,
                                   nlohmann::json metrics) {
    Checkpoint ckpt;
    ckpt.config_echo = std::move(config_echo);
    ckpt.metrics = std::move(metrics);
    for (auto& [name, t] : net.state_tensors()) ckpt.add(name, *t);
    return ckpt;
}

void apply_to_network(const Checkpoint& ckpt, net::Network& net) {
    for (auto& [name, t] : net.state_tensors()) {
        const Tensor& stored = ckpt.require(name);
        if (!stored.same_shape(*t))
            throw DimensionError("checkpoint tensor " + name + " has shape " +
                                 Tensor::shape_string(stored.shape()) + ", network expects " +
                                 Tensor::shape_string(t->shape()));
        *t = stored;
    }
}

nlohmann::json curve_to_json(const analog::CurveModel& curve) {
    nlohmann::json j;
    j["family"] = analog::curve_family_name(curve.family);
    j["coefficients"] = curve.coefficients;
    j["deg_w"] = curve.deg_w;
    j["deg_x"] = curve.deg_x;
    j["v_max"] = curve.v_max;
    j["v_min"] = curve.v_min;
    return j;
}

analog::CurveModel curve_from_json(const nlohmann::json& j) {
    analog::CurveModel curve;
    curve.family = analog::curve_family_from_name(j.at("family").get<std::string>());
    curve.coefficients = j.value("coefficients", std::vector<double>{});
    curve.deg_w = j.value("deg_w", 0);
    curve.deg_x = j.value("deg_x", 0);
    curve.v_max = j.value("v_max", 0.0);
    curve.v_min = j.value("v_min", 0.0);
    return curve;
}

void add_frontend(Checkpoint& ckpt, const analog::FusedFrontend& fe) {
    ckpt.add("frontend.positive", fe.banks.positive);
    ckpt.add("frontend.negative", fe.banks.negative);

    nlohmann::json j;
    j["curve"] = curve_to_json(fe.curve);
    // trip points live in the analog (double) domain; the JSON header
    // round-trips them exactly, unlike the float32 payload
    j["trip_points"] = fe.trip_points;
    j["shift"] = fe.shift;
    j["v_th"] = fe.v_th;
    j["stride"] = fe.stride;
    j["padding"] = fe.padding;
    j["pool_window"] = fe.pool_window;
    j["voltage_scale"] = fe.voltage_scale;
    j["quant_bits"] = fe.quant_bits;
    ckpt.config_echo["frontend"] = std::move(j);
}

bool has_frontend(const Checkpoint& ckpt) { return ckpt.find("frontend.positive") != nullptr; }

analog::FusedFrontend frontend_from_checkpoint(const Checkpoint& ckpt) {
    if (!has_frontend(ckpt)) throw FormatError("checkpoint has no fused frontend");
    const nlohmann::json& j = ckpt.config_echo.at("frontend");
    analog::FusedFrontend fe;
    fe.banks.positive = ckpt.require("frontend.positive");
    fe.banks.negative = ckpt.require("frontend.negative");
    fe.trip_points = j.at("trip_points").get<std::vector<double>>();
    fe.shift = j.at("shift").get<std::vector<double>>();
    fe.curve = curve_from_json(j.at("curve"));
    fe.v_th = j.at("v_th").get<double>();
    fe.stride = j.at("stride").get<int>();
    fe.padding = j.at("padding").get<int>();
    fe.pool_window = j.at("pool_window").get<int>();
    fe.voltage_scale = j.at("voltage_scale").get<double>();
    fe.quant_bits = j.value("quant_bits", 0);
    return fe;
}

} // namespace insnn::io
