#pragma once

#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "insnn/analog.hpp"
#include "insnn/snn.hpp"
#include "insnn/tensor.hpp"

namespace insnn::io {

// Container format: a length-prefixed text header followed by raw
// little-endian float32 payloads.
//
//   INSNN-CKPT 1\n
//   <header byte length>\n
//   <header JSON>
//   <payload>
//
// The header carries the format version, a config echo, a metrics snapshot
// and the tensor table (name, shape, payload offset). Round-trips are
// bit-exact.
struct Checkpoint {
    int version = 1;
    nlohmann::json config_echo;
    nlohmann::json metrics;
    std::vector<std::pair<std::string, Tensor>> tensors;

    void add(const std::string& name, const Tensor& t) { tensors.emplace_back(name, t); }
    const Tensor* find(const std::string& name) const;
    const Tensor& require(const std::string& name) const;

    void save(const std::string& path) const;
    static Checkpoint load(const std::string& path);
};

// Network <-> checkpoint. Loading validates shapes against the network.
Checkpoint checkpoint_from_network(net::Network& net, nlohmann::json config_echo,
                                   nlohmann::json metrics = {});
void apply_to_network(const Checkpoint& ckpt, net::Network& net);

// Fused frontend serialization into the same container (frontend.* tensors
// plus a "frontend" header block).
void add_frontend(Checkpoint& ckpt, const analog::FusedFrontend& fe);
bool has_frontend(const Checkpoint& ckpt);
analog::FusedFrontend frontend_from_checkpoint(const Checkpoint& ckpt);

nlohmann::json curve_to_json(const analog::CurveModel& curve);
analog::CurveModel curve_from_json(const nlohmann::json& j);

} // namespace insnn::io
