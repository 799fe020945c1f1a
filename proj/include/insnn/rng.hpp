#pragma once

#include <cmath>
#include <cstdint>
#include <random>

#include "insnn/tensor.hpp"

namespace insnn {

using Rng = std::mt19937;

inline Rng make_rng(std::uint64_t seed) { return Rng(static_cast<std::uint32_t>(seed)); }

inline void fill_uniform(Tensor& t, Rng& rng, float lo = 0.0f, float hi = 1.0f) {
    std::uniform_real_distribution<float> dist(lo, hi);
    for (auto& v : t.values()) v = dist(rng);
}

inline void fill_normal(Tensor& t, Rng& rng, float mean = 0.0f, float stddev = 1.0f) {
    std::normal_distribution<float> dist(mean, stddev);
    for (auto& v : t.values()) v = dist(rng);
}

// He-style init for conv [C_out,C_in,kH,kW] and dense [U,F] weights.
inline void fill_kaiming(Tensor& t, Rng& rng) {
    std::int64_t fan_in = 1;
    for (int i = 1; i < t.rank(); ++i) fan_in *= t.dim(i);
    fill_normal(t, rng, 0.0f, std::sqrt(2.0f / static_cast<float>(fan_in)));
}

} // namespace insnn
