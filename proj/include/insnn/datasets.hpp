#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "insnn/tensor.hpp"

namespace insnn::io {

struct Dataset {
    std::vector<Tensor> images; // [C,H,W], values in [0,1]
    std::vector<int> labels;
    int channels = 0, height = 0, width = 0;
    int num_classes = 10;

    std::size_t size() const { return images.size(); }
};

// CIFAR-10 binary batch: 10000 records of 1 label byte + 3072 pixel bytes
// (channel-planar R,G,B, row-major). Any multiple of the record size loads.
Dataset load_cifar10(const std::string& file);

// MNIST IDX pair: images magic 0x00000803, labels magic 0x00000801,
// big-endian dimensions.
Dataset load_mnist(const std::string& images_file, const std::string& labels_file);

// Derives the labels filename from the images filename
// ("-images-" -> "-labels-", "idx3" -> "idx1").
Dataset load_mnist(const std::string& images_file);

// Seeded random subset without replacement; n == 0 or n >= size returns all.
Dataset subset(const Dataset& d, std::size_t n, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Synthetic stand-in corpora written in the exact on-disk formats above, for
// running the pipeline where the real datasets are not available. Ten
// procedurally generated texture classes with per-sample jitter and noise.
// ---------------------------------------------------------------------------

void write_synthetic_cifar10(const std::string& dir, int n_train, int n_test,
                             std::uint64_t seed);
void write_synthetic_mnist(const std::string& dir, int n_train, int n_test, std::uint64_t seed);

} // namespace insnn::io
