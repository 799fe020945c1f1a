#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "insnn/errors.hpp"

namespace insnn {

using MatrixRM = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatMap = Eigen::Map<MatrixRM>;
using ConstMatMap = Eigen::Map<const MatrixRM>;
using VecMap = Eigen::Map<Eigen::VectorXf>;
using ConstVecMap = Eigen::Map<const Eigen::VectorXf>;

// Dense row-major float32 array with a shape and an optional same-shape
// gradient buffer. All heavy math runs through Eigen maps over the data.
class Tensor {
public:
    Tensor() = default;

    explicit Tensor(std::vector<int> shape) : shape_(std::move(shape)) {
        data_.assign(checked_numel(shape_), 0.0f);
    }

    Tensor(std::vector<int> shape, std::vector<float> data)
        : shape_(std::move(shape)), data_(std::move(data)) {
        if (checked_numel(shape_) != static_cast<std::int64_t>(data_.size()))
            throw DimensionError("tensor data length " + std::to_string(data_.size()) +
                                 " does not match shape " + shape_string(shape_));
    }

    static Tensor zeros(std::vector<int> shape) { return Tensor(std::move(shape)); }

    static Tensor full(std::vector<int> shape, float value) {
        Tensor t(std::move(shape));
        std::fill(t.data_.begin(), t.data_.end(), value);
        return t;
    }

    static Tensor scalar(float value) { return Tensor({1}, {value}); }

    const std::vector<int>& shape() const { return shape_; }
    int rank() const { return static_cast<int>(shape_.size()); }
    int dim(int i) const { return shape_.at(static_cast<std::size_t>(i)); }
    std::int64_t numel() const { return static_cast<std::int64_t>(data_.size()); }

    float* data() { return data_.data(); }
    const float* data() const { return data_.data(); }
    std::vector<float>& values() { return data_; }
    const std::vector<float>& values() const { return data_; }

    float& operator[](std::int64_t i) { return data_[static_cast<std::size_t>(i)]; }
    float operator[](std::int64_t i) const { return data_[static_cast<std::size_t>(i)]; }

    float& operator()(int a) { return data_[static_cast<std::size_t>(a)]; }
    float operator()(int a) const { return data_[static_cast<std::size_t>(a)]; }
    float& operator()(int a, int b) { return data_[index2(a, b)]; }
    float operator()(int a, int b) const { return data_[index2(a, b)]; }
    float& operator()(int a, int b, int c) { return data_[index3(a, b, c)]; }
    float operator()(int a, int b, int c) const { return data_[index3(a, b, c)]; }
    float& operator()(int a, int b, int c, int d) { return data_[index4(a, b, c, d)]; }
    float operator()(int a, int b, int c, int d) const { return data_[index4(a, b, c, d)]; }

    bool has_grad() const { return !grad_.empty(); }
    void alloc_grad() { grad_.assign(data_.size(), 0.0f); }
    void drop_grad() { grad_.clear(); }
    void zero_grad() { std::fill(grad_.begin(), grad_.end(), 0.0f); }

    float* grad() {
        if (grad_.empty()) alloc_grad();
        return grad_.data();
    }
    const std::vector<float>& grad_values() const { return grad_; }

    // Eigen views. Shapes are caller-declared; sizes must cover the buffer.
    MatMap mat(int rows, int cols) {
        check_view(rows, cols);
        return MatMap(data_.data(), rows, cols);
    }
    ConstMatMap mat(int rows, int cols) const {
        check_view(rows, cols);
        return ConstMatMap(data_.data(), rows, cols);
    }
    VecMap vec() { return VecMap(data_.data(), static_cast<Eigen::Index>(data_.size())); }
    ConstVecMap vec() const {
        return ConstVecMap(data_.data(), static_cast<Eigen::Index>(data_.size()));
    }
    VecMap grad_vec() {
        if (grad_.empty()) alloc_grad();
        return VecMap(grad_.data(), static_cast<Eigen::Index>(grad_.size()));
    }

    Tensor reshaped(std::vector<int> new_shape) const {
        if (checked_numel(new_shape) != numel())
            throw DimensionError("reshape " + shape_string(shape_) + " -> " +
                                 shape_string(new_shape) + " changes element count");
        return Tensor(std::move(new_shape), data_);
    }

    bool same_shape(const Tensor& other) const { return shape_ == other.shape_; }

    static std::string shape_string(const std::vector<int>& s) {
        std::string out = "[";
        for (std::size_t i = 0; i < s.size(); ++i) {
            if (i) out += ",";
            out += std::to_string(s[i]);
        }
        return out + "]";
    }

    static std::int64_t checked_numel(const std::vector<int>& shape) {
        std::int64_t n = 1;
        for (int d : shape) {
            if (d <= 0)
                throw DimensionError("non-positive dimension in shape " + shape_string(shape));
            n *= d;
        }
        return n;
    }

private:
    std::size_t index2(int a, int b) const {
        return static_cast<std::size_t>(a) * shape_[1] + b;
    }
    std::size_t index3(int a, int b, int c) const {
        return (static_cast<std::size_t>(a) * shape_[1] + b) * shape_[2] + c;
    }
    std::size_t index4(int a, int b, int c, int d) const {
        return ((static_cast<std::size_t>(a) * shape_[1] + b) * shape_[2] + c) * shape_[3] + d;
    }
    void check_view(int rows, int cols) const {
        if (static_cast<std::int64_t>(rows) * cols != numel())
            throw DimensionError("matrix view " + std::to_string(rows) + "x" +
                                 std::to_string(cols) + " does not cover tensor " +
                                 shape_string(shape_));
    }

    std::vector<int> shape_;
    std::vector<float> data_;
    std::vector<float> grad_;
};

// Eq-style image geometry: height, width, channel count.
struct ShapeInfo {
    int height = 1;
    int width = 1;
    int channels = 1;

    std::int64_t volume() const {
        return static_cast<std::int64_t>(height) * width * channels;
    }
    void validate() const {
        if (height < 1 || width < 1 || channels < 1)
            throw ParameterError("ShapeInfo fields must be >= 1");
    }
};

} // namespace insnn
