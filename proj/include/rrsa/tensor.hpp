/*
 * Copyright 2026 The rrsa Authors.
 * SPDX-License-Identifier: Apache-2.0
 */

#ifndef RRSA_TENSOR_HPP
#define RRSA_TENSOR_HPP

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace rrsa {

/// Tensor extents, outermost first. Up to four dimensions are used in
/// practice: (C, H, W) feature maps, (rows, cols) matrices and
/// (C_out, C_in, H_k, W_k) convolution weights.
class Shape {
public:
    Shape() = default;
    Shape(std::initializer_list<int> dims) : dims_(dims) { validate(); }
    explicit Shape(std::vector<int> dims) : dims_(std::move(dims)) { validate(); }

    [[nodiscard]] std::size_t rank() const { return dims_.size(); }
    [[nodiscard]] int operator[](std::size_t i) const { return dims_.at(i); }
    [[nodiscard]] const std::vector<int>& dims() const { return dims_; }

    [[nodiscard]] std::size_t numel() const {
        return std::accumulate(dims_.begin(), dims_.end(), std::size_t{1},
                               [](std::size_t a, int d) { return a * static_cast<std::size_t>(d); });
    }

    [[nodiscard]] std::string str() const;

    friend bool operator==(const Shape&, const Shape&) = default;

private:
    void validate() const {
        for (int d : dims_)
            if (d < 1) throw std::invalid_argument("tensor dimensions must be >= 1, got " + str());
    }

    std::vector<int> dims_;
};

/// Dense row-major tensor with a real quantization scale.
///
/// Int8 instances hold activations and weights; int32 instances hold
/// accumulator contents (partial sums, layer pre-activations, biases).
template <typename T>
class Tensor {
public:
    using value_type = T;

    Tensor() = default;
    Tensor(Shape shape, double scale = 1.0)
        : shape_(std::move(shape)), data_(shape_.numel(), T{0}), scale_(scale) {
        check_scale();
    }
    Tensor(Shape shape, std::vector<T> data, double scale = 1.0)
        : shape_(std::move(shape)), data_(std::move(data)), scale_(scale) {
        if (data_.size() != shape_.numel())
            throw std::invalid_argument("tensor data size does not match shape " + shape_.str());
        check_scale();
    }

    [[nodiscard]] const Shape& shape() const { return shape_; }
    [[nodiscard]] double scale() const { return scale_; }
    void set_scale(double s) { scale_ = s; check_scale(); }

    [[nodiscard]] std::size_t size() const { return data_.size(); }
    [[nodiscard]] std::span<const T> data() const { return data_; }
    [[nodiscard]] std::span<T> data() { return data_; }
    [[nodiscard]] const std::vector<T>& vec() const { return data_; }

    T& operator[](std::size_t i) { return data_[i]; }
    const T& operator[](std::size_t i) const { return data_[i]; }

    // (c, h, w) accessors for rank-3 feature maps.
    T& at(int c, int h, int w) { return data_[index3(c, h, w)]; }
    const T& at(int c, int h, int w) const { return data_[index3(c, h, w)]; }

    // (k, c, i, j) accessors for rank-4 convolution weights.
    T& at(int k, int c, int i, int j) { return data_[index4(k, c, i, j)]; }
    const T& at(int k, int c, int i, int j) const { return data_[index4(k, c, i, j)]; }

    [[nodiscard]] std::size_t index3(int c, int h, int w) const {
        return (static_cast<std::size_t>(c) * shape_[1] + h) * shape_[2] + w;
    }
    [[nodiscard]] std::size_t index4(int k, int c, int i, int j) const {
        return ((static_cast<std::size_t>(k) * shape_[1] + c) * shape_[2] + i) * shape_[3] + j;
    }

    friend bool operator==(const Tensor& a, const Tensor& b) {
        return a.shape_ == b.shape_ && a.data_ == b.data_;
    }

private:
    void check_scale() const {
        if (!(scale_ > 0.0)) throw std::invalid_argument("tensor scale must be positive");
    }

    Shape shape_;
    std::vector<T> data_;
    double scale_ = 1.0;
};

using QTensor = Tensor<std::int8_t>;
using AccTensor = Tensor<std::int32_t>;

/// Row-major matrix used for lowered operands and systolic-array tiles.
template <typename T>
struct Matrix {
    int rows = 0;
    int cols = 0;
    std::vector<T> data;

    Matrix() = default;
    Matrix(int r, int c) : rows(r), cols(c), data(static_cast<std::size_t>(r) * c, T{0}) {}
    Matrix(int r, int c, std::vector<T> d) : rows(r), cols(c), data(std::move(d)) {
        if (data.size() != static_cast<std::size_t>(r) * c)
            throw std::invalid_argument("matrix data size mismatch");
    }

    T& operator()(int r, int c) { return data[static_cast<std::size_t>(r) * cols + c]; }
    const T& operator()(int r, int c) const { return data[static_cast<std::size_t>(r) * cols + c]; }

    friend bool operator==(const Matrix&, const Matrix&) = default;
};

/// Two's-complement wrapping addition on 32-bit values.
constexpr std::int32_t wrap_add(std::int32_t a, std::int32_t b) {
    return static_cast<std::int32_t>(static_cast<std::uint32_t>(a) + static_cast<std::uint32_t>(b));
}
constexpr std::int32_t wrap_sub(std::int32_t a, std::int32_t b) {
    return static_cast<std::int32_t>(static_cast<std::uint32_t>(a) - static_cast<std::uint32_t>(b));
}
constexpr std::int32_t wrap32(std::int64_t v) {
    return static_cast<std::int32_t>(static_cast<std::uint32_t>(static_cast<std::uint64_t>(v)));
}

}  // namespace rrsa

#endif  // RRSA_TENSOR_HPP
