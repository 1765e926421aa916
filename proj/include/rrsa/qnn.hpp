/*
 * Copyright 2026 The rrsa Authors.
 * SPDX-License-Identifier: Apache-2.0
 */

#ifndef RRSA_QNN_HPP
#define RRSA_QNN_HPP

#include <cstdint>
#include <functional>
#include <string>
#include <variant>
#include <vector>

#include "rrsa/patch.hpp"
#include "rrsa/tensor.hpp"

namespace rrsa {

/// Convolution geometry. Output extents are derived from the input extents.
struct ConvLayerSpec {
    int c_in = 1;
    int c_out = 1;
    int h_in = 1;
    int w_in = 1;
    int h_k = 1;
    int w_k = 1;
    int stride = 1;
    int padding = 0;
    std::vector<std::int32_t> bias;  // one per output channel; empty means zero

    [[nodiscard]] int h_out() const { return (h_in + 2 * padding - h_k) / stride + 1; }
    [[nodiscard]] int w_out() const { return (w_in + 2 * padding - w_k) / stride + 1; }
    [[nodiscard]] int windows() const { return h_out() * w_out(); }        // P
    [[nodiscard]] int reduction() const { return c_in * h_k * w_k; }       // M
    [[nodiscard]] std::int32_t bias_at(int k) const { return bias.empty() ? 0 : bias[k]; }

    /// Throws std::invalid_argument when the geometry is inconsistent.
    void validate() const;
};

struct ConvLayer {
    std::string name;
    ConvLayerSpec geom;
    QTensor weights;  // (C_out, C_in, H_k, W_k)
};

struct ReluLayer {};

struct MaxPoolLayer {
    int kernel = 2;
    int stride = 2;
};

/// Fully connected layer. Executed functionally only; never fault-injected.
struct FcLayer {
    std::string name;
    int in_features = 1;
    int out_features = 1;
    QTensor weights;  // (out_features, in_features)
    std::vector<std::int32_t> bias;
};

/// Requantizes an accumulator tensor to int8 at the given output scale.
struct QuantizeLayer {
    double scale = 1.0;
};

using Layer = std::variant<ConvLayer, ReluLayer, MaxPoolLayer, FcLayer, QuantizeLayer>;

struct NetworkSpec {
    std::string name;
    Shape input_shape;  // (C, H, W)
    double input_scale = 1.0;
    int num_classes = 1;
    std::vector<Layer> layers;

    /// Checks shape compatibility across the layer chain and the class count.
    void validate() const;

    /// Layer indices of the conv layers, in execution order.
    [[nodiscard]] std::vector<std::size_t> conv_layer_indices() const;
    [[nodiscard]] const ConvLayer& conv(std::size_t ordinal) const;
};

using Activation = std::variant<QTensor, AccTensor>;

/// im2col lowering: one row per sliding window (row-major over the output
/// map), columns ordered (c, i, j) with c slowest. `padding[r * cols + m]`
/// is 1 where the slot reads the zero padding border.
struct Lowered {
    Matrix<std::int8_t> matrix;
    std::vector<std::uint8_t> padding;
};

Lowered im2col(const QTensor& input, const ConvLayerSpec& layer);

/// Weights reshaped to the (H_k * W_k * C_in) x C_out operand the array streams.
Matrix<std::int8_t> lower_weights(const QTensor& weights);

struct Diagnostics {
    std::size_t accumulator_overflows = 0;
};

/// Direct convolution with 32-bit accumulation. Wrapped results are
/// counted in `diag` when provided.
AccTensor conv_forward(const QTensor& input, const ConvLayerSpec& layer, const QTensor& weights,
                       Diagnostics* diag = nullptr);

/// Adds every patch entry to its coordinate in 32-bit wrapping arithmetic.
/// Throws std::out_of_range on a coordinate outside the tensor.
AccTensor apply_patch(const AccTensor& layer_output, const ErrorPatch& patch);
void apply_patch_inplace(AccTensor& layer_output, const ErrorPatch& patch);

std::int8_t requantize(std::int32_t acc, double multiplier);

struct ConvRecord {
    std::size_t layer_index = 0;
    QTensor input;
    AccTensor output;  // pre-activation, bias included
};

struct InferenceResult {
    std::vector<double> logits;  // dequantized final-layer values
    std::vector<double> scores;  // softmax of logits
};

struct GoldenRun {
    InferenceResult result;
    std::vector<ConvRecord> convs;
};

/// Called after each conv layer; may modify the output before it flows on.
using ConvHook = std::function<void(std::size_t conv_ordinal, const QTensor& input, AccTensor& output)>;

InferenceResult forward(const NetworkSpec& net, const QTensor& input, const ConvHook& hook = {},
                        Diagnostics* diag = nullptr);

/// Fault-free inference that records every conv layer's input and output.
GoldenRun golden_run(const NetworkSpec& net, const QTensor& input, Diagnostics* diag = nullptr);

/// Continues inference downstream of conv layer `conv_ordinal` from a
/// (possibly patched) output of that layer.
InferenceResult resume_from(const NetworkSpec& net, std::size_t conv_ordinal, const AccTensor& conv_output,
                            Diagnostics* diag = nullptr);

std::vector<double> softmax(std::span<const double> logits);

}  // namespace rrsa

#endif  // RRSA_QNN_HPP
