/*
 * Copyright 2026 The rrsa Authors.
 * SPDX-License-Identifier: Apache-2.0
 */

#include "rrsa/qnn.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <sstream>
#include <stdexcept>

namespace rrsa {

std::string Shape::str() const {
    std::ostringstream os;
    os << '(';
    for (std::size_t i = 0; i < dims_.size(); ++i) os << (i ? ", " : "") << dims_[i];
    os << ')';
    return os.str();
}

std::string_view to_string(PatternKind p) {
    switch (p) {
        case PatternKind::Empty: return "empty";
        case PatternKind::Point: return "point";
        case PatternKind::Line: return "line";
        case PatternKind::Bullet: return "bullet";
        case PatternKind::Multi: return "multi";
    }
    return "?";
}

ErrorPatch ErrorPatch::negated() const {
    ErrorPatch out = *this;
    for (auto& e : out.entries) e.error = wrap_sub(0, e.error);
    return out;
}

void ErrorPatch::classify_pattern() {
    if (entries.empty()) {
        pattern = PatternKind::Empty;
        return;
    }
    if (entries.size() == 1) {
        pattern = PatternKind::Point;
        return;
    }
    const auto& f = entries.front();
    bool same_channel = true;
    bool same_pos = true;
    for (const auto& e : entries) {
        same_channel = same_channel && e.channel == f.channel;
        same_pos = same_pos && e.u == f.u && e.v == f.v;
    }
    pattern = same_channel ? PatternKind::Line : same_pos ? PatternKind::Bullet : PatternKind::Multi;
}

void ConvLayerSpec::validate() const {
    if (c_in < 1 || c_out < 1 || h_k < 1 || w_k < 1 || h_in < 1 || w_in < 1)
        throw std::invalid_argument("conv: channel, kernel and input extents must be >= 1");
    if (stride < 1 || padding < 0) throw std::invalid_argument("conv: stride must be >= 1 and padding >= 0");
    if (h_in + 2 * padding < h_k || w_in + 2 * padding < w_k)
        throw std::invalid_argument("conv: kernel larger than padded input");
    if (!bias.empty() && static_cast<int>(bias.size()) != c_out)
        throw std::invalid_argument("conv: bias length must equal C_out");
}

namespace {

void check_conv_input(const QTensor& input, const ConvLayerSpec& layer) {
    layer.validate();
    const Shape& s = input.shape();
    if (s.rank() != 3 || s[0] != layer.c_in || s[1] != layer.h_in || s[2] != layer.w_in)
        throw std::invalid_argument("conv: input shape " + s.str() + " does not match layer (" +
                                    std::to_string(layer.c_in) + ", " + std::to_string(layer.h_in) + ", " +
                                    std::to_string(layer.w_in) + ")");
}

void check_conv_weights(const QTensor& weights, const ConvLayerSpec& layer) {
    const Shape& s = weights.shape();
    if (s.rank() != 4 || s[0] != layer.c_out || s[1] != layer.c_in || s[2] != layer.h_k || s[3] != layer.w_k)
        throw std::invalid_argument("conv: weight shape " + s.str() + " does not match layer");
}

}  // namespace

Lowered im2col(const QTensor& input, const ConvLayerSpec& layer) {
    check_conv_input(input, layer);
    const int h_out = layer.h_out();
    const int w_out = layer.w_out();
    const int cols = layer.reduction();
    Lowered out{Matrix<std::int8_t>(h_out * w_out, cols), std::vector<std::uint8_t>(static_cast<std::size_t>(h_out) * w_out * cols, 0)};
    for (int u = 0; u < h_out; ++u) {
        for (int v = 0; v < w_out; ++v) {
            const int r = u * w_out + v;
            int m = 0;
            for (int c = 0; c < layer.c_in; ++c) {
                for (int i = 0; i < layer.h_k; ++i) {
                    for (int j = 0; j < layer.w_k; ++j, ++m) {
                        const int h = u * layer.stride - layer.padding + i;
                        const int w = v * layer.stride - layer.padding + j;
                        if (h < 0 || h >= layer.h_in || w < 0 || w >= layer.w_in) {
                            out.padding[static_cast<std::size_t>(r) * cols + m] = 1;
                        } else {
                            out.matrix(r, m) = input.at(c, h, w);
                        }
                    }
                }
            }
        }
    }
    return out;
}

Matrix<std::int8_t> lower_weights(const QTensor& weights) {
    const Shape& s = weights.shape();
    if (s.rank() != 4) throw std::invalid_argument("lower_weights: expected (C_out, C_in, H_k, W_k)");
    const int k = s[0];
    const int m = s[1] * s[2] * s[3];
    Matrix<std::int8_t> out(m, k);
    for (int ko = 0; ko < k; ++ko)
        for (int mi = 0; mi < m; ++mi) out(mi, ko) = weights[static_cast<std::size_t>(ko) * m + mi];
    return out;
}

AccTensor conv_forward(const QTensor& input, const ConvLayerSpec& layer, const QTensor& weights,
                       Diagnostics* diag) {
    check_conv_input(input, layer);
    check_conv_weights(weights, layer);
    const int h_out = layer.h_out();
    const int w_out = layer.w_out();
    AccTensor out(Shape{layer.c_out, h_out, w_out}, input.scale() * weights.scale());
    constexpr std::int64_t lo = std::numeric_limits<std::int32_t>::min();
    constexpr std::int64_t hi = std::numeric_limits<std::int32_t>::max();
    for (int k = 0; k < layer.c_out; ++k) {
        for (int u = 0; u < h_out; ++u) {
            for (int v = 0; v < w_out; ++v) {
                std::int64_t acc = 0;
                bool overflow = false;
                for (int c = 0; c < layer.c_in; ++c) {
                    for (int i = 0; i < layer.h_k; ++i) {
                        const int h = u * layer.stride - layer.padding + i;
                        if (h < 0 || h >= layer.h_in) continue;
                        for (int j = 0; j < layer.w_k; ++j) {
                            const int w = v * layer.stride - layer.padding + j;
                            if (w < 0 || w >= layer.w_in) continue;
                            acc += static_cast<std::int64_t>(weights.at(k, c, i, j)) * input.at(c, h, w);
                            overflow = overflow || acc < lo || acc > hi;
                        }
                    }
                }
                acc += layer.bias_at(k);
                overflow = overflow || acc < lo || acc > hi;
                if (overflow && diag) ++diag->accumulator_overflows;
                out.at(k, u, v) = wrap32(acc);
            }
        }
    }
    return out;
}

void apply_patch_inplace(AccTensor& t, const ErrorPatch& patch) {
    const Shape& s = t.shape();
    if (s.rank() != 3) throw std::invalid_argument("apply_patch: expected a (C, H, W) tensor");
    for (const auto& e : patch.entries) {
        if (e.channel < 0 || e.channel >= s[0] || e.u < 0 || e.u >= s[1] || e.v < 0 || e.v >= s[2])
            throw std::out_of_range("apply_patch: entry (" + std::to_string(e.channel) + ", " + std::to_string(e.u) +
                                    ", " + std::to_string(e.v) + ") outside output " + s.str());
    }
    for (const auto& e : patch.entries) {
        auto& cell = t.at(e.channel, e.u, e.v);
        cell = wrap_add(cell, e.error);
    }
}

AccTensor apply_patch(const AccTensor& layer_output, const ErrorPatch& patch) {
    AccTensor out = layer_output;
    apply_patch_inplace(out, patch);
    return out;
}

std::int8_t requantize(std::int32_t acc, double multiplier) {
    // std::round rounds half away from zero.
    const double q = std::round(static_cast<double>(acc) * multiplier);
    return static_cast<std::int8_t>(std::clamp(q, -128.0, 127.0));
}

std::vector<double> softmax(std::span<const double> logits) {
    std::vector<double> out(logits.size());
    if (logits.empty()) return out;
    const double mx = *std::max_element(logits.begin(), logits.end());
    double sum = 0.0;
    for (std::size_t i = 0; i < logits.size(); ++i) {
        out[i] = std::exp(logits[i] - mx);
        sum += out[i];
    }
    for (auto& v : out) v /= sum;
    return out;
}

// ---------------------------------------------------------------------------
// Network

namespace {

struct ShapeState {
    bool quantized = true;
    std::vector<int> dims;
};

template <typename T>
Tensor<T> relu(Tensor<T> t) {
    for (auto& v : t.data()) v = std::max<T>(v, T{0});
    return t;
}

template <typename T>
Tensor<T> maxpool(const Tensor<T>& t, const MaxPoolLayer& p) {
    const Shape& s = t.shape();
    const int ho = (s[1] - p.kernel) / p.stride + 1;
    const int wo = (s[2] - p.kernel) / p.stride + 1;
    Tensor<T> out(Shape{s[0], ho, wo}, t.scale());
    for (int c = 0; c < s[0]; ++c)
        for (int u = 0; u < ho; ++u)
            for (int v = 0; v < wo; ++v) {
                T best = std::numeric_limits<T>::min();
                for (int i = 0; i < p.kernel; ++i)
                    for (int j = 0; j < p.kernel; ++j) best = std::max(best, t.at(c, u * p.stride + i, v * p.stride + j));
                out.at(c, u, v) = best;
            }
    return out;
}

AccTensor fully_connected(const QTensor& in, const FcLayer& fc) {
    AccTensor out(Shape{fc.out_features, 1, 1}, in.scale() * fc.weights.scale());
    for (int o = 0; o < fc.out_features; ++o) {
        std::int64_t acc = fc.bias.empty() ? 0 : fc.bias[o];
        for (int i = 0; i < fc.in_features; ++i)
            acc += static_cast<std::int64_t>(fc.weights[static_cast<std::size_t>(o) * fc.in_features + i]) * in[i];
        out[o] = wrap32(acc);
    }
    return out;
}

QTensor quantize(const AccTensor& acc, const QuantizeLayer& q) {
    QTensor out(acc.shape(), q.scale);
    const double mult = acc.scale() / q.scale;
    for (std::size_t i = 0; i < acc.size(); ++i) out[i] = requantize(acc[i], mult);
    return out;
}

[[noreturn]] void layer_error(std::size_t idx, const std::string& what) {
    throw std::invalid_argument("layer " + std::to_string(idx) + ": " + what);
}

// Runs layers [first, end) on `act`, invoking `hook` after each conv.
Activation run_layers(const NetworkSpec& net, std::size_t first, Activation act, std::size_t conv_ordinal,
                      const ConvHook& hook, Diagnostics* diag, std::vector<ConvRecord>* records) {
    for (std::size_t li = first; li < net.layers.size(); ++li) {
        const Layer& layer = net.layers[li];
        if (const auto* conv = std::get_if<ConvLayer>(&layer)) {
            const auto* in = std::get_if<QTensor>(&act);
            if (!in) layer_error(li, "conv expects a quantized input");
            AccTensor out = conv_forward(*in, conv->geom, conv->weights, diag);
            if (hook) hook(conv_ordinal, *in, out);
            if (records) records->push_back({li, *in, out});
            ++conv_ordinal;
            act = std::move(out);
        } else if (std::holds_alternative<ReluLayer>(layer)) {
            act = std::visit([](auto t) -> Activation { return relu(std::move(t)); }, std::move(act));
        } else if (const auto* pool = std::get_if<MaxPoolLayer>(&layer)) {
            act = std::visit([&](const auto& t) -> Activation { return maxpool(t, *pool); }, act);
        } else if (const auto* fc = std::get_if<FcLayer>(&layer)) {
            const auto* in = std::get_if<QTensor>(&act);
            if (!in) layer_error(li, "fully-connected expects a quantized input");
            act = fully_connected(*in, *fc);
        } else if (const auto* q = std::get_if<QuantizeLayer>(&layer)) {
            const auto* in = std::get_if<AccTensor>(&act);
            if (!in) layer_error(li, "quantize expects an accumulator input");
            act = quantize(*in, *q);
        }
    }
    return act;
}

InferenceResult finish(const Activation& act) {
    InferenceResult r;
    std::visit(
        [&](const auto& t) {
            r.logits.resize(t.size());
            for (std::size_t i = 0; i < t.size(); ++i) r.logits[i] = static_cast<double>(t[i]) * t.scale();
        },
        act);
    r.scores = softmax(r.logits);
    return r;
}

}  // namespace

void NetworkSpec::validate() const {
    if (input_shape.rank() != 3) throw std::invalid_argument("network input must be (C, H, W)");
    if (num_classes < 1) throw std::invalid_argument("network class count must be >= 1");
    if (layers.empty()) throw std::invalid_argument("network has no layers");
    ShapeState st{true, input_shape.dims()};
    for (std::size_t li = 0; li < layers.size(); ++li) {
        const Layer& layer = layers[li];
        if (const auto* conv = std::get_if<ConvLayer>(&layer)) {
            const auto& g = conv->geom;
            g.validate();
            if (!st.quantized) layer_error(li, "conv expects a quantized input");
            if (st.dims.size() != 3 || st.dims[0] != g.c_in || st.dims[1] != g.h_in || st.dims[2] != g.w_in)
                layer_error(li, "conv input extents do not match the previous layer");
            check_conv_weights(conv->weights, g);
            st = {false, {g.c_out, g.h_out(), g.w_out()}};
        } else if (std::holds_alternative<ReluLayer>(layer)) {
            // shape preserving
        } else if (const auto* pool = std::get_if<MaxPoolLayer>(&layer)) {
            if (pool->kernel < 1 || pool->stride < 1) layer_error(li, "maxpool kernel/stride must be >= 1");
            if (st.dims.size() != 3 || st.dims[1] < pool->kernel || st.dims[2] < pool->kernel)
                layer_error(li, "maxpool window larger than input");
            st.dims = {st.dims[0], (st.dims[1] - pool->kernel) / pool->stride + 1,
                       (st.dims[2] - pool->kernel) / pool->stride + 1};
        } else if (const auto* fc = std::get_if<FcLayer>(&layer)) {
            if (!st.quantized) layer_error(li, "fully-connected expects a quantized input");
            const int numel = std::accumulate(st.dims.begin(), st.dims.end(), 1, std::multiplies<>());
            if (numel != fc->in_features) layer_error(li, "fully-connected in_features does not match input");
            const Shape& ws = fc->weights.shape();
            if (ws.rank() != 2 || ws[0] != fc->out_features || ws[1] != fc->in_features)
                layer_error(li, "fully-connected weight shape mismatch");
            if (!fc->bias.empty() && static_cast<int>(fc->bias.size()) != fc->out_features)
                layer_error(li, "fully-connected bias length mismatch");
            st = {false, {fc->out_features, 1, 1}};
        } else if (const auto* q = std::get_if<QuantizeLayer>(&layer)) {
            if (st.quantized) layer_error(li, "quantize expects an accumulator input");
            if (!(q->scale > 0)) layer_error(li, "quantize scale must be positive");
            st.quantized = true;
        }
    }
    const int numel = std::accumulate(st.dims.begin(), st.dims.end(), 1, std::multiplies<>());
    if (numel != num_classes)
        throw std::invalid_argument("network output has " + std::to_string(numel) + " values but " +
                                    std::to_string(num_classes) + " classes are declared");
}

std::vector<std::size_t> NetworkSpec::conv_layer_indices() const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < layers.size(); ++i)
        if (std::holds_alternative<ConvLayer>(layers[i])) out.push_back(i);
    return out;
}

const ConvLayer& NetworkSpec::conv(std::size_t ordinal) const {
    const auto idx = conv_layer_indices();
    if (ordinal >= idx.size()) throw std::out_of_range("conv ordinal out of range");
    return std::get<ConvLayer>(layers[idx[ordinal]]);
}

InferenceResult forward(const NetworkSpec& net, const QTensor& input, const ConvHook& hook, Diagnostics* diag) {
    if (input.shape() != net.input_shape)
        throw std::invalid_argument("input shape " + input.shape().str() + " does not match network input " +
                                    net.input_shape.str());
    return finish(run_layers(net, 0, input, 0, hook, diag, nullptr));
}

GoldenRun golden_run(const NetworkSpec& net, const QTensor& input, Diagnostics* diag) {
    if (input.shape() != net.input_shape)
        throw std::invalid_argument("input shape " + input.shape().str() + " does not match network input " +
                                    net.input_shape.str());
    GoldenRun g;
    g.result = finish(run_layers(net, 0, input, 0, {}, diag, &g.convs));
    return g;
}

InferenceResult resume_from(const NetworkSpec& net, std::size_t conv_ordinal, const AccTensor& conv_output,
                            Diagnostics* diag) {
    const auto idx = net.conv_layer_indices();
    if (conv_ordinal >= idx.size()) throw std::out_of_range("resume_from: conv ordinal out of range");
    return finish(run_layers(net, idx[conv_ordinal] + 1, conv_output, conv_ordinal + 1, {}, diag, nullptr));
}

}  // namespace rrsa
