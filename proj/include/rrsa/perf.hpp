/*
 * Copyright 2026 The rrsa Authors.
 * SPDX-License-Identifier: Apache-2.0
 */

#ifndef RRSA_PERF_HPP
#define RRSA_PERF_HPP

#include <array>
#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "rrsa/array.hpp"

namespace rrsa {

/// A conv layer lowered to a (P x M) * (M x K) product.
struct LayerMatMul {
    long long p = 1;  // sliding windows
    long long m = 1;  // reduction length
    long long k = 1;  // output channels
};

/// Cycles of one tile step: M + R_eff + C_eff - 2, plus one correction
/// cycle in the redundant modes.
long long tile_latency(int n, ExecMode mode, long long m);

/// Total cycles of a lowered layer: tile steps over the effective size
/// times the tile latency. Throws when N does not support the mode.
long long mode_latency(const LayerMatMul& layer, int n, ExecMode mode);

struct NetworkLatency {
    long long cycles = 0;
    double normalized = 1.0;  // relative to every layer in PM
};

NetworkLatency network_latency(const std::vector<LayerMatMul>& layers, const std::vector<ExecMode>& mapping, int n);

/// Energy in mWh of `cycles` at `power_w` and `clock_mhz`.
double energy_mwh(long long cycles, double power_w, double clock_mhz);

/// Synthesis figures of one implementation option, used as energy defaults.
struct ImplementationParams {
    double area_mm2 = 0;
    double power_w = 0;
    double clock_mhz = 0;
};

/// Known figures for 48x48 and 132x132 arrays; std::nullopt otherwise.
std::optional<ImplementationParams> implementation_params(int n, DrgOption drg, TrgOption trg);
std::optional<ImplementationParams> baseline_params(int n);

/// Index into per-class AVF arrays.
enum class ErrorClass { Top1Class = 0, Top1Acc = 1, Top5Class = 2, Top5Acc = 3 };
inline constexpr std::array<const char*, 4> kErrorClassNames = {"top1_class", "top1_acc", "top5_class", "top5_acc"};

using AvfVector = std::array<double, 4>;

/// Measured per-layer AVF for the unprotected and the DRG mode. TRG is zero.
struct LayerAvf {
    std::optional<AvfVector> pm;
    std::optional<AvfVector> drg;
};

enum class AvfCombine {
    /// Layer weights fixed to each layer's share of the all-PM cycles.
    WorkWeighted,
    /// Layer weights equal to each layer's share of the mapping's cycles.
    ResidencyWeighted,
};

struct ExploreOptions {
    int n = 48;
    DrgOption drg = DrgOption::Zero;
    TrgOption trg = TrgOption::Three;
    std::vector<Mode> modes = {Mode::PM, Mode::DRG, Mode::TRG};
    std::size_t limit = 100000;  // exhaustive enumeration bound
    double power_w = 0.177;
    double clock_mhz = 357.0;
    AvfCombine combine = AvfCombine::WorkWeighted;
};

struct MappingPoint {
    std::vector<Mode> modes;
    long long latency_cycles = 0;
    double latency_normalized = 1.0;
    double energy_mwh = 0.0;
    AvfVector avf{};
    bool pareto = false;
};

class MissingAvfError : public std::invalid_argument {
public:
    explicit MissingAvfError(std::vector<std::string> cells);
    [[nodiscard]] const std::vector<std::string>& cells() const { return cells_; }

private:
    std::vector<std::string> cells_;
};

/// Network AVF of a mapping under the chosen combination rule.
AvfVector combine_avf(const std::vector<LayerMatMul>& layers, const std::vector<LayerAvf>& table,
                      const std::vector<Mode>& mapping, const ExploreOptions& opts);

/// Enumerates every mode-layer mapping (or a greedy per-layer sweep when
/// |modes|^L exceeds the limit) and flags the (Top1-class AVF, latency)
/// Pareto front.
std::vector<MappingPoint> explore(const std::vector<LayerMatMul>& layers, const std::vector<LayerAvf>& table,
                                  const ExploreOptions& opts);

/// Sets `pareto` on each point: not dominated in (avf[Top1Class], latency).
void mark_pareto(std::vector<MappingPoint>& points);

std::string mapping_label(const std::vector<Mode>& modes);

/// Lowered sizes of a square conv layer.
LayerMatMul conv_matmul(int c_in, int c_out, int h_in, int kernel, int stride, int padding);

/// Conv geometries of well-known networks at 224x224 input: "alexnet"
/// (5 conv layers) and "vgg11" (8 conv layers).
std::vector<LayerMatMul> reference_network(std::string_view name);

}  // namespace rrsa

#endif  // RRSA_PERF_HPP
