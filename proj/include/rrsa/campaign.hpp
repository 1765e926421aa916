/*
 * Copyright 2026 The rrsa Authors.
 * SPDX-License-Identifier: Apache-2.0
 */

#ifndef RRSA_CAMPAIGN_HPP
#define RRSA_CAMPAIGN_HPP

#include <array>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "rrsa/array.hpp"
#include "rrsa/fault_model.hpp"
#include "rrsa/perf.hpp"
#include "rrsa/propagation.hpp"
#include "rrsa/qnn.hpp"

namespace rrsa {

enum class FaultKind { Transient, StuckAt0, StuckAt1 };

std::string_view to_string(FaultKind k);
std::optional<FaultKind> parse_fault_kind(std::string_view s);

/// Two-sided standard normal quantile for a confidence level in (0, 1).
double z_value(double confidence);

/// Statistical fault-injection sample size with p = 0.5, rounded up.
/// `population` defaults to an unbounded fault space.
std::size_t sample_size(double confidence, double margin,
                        double population = std::numeric_limits<double>::infinity());

struct Interval {
    double low = 0;
    double high = 0;
};

/// Wilson score interval for `errors` out of `samples`.
Interval wilson_interval(std::size_t errors, std::size_t samples, double confidence);

/// Mode-independent fault draw: target, bit and stuck value plus unit
/// uniforms that each mode's context scales to its own tile counts and
/// cycle range. Realizing one draw in several modes gives matched samples.
struct FaultDraw {
    FaultTarget target = FaultTarget::Ireg;
    int bit = 0;
    int stuck = 1;
    double u_pe = 0;
    double u_cycle = 0;
    double u_tile_a = 0;
    double u_tile_w = 0;
};

/// Counter-based seed for sample `index` of stream `stream`.
std::uint64_t sample_seed(std::uint64_t seed, std::uint64_t stream, std::uint64_t index);

/// Deterministic draw from a 64-bit seed.
FaultDraw draw_fault(std::uint64_t seed, FaultKind kind);

/// PE uniform over the computing PEs of the mode (every PE except the TRG4
/// voters). Transient faults also pick a tile step and a cycle uniform over
/// the M cycles in which that PE holds live operands; a PE outside a
/// partial tile draws from the whole tile latency instead.
FaultSpec realize(const FaultDraw& d, const MappingContext& ctx, FaultKind kind);
PermanentFault realize_permanent(const FaultDraw& d, const Geometry& geom, FaultKind kind);

struct ErrorClasses {
    bool top1_class = false;
    bool top1_acc = false;
    bool top5_class = false;
    bool top5_acc = false;

    [[nodiscard]] std::array<bool, 4> flags() const { return {top1_class, top1_acc, top5_class, top5_acc}; }
    [[nodiscard]] bool any() const { return top5_acc; }
};

/// Compares faulty against golden class scores. Scores are compared for
/// exact equality; the top-k ranking breaks ties towards the lower index.
ErrorClasses classify(std::span<const double> golden, std::span<const double> faulty);

struct CampaignConfig {
    std::vector<std::size_t> layers;  // conv ordinals; empty selects all
    std::vector<ExecMode> modes = {ExecMode::PM};
    FaultKind kind = FaultKind::Transient;
    std::optional<std::size_t> samples;  // per cell; derived from confidence/margin when absent
    double confidence = 0.95;
    double margin = 0.05;
    std::uint64_t seed = 42;
    int n = 12;
    unsigned threads = 1;

    void validate() const;
    [[nodiscard]] std::size_t sample_count() const;
};

struct AvfCell {
    std::optional<std::size_t> layer;  // conv ordinal; empty for whole-network cells
    std::string layer_name;
    ExecMode mode = ExecMode::PM;
    std::size_t samples = 0;
    std::size_t masked = 0;  // faults whose patch was empty
    std::array<std::size_t, 4> errors{};
    AvfVector avf{};
    std::array<Interval, 4> ci{};
};

struct AvfReport {
    int n = 0;
    FaultKind kind = FaultKind::Transient;
    std::uint64_t seed = 0;
    double confidence = 0.95;
    std::size_t inputs = 0;
    std::size_t accumulator_overflows = 0;
    std::vector<AvfCell> cells;

    [[nodiscard]] const AvfCell& cell(std::optional<std::size_t> layer, ExecMode mode) const;
};

/// Layer-wise transient campaign, or a whole-network campaign for stuck-at
/// faults in which one fault corrupts every conv layer of the forward pass.
/// Results do not depend on the thread count.
AvfReport run_campaign(const NetworkSpec& net, std::span<const QTensor> inputs, const CampaignConfig& cfg);

struct MappingAvf {
    std::vector<ExecMode> mapping;
    AvfCell cell;  // layer empty; mode holds the first layer's mode
};

/// Transient campaign on a whole mode-layer mapping: each sample lands in a
/// conv layer with probability proportional to that layer's cycles.
MappingAvf run_mapping_campaign(const NetworkSpec& net, std::span<const QTensor> inputs,
                             const std::vector<ExecMode>& mapping, const CampaignConfig& cfg);

/// Lowered matmul sizes of each conv layer.
std::vector<LayerMatMul> lowered_layers(const NetworkSpec& net);

}  // namespace rrsa

#endif  // RRSA_CAMPAIGN_HPP
