/*
 * Copyright 2026 The rrsa Authors.
 * SPDX-License-Identifier: Apache-2.0
 */

#ifndef RRSA_PROPAGATION_HPP
#define RRSA_PROPAGATION_HPP

#include <optional>
#include <string_view>

#include "rrsa/array.hpp"
#include "rrsa/fault_model.hpp"
#include "rrsa/patch.hpp"
#include "rrsa/qnn.hpp"

namespace rrsa {

/// Deliberate formula defects used to check that the equivalence sweep
/// detects index-math errors.
enum class Mutation { None, ChannelOffByOne, WindowOffByOne, SlotOffByOne };

std::string_view to_string(Mutation m);
std::optional<Mutation> parse_mutation(std::string_view s);

/// Where a conv layer lands on the array: lowered sizes and tile counts
/// over the mode's effective size.
class MappingContext {
public:
    MappingContext(const ConvLayerSpec& layer, int n, ExecMode mode, Mutation mutation = Mutation::None);

    [[nodiscard]] const ConvLayerSpec& layer() const { return layer_; }
    [[nodiscard]] const Geometry& geometry() const { return geom_; }
    [[nodiscard]] int n() const { return geom_.n(); }
    [[nodiscard]] ExecMode mode() const { return geom_.mode(); }
    [[nodiscard]] EffectiveSize effective() const { return geom_.effective(); }
    [[nodiscard]] int windows() const { return p_; }      // P = H_out * W_out
    [[nodiscard]] int channels() const { return k_; }     // K = C_out
    [[nodiscard]] int reduction() const { return m_; }    // M = H_k * W_k * C_in
    [[nodiscard]] int tiles_a() const { return t_a_; }
    [[nodiscard]] int tiles_w() const { return t_w_; }
    /// Cycles of one tile step in this mode.
    [[nodiscard]] int tile_cycles() const;
    [[nodiscard]] Mutation mutation() const { return mutation_; }

private:
    ConvLayerSpec layer_;
    Geometry geom_;
    int p_;
    int k_;
    int m_;
    int t_a_;
    int t_w_;
    Mutation mutation_;
};

/// The operands of one conv layer as seen by the array.
struct LayerOperands {
    const QTensor& input;    // (C_in, H_in, W_in)
    const QTensor& weights;  // (C_out, C_in, H_k, W_k)
    /// Fault-free layer output (bias included). Needed only by the DRG
    /// residual mapping; recomputed from the operands when absent.
    const AccTensor* golden = nullptr;
};

/// Kernel position of the operand a PE holds at a cycle.
struct KernelIndex {
    int channel = 0;  // input channel c
    int i = 0;
    int j = 0;
    int slot = 0;  // lowered reduction index (c * H_k + i) * W_k + j
};

/// Kernel position of the operands held by the PE at logical (row, col) in
/// the 0-based tile cycle `cycle`; std::nullopt outside the live window.
std::optional<KernelIndex> faulty_weight_index(int cycle, int row, int col, const ConvLayerSpec& layer);

/// Bullet pattern: one window, a run of channels.
ErrorPatch map_ireg_transient(const TransientFault& f, const MappingContext& ctx, const LayerOperands& ops);
/// Line pattern: one channel, a run of windows.
ErrorPatch map_wreg_transient(const TransientFault& f, const MappingContext& ctx, const LayerOperands& ops);
/// Point pattern for OREG and MULT faults.
ErrorPatch map_point_transient(const TransientFault& f, const MappingContext& ctx, const LayerOperands& ops);
/// Union of per-step patterns over every tile step.
ErrorPatch map_permanent(const PermanentFault& f, const MappingContext& ctx, const LayerOperands& ops);

/// Unprotected patch of any transient fault (dispatch on target).
ErrorPatch map_transient(const TransientFault& f, const MappingContext& ctx, const LayerOperands& ops);

/// Residual patch after the group correction of a DRG or TRG mode.
/// Throws std::invalid_argument for PM.
ErrorPatch map_with_redundancy(const FaultSpec& f, const MappingContext& ctx, const LayerOperands& ops);

/// Mode-aware entry point: the patch to add to the fault-free layer output.
ErrorPatch propagate(const FaultSpec& f, const MappingContext& ctx, const LayerOperands& ops);

}  // namespace rrsa

#endif  // RRSA_PROPAGATION_HPP
