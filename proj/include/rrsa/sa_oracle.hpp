/*
 * Copyright 2026 The rrsa Authors.
 * SPDX-License-Identifier: Apache-2.0
 */

#ifndef RRSA_SA_ORACLE_HPP
#define RRSA_SA_ORACLE_HPP

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <vector>

#include "rrsa/array.hpp"
#include "rrsa/fault_model.hpp"
#include "rrsa/tensor.hpp"

namespace rrsa {

/// A fault forced onto one PE storage element during simulation.
struct CycleFault {
    enum class Kind { Transient, Permanent };

    FaultTarget target = FaultTarget::Oreg;
    int p_row = 0;
    int p_col = 0;
    int bit = 0;
    Kind kind = Kind::Transient;
    int cycle = 0;  // transient only, 0-based within the tile
    int stuck = 1;  // permanent only
    // 1-based tile step a transient fault belongs to; run_matmul ignores
    // transient faults whose step does not match. run_tile ignores both.
    int tile_a = 1;
    int tile_w = 1;

    static CycleFault from(const TransientFault& f);
    static CycleFault from(const PermanentFault& f);
    static CycleFault from(const FaultSpec& f);
};

/// Snapshot of one PE after the MAC phase of a cycle.
struct PeView {
    int cycle = 0;
    int p_row = 0;
    int p_col = 0;
    std::int8_t ireg = 0;
    std::int8_t wreg = 0;
    std::int32_t oreg = 0;
    int slot = -1;  // reduction index of the operands held, -1 for a bubble
    bool live = false;
};

struct SimOptions {
    /// When set, receives "cycle,row,col,ireg,wreg,oreg" lines (with header).
    std::ostream* trace = nullptr;
    std::function<void(const PeView&)> observer;
};

struct TileResult {
    Matrix<std::int32_t> out;
    long long cycles = 0;
};

struct TileStep {
    int tile_a = 1;  // 1-based
    int tile_w = 1;
    long long cycles = 0;
};

struct MatmulResult {
    Matrix<std::int32_t> out;
    long long total_cycles = 0;
    std::vector<TileStep> tiles;
};

/// Register-level model of an output-stationary N x N systolic array.
///
/// Activations enter logical row r skewed by r cycles and move one logical
/// column per cycle; weights enter logical column c skewed by c cycles and
/// move down. Each cycle first latches operands from the upstream lane
/// registers, then applies OREG faults and accumulates the product.
/// Redundant modes spend one extra cycle applying the group correction to
/// the copies' partial sums before they leave the array.
class SystolicArray {
public:
    explicit SystolicArray(const ArrayConfig& cfg);
    SystolicArray(int n, ExecMode mode);

    [[nodiscard]] const Geometry& geometry() const { return geom_; }

    /// One tile. `a` is P_t x M, `w` is M x K_t with P_t, K_t within the
    /// effective size. `a_padding`, when non-empty, marks activation slots
    /// that read convolution padding; those never reach a multiplier.
    TileResult run_tile(const Matrix<std::int8_t>& a, const Matrix<std::int8_t>& w,
                        std::span<const CycleFault> faults = {}, std::span<const std::uint8_t> a_padding = {},
                        const SimOptions& opts = {}) const;

    /// Full product in weight-tile-major order.
    MatmulResult run_matmul(const Matrix<std::int8_t>& a, const Matrix<std::int8_t>& w,
                            std::span<const CycleFault> faults = {}, std::span<const std::uint8_t> a_padding = {},
                            const SimOptions& opts = {}) const;

private:
    Geometry geom_;
};

}  // namespace rrsa

#endif  // RRSA_SA_ORACLE_HPP
