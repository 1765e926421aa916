/*
 * Copyright 2026 The rrsa Authors.
 * SPDX-License-Identifier: Apache-2.0
 */

#include "rrsa/sa_oracle.hpp"

#include <algorithm>
#include <ostream>
#include <stdexcept>
#include <string>

namespace rrsa {

CycleFault CycleFault::from(const TransientFault& f) {
    CycleFault c;
    c.target = f.target;
    c.p_row = f.p_row;
    c.p_col = f.p_col;
    c.bit = f.bit;
    c.kind = Kind::Transient;
    c.cycle = f.cycle;
    c.tile_a = f.tile_a;
    c.tile_w = f.tile_w;
    return c;
}

CycleFault CycleFault::from(const PermanentFault& f) {
    CycleFault c;
    c.target = f.target;
    c.p_row = f.p_row;
    c.p_col = f.p_col;
    c.bit = f.bit;
    c.kind = Kind::Permanent;
    c.stuck = f.stuck;
    return c;
}

CycleFault CycleFault::from(const FaultSpec& f) {
    return std::visit([](const auto& x) { return CycleFault::from(x); }, f);
}

namespace {

struct LaneReg {
    std::int8_t value = 0;
    bool valid = false;
    int slot = -1;
};

struct PeRegs {
    LaneReg in;
    LaneReg wt;
};

void check_faults(std::span<const CycleFault> faults, int n) {
    for (const auto& f : faults) {
        if (f.p_row < 0 || f.p_row >= n || f.p_col < 0 || f.p_col >= n)
            throw std::invalid_argument("cycle fault PE outside the array");
        if (f.bit < 0 || f.bit >= target_width(f.target))
            throw std::invalid_argument("cycle fault bit outside the target width");
        if (f.kind == CycleFault::Kind::Permanent && f.stuck != 0 && f.stuck != 1)
            throw std::invalid_argument("stuck-at value must be 0 or 1");
    }
}

class FaultSet {
public:
    FaultSet(std::span<const CycleFault> faults, int n) : faults_(faults), n_(n) {}

    [[nodiscard]] std::int64_t apply(std::int64_t v, FaultTarget target, int pe, int cycle) const {
        for (const auto& f : faults_) {
            if (f.target != target || f.p_row * n_ + f.p_col != pe) continue;
            const int width = target_width(target);
            if (f.kind == CycleFault::Kind::Transient) {
                if (f.cycle == cycle) v = flip_bit(v, f.bit, width);
            } else {
                v = force_bit(v, f.bit, f.stuck, width);
            }
        }
        return v;
    }

    /// Permanent forcing only (OREG after accumulation).
    [[nodiscard]] std::int64_t force(std::int64_t v, FaultTarget target, int pe) const {
        for (const auto& f : faults_)
            if (f.kind == CycleFault::Kind::Permanent && f.target == target && f.p_row * n_ + f.p_col == pe)
                v = force_bit(v, f.bit, f.stuck, target_width(target));
        return v;
    }

    [[nodiscard]] bool empty() const { return faults_.empty(); }

private:
    std::span<const CycleFault> faults_;
    int n_;
};

TileResult simulate_tile(const Geometry& geom, const Matrix<std::int8_t>& a, const Matrix<std::int8_t>& w,
                         std::span<const CycleFault> fault_list, std::span<const std::uint8_t> pad,
                         const SimOptions& opts, bool header) {
    const int n = geom.n();
    const EffectiveSize eff = geom.effective();
    const int rows = a.rows;
    const int cols = w.cols;
    const int depth = a.cols;
    if (depth < 1 || w.rows != depth) throw std::invalid_argument("tile reduction dimensions disagree or are empty");
    if (rows < 1 || cols < 1 || rows > eff.rows || cols > eff.cols)
        throw std::invalid_argument("tile " + std::to_string(rows) + "x" + std::to_string(cols) +
                                    " exceeds the effective array size " + std::to_string(eff.rows) + "x" +
                                    std::to_string(eff.cols));
    if (!pad.empty() && pad.size() != a.data.size()) throw std::invalid_argument("padding mask size mismatch");
    check_faults(fault_list, n);
    const FaultSet faults(fault_list, n);

    const std::size_t pes = static_cast<std::size_t>(n) * n;
    std::vector<PeRegs> cur(pes);
    std::vector<PeRegs> next(pes);
    std::vector<std::int32_t> oreg(pes, 0);
    for (std::size_t p = 0; p < pes; ++p)
        oreg[p] = static_cast<std::int32_t>(faults.force(0, FaultTarget::Oreg, static_cast<int>(p)));

    const bool redundant = geom.copies() > 1;
    const int last_pe = geom.physical(eff.rows - 1, eff.cols - 1, 0);
    if (opts.trace && header) *opts.trace << "cycle,row,col,ireg,wreg,oreg\n";

    int cycle = 0;
    int compute_done = -1;
    for (;; ++cycle) {
        // Latch operands from upstream lane registers (or the edge feeders).
        for (int r = 0; r < n; ++r) {
            for (int c = 0; c < n; ++c) {
                const int p = r * n + c;
                const PeAssignment& pa = geom.at(r, c);
                PeRegs& nx = next[p];
                if (!pa.computes()) {
                    nx = PeRegs{};
                } else {
                    if (pa.lcol == 0) {
                        const int slot = cycle - pa.lrow;
                        nx.in = LaneReg{};
                        if (slot >= 0 && slot < depth) {
                            nx.in.slot = slot;
                            if (pa.lrow < rows) {
                                nx.in.value = a(pa.lrow, slot);
                                nx.in.valid = pad.empty() || !pad[static_cast<std::size_t>(pa.lrow) * depth + slot];
                            }
                        }
                    } else {
                        const auto& src = cur[geom.physical(pa.lrow, pa.lcol - 1, pa.copy)];
                        nx.in = src.in;
                    }
                    if (pa.lrow == 0) {
                        const int slot = cycle - pa.lcol;
                        nx.wt = LaneReg{};
                        if (slot >= 0 && slot < depth) {
                            nx.wt.slot = slot;
                            if (pa.lcol < cols) {
                                nx.wt.value = w(slot, pa.lcol);
                                nx.wt.valid = true;
                            }
                        }
                    } else {
                        const auto& src = cur[geom.physical(pa.lrow - 1, pa.lcol, pa.copy)];
                        nx.wt = src.wt;
                    }
                }
                if (!faults.empty()) {
                    nx.in.value = static_cast<std::int8_t>(faults.apply(nx.in.value, FaultTarget::Ireg, p, cycle));
                    nx.wt.value = static_cast<std::int8_t>(faults.apply(nx.wt.value, FaultTarget::Wreg, p, cycle));
                }
            }
        }
        cur.swap(next);

        // Accumulate.
        for (int r = 0; r < n; ++r) {
            for (int c = 0; c < n; ++c) {
                const int p = r * n + c;
                const PeAssignment& pa = geom.at(r, c);
                std::int32_t acc = oreg[p];
                if (!faults.empty()) acc = static_cast<std::int32_t>(faults.apply(acc, FaultTarget::Oreg, p, cycle));
                const PeRegs& regs = cur[p];
                const bool live = pa.computes() && regs.in.valid && regs.wt.valid;
                if (live) {
                    if (regs.in.slot != regs.wt.slot) throw std::logic_error("operand skew mismatch in PE");
                    std::int32_t prod = static_cast<std::int32_t>(regs.in.value) * regs.wt.value;
                    if (!faults.empty()) prod = static_cast<std::int32_t>(faults.apply(prod, FaultTarget::Mult, p, cycle));
                    acc = wrap_add(acc, prod);
                    if (!faults.empty()) acc = static_cast<std::int32_t>(faults.force(acc, FaultTarget::Oreg, p));
                }
                oreg[p] = acc;
                if (opts.trace || opts.observer) {
                    const PeView view{cycle, r, c, regs.in.value, regs.wt.value, acc,
                                      pa.computes() ? regs.in.slot : -1, live};
                    if (opts.observer) opts.observer(view);
                    if (opts.trace)
                        *opts.trace << cycle << ',' << r << ',' << c << ',' << int(view.ireg) << ','
                                    << int(view.wreg) << ',' << view.oreg << '\n';
                }
            }
        }

        if (compute_done < 0 && cur[last_pe].in.slot == depth - 1) compute_done = cycle;
        // Redundant modes hold the partial sums one more cycle for correction.
        if (compute_done >= 0 && cycle == compute_done + (redundant ? 1 : 0)) break;
    }

    TileResult result{Matrix<std::int32_t>(rows, cols), cycle + 1};
    for (int r = 0; r < rows; ++r) {
        for (int c = 0; c < cols; ++c) {
            const auto copy = [&](int k) { return oreg[geom.physical(r, c, k)]; };
            std::int32_t v = 0;
            switch (geom.mode()) {
                case ExecMode::PM: v = copy(0); break;
                case ExecMode::DRG0: v = correct_drg0(copy(0), copy(1)); break;
                case ExecMode::DRGA: v = correct_drga(copy(0), copy(1)); break;
                case ExecMode::TRG3:
                case ExecMode::TRG4: v = correct_trg(copy(0), copy(1), copy(2)); break;
            }
            result.out(r, c) = v;
        }
    }
    return result;
}

}  // namespace

SystolicArray::SystolicArray(const ArrayConfig& cfg) : geom_((cfg.validate(), cfg.n), cfg.exec_mode()) {}

SystolicArray::SystolicArray(int n, ExecMode mode) : geom_(n, mode) {}

TileResult SystolicArray::run_tile(const Matrix<std::int8_t>& a, const Matrix<std::int8_t>& w,
                                   std::span<const CycleFault> faults, std::span<const std::uint8_t> a_padding,
                                   const SimOptions& opts) const {
    return simulate_tile(geom_, a, w, faults, a_padding, opts, true);
}

MatmulResult SystolicArray::run_matmul(const Matrix<std::int8_t>& a, const Matrix<std::int8_t>& w,
                                       std::span<const CycleFault> faults, std::span<const std::uint8_t> a_padding,
                                       const SimOptions& opts) const {
    if (a.cols != w.rows) throw std::invalid_argument("run_matmul: inner dimensions disagree");
    if (!a_padding.empty() && a_padding.size() != a.data.size())
        throw std::invalid_argument("run_matmul: padding mask size mismatch");
    const EffectiveSize eff = geom_.effective();
    const int p = a.rows;
    const int k = w.cols;
    const int m = a.cols;
    const int t_a_count = (p + eff.rows - 1) / eff.rows;
    const int t_w_count = (k + eff.cols - 1) / eff.cols;

    MatmulResult res{Matrix<std::int32_t>(p, k), 0, {}};
    std::vector<CycleFault> tile_faults;
    std::vector<std::uint8_t> tile_pad;
    bool header = true;
    for (int tw = 0; tw < t_w_count; ++tw) {
        const int k0 = tw * eff.cols;
        const int kt = std::min(eff.cols, k - k0);
        Matrix<std::int8_t> wt(m, kt);
        for (int r = 0; r < m; ++r)
            for (int c = 0; c < kt; ++c) wt(r, c) = w(r, k0 + c);
        for (int ta = 0; ta < t_a_count; ++ta) {
            const int p0 = ta * eff.rows;
            const int pt = std::min(eff.rows, p - p0);
            Matrix<std::int8_t> at(pt, m);
            for (int r = 0; r < pt; ++r)
                for (int c = 0; c < m; ++c) at(r, c) = a(p0 + r, c);
            tile_pad.clear();
            if (!a_padding.empty())
                tile_pad.assign(a_padding.begin() + static_cast<std::ptrdiff_t>(p0) * m,
                                a_padding.begin() + static_cast<std::ptrdiff_t>(p0 + pt) * m);
            tile_faults.clear();
            for (const auto& f : faults)
                if (f.kind == CycleFault::Kind::Permanent || (f.tile_a == ta + 1 && f.tile_w == tw + 1))
                    tile_faults.push_back(f);
            const TileResult tr = simulate_tile(geom_, at, wt, tile_faults, tile_pad, opts, header);
            header = false;
            for (int r = 0; r < pt; ++r)
                for (int c = 0; c < kt; ++c) res.out(p0 + r, k0 + c) = tr.out(r, c);
            res.total_cycles += tr.cycles;
            res.tiles.push_back({ta + 1, tw + 1, tr.cycles});
        }
    }
    return res;
}

}  // namespace rrsa
