/*
 * Copyright 2026 The rrsa Authors.
 * SPDX-License-Identifier: Apache-2.0
 */

#include "rrsa/propagation.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>
#include <type_traits>
#include <vector>

#include "rrsa/perf.hpp"

namespace rrsa {

std::string_view to_string(Mutation m) {
    switch (m) {
        case Mutation::None: return "none";
        case Mutation::ChannelOffByOne: return "channel";
        case Mutation::WindowOffByOne: return "window";
        case Mutation::SlotOffByOne: return "slot";
    }
    return "?";
}

std::optional<Mutation> parse_mutation(std::string_view s) {
    for (auto m : {Mutation::None, Mutation::ChannelOffByOne, Mutation::WindowOffByOne, Mutation::SlotOffByOne})
        if (s == to_string(m)) return m;
    return std::nullopt;
}

MappingContext::MappingContext(const ConvLayerSpec& layer, int n, ExecMode mode, Mutation mutation)
    : layer_(layer), geom_(n, mode), mutation_(mutation) {
    layer_.validate();
    p_ = layer_.windows();
    k_ = layer_.c_out;
    m_ = layer_.reduction();
    const EffectiveSize eff = geom_.effective();
    t_a_ = (p_ + eff.rows - 1) / eff.rows;
    t_w_ = (k_ + eff.cols - 1) / eff.cols;
}

int MappingContext::tile_cycles() const {
    return static_cast<int>(tile_latency(n(), mode(), m_));
}

std::optional<KernelIndex> faulty_weight_index(int cycle, int row, int col, const ConvLayerSpec& layer) {
    const int offset = cycle - row - col;
    if (offset < 0 || offset >= layer.reduction()) return std::nullopt;
    const int plane = layer.h_k * layer.w_k;
    const int k = offset % plane;
    return KernelIndex{offset / plane, k / layer.w_k, k % layer.w_k, offset};
}

namespace {

/// Read access to the lowered operands without materialising im2col.
class OperandView {
public:
    OperandView(const MappingContext& ctx, const LayerOperands& ops)
        : g_(ctx.layer()), ops_(ops), w_out_(g_.w_out()), plane_(g_.h_k * g_.w_k), m_(ctx.reduction()) {
        const Shape& xs = ops.input.shape();
        if (xs.rank() != 3 || xs[0] != g_.c_in || xs[1] != g_.h_in || xs[2] != g_.w_in)
            throw std::invalid_argument("propagation: input shape does not match the layer");
        const Shape& ws = ops.weights.shape();
        if (ws.rank() != 4 || ws[0] != g_.c_out || ws[1] != g_.c_in || ws[2] != g_.h_k || ws[3] != g_.w_k)
            throw std::invalid_argument("propagation: weight shape does not match the layer");
        if (ops.golden) {
            const Shape& gs = ops.golden->shape();
            if (gs.rank() != 3 || gs[0] != g_.c_out || gs[1] != g_.h_out() || gs[2] != g_.w_out())
                throw std::invalid_argument("propagation: golden output shape does not match the layer");
        }
    }

    /// Activation in lowered slot (window, slot); std::nullopt for padding.
    [[nodiscard]] std::optional<std::int32_t> act(int window, int slot) const {
        const int u = window / w_out_;
        const int v = window % w_out_;
        const int c = slot / plane_;
        const int k = slot % plane_;
        const int h = u * g_.stride - g_.padding + k / g_.w_k;
        const int w = v * g_.stride - g_.padding + k % g_.w_k;
        if (h < 0 || h >= g_.h_in || w < 0 || w >= g_.w_in) return std::nullopt;
        return ops_.input.at(c, h, w);
    }

    [[nodiscard]] std::int32_t weight(int channel, int slot) const {
        return ops_.weights[static_cast<std::size_t>(channel) * m_ + slot];
    }

    /// Fault-free accumulator content (bias excluded) of (channel, window).
    [[nodiscard]] std::int32_t sum(int channel, int window) const {
        if (ops_.golden)
            return wrap_sub(ops_.golden->at(channel, window / w_out_, window % w_out_), g_.bias_at(channel));
        std::int32_t acc = 0;
        for (int s = 0; s < m_; ++s)
            if (auto x = act(window, s)) acc = wrap_add(acc, *x * weight(channel, s));
        return acc;
    }

    [[nodiscard]] int reduction() const { return m_; }

    void push(ErrorPatch& patch, int channel, int window, std::int64_t error) const {
        const std::int32_t e = wrap32(error);
        if (e != 0) patch.entries.push_back({channel, window / w_out_, window % w_out_, e});
    }

private:
    const ConvLayerSpec& g_;
    const LayerOperands& ops_;
    int w_out_;
    int plane_;
    int m_;
};

/// Logical placement of the faulty PE plus the affected base indices.
struct Placement {
    int lrow = 0;
    int lcol = 0;
    int window = 0;   // base sliding window of the step
    int channel = 0;  // base output channel of the step
    int window_end = 0;
    int channel_end = 0;
};

int window_shift(const MappingContext& ctx) { return ctx.mutation() == Mutation::WindowOffByOne ? 1 : 0; }
int channel_shift(const MappingContext& ctx) { return ctx.mutation() == Mutation::ChannelOffByOne ? 1 : 0; }
int slot_shift(const MappingContext& ctx) { return ctx.mutation() == Mutation::SlotOffByOne ? 1 : 0; }

void check_pe(const MappingContext& ctx, int p_row, int p_col, int bit, FaultTarget target) {
    if (p_row < 0 || p_row >= ctx.n() || p_col < 0 || p_col >= ctx.n())
        throw std::invalid_argument("fault PE (" + std::to_string(p_row) + "," + std::to_string(p_col) +
                                    ") outside the array");
    if (bit < 0 || bit >= target_width(target)) throw std::invalid_argument("fault bit outside the target width");
}

/// Base indices of step (tile_a, tile_w), both 0-based here.
Placement place(const MappingContext& ctx, const PeAssignment& pa, int ta, int tw) {
    const EffectiveSize eff = ctx.effective();
    Placement p;
    p.lrow = pa.lrow;
    p.lcol = pa.lcol;
    p.window = ta * eff.rows + pa.lrow + window_shift(ctx);
    p.channel = tw * eff.cols + pa.lcol + channel_shift(ctx);
    p.window_end = std::min((ta + 1) * eff.rows, ctx.windows());
    p.channel_end = std::min((tw + 1) * eff.cols, ctx.channels());
    return p;
}

const PeAssignment* computing_pe(const MappingContext& ctx, int p_row, int p_col) {
    const PeAssignment& pa = ctx.geometry().at(p_row, p_col);
    return pa.computes() ? &pa : nullptr;
}

std::optional<Placement> transient_placement(const TransientFault& f, const MappingContext& ctx) {
    check_pe(ctx, f.p_row, f.p_col, f.bit, f.target);
    if (f.tile_a < 1 || f.tile_a > ctx.tiles_a() || f.tile_w < 1 || f.tile_w > ctx.tiles_w())
        throw std::invalid_argument("fault tile step (" + std::to_string(f.tile_a) + "," + std::to_string(f.tile_w) +
                                    ") outside (" + std::to_string(ctx.tiles_a()) + "," +
                                    std::to_string(ctx.tiles_w()) + ")");
    const PeAssignment* pa = computing_pe(ctx, f.p_row, f.p_col);
    if (!pa) return std::nullopt;
    return place(ctx, *pa, f.tile_a - 1, f.tile_w - 1);
}

std::optional<KernelIndex> live_slot(const TransientFault& f, const Placement& p, const MappingContext& ctx) {
    return faulty_weight_index(f.cycle + slot_shift(ctx), p.lrow, p.lcol, ctx.layer());
}

void finish(ErrorPatch& patch) { patch.classify_pattern(); }

}  // namespace

ErrorPatch map_ireg_transient(const TransientFault& f, const MappingContext& ctx, const LayerOperands& ops) {
    if (f.target != FaultTarget::Ireg) throw std::invalid_argument("map_ireg_transient: not an IREG fault");
    const OperandView view(ctx, ops);
    ErrorPatch patch;
    const auto p = transient_placement(f, ctx);
    if (!p) return patch;
    const auto idx = live_slot(f, *p, ctx);
    if (!idx || p->window >= p->window_end) return patch;
    const auto x = view.act(p->window, idx->slot);
    if (!x) return patch;  // padding never reaches a multiplier
    const std::int64_t eps = error_term_transient(*x, f.bit, 8).epsilon;
    for (int ch = p->channel; ch < p->channel_end; ++ch) view.push(patch, ch, p->window, view.weight(ch, idx->slot) * eps);
    finish(patch);
    return patch;
}

ErrorPatch map_wreg_transient(const TransientFault& f, const MappingContext& ctx, const LayerOperands& ops) {
    if (f.target != FaultTarget::Wreg) throw std::invalid_argument("map_wreg_transient: not a WREG fault");
    const OperandView view(ctx, ops);
    ErrorPatch patch;
    const auto p = transient_placement(f, ctx);
    if (!p) return patch;
    const auto idx = live_slot(f, *p, ctx);
    if (!idx || p->channel >= p->channel_end) return patch;
    const std::int64_t eps = error_term_transient(view.weight(p->channel, idx->slot), f.bit, 8).epsilon;
    for (int win = p->window; win < p->window_end; ++win)
        if (const auto x = view.act(win, idx->slot)) view.push(patch, p->channel, win, eps * *x);
    finish(patch);
    return patch;
}

ErrorPatch map_point_transient(const TransientFault& f, const MappingContext& ctx, const LayerOperands& ops) {
    if (f.target != FaultTarget::Oreg && f.target != FaultTarget::Mult)
        throw std::invalid_argument("map_point_transient: not an OREG or MULT fault");
    const OperandView view(ctx, ops);
    ErrorPatch patch;
    const auto p = transient_placement(f, ctx);
    if (!p || p->window >= p->window_end || p->channel >= p->channel_end) return patch;

    if (f.target == FaultTarget::Mult) {
        const auto idx = live_slot(f, *p, ctx);
        if (!idx) return patch;
        const auto x = view.act(p->window, idx->slot);
        if (!x) return patch;
        const std::int32_t product = *x * view.weight(p->channel, idx->slot);
        view.push(patch, p->channel, p->window, error_term_transient(product, f.bit, 32).epsilon);
    } else {
        if (f.cycle < 0 || f.cycle >= ctx.tile_cycles()) return patch;
        // The flip hits the partial sum accumulated in the cycles before `cycle`.
        const int done = std::clamp(f.cycle + slot_shift(ctx) - p->lrow - p->lcol, 0, view.reduction());
        std::int32_t partial = 0;
        for (int s = 0; s < done; ++s)
            if (const auto x = view.act(p->window, s)) partial = wrap_add(partial, *x * view.weight(p->channel, s));
        view.push(patch, p->channel, p->window, error_term_transient(partial, f.bit, 32).epsilon);
    }
    finish(patch);
    return patch;
}

ErrorPatch map_transient(const TransientFault& f, const MappingContext& ctx, const LayerOperands& ops) {
    switch (f.target) {
        case FaultTarget::Ireg: return map_ireg_transient(f, ctx, ops);
        case FaultTarget::Wreg: return map_wreg_transient(f, ctx, ops);
        default: return map_point_transient(f, ctx, ops);
    }
}

ErrorPatch map_permanent(const PermanentFault& f, const MappingContext& ctx, const LayerOperands& ops) {
    check_pe(ctx, f.p_row, f.p_col, f.bit, f.target);
    if (f.stuck != 0 && f.stuck != 1) throw std::invalid_argument("stuck-at value must be 0 or 1");
    const OperandView view(ctx, ops);
    ErrorPatch patch;
    const PeAssignment* pa = computing_pe(ctx, f.p_row, f.p_col);
    if (!pa) return patch;
    const int m = view.reduction();
    std::vector<std::int64_t> eps(m);

    switch (f.target) {
        case FaultTarget::Ireg:
            // Every window the row streams gets its own corrupted activations;
            // each channel of every weight step accumulates them.
            for (int ta = 0; ta < ctx.tiles_a(); ++ta) {
                const Placement base = place(ctx, *pa, ta, 0);
                if (base.window >= base.window_end) continue;
                bool any = false;
                for (int s = 0; s < m; ++s) {
                    const auto x = view.act(base.window, s);
                    eps[s] = x ? error_term_permanent(*x, f.bit, f.stuck, 8).epsilon : 0;
                    any = any || eps[s] != 0;
                }
                if (!any) continue;
                for (int tw = 0; tw < ctx.tiles_w(); ++tw) {
                    const Placement p = place(ctx, *pa, ta, tw);
                    for (int ch = p.channel; ch < p.channel_end; ++ch) {
                        std::int64_t e = 0;
                        for (int s = 0; s < m; ++s) e += view.weight(ch, s) * eps[s];
                        view.push(patch, ch, p.window, e);
                    }
                }
            }
            break;
        case FaultTarget::Wreg:
            for (int tw = 0; tw < ctx.tiles_w(); ++tw) {
                const Placement base = place(ctx, *pa, 0, tw);
                if (base.channel >= base.channel_end) continue;
                bool any = false;
                for (int s = 0; s < m; ++s) {
                    eps[s] = error_term_permanent(view.weight(base.channel, s), f.bit, f.stuck, 8).epsilon;
                    any = any || eps[s] != 0;
                }
                if (!any) continue;
                for (int ta = 0; ta < ctx.tiles_a(); ++ta) {
                    const Placement p = place(ctx, *pa, ta, tw);
                    for (int win = p.window; win < p.window_end; ++win) {
                        std::int64_t e = 0;
                        for (int s = 0; s < m; ++s)
                            if (const auto x = view.act(win, s)) e += eps[s] * *x;
                        view.push(patch, p.channel, win, e);
                    }
                }
            }
            break;
        case FaultTarget::Mult:
            for (int tw = 0; tw < ctx.tiles_w(); ++tw)
                for (int ta = 0; ta < ctx.tiles_a(); ++ta) {
                    const Placement p = place(ctx, *pa, ta, tw);
                    if (p.window >= p.window_end || p.channel >= p.channel_end) continue;
                    std::int64_t e = 0;
                    for (int s = 0; s < m; ++s)
                        if (const auto x = view.act(p.window, s))
                            e += error_term_permanent(*x * view.weight(p.channel, s), f.bit, f.stuck, 32).epsilon;
                    view.push(patch, p.channel, p.window, e);
                }
            break;
        case FaultTarget::Oreg:
            // A stuck accumulator bit disturbs carries, so the partial sum is
            // replayed through the forced register.
            for (int tw = 0; tw < ctx.tiles_w(); ++tw)
                for (int ta = 0; ta < ctx.tiles_a(); ++ta) {
                    const Placement p = place(ctx, *pa, ta, tw);
                    if (p.window >= p.window_end || p.channel >= p.channel_end) continue;
                    std::int32_t faulty = static_cast<std::int32_t>(force_bit(0, f.bit, f.stuck, 32));
                    std::int32_t clean = 0;
                    for (int s = 0; s < m; ++s) {
                        const auto x = view.act(p.window, s);
                        if (!x) continue;
                        const std::int32_t prod = *x * view.weight(p.channel, s);
                        clean = wrap_add(clean, prod);
                        faulty = static_cast<std::int32_t>(force_bit(wrap_add(faulty, prod), f.bit, f.stuck, 32));
                    }
                    view.push(patch, p.channel, p.window, wrap_sub(faulty, clean));
                }
            break;
    }
    finish(patch);
    return patch;
}

ErrorPatch map_with_redundancy(const FaultSpec& f, const MappingContext& ctx, const LayerOperands& ops) {
    const ExecMode mode = ctx.mode();
    if (mode == ExecMode::PM) throw std::invalid_argument("map_with_redundancy: PM has no redundancy");
    ErrorPatch raw = std::visit(
        [&](const auto& fault) -> ErrorPatch {
            using T = std::decay_t<decltype(fault)>;
            if constexpr (std::is_same_v<T, TransientFault>)
                return map_transient(fault, ctx, ops);
            else
                return map_permanent(fault, ctx, ops);
        },
        f);
    // A single fault corrupts one copy of each affected group; the vote
    // restores it from the other two.
    if (base_mode(mode) == Mode::TRG) return ErrorPatch{};

    const OperandView view(ctx, ops);
    ErrorPatch out;
    const int w_out = ctx.layer().w_out();
    for (const auto& e : raw.entries) {
        const std::int32_t clean = view.sum(e.channel, e.u * w_out + e.v);
        const std::int32_t faulty = wrap_add(clean, e.error);
        const std::int32_t corrected =
            mode == ExecMode::DRG0 ? correct_drg0(faulty, clean) : correct_drga(faulty, clean);
        const std::int32_t residual = wrap_sub(corrected, clean);
        if (residual != 0) out.entries.push_back({e.channel, e.u, e.v, residual});
    }
    out.classify_pattern();
    return out;
}

ErrorPatch propagate(const FaultSpec& f, const MappingContext& ctx, const LayerOperands& ops) {
    if (ctx.mode() != ExecMode::PM) return map_with_redundancy(f, ctx, ops);
    if (const auto* t = std::get_if<TransientFault>(&f)) return map_transient(*t, ctx, ops);
    return map_permanent(std::get<PermanentFault>(f), ctx, ops);
}

}  // namespace rrsa
