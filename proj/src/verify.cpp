/*
 * Copyright 2026 The rrsa Authors.
 * SPDX-License-Identifier: Apache-2.0
 */

#include "rrsa/verify.hpp"

#include <algorithm>
#include <random>
#include <stdexcept>

#include "rrsa/parallel.hpp"
#include "rrsa/sa_oracle.hpp"

namespace rrsa {

AccTensor oracle_conv(const QTensor& input, const ConvLayerSpec& layer, const QTensor& weights, int n, ExecMode mode,
                      const std::vector<CycleFault>& faults) {
    const Lowered low = im2col(input, layer);
    const MatmulResult r = SystolicArray(n, mode).run_matmul(low.matrix, lower_weights(weights), faults, low.padding);
    AccTensor out(Shape{layer.c_out, layer.h_out(), layer.w_out()}, input.scale() * weights.scale());
    const int wo = layer.w_out();
    for (int p = 0; p < layer.windows(); ++p)
        for (int k = 0; k < layer.c_out; ++k) out.at(k, p / wo, p % wo) = wrap_add(r.out(p, k), layer.bias_at(k));
    return out;
}

namespace {

class Draws {
public:
    explicit Draws(std::uint64_t seed) : rng_(seed) {}
    int pick(int lo, int hi) { return lo + static_cast<int>(rng_() % static_cast<std::uint64_t>(hi - lo + 1)); }

private:
    std::mt19937_64 rng_;
};

struct Case {
    ConvLayerSpec layer;
    QTensor input;
    QTensor weights;
    int n = 4;
    ExecMode mode = ExecMode::PM;
    FaultSpec fault;
};

QTensor random_tensor(Draws& d, Shape shape) {
    QTensor t(std::move(shape));
    for (auto& v : t.data()) v = static_cast<std::int8_t>(d.pick(-128, 127));
    return t;
}

Case make_case(std::uint64_t seed, const std::vector<std::pair<int, ExecMode>>& configs, std::size_t index,
               Mutation mutation) {
    Draws d(seed);
    Case c;
    std::tie(c.n, c.mode) = configs[index % configs.size()];
    ConvLayerSpec& g = c.layer;
    g.c_in = d.pick(1, 3);
    g.c_out = d.pick(1, 2 * c.n + 2);
    g.h_k = d.pick(1, 3);
    g.w_k = d.pick(1, 3);
    g.padding = d.pick(0, 1);
    g.stride = d.pick(1, 2);
    g.h_in = d.pick(std::max(1, g.h_k - 2 * g.padding), 7);
    g.w_in = d.pick(std::max(1, g.w_k - 2 * g.padding), 7);
    for (int k = 0; k < g.c_out; ++k) g.bias.push_back(d.pick(-500, 500));
    c.input = random_tensor(d, Shape{g.c_in, g.h_in, g.w_in});
    c.weights = random_tensor(d, Shape{g.c_out, g.c_in, g.h_k, g.w_k});

    const FaultTarget target = kAllTargets[static_cast<std::size_t>(d.pick(0, 3))];
    const int bit = d.pick(0, target_width(target) - 1);
    if (index % 3 == 2) {
        c.fault = PermanentFault{target, d.pick(0, c.n - 1), d.pick(0, c.n - 1), bit, d.pick(0, 1)};
        return c;
    }
    const MappingContext ctx(g, c.n, c.mode, mutation);
    TransientFault f{target, d.pick(0, ctx.tile_cycles() - 1), d.pick(1, ctx.tiles_w()), d.pick(1, ctx.tiles_a()),
                     d.pick(0, c.n - 1), d.pick(0, c.n - 1), bit};
    if (index % 3 == 1) {
        const EffectiveSize eff = ctx.effective();
        const int rows = std::min(eff.rows, ctx.windows() - (f.tile_a - 1) * eff.rows);
        const int cols = std::min(eff.cols, ctx.channels() - (f.tile_w - 1) * eff.cols);
        const int lrow = d.pick(0, rows - 1);
        const int lcol = d.pick(0, cols - 1);
        const int pe = ctx.geometry().physical(lrow, lcol, d.pick(0, ctx.geometry().copies() - 1));
        f.p_row = pe / c.n;
        f.p_col = pe % c.n;
        f.cycle = lrow + lcol + d.pick(0, ctx.reduction() - 1);
    }
    c.fault = f;
    return c;
}

}  // namespace

VerifyResult run_verification(const VerifyOptions& opts) {
    std::vector<std::pair<int, ExecMode>> configs;
    for (ExecMode m : kAllExecModes)
        for (int n : opts.sizes) {
            if (n < 1) throw std::invalid_argument("verify: array sizes must be >= 1");
            if (supports(n, m)) configs.emplace_back(n, m);
        }
    VerifyResult result;
    result.cases = opts.cases;
    if (opts.cases == 0) return result;
    if (configs.empty()) throw std::invalid_argument("verify: no array size supports any mode");

    std::vector<std::uint8_t> outcome(opts.cases, 0);  // bit0 pass, bit1 visible
    parallel_for(opts.cases, opts.threads, [&](std::size_t i) {
        const Case c = make_case(opts.seed * 0x9e3779b97f4a7c15ULL + i, configs, i, opts.mutation);
        const AccTensor golden = conv_forward(c.input, c.layer, c.weights);
        const MappingContext ctx(c.layer, c.n, c.mode, opts.mutation);
        const ErrorPatch patch = propagate(c.fault, ctx, LayerOperands{c.input, c.weights, &golden});
        const AccTensor oracle = oracle_conv(c.input, c.layer, c.weights, c.n, c.mode, {CycleFault::from(c.fault)});
        bool ok = false;
        try {
            ok = apply_patch(golden, patch).vec() == oracle.vec();
        } catch (const std::out_of_range&) {
            ok = false;
        }
        outcome[i] = static_cast<std::uint8_t>((ok ? 1 : 0) | (oracle.vec() != golden.vec() ? 2 : 0));
    });
    for (std::size_t i = 0; i < opts.cases; ++i) {
        if (outcome[i] & 2) ++result.visible;
        if (outcome[i] & 1) {
            ++result.passed;
            continue;
        }
        ++result.failed;
        if (!result.first_failure) {
            const Case c = make_case(opts.seed * 0x9e3779b97f4a7c15ULL + i, configs, i, opts.mutation);
            result.first_failure = Counterexample{c.fault, c.n, c.mode, c.layer};
        }
    }
    return result;
}

}  // namespace rrsa
