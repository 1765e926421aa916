/*
 * Copyright 2026 The rrsa Authors.
 * SPDX-License-Identifier: Apache-2.0
 */

// Analytic fault propagation against the register-level array.

#include <doctest.h>

#include <random>
#include <sstream>

#include "rrsa/propagation.hpp"
#include "support.hpp"

using namespace rrsa;
using rrsa::testing::LayerCase;

namespace {

struct Mismatch {
    std::string what;
};

std::string show(const FaultSpec& f, ExecMode m, int n) {
    std::ostringstream os;
    os << describe(f) << " mode=" << to_string(m) << " n=" << n;
    return os.str();
}

// Cycles through N in {4, 6, 8, 12} and the modes each size supports.
std::pair<int, ExecMode> pick_config(int trial) {
    static const std::vector<std::pair<int, ExecMode>> configs = [] {
        std::vector<std::pair<int, ExecMode>> v;
        for (ExecMode m : kAllExecModes)
            for (int n : {4, 6, 8, 12})
                if (supports(n, m)) v.emplace_back(n, m);
        return v;
    }();
    return configs[static_cast<std::size_t>(trial) % configs.size()];
}

bool agree(const LayerCase& lc, int n, ExecMode mode, const FaultSpec& f, std::string* why = nullptr) {
    const AccTensor golden = conv_forward(lc.input, lc.geom, lc.weights);
    const MappingContext ctx(lc.geom, n, mode);
    const ErrorPatch patch = propagate(f, ctx, LayerOperands{lc.input, lc.weights, &golden});
    const AccTensor analytic = apply_patch(golden, patch);
    const AccTensor oracle = rrsa::testing::oracle_layer(lc, n, mode, {CycleFault::from(f)});
    if (analytic.vec() == oracle.vec()) return true;
    if (why) *why = show(f, mode, n);
    return false;
}

TransientFault random_transient(std::mt19937_64& rng, const MappingContext& ctx) {
    auto pick = [&](int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); };
    TransientFault f;
    f.target = kAllTargets[static_cast<std::size_t>(pick(0, 3))];
    f.tile_a = pick(1, ctx.tiles_a());
    f.tile_w = pick(1, ctx.tiles_w());
    f.cycle = pick(0, ctx.tile_cycles() - 1);
    f.p_row = pick(0, ctx.n() - 1);
    f.p_col = pick(0, ctx.n() - 1);
    f.bit = pick(0, target_width(f.target) - 1);
    return f;
}

// A fault on a computing PE at a cycle where it holds a live operand.
TransientFault random_live_transient(std::mt19937_64& rng, const MappingContext& ctx) {
    auto pick = [&](int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); };
    TransientFault f = random_transient(rng, ctx);
    const EffectiveSize eff = ctx.effective();
    const int rows = std::min(eff.rows, ctx.windows() - (f.tile_a - 1) * eff.rows);
    const int cols = std::min(eff.cols, ctx.channels() - (f.tile_w - 1) * eff.cols);
    const int lrow = pick(0, rows - 1);
    const int lcol = pick(0, cols - 1);
    const int pe = ctx.geometry().physical(lrow, lcol, pick(0, ctx.geometry().copies() - 1));
    f.p_row = pe / ctx.n();
    f.p_col = pe % ctx.n();
    f.cycle = lrow + lcol + pick(0, ctx.reduction() - 1);
    return f;
}

PermanentFault random_permanent(std::mt19937_64& rng, int n) {
    auto pick = [&](int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); };
    PermanentFault f;
    f.target = kAllTargets[static_cast<std::size_t>(pick(0, 3))];
    f.p_row = pick(0, n - 1);
    f.p_col = pick(0, n - 1);
    f.bit = pick(0, target_width(f.target) - 1);
    f.stuck = pick(0, 1);
    return f;
}

}  // namespace

TEST_SUITE("equivalence") {

TEST_CASE("randomized transient faults match the array in every mode") {
    std::mt19937_64 rng(20260101);
    int checked = 0;
    int visible = 0;
    for (int trial = 0; trial < 1500; ++trial) {
        const LayerCase lc = rrsa::testing::random_layer(rng);
        const auto [n, mode] = pick_config(trial);
        const MappingContext ctx(lc.geom, n, mode);
        const TransientFault f = trial % 2 ? random_live_transient(rng, ctx) : random_transient(rng, ctx);
        std::string why;
        const bool ok = agree(lc, n, mode, f, &why);
        CHECK_MESSAGE(ok, why);
        ++checked;
        const AccTensor golden = conv_forward(lc.input, lc.geom, lc.weights);
        if (!propagate(f, ctx, LayerOperands{lc.input, lc.weights, &golden}).empty()) ++visible;
    }
    CHECK(checked >= 1000);
    MESSAGE("faults with a visible patch: " << visible << "/" << checked);
    CHECK(visible > checked / 10);
}

TEST_CASE("randomized permanent faults match the array in every mode") {
    std::mt19937_64 rng(77);
    for (int trial = 0; trial < 1000; ++trial) {
        const LayerCase lc = rrsa::testing::random_layer(rng);
        const auto [n, mode] = pick_config(trial);
        const PermanentFault f = random_permanent(rng, n);
        std::string why;
        const bool ok = agree(lc, n, mode, f, &why);
        CHECK_MESSAGE(ok, why);
    }
}

TEST_CASE("exhaustive sweep on a 6x6 array" * doctest::test_suite("sweep")) {
    std::mt19937_64 rng(6);
    LayerCase lc;
    lc.geom = ConvLayerSpec{2, 7, 4, 4, 2, 2, 1, 1, {3, -9, 0, 12, 5, -1, 7}};
    lc.input = rrsa::testing::random_qtensor(rng, Shape{2, 4, 4});
    lc.weights = rrsa::testing::random_qtensor(rng, Shape{7, 2, 2, 2});
    for (ExecMode mode : kAllExecModes) {
        const MappingContext ctx(lc.geom, 6, mode);
        int failures = 0;
        for (FaultTarget t : kAllTargets)
            for (int ta = 1; ta <= ctx.tiles_a(); ++ta)
                for (int tw = 1; tw <= ctx.tiles_w(); ++tw)
                    for (int cyc = 0; cyc < ctx.tile_cycles(); ++cyc)
                        for (int r = 0; r < 6; ++r)
                            for (int c = 0; c < 6; ++c)
                                for (int bit : {0, target_width(t) - 1}) {
                                    TransientFault f{t, cyc, tw, ta, r, c, bit};
                                    std::string why;
                                    if (!agree(lc, 6, mode, f, &why)) {
                                        if (failures++ < 3) MESSAGE(why);
                                    }
                                }
        for (FaultTarget t : kAllTargets)
            for (int r = 0; r < 6; ++r)
                for (int c = 0; c < 6; ++c)
                    for (int bit : {0, 3, target_width(t) - 1})
                        for (int s : {0, 1}) {
                            PermanentFault f{t, r, c, bit, s};
                            std::string why;
                            if (!agree(lc, 6, mode, f, &why)) {
                                if (failures++ < 3) MESSAGE(why);
                            }
                        }
        CHECK_MESSAGE(failures == 0, to_string(mode));
    }
}

TEST_CASE("index mutations are detected") {
    for (Mutation mut : {Mutation::ChannelOffByOne, Mutation::WindowOffByOne, Mutation::SlotOffByOne}) {
        std::mt19937_64 rng(99);
        int detected = 0;
        for (int trial = 0; trial < 200; ++trial) {
            const LayerCase lc = rrsa::testing::random_layer(rng);
            const MappingContext ctx(lc.geom, 6, ExecMode::PM, mut);
            const TransientFault f = random_transient(rng, ctx);
            const AccTensor golden = conv_forward(lc.input, lc.geom, lc.weights);
            const ErrorPatch patch = propagate(f, ctx, LayerOperands{lc.input, lc.weights, &golden});
            const AccTensor oracle = rrsa::testing::oracle_layer(lc, 6, ExecMode::PM, {CycleFault::from(FaultSpec{f})});
            if (apply_patch(golden, patch).vec() != oracle.vec()) ++detected;
        }
        CHECK_MESSAGE(detected > 0, to_string(mut));
    }
}

}  // TEST_SUITE
