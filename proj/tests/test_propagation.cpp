/*
 * Copyright 2026 The rrsa Authors.
 * SPDX-License-Identifier: Apache-2.0
 */

#include <doctest.h>

#include <random>
#include <set>

#include "rrsa/propagation.hpp"
#include "support.hpp"

using namespace rrsa;
using rrsa::testing::LayerCase;

namespace {

// Single-channel 3x3 layer with every operand nonzero.
LayerCase dense_layer(int h_in, int w_in, int c_out, std::int8_t x_value = 0, std::int8_t w_value = 0) {
    std::mt19937_64 rng(static_cast<std::uint64_t>(h_in * 100 + w_in * 10 + c_out));
    LayerCase lc;
    lc.geom = ConvLayerSpec{1, c_out, h_in, w_in, 3, 3, 1, 0, {}};
    lc.input = rrsa::testing::random_qtensor(rng, Shape{1, h_in, w_in}, 1, 100);
    lc.weights = rrsa::testing::random_qtensor(rng, Shape{c_out, 1, 3, 3}, 1, 100);
    if (x_value) std::fill(lc.input.data().begin(), lc.input.data().end(), x_value);
    if (w_value) std::fill(lc.weights.data().begin(), lc.weights.data().end(), w_value);
    return lc;
}

ErrorPatch run(const FaultSpec& f, const LayerCase& lc, int n, ExecMode mode, AccTensor* golden_out = nullptr) {
    const AccTensor golden = conv_forward(lc.input, lc.geom, lc.weights);
    if (golden_out) *golden_out = golden;
    return propagate(f, MappingContext(lc.geom, n, mode), LayerOperands{lc.input, lc.weights, &golden});
}

bool matches_oracle(const FaultSpec& f, const LayerCase& lc, int n, ExecMode mode) {
    AccTensor golden;
    const ErrorPatch patch = run(f, lc, n, mode, &golden);
    return apply_patch(golden, patch) == rrsa::testing::oracle_layer(lc, n, mode, {CycleFault::from(f)});
}

}  // namespace

TEST_SUITE("propagation") {

TEST_CASE("kernel index of an in-flight operand") {
    const ConvLayerSpec g{2, 1, 5, 5, 3, 3, 1, 0, {}};
    auto idx = faulty_weight_index(14, 2, 1, g);
    REQUIRE(idx);
    CHECK(idx->slot == 11);
    CHECK(idx->channel == 1);
    CHECK(idx->i == 0);
    CHECK(idx->j == 2);

    idx = faulty_weight_index(9 + 3, 1, 2, g);
    REQUIRE(idx);
    CHECK(idx->channel == 1);
    CHECK(idx->i == 0);
    CHECK(idx->j == 0);

    CHECK_FALSE(faulty_weight_index(2, 2, 1, g).has_value());
    CHECK_FALSE(faulty_weight_index(3 + 18, 2, 1, g).has_value());
}

TEST_CASE("IREG bullet") {
    const LayerCase lc = dense_layer(7, 7, 10);
    const TransientFault f{FaultTarget::Ireg, 2 + 1 + 4, 1, 1, 2, 1, 3};
    const ErrorPatch p = run(f, lc, 8, ExecMode::PM);
    CHECK(p.pattern == PatternKind::Bullet);
    REQUIRE(p.size() == 7);
    const auto idx = faulty_weight_index(f.cycle, 2, 1, lc.geom);
    REQUIRE(idx);
    const std::int64_t eps = error_term_transient(lc.input.at(0, 0 + idx->i, 2 + idx->j), 3, 8).epsilon;
    std::set<int> channels;
    for (const PatchEntry& e : p.entries) {
        channels.insert(e.channel);
        CHECK(e.u == 0);
        CHECK(e.v == 2);
        CHECK(e.error == eps * lc.weights.at(e.channel, 0, idx->i, idx->j));
    }
    CHECK(channels == std::set<int>{1, 2, 3, 4, 5, 6, 7});
    CHECK(matches_oracle(f, lc, 8, ExecMode::PM));
}

TEST_CASE("WREG line") {
    const LayerCase lc = dense_layer(8, 7, 10);
    REQUIRE(lc.geom.windows() == 30);
    const TransientFault f{FaultTarget::Wreg, 2 + 3 + 5, 1, 1, 2, 3, 2};
    const ErrorPatch p = run(f, lc, 8, ExecMode::PM);
    CHECK(p.pattern == PatternKind::Line);
    REQUIRE(p.size() == 6);
    const auto idx = faulty_weight_index(f.cycle, 2, 3, lc.geom);
    REQUIRE(idx);
    const std::int64_t eps = error_term_transient(lc.weights.at(3, 0, idx->i, idx->j), 2, 8).epsilon;
    std::set<int> windows;
    for (const PatchEntry& e : p.entries) {
        CHECK(e.channel == 3);
        windows.insert(e.u * 5 + e.v);
        CHECK(e.error == eps * lc.input.at(0, e.u + idx->i, e.v + idx->j));
    }
    CHECK(windows == std::set<int>{2, 3, 4, 5, 6, 7});
    CHECK(p.entries.front().u == 0);
    CHECK(p.entries.front().v == 2);
    CHECK(p.entries.back().u == 1);
    CHECK(p.entries.back().v == 2);
    CHECK(matches_oracle(f, lc, 8, ExecMode::PM));
}

TEST_CASE("OREG and MULT points") {
    const LayerCase lc = dense_layer(7, 7, 10);
    for (FaultTarget t : {FaultTarget::Oreg, FaultTarget::Mult}) {
        TransientFault f{t, 3 + 2 + 4, 1, 1, 3, 2, 4};
        ErrorPatch p = run(f, lc, 8, ExecMode::PM);
        CHECK(p.pattern == PatternKind::Point);
        REQUIRE(p.size() == 1);
        CHECK(p.entries[0].channel == 2);
        CHECK(p.entries[0].u == 0);
        CHECK(p.entries[0].v == 3);
        CHECK(std::abs(p.entries[0].error) == 16);
        CHECK(matches_oracle(f, lc, 8, ExecMode::PM));

        f.bit = 0;
        p = run(f, lc, 8, ExecMode::PM);
        REQUIRE(p.size() == 1);
        CHECK(std::abs(p.entries[0].error) == 1);
    }
}

TEST_CASE("MULT fault on a cycle without a live product is masked") {
    const LayerCase lc = dense_layer(7, 7, 10);
    const TransientFault f{FaultTarget::Mult, 3 + 2 - 1, 1, 1, 3, 2, 4};
    CHECK(run(f, lc, 8, ExecMode::PM).empty());
}

TEST_CASE("DRG residuals of a point error") {
    LayerCase lc;
    lc.geom = ConvLayerSpec{1, 1, 1, 1, 1, 1, 1, 0, {}};
    lc.input = QTensor(Shape{1, 1, 1});
    lc.input[0] = 10;
    lc.weights = QTensor(Shape{1, 1, 1, 1});
    lc.weights[0] = 10;
    const TransientFault f{FaultTarget::Oreg, 0, 1, 1, 0, 0, 4};

    const ErrorPatch pm = run(f, lc, 4, ExecMode::PM);
    REQUIRE(pm.size() == 1);
    CHECK(pm.entries[0].error == 16);

    const ErrorPatch avg = run(f, lc, 4, ExecMode::DRGA);
    REQUIRE(avg.size() == 1);
    CHECK(avg.entries[0].error == 8);

    CHECK(run(f, lc, 4, ExecMode::DRG0).empty());

    TransientFault shadow = f;
    shadow.p_col = 1;
    const ErrorPatch avg_shadow = run(shadow, lc, 4, ExecMode::DRGA);
    REQUIRE(avg_shadow.size() == 1);
    CHECK(avg_shadow.entries[0].error == 8);
    for (ExecMode m : {ExecMode::DRG0, ExecMode::DRGA}) {
        CHECK(matches_oracle(f, lc, 4, m));
        CHECK(matches_oracle(shadow, lc, 4, m));
    }
}

TEST_CASE("DRGA residual is at most half the unprotected error") {
    std::mt19937_64 rng(31);
    int points = 0;
    for (int trial = 0; trial < 600; ++trial) {
        const LayerCase lc = rrsa::testing::random_layer(rng);
        const MappingContext ctx(lc.geom, 8, ExecMode::DRGA);
        const EffectiveSize eff = ctx.effective();
        const int lrow = static_cast<int>(rng() % static_cast<std::uint64_t>(std::min(eff.rows, ctx.windows())));
        const int lcol = static_cast<int>(rng() % static_cast<std::uint64_t>(std::min(eff.cols, ctx.channels())));
        const int pe = ctx.geometry().physical(lrow, lcol, static_cast<int>(rng() % 2));
        TransientFault f{trial % 2 ? FaultTarget::Oreg : FaultTarget::Mult,
                         lrow + lcol + static_cast<int>(rng() % static_cast<std::uint64_t>(ctx.reduction())),
                         1, 1, pe / 8, pe % 8, static_cast<int>(rng() % 32)};
        const AccTensor golden = conv_forward(lc.input, lc.geom, lc.weights);
        const LayerOperands ops{lc.input, lc.weights, &golden};
        const ErrorPatch residual = propagate(f, ctx, ops);
        const ErrorPatch raw = map_transient(f, ctx, ops);
        REQUIRE(raw.size() <= 1);
        if (raw.empty()) continue;
        ++points;
        const std::int64_t e = raw.entries[0].error;
        const std::int64_t r = residual.empty() ? 0 : residual.entries[0].error;
        CHECK(std::llabs(r) <= (std::llabs(e) + 1) / 2);
    }
    CHECK(points > 300);
}

TEST_CASE("TRG modes leave no residual") {
    std::mt19937_64 rng(32);
    for (int trial = 0; trial < 300; ++trial) {
        const LayerCase lc = rrsa::testing::random_layer(rng);
        for (ExecMode mode : {ExecMode::TRG3, ExecMode::TRG4}) {
            const int n = mode == ExecMode::TRG3 ? 6 : 8;
            const MappingContext ctx(lc.geom, n, mode);
            const TransientFault f{kAllTargets[trial % 4], static_cast<int>(rng() % 20), 1, 1,
                                   static_cast<int>(rng() % n), static_cast<int>(rng() % n),
                                   static_cast<int>(rng() % 8)};
            CHECK(run(f, lc, n, mode).empty());
            const PermanentFault pf{kAllTargets[trial % 4], f.p_row, f.p_col, f.bit, trial % 2};
            CHECK(run(pf, lc, n, mode).empty());
        }
    }
}

TEST_CASE("redundant map rejects PM") {
    const LayerCase lc = dense_layer(5, 5, 2);
    const AccTensor golden = conv_forward(lc.input, lc.geom, lc.weights);
    CHECK_THROWS_AS(map_with_redundancy(TransientFault{}, MappingContext(lc.geom, 4, ExecMode::PM),
                                        LayerOperands{lc.input, lc.weights, &golden}),
                    std::invalid_argument);
}

TEST_CASE("permanent IREG fault covers every activation and weight tile") {
    const LayerCase lc = dense_layer(6, 7, 12, 16, 3);
    REQUIRE(lc.geom.windows() == 20);
    const MappingContext ctx(lc.geom, 8, ExecMode::PM);
    REQUIRE(ctx.tiles_a() == 3);
    REQUIRE(ctx.tiles_w() == 2);
    const PermanentFault f{FaultTarget::Ireg, 2, 1, 0, 1};
    const ErrorPatch p = run(f, lc, 8, ExecMode::PM);
    std::set<int> windows;
    std::set<int> channels;
    for (const PatchEntry& e : p.entries) {
        windows.insert(e.u * 5 + e.v);
        channels.insert(e.channel);
        CHECK(e.error == 9 * 3);
    }
    CHECK(windows == std::set<int>{2, 10, 18});
    CHECK(channels == std::set<int>{1, 2, 3, 4, 5, 6, 7, 9, 10, 11});
    CHECK(p.size() == 30);
    CHECK(matches_oracle(f, lc, 8, ExecMode::PM));
}

TEST_CASE("stuck-at matching every operand bit gives an empty patch") {
    const LayerCase lc = dense_layer(6, 7, 12, 16, 3);
    CHECK(run(PermanentFault{FaultTarget::Ireg, 2, 1, 4, 1}, lc, 8, ExecMode::PM).empty());
    CHECK(run(PermanentFault{FaultTarget::Wreg, 2, 1, 0, 1}, lc, 8, ExecMode::PM).empty());
}

TEST_CASE("patch shapes and bounds on random faults") {
    std::mt19937_64 rng(33);
    for (int trial = 0; trial < 800; ++trial) {
        const LayerCase lc = rrsa::testing::random_layer(rng, 3, 20, 8);
        const MappingContext ctx(lc.geom, 4, ExecMode::PM);
        TransientFault f;
        f.target = kAllTargets[static_cast<std::size_t>(trial % 4)];
        f.tile_a = 1 + static_cast<int>(rng() % static_cast<std::uint64_t>(ctx.tiles_a()));
        f.tile_w = 1 + static_cast<int>(rng() % static_cast<std::uint64_t>(ctx.tiles_w()));
        f.p_row = static_cast<int>(rng() % 4);
        f.p_col = static_cast<int>(rng() % 4);
        f.cycle = f.p_row + f.p_col + static_cast<int>(rng() % static_cast<std::uint64_t>(ctx.reduction()));
        f.bit = static_cast<int>(rng() % static_cast<std::uint64_t>(target_width(f.target)));
        const ErrorPatch p = run(f, lc, 4, ExecMode::PM);
        for (const PatchEntry& e : p.entries) {
            CHECK(e.channel < lc.geom.c_out);
            CHECK(e.u < lc.geom.h_out());
            CHECK(e.v < lc.geom.w_out());
            CHECK(e.error != 0);
            CHECK(e.channel == (f.tile_w - 1) * 4 + (f.target == FaultTarget::Ireg ? e.channel % 4 : f.p_col));
        }
        if (p.size() < 2) continue;
        switch (f.target) {
            case FaultTarget::Ireg:
                CHECK(p.pattern == PatternKind::Bullet);
                for (const PatchEntry& e : p.entries) CHECK((e.u == p.entries[0].u && e.v == p.entries[0].v));
                break;
            case FaultTarget::Wreg:
                CHECK(p.pattern == PatternKind::Line);
                for (const PatchEntry& e : p.entries) CHECK(e.channel == p.entries[0].channel);
                break;
            default: FAIL("point faults produced several entries");
        }
    }
}

TEST_CASE("mutation names round-trip") {
    for (Mutation m : {Mutation::None, Mutation::ChannelOffByOne, Mutation::WindowOffByOne, Mutation::SlotOffByOne})
        CHECK(parse_mutation(to_string(m)) == m);
}

}  // TEST_SUITE
