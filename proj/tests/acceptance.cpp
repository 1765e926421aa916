/*
 * Copyright 2026 The rrsa Authors.
 * SPDX-License-Identifier: Apache-2.0
 */

// Acceptance checks, one PASS/FAIL line per criterion.

#include <chrono>
#include <cstdio>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "rrsa/campaign.hpp"
#include "rrsa/io.hpp"
#include "rrsa/perf.hpp"
#include "rrsa/propagation.hpp"
#include "rrsa/verify.hpp"

using namespace rrsa;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

struct Outcome {
    bool pass = false;
    std::string detail;
};

Matrix<std::int8_t> random_matrix(std::mt19937_64& rng, int rows, int cols) {
    Matrix<std::int8_t> m(rows, cols);
    for (auto& v : m.data) v = static_cast<std::int8_t>(rng());
    return m;
}

long long ceil_div(long long a, long long b) { return (a + b - 1) / b; }

long long closed_form(int n, ExecMode mode, long long p, long long k, long long m) {
    switch (mode) {
        case ExecMode::PM: return ceil_div(p, n) * ceil_div(k, n) * (m + 2 * n - 2);
        case ExecMode::DRG0:
        case ExecMode::DRGA: return ceil_div(p, n) * ceil_div(2 * k, n) * (m + 3 * n / 2 - 1);
        case ExecMode::TRG3: return ceil_div(3 * p, 2 * n) * ceil_div(2 * k, n) * (m + 2 * n / 3 + n / 2 - 1);
        case ExecMode::TRG4: return ceil_div(2 * p, n) * ceil_div(2 * k, n) * (m + n - 1);
    }
    return -1;
}

Outcome oracle_equivalence() {
    const auto start = Clock::now();
    VerifyOptions opts;
    opts.cases = 1200;
    opts.seed = 2026;
    const VerifyResult r = run_verification(opts);
    std::ostringstream os;
    os << r.passed << "/" << r.cases << " cases exact, " << r.visible << " visible, " << seconds_since(start) << " s";
    return {r.cases >= 1000 && r.failed == 0, os.str()};
}

Outcome latency_grid() {
    std::mt19937_64 rng(10);
    int points = 0;
    int mismatches = 0;
    for (int n : {4, 6, 8, 12})
        for (ExecMode mode : kAllExecModes) {
            if (!supports(n, mode)) continue;
            const SystolicArray sa(n, mode);
            for (int m : {1, 2, 3, 5, 8, 13, 21, 32})
                for (int p : {1, n / 2, n - 1, n, n + 1, 3 * n})
                    for (int k : {1, n / 2, n - 1, n + 1, 3 * n}) {
                        const long long cycles = sa.run_matmul(random_matrix(rng, p, m), random_matrix(rng, m, k)).total_cycles;
                        const long long expected = closed_form(n, mode, p, k, m);
                        mismatches += cycles != expected || mode_latency({p, m, k}, n, mode) != expected;
                        ++points;
                    }
        }
    std::ostringstream os;
    os << points << " grid points, " << mismatches << " mismatches";
    return {points >= 500 && mismatches == 0, os.str()};
}

Outcome trg_exhaustive() {
    constexpr int kSize = 6;
    constexpr int kReduction = 6;
    std::mt19937_64 rng(36);
    long long runs = 0;
    long long corrupted = 0;
    for (ExecMode mode : {ExecMode::TRG3, ExecMode::TRG4}) {
        const SystolicArray sa(kSize, mode);
        const EffectiveSize eff = sa.geometry().effective();
        const auto a = random_matrix(rng, eff.rows, kReduction);
        const auto w = random_matrix(rng, kReduction, eff.cols);
        const TileResult golden = sa.run_tile(a, w);
        auto check = [&](const CycleFault& f) {
            ++runs;
            corrupted += sa.run_tile(a, w, std::vector{f}).out != golden.out;
        };
        for (int r = 0; r < kSize; ++r)
            for (int c = 0; c < kSize; ++c)
                for (FaultTarget t : kAllTargets)
                    for (int bit = 0; bit < target_width(t); ++bit) {
                        CycleFault f;
                        f.target = t;
                        f.p_row = r;
                        f.p_col = c;
                        f.bit = bit;
                        for (int cycle = 0; cycle < golden.cycles; ++cycle) {
                            f.cycle = cycle;
                            check(f);
                        }
                        f.kind = CycleFault::Kind::Permanent;
                        for (int stuck : {0, 1}) {
                            f.stuck = stuck;
                            check(f);
                        }
                    }
    }
    std::ostringstream os;
    os << runs << " single-fault runs on one 6x6 tile (trg3, trg4), " << corrupted << " differ from golden";
    return {runs > 0 && corrupted == 0, os.str()};
}

Outcome drg_masking() {
    const Fixture fx = make_fixture();
    CampaignConfig cfg;
    cfg.modes = {ExecMode::PM, ExecMode::DRG0, ExecMode::DRGA};
    cfg.samples = 20000;
    cfg.seed = 42;
    cfg.n = 12;
    const AvfReport report = run_campaign(fx.net, fx.inputs, cfg);
    bool ordered = true;
    std::ostringstream os;
    for (std::size_t layer = 0; layer < fx.net.conv_layer_indices().size(); ++layer) {
        const AvfCell& pm = report.cell(layer, ExecMode::PM);
        const AvfCell& drg0 = report.cell(layer, ExecMode::DRG0);
        const AvfCell& drga = report.cell(layer, ExecMode::DRGA);
        for (std::size_t c = 0; c < 4; ++c) ordered = ordered && drg0.avf[c] <= pm.avf[c] && drga.avf[c] <= pm.avf[c];
        os << pm.layer_name << " top1_class pm/drg0/drga " << pm.errors[0] << "/" << drg0.errors[0] << "/"
           << drga.errors[0] << "; ";
    }

    std::mt19937_64 rng(31);
    int points = 0;
    int violations = 0;
    const ConvLayerSpec& geom = fx.net.conv(1).geom;
    const GoldenRun g = golden_run(fx.net, fx.inputs[0]);
    const LayerOperands ops{g.convs[1].input, fx.net.conv(1).weights, &g.convs[1].output};
    const MappingContext ctx(geom, 12, ExecMode::DRGA);
    while (points < 2000) {
        const FaultDraw d = draw_fault(rng(), FaultKind::Transient);
        if (d.target != FaultTarget::Oreg && d.target != FaultTarget::Mult) continue;
        const auto f = std::get<TransientFault>(realize(d, ctx, FaultKind::Transient));
        const ErrorPatch raw = map_transient(f, ctx, ops);
        if (raw.size() != 1) continue;
        ++points;
        const ErrorPatch residual = propagate(f, ctx, ops);
        const std::int64_t e = raw.entries[0].error;
        const std::int64_t r = residual.empty() ? 0 : residual.entries[0].error;
        violations += std::llabs(r) > (std::llabs(e) + 1) / 2;
    }
    os << "residual bound violations " << violations << "/" << points;
    return {ordered && violations == 0, os.str()};
}

Outcome trg_speedup() {
    const auto layers = reference_network("alexnet");
    const double trg3 = network_latency(layers, std::vector(layers.size(), ExecMode::TRG3), 48).normalized;
    const double trg4 = network_latency(layers, std::vector(layers.size(), ExecMode::TRG4), 48).normalized;
    std::ostringstream os;
    os << "alexnet n=48 all-trg3/pm " << trg3 << ", all-trg4/pm " << trg4;
    return {trg3 >= 2.0 && trg3 <= 4.0 && trg4 >= 2.0 && trg4 <= 4.0, os.str()};
}

Outcome statistical_sizing() {
    const std::size_t n = sample_size(0.95, 0.05);
    const Fixture fx = make_fixture();
    CampaignConfig cfg;
    cfg.modes = {ExecMode::PM};
    cfg.layers = {1};
    cfg.seed = 42;
    cfg.n = 12;
    cfg.samples = 1000;
    const AvfCell small = run_campaign(fx.net, fx.inputs, cfg).cells.front();
    cfg.samples = 4000;
    const AvfCell large = run_campaign(fx.net, fx.inputs, cfg).cells.front();
    const auto cls = static_cast<std::size_t>(ErrorClass::Top5Acc);
    const double ratio = (small.ci[cls].high - small.ci[cls].low) / (large.ci[cls].high - large.ci[cls].low);
    std::ostringstream os;
    os << "sample_size(0.95, 0.05) = " << n << ", CI width ratio 1000 vs 4000 samples = " << ratio;
    return {n == 385 && ratio >= 1.6 && ratio <= 2.4, os.str()};
}

Outcome pareto_correctness() {
    const auto start = Clock::now();
    std::ostringstream os;
    bool pass = true;
    for (const std::string name : {"alexnet", "vgg11"}) {
        const auto layers = reference_network(name);
        std::mt19937_64 rng(layers.size());
        std::uniform_real_distribution<double> u(0.0, 0.2);
        std::vector<LayerAvf> table(layers.size());
        for (auto& row : table) {
            AvfVector pm{};
            AvfVector drg{};
            for (std::size_t c = 0; c < 4; ++c) {
                pm[c] = u(rng) + 0.1;
                drg[c] = pm[c] * u(rng) * 4;
            }
            row.pm = pm;
            row.drg = drg;
        }
        const auto pts = explore(layers, table, ExploreOptions{});
        std::size_t mismatches = 0;
        std::size_t front = 0;
        for (std::size_t i = 0; i < pts.size(); ++i) {
            bool dominated = false;
            for (std::size_t j = 0; j < pts.size() && !dominated; ++j) {
                const bool no_worse = pts[j].avf[0] <= pts[i].avf[0] && pts[j].latency_cycles <= pts[i].latency_cycles;
                const bool better = pts[j].avf[0] < pts[i].avf[0] || pts[j].latency_cycles < pts[i].latency_cycles;
                dominated = no_worse && better;
            }
            mismatches += pts[i].pareto == dominated;
            front += pts[i].pareto;
        }
        const std::size_t expected = layers.size() == 5 ? 243 : 6561;
        pass = pass && pts.size() == expected && mismatches == 0;
        os << name << " " << pts.size() << " points, " << front << " on front, " << mismatches << " mismatches; ";
    }
    const double elapsed = seconds_since(start);
    os << elapsed << " s";
    return {pass && elapsed < 10.0, os.str()};
}

Outcome injector_speed() {
    const Fixture fx = make_fixture();
    const ConvLayerSpec& geom = fx.net.conv(1).geom;
    const QTensor& weights = fx.net.conv(1).weights;
    const GoldenRun g = golden_run(fx.net, fx.inputs[0]);
    const QTensor& input = g.convs[1].input;
    const AccTensor& golden = g.convs[1].output;
    const MappingContext ctx(geom, 12, ExecMode::PM);
    std::vector<TransientFault> faults;
    for (std::uint64_t i = 0; i < 200; ++i)
        faults.push_back(std::get<TransientFault>(realize(draw_fault(sample_seed(8, 1, i), FaultKind::Transient), ctx,
                                                          FaultKind::Transient)));

    std::size_t mismatches = 0;
    std::vector<AccTensor> analytic;
    analytic.reserve(faults.size());
    auto start = Clock::now();
    for (const TransientFault& f : faults)
        analytic.push_back(apply_patch(golden, propagate(f, ctx, LayerOperands{input, weights, &golden})));
    const double fast = seconds_since(start);
    start = Clock::now();
    for (std::size_t i = 0; i < faults.size(); ++i)
        mismatches += oracle_conv(input, geom, weights, 12, ExecMode::PM, {CycleFault::from(faults[i])}) != analytic[i];
    const double slow = seconds_since(start);
    const double ratio = slow / fast;
    std::ostringstream os;
    os << faults.size() << " faults on conv2 at n=12: analytic " << fast << " s, array " << slow << " s, ratio "
       << ratio << "x, " << mismatches << " mismatches";
    return {ratio >= 100.0 && mismatches == 0, os.str()};
}

}  // namespace

int main() {
    struct Criterion {
        const char* name;
        Outcome (*run)();
    };
    const std::vector<Criterion> criteria = {
        {"oracle equivalence", oracle_equivalence}, {"latency closed forms", latency_grid},
        {"trg correction", trg_exhaustive},         {"drg masking", drg_masking},
        {"trg speedup range", trg_speedup},         {"statistical sizing", statistical_sizing},
        {"pareto correctness", pareto_correctness}, {"injector speed ratio", injector_speed},
    };
    int failed = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        Outcome o;
        try {
            o = criteria[i].run();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        failed += !o.pass;
        std::printf("%s %zu %s: %s\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].name, o.detail.c_str());
        std::fflush(stdout);
    }
    return failed == 0 ? 0 : 1;
}
