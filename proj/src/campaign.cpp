/*
 * Copyright 2026 The rrsa Authors.
 * SPDX-License-Identifier: Apache-2.0
 */

#include "rrsa/campaign.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>

#include <boost/math/distributions/normal.hpp>

#include "rrsa/parallel.hpp"

namespace rrsa {

std::string_view to_string(FaultKind k) {
    switch (k) {
        case FaultKind::Transient: return "transient";
        case FaultKind::StuckAt0: return "stuck-at-0";
        case FaultKind::StuckAt1: return "stuck-at-1";
    }
    return "?";
}

std::optional<FaultKind> parse_fault_kind(std::string_view s) {
    if (s == "transient") return FaultKind::Transient;
    if (s == "stuck-at-0" || s == "sa0") return FaultKind::StuckAt0;
    if (s == "stuck-at-1" || s == "sa1") return FaultKind::StuckAt1;
    return std::nullopt;
}

double z_value(double confidence) {
    if (!(confidence > 0 && confidence < 1)) throw std::invalid_argument("confidence must lie in (0, 1)");
    const boost::math::normal_distribution<double> normal;
    return boost::math::quantile(normal, 1.0 - (1.0 - confidence) / 2.0);
}

std::size_t sample_size(double confidence, double margin, double population) {
    if (!(margin > 0 && margin < 1)) throw std::invalid_argument("margin must lie in (0, 1)");
    if (!(population >= 1)) throw std::invalid_argument("population must be >= 1");
    const double z = z_value(confidence);
    const double pq = 0.25;
    const double infinite = z * z * pq / (margin * margin);
    const double n = std::isinf(population) ? infinite
                                            : population / (1.0 + margin * margin * (population - 1.0) / (z * z * pq));
    return static_cast<std::size_t>(std::ceil(n));
}

Interval wilson_interval(std::size_t errors, std::size_t samples, double confidence) {
    if (samples == 0) return {0.0, 1.0};
    if (errors > samples) throw std::invalid_argument("wilson_interval: errors exceed samples");
    const double z = z_value(confidence);
    const double n = static_cast<double>(samples);
    const double p = static_cast<double>(errors) / n;
    const double denom = 1.0 + z * z / n;
    const double center = (p + z * z / (2 * n)) / denom;
    const double half = z * std::sqrt(p * (1 - p) / n + z * z / (4 * n * n)) / denom;
    return {errors == 0 ? 0.0 : std::max(0.0, center - half), errors == samples ? 1.0 : std::min(1.0, center + half)};
}

namespace {

std::uint64_t splitmix(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// Unit uniform from the top 53 bits, identical across standard libraries.
double unit(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

int scaled(double u, int count) { return std::min(count - 1, static_cast<int>(u * count)); }

}  // namespace

std::uint64_t sample_seed(std::uint64_t seed, std::uint64_t stream, std::uint64_t index) {
    return splitmix(splitmix(splitmix(seed) ^ stream) ^ index);
}

FaultDraw draw_fault(std::uint64_t seed, FaultKind kind) {
    std::mt19937_64 rng(seed);
    FaultDraw d;
    d.target = kAllTargets[static_cast<std::size_t>(scaled(unit(rng), 4))];
    d.bit = scaled(unit(rng), target_width(d.target));
    d.stuck = kind == FaultKind::StuckAt0 ? 0 : 1;
    d.u_pe = unit(rng);
    d.u_cycle = unit(rng);
    d.u_tile_a = unit(rng);
    d.u_tile_w = unit(rng);
    return d;
}

namespace {

struct PeDraw {
    int p_row = 0;
    int p_col = 0;
    int lrow = 0;
    int lcol = 0;
};

PeDraw pick_pe(double u, const Geometry& geom) {
    const EffectiveSize eff = geom.effective();
    const int k = scaled(u, eff.rows * eff.cols * geom.copies());
    PeDraw pe;
    const int cell = k / geom.copies();
    pe.lrow = cell / eff.cols;
    pe.lcol = cell % eff.cols;
    const int idx = geom.physical(pe.lrow, pe.lcol, k % geom.copies());
    pe.p_row = idx / geom.n();
    pe.p_col = idx % geom.n();
    return pe;
}

}  // namespace

PermanentFault realize_permanent(const FaultDraw& d, const Geometry& geom, FaultKind kind) {
    if (kind == FaultKind::Transient) throw std::invalid_argument("realize_permanent: transient kind");
    const PeDraw pe = pick_pe(d.u_pe, geom);
    return PermanentFault{d.target, pe.p_row, pe.p_col, d.bit, kind == FaultKind::StuckAt0 ? 0 : 1};
}

FaultSpec realize(const FaultDraw& d, const MappingContext& ctx, FaultKind kind) {
    if (kind != FaultKind::Transient) return realize_permanent(d, ctx.geometry(), kind);
    const PeDraw pe = pick_pe(d.u_pe, ctx.geometry());
    const EffectiveSize eff = ctx.effective();
    TransientFault f;
    f.target = d.target;
    f.bit = d.bit;
    f.p_row = pe.p_row;
    f.p_col = pe.p_col;
    f.tile_a = 1 + scaled(d.u_tile_a, ctx.tiles_a());
    f.tile_w = 1 + scaled(d.u_tile_w, ctx.tiles_w());
    const int rows = std::min(eff.rows, ctx.windows() - (f.tile_a - 1) * eff.rows);
    const int cols = std::min(eff.cols, ctx.channels() - (f.tile_w - 1) * eff.cols);
    f.cycle = pe.lrow < rows && pe.lcol < cols ? pe.lrow + pe.lcol + scaled(d.u_cycle, ctx.reduction())
                                               : scaled(d.u_cycle, ctx.tile_cycles());
    return f;
}

namespace {

std::vector<std::size_t> top_k(std::span<const double> v, std::size_t k) {
    std::vector<std::size_t> idx(v.size());
    std::iota(idx.begin(), idx.end(), 0);
    k = std::min(k, idx.size());
    std::partial_sort(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(k), idx.end(),
                      [&](std::size_t a, std::size_t b) { return v[a] > v[b] || (v[a] == v[b] && a < b); });
    idx.resize(k);
    return idx;
}

}  // namespace

ErrorClasses classify(std::span<const double> golden, std::span<const double> faulty) {
    if (golden.size() != faulty.size() || golden.empty())
        throw std::invalid_argument("classify: score vectors differ in length or are empty");
    const auto g5 = top_k(golden, 5);
    const auto f5 = top_k(faulty, 5);
    ErrorClasses c;
    c.top1_class = g5.front() != f5.front();
    c.top1_acc = c.top1_class || golden[g5.front()] != faulty[f5.front()];
    c.top5_class = g5 != f5;
    c.top5_acc = c.top5_class || c.top1_acc;
    for (std::size_t i = 0; i < g5.size() && !c.top5_acc; ++i)
        c.top5_acc = golden[g5[i]] != faulty[g5[i]];
    return c;
}

void CampaignConfig::validate() const {
    if (!(confidence > 0 && confidence < 1)) throw std::invalid_argument("confidence must lie in (0, 1)");
    if (!(margin > 0 && margin < 1)) throw std::invalid_argument("margin must lie in (0, 1)");
    if (samples && *samples < 1) throw std::invalid_argument("samples must be >= 1");
    if (n < 1) throw std::invalid_argument("array size must be >= 1");
    if (modes.empty()) throw std::invalid_argument("campaign needs at least one mode");
    for (ExecMode m : modes)
        if (!supports(n, m))
            throw std::invalid_argument("array size " + std::to_string(n) + " does not support " +
                                        std::string(to_string(m)));
}

std::size_t CampaignConfig::sample_count() const { return samples ? *samples : sample_size(confidence, margin); }

const AvfCell& AvfReport::cell(std::optional<std::size_t> layer, ExecMode mode) const {
    for (const auto& c : cells)
        if (c.layer == layer && c.mode == mode) return c;
    throw std::out_of_range("AvfReport: no such cell");
}

std::vector<LayerMatMul> lowered_layers(const NetworkSpec& net) {
    std::vector<LayerMatMul> out;
    for (std::size_t i = 0; i < net.conv_layer_indices().size(); ++i) {
        const ConvLayerSpec& g = net.conv(i).geom;
        out.push_back({g.windows(), g.reduction(), g.c_out});
    }
    return out;
}

namespace {

constexpr std::uint8_t kMasked = 1u << 4;

std::uint8_t encode(const ErrorClasses& c) {
    const auto f = c.flags();
    std::uint8_t bits = 0;
    for (std::size_t i = 0; i < f.size(); ++i)
        if (f[i]) bits |= static_cast<std::uint8_t>(1u << i);
    return bits;
}

void tally(AvfCell& cell, std::span<const std::uint8_t> outcomes, double confidence) {
    cell.samples = outcomes.size();
    for (std::uint8_t o : outcomes) {
        if (o & kMasked) ++cell.masked;
        for (std::size_t c = 0; c < 4; ++c)
            if (o & (1u << c)) ++cell.errors[c];
    }
    for (std::size_t c = 0; c < 4; ++c) {
        cell.avf[c] = cell.samples ? static_cast<double>(cell.errors[c]) / static_cast<double>(cell.samples) : 0.0;
        cell.ci[c] = wilson_interval(cell.errors[c], cell.samples, confidence);
    }
}

std::vector<std::size_t> selected_layers(const NetworkSpec& net, const CampaignConfig& cfg) {
    const std::size_t convs = net.conv_layer_indices().size();
    if (convs == 0) throw std::invalid_argument("network has no conv layers to inject");
    std::vector<std::size_t> layers = cfg.layers;
    if (layers.empty()) {
        layers.resize(convs);
        std::iota(layers.begin(), layers.end(), 0);
    }
    for (std::size_t l : layers)
        if (l >= convs) throw std::invalid_argument("campaign layer " + std::to_string(l) + " out of range");
    return layers;
}

std::vector<GoldenRun> golden_runs(const NetworkSpec& net, std::span<const QTensor> inputs, unsigned threads) {
    if (inputs.empty()) throw std::invalid_argument("campaign input set is empty");
    std::vector<GoldenRun> runs(inputs.size());
    parallel_for(inputs.size(), threads, [&](std::size_t i) { runs[i] = golden_run(net, inputs[i]); });
    return runs;
}

}  // namespace

AvfReport run_campaign(const NetworkSpec& net, std::span<const QTensor> inputs, const CampaignConfig& cfg) {
    cfg.validate();
    net.validate();
    const std::vector<std::size_t> layers = selected_layers(net, cfg);
    const std::vector<GoldenRun> golden = golden_runs(net, inputs, cfg.threads);
    const std::size_t samples = cfg.sample_count();
    const std::size_t modes = cfg.modes.size();
    const std::size_t convs = net.conv_layer_indices().size();

    // contexts[ordinal * modes + m]
    std::vector<MappingContext> contexts;
    contexts.reserve(convs * modes);
    for (std::size_t l = 0; l < convs; ++l)
        for (ExecMode m : cfg.modes) contexts.emplace_back(net.conv(l).geom, cfg.n, m);
    const auto ctx = [&](std::size_t l, std::size_t m) -> const MappingContext& { return contexts[l * modes + m]; };

    AvfReport report;
    report.n = cfg.n;
    report.kind = cfg.kind;
    report.seed = cfg.seed;
    report.confidence = cfg.confidence;
    report.inputs = inputs.size();
    std::atomic<std::size_t> overflows{0};

    if (cfg.kind == FaultKind::Transient) {
        std::vector<std::uint8_t> outcome(layers.size() * samples * modes, 0);
        parallel_for(layers.size() * samples, cfg.threads, [&](std::size_t job) {
            const std::size_t li = job / samples;
            const std::size_t s = job % samples;
            const std::size_t ord = layers[li];
            const FaultDraw draw = draw_fault(sample_seed(cfg.seed, ord + 1, s), cfg.kind);
            const GoldenRun& g = golden[s % golden.size()];
            const ConvRecord& rec = g.convs[ord];
            for (std::size_t m = 0; m < modes; ++m) {
                const FaultSpec f = realize(draw, ctx(ord, m), cfg.kind);
                const ErrorPatch patch =
                    propagate(f, ctx(ord, m), LayerOperands{rec.input, net.conv(ord).weights, &rec.output});
                std::uint8_t& out = outcome[(li * modes + m) * samples + s];
                if (patch.empty()) {
                    out = kMasked;
                    continue;
                }
                Diagnostics diag;
                const InferenceResult r = resume_from(net, ord, apply_patch(rec.output, patch), &diag);
                overflows += diag.accumulator_overflows;
                out = encode(classify(g.result.logits, r.logits));
            }
        });
        for (std::size_t li = 0; li < layers.size(); ++li)
            for (std::size_t m = 0; m < modes; ++m) {
                AvfCell cell;
                cell.layer = layers[li];
                cell.layer_name = net.conv(layers[li]).name;
                cell.mode = cfg.modes[m];
                tally(cell, std::span(outcome).subspan((li * modes + m) * samples, samples), cfg.confidence);
                report.cells.push_back(std::move(cell));
            }
    } else {
        std::vector<bool> active(convs, false);
        for (std::size_t l : layers) active[l] = true;
        std::vector<std::uint8_t> outcome(samples * modes, 0);
        parallel_for(samples, cfg.threads, [&](std::size_t s) {
            const FaultDraw draw = draw_fault(sample_seed(cfg.seed, 0, s), cfg.kind);
            const std::size_t input = s % golden.size();
            for (std::size_t m = 0; m < modes; ++m) {
                const PermanentFault f = realize_permanent(draw, ctx(0, m).geometry(), cfg.kind);
                bool corrupted = false;
                const ConvHook hook = [&](std::size_t ord, const QTensor& in, AccTensor& out) {
                    if (!active[ord]) return;
                    const ErrorPatch patch = propagate(f, ctx(ord, m), LayerOperands{in, net.conv(ord).weights, &out});
                    if (patch.empty()) return;
                    corrupted = true;
                    apply_patch_inplace(out, patch);
                };
                Diagnostics diag;
                const InferenceResult r = forward(net, inputs[input], hook, &diag);
                std::uint8_t& out = outcome[m * samples + s];
                if (!corrupted) {
                    out = kMasked;
                    continue;
                }
                overflows += diag.accumulator_overflows;
                out = encode(classify(golden[input].result.logits, r.logits));
            }
        });
        for (std::size_t m = 0; m < modes; ++m) {
            AvfCell cell;
            cell.layer_name = "network";
            cell.mode = cfg.modes[m];
            tally(cell, std::span(outcome).subspan(m * samples, samples), cfg.confidence);
            report.cells.push_back(std::move(cell));
        }
    }
    report.accumulator_overflows = overflows;
    return report;
}

MappingAvf run_mapping_campaign(const NetworkSpec& net, std::span<const QTensor> inputs,
                                const std::vector<ExecMode>& mapping, const CampaignConfig& cfg) {
    cfg.validate();
    net.validate();
    if (cfg.kind != FaultKind::Transient) throw std::invalid_argument("mapping campaigns inject transient faults");
    const std::size_t convs = net.conv_layer_indices().size();
    if (mapping.size() != convs) throw std::invalid_argument("mapping length differs from the conv layer count");
    const std::vector<GoldenRun> golden = golden_runs(net, inputs, cfg.threads);
    const std::size_t samples = cfg.sample_count();

    std::vector<MappingContext> contexts;
    std::vector<double> cumulative;
    double total = 0;
    for (std::size_t l = 0; l < convs; ++l) {
        contexts.emplace_back(net.conv(l).geom, cfg.n, mapping[l]);
        const ConvLayerSpec& g = net.conv(l).geom;
        total += static_cast<double>(mode_latency({g.windows(), g.reduction(), g.c_out}, cfg.n, mapping[l]));
        cumulative.push_back(total);
    }

    std::vector<std::uint8_t> outcome(samples, 0);
    parallel_for(samples, cfg.threads, [&](std::size_t s) {
        const std::uint64_t seed = sample_seed(cfg.seed, ~std::uint64_t{0}, s);
        std::mt19937_64 pick(splitmix(seed));
        const double u = unit(pick) * total;
        const auto ord = static_cast<std::size_t>(
            std::min<std::ptrdiff_t>(std::upper_bound(cumulative.begin(), cumulative.end(), u) - cumulative.begin(),
                                     static_cast<std::ptrdiff_t>(convs - 1)));
        const FaultDraw draw = draw_fault(seed, cfg.kind);
        const GoldenRun& g = golden[s % golden.size()];
        const ConvRecord& rec = g.convs[ord];
        const ErrorPatch patch = propagate(realize(draw, contexts[ord], cfg.kind), contexts[ord],
                                           LayerOperands{rec.input, net.conv(ord).weights, &rec.output});
        if (patch.empty()) {
            outcome[s] = kMasked;
            return;
        }
        const InferenceResult r = resume_from(net, ord, apply_patch(rec.output, patch));
        outcome[s] = encode(classify(g.result.logits, r.logits));
    });

    MappingAvf out;
    out.mapping = mapping;
    out.cell.layer_name = "mapping";
    out.cell.mode = mapping.front();
    tally(out.cell, outcome, cfg.confidence);
    return out;
}

}  // namespace rrsa
