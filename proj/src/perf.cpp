/*
 * Copyright 2026 The rrsa Authors.
 * SPDX-License-Identifier: Apache-2.0
 */

#include "rrsa/perf.hpp"

#include <algorithm>
#include <limits>
#include <numeric>

namespace rrsa {

namespace {

long long ceil_div(long long a, long long b) { return (a + b - 1) / b; }

void require_support(int n, ExecMode mode) {
    if (!supports(n, mode))
        throw std::invalid_argument("array size " + std::to_string(n) + " does not support " +
                                    std::string(to_string(mode)));
}

}  // namespace

long long tile_latency(int n, ExecMode mode, long long m) {
    require_support(n, mode);
    const EffectiveSize eff = effective_size(n, mode);
    const long long correction = mode == ExecMode::PM ? 0 : 1;
    return m + (eff.rows - 1) + (eff.cols - 1) + correction;
}

long long mode_latency(const LayerMatMul& layer, int n, ExecMode mode) {
    if (layer.p < 1 || layer.m < 1 || layer.k < 1) throw std::invalid_argument("layer P, M, K must be >= 1");
    const EffectiveSize eff = effective_size(n, mode);
    return ceil_div(layer.p, eff.rows) * ceil_div(layer.k, eff.cols) * tile_latency(n, mode, layer.m);
}

NetworkLatency network_latency(const std::vector<LayerMatMul>& layers, const std::vector<ExecMode>& mapping, int n) {
    if (layers.size() != mapping.size()) throw std::invalid_argument("mapping length differs from the layer count");
    NetworkLatency out;
    long long baseline = 0;
    for (std::size_t i = 0; i < layers.size(); ++i) {
        out.cycles += mode_latency(layers[i], n, mapping[i]);
        baseline += mode_latency(layers[i], n, ExecMode::PM);
    }
    out.normalized = baseline > 0 ? static_cast<double>(out.cycles) / static_cast<double>(baseline) : 1.0;
    return out;
}

double energy_mwh(long long cycles, double power_w, double clock_mhz) {
    if (!(power_w > 0) || !(clock_mhz > 0)) throw std::invalid_argument("energy needs positive power and clock");
    const double seconds = static_cast<double>(cycles) / (clock_mhz * 1e6);
    return power_w * seconds / 3600.0 * 1000.0;
}

std::optional<ImplementationParams> implementation_params(int n, DrgOption drg, TrgOption trg) {
    const int idx = (drg == DrgOption::Zero ? 0 : 2) + (trg == TrgOption::Three ? 0 : 1);
    // PM-DRG0-TRG3, PM-DRG0-TRG4, PM-DRGA-TRG3, PM-DRGA-TRG4
    static constexpr std::array<ImplementationParams, 4> k48 = {{
        {1.937, 0.177, 357}, {1.929, 0.176, 372}, {2.129, 0.193, 303}, {2.091, 0.190, 302}}};
    static constexpr std::array<ImplementationParams, 4> k132 = {{
        {14.243, 4.053, 252}, {14.284, 4.029, 249}, {15.826, 4.552, 230}, {15.605, 4.489, 262}}};
    if (n == 48) return k48[idx];
    if (n == 132) return k132[idx];
    return std::nullopt;
}

std::optional<ImplementationParams> baseline_params(int n) {
    if (n == 48) return ImplementationParams{1.726, 0.158, 402};
    if (n == 132) return ImplementationParams{12.533, 3.625, 285};
    return std::nullopt;
}

MissingAvfError::MissingAvfError(std::vector<std::string> cells)
    : std::invalid_argument([&] {
          std::string msg = "AVF table is missing cells:";
          for (const auto& c : cells) msg += " " + c;
          return msg;
      }()),
      cells_(std::move(cells)) {}

std::string mapping_label(const std::vector<Mode>& modes) {
    std::string s;
    for (std::size_t i = 0; i < modes.size(); ++i) {
        if (i) s += '-';
        s += to_string(modes[i]);
    }
    return s;
}

LayerMatMul conv_matmul(int c_in, int c_out, int h_in, int kernel, int stride, int padding) {
    const long long out = (h_in + 2 * padding - kernel) / stride + 1;
    return {out * out, static_cast<long long>(c_in) * kernel * kernel, c_out};
}

std::vector<LayerMatMul> reference_network(std::string_view name) {
    if (name == "alexnet")
        return {conv_matmul(3, 64, 224, 11, 4, 2), conv_matmul(64, 192, 27, 5, 1, 2), conv_matmul(192, 384, 13, 3, 1, 1),
                conv_matmul(384, 256, 13, 3, 1, 1), conv_matmul(256, 256, 13, 3, 1, 1)};
    if (name == "vgg11")
        return {conv_matmul(3, 64, 224, 3, 1, 1),   conv_matmul(64, 128, 112, 3, 1, 1),
                conv_matmul(128, 256, 56, 3, 1, 1), conv_matmul(256, 256, 56, 3, 1, 1),
                conv_matmul(256, 512, 28, 3, 1, 1), conv_matmul(512, 512, 28, 3, 1, 1),
                conv_matmul(512, 512, 14, 3, 1, 1), conv_matmul(512, 512, 14, 3, 1, 1)};
    throw std::invalid_argument("unknown reference network '" + std::string(name) + "'");
}

namespace {

ExecMode exec_of(Mode m, const ExploreOptions& o) { return resolve(m, o.drg, o.trg); }

AvfVector layer_avf(const LayerAvf& t, Mode m) {
    switch (m) {
        case Mode::PM: return *t.pm;
        case Mode::DRG: return *t.drg;
        case Mode::TRG: return AvfVector{};
    }
    return AvfVector{};
}

void check_table(const std::vector<LayerMatMul>& layers, const std::vector<LayerAvf>& table,
                 const std::vector<Mode>& modes) {
    if (table.size() != layers.size())
        throw std::invalid_argument("AVF table has " + std::to_string(table.size()) + " layers, network has " +
                                    std::to_string(layers.size()));
    const bool need_pm = true;  // work weights and normalization use PM
    const bool need_drg = std::find(modes.begin(), modes.end(), Mode::DRG) != modes.end();
    std::vector<std::string> missing;
    for (std::size_t i = 0; i < table.size(); ++i) {
        if (need_pm && !table[i].pm) missing.push_back("layer" + std::to_string(i) + "/pm");
        if (need_drg && !table[i].drg) missing.push_back("layer" + std::to_string(i) + "/drg");
    }
    if (!missing.empty()) throw MissingAvfError(std::move(missing));
}

MappingPoint evaluate(const std::vector<LayerMatMul>& layers, const std::vector<LayerAvf>& table,
                      std::vector<Mode> mapping, const ExploreOptions& opts, long long baseline) {
    MappingPoint pt;
    for (std::size_t i = 0; i < layers.size(); ++i) pt.latency_cycles += mode_latency(layers[i], opts.n, exec_of(mapping[i], opts));
    pt.latency_normalized = static_cast<double>(pt.latency_cycles) / static_cast<double>(baseline);
    pt.energy_mwh = energy_mwh(pt.latency_cycles, opts.power_w, opts.clock_mhz);
    pt.avf = combine_avf(layers, table, mapping, opts);
    pt.modes = std::move(mapping);
    return pt;
}

}  // namespace

AvfVector combine_avf(const std::vector<LayerMatMul>& layers, const std::vector<LayerAvf>& table,
                      const std::vector<Mode>& mapping, const ExploreOptions& opts) {
    if (mapping.size() != layers.size()) throw std::invalid_argument("mapping length differs from the layer count");
    std::vector<double> weight(layers.size());
    for (std::size_t i = 0; i < layers.size(); ++i) {
        const ExecMode m = opts.combine == AvfCombine::WorkWeighted ? ExecMode::PM : exec_of(mapping[i], opts);
        weight[i] = static_cast<double>(mode_latency(layers[i], opts.n, m));
    }
    const double total = std::accumulate(weight.begin(), weight.end(), 0.0);
    AvfVector out{};
    for (std::size_t i = 0; i < layers.size(); ++i) {
        const AvfVector a = layer_avf(table[i], mapping[i]);
        for (std::size_t c = 0; c < out.size(); ++c) out[c] += weight[i] / total * a[c];
    }
    return out;
}

void mark_pareto(std::vector<MappingPoint>& points) {
    std::vector<std::size_t> order(points.size());
    std::iota(order.begin(), order.end(), 0);
    const auto avf = [&](std::size_t i) { return points[i].avf[static_cast<int>(ErrorClass::Top1Class)]; };
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (points[a].latency_cycles != points[b].latency_cycles) return points[a].latency_cycles < points[b].latency_cycles;
        return avf(a) < avf(b);
    });
    double best_before = std::numeric_limits<double>::infinity();  // min AVF at strictly lower latency
    for (std::size_t g = 0; g < order.size();) {
        std::size_t end = g;
        const long long lat = points[order[g]].latency_cycles;
        while (end < order.size() && points[order[end]].latency_cycles == lat) ++end;
        const double group_min = avf(order[g]);
        for (std::size_t i = g; i < end; ++i)
            points[order[i]].pareto = avf(order[i]) == group_min && !(best_before <= group_min);
        best_before = std::min(best_before, group_min);
        g = end;
    }
}

std::vector<MappingPoint> explore(const std::vector<LayerMatMul>& layers, const std::vector<LayerAvf>& table,
                                  const ExploreOptions& opts) {
    if (layers.empty()) throw std::invalid_argument("explore: no layers");
    if (opts.modes.empty()) throw std::invalid_argument("explore: no modes");
    std::vector<Mode> modes = opts.modes;
    std::sort(modes.begin(), modes.end());
    modes.erase(std::unique(modes.begin(), modes.end()), modes.end());
    for (Mode m : modes) require_support(opts.n, exec_of(m, opts));
    check_table(layers, table, modes);

    long long baseline = 0;
    for (const auto& l : layers) baseline += mode_latency(l, opts.n, ExecMode::PM);

    const std::size_t L = layers.size();
    const std::size_t base = modes.size();
    double count = 1;
    for (std::size_t i = 0; i < L; ++i) count *= static_cast<double>(base);

    std::vector<MappingPoint> points;
    if (count <= static_cast<double>(opts.limit)) {
        const auto total = static_cast<std::size_t>(count);
        points.reserve(total);
        std::vector<Mode> mapping(L);
        for (std::size_t code = 0; code < total; ++code) {
            std::size_t rest = code;
            for (std::size_t i = L; i-- > 0;) {
                mapping[i] = modes[rest % base];
                rest /= base;
            }
            points.push_back(evaluate(layers, table, mapping, opts, baseline));
        }
    } else {
        // Greedy sweep: from the cheapest mapping, repeatedly take the
        // single-layer upgrade with the best AVF reduction per added cycle.
        std::vector<std::size_t> level(L, 0);
        std::vector<Mode> mapping(L, modes.front());
        points.push_back(evaluate(layers, table, mapping, opts, baseline));
        for (;;) {
            std::optional<std::size_t> pick;
            double best = -std::numeric_limits<double>::infinity();
            const MappingPoint& cur = points.back();
            for (std::size_t i = 0; i < L; ++i) {
                if (level[i] + 1 >= base) continue;
                std::vector<Mode> trial = mapping;
                trial[i] = modes[level[i] + 1];
                const MappingPoint t = evaluate(layers, table, trial, opts, baseline);
                const double gain = cur.avf[0] - t.avf[0];
                const double cost = static_cast<double>(t.latency_cycles - cur.latency_cycles);
                const double score = cost <= 0 ? std::numeric_limits<double>::max() : gain / cost;
                if (!pick || score > best) {
                    best = score;
                    pick = i;
                }
            }
            if (!pick) break;
            ++level[*pick];
            mapping[*pick] = modes[level[*pick]];
            points.push_back(evaluate(layers, table, mapping, opts, baseline));
        }
    }
    mark_pareto(points);
    return points;
}

}  // namespace rrsa
