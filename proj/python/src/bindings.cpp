/*
 * Copyright 2026 The rrsa Authors.
 * SPDX-License-Identifier: Apache-2.0
 */

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <limits>
#include <string>
#include <vector>

#include "rrsa/campaign.hpp"
#include "rrsa/io.hpp"
#include "rrsa/perf.hpp"
#include "rrsa/propagation.hpp"
#include "rrsa/sa_oracle.hpp"
#include "rrsa/verify.hpp"

namespace py = pybind11;
using namespace rrsa;

namespace {

using Int8Array = py::array_t<std::int8_t, py::array::c_style | py::array::forcecast>;

ExecMode exec_mode(const std::string& s) {
    const auto m = parse_exec_mode(s);
    if (!m) throw std::invalid_argument("unknown mode '" + s + "'");
    return *m;
}

Matrix<std::int8_t> to_matrix(const Int8Array& a) {
    if (a.ndim() != 2) throw std::invalid_argument("expected a 2-d int8 array");
    const auto rows = static_cast<int>(a.shape(0));
    const auto cols = static_cast<int>(a.shape(1));
    return {rows, cols, std::vector<std::int8_t>(a.data(), a.data() + a.size())};
}

QTensor to_qtensor(const Int8Array& a) {
    std::vector<int> dims(a.shape(), a.shape() + a.ndim());
    return {Shape(std::move(dims)), std::vector<std::int8_t>(a.data(), a.data() + a.size())};
}

ConvLayerSpec layer_from_dict(const py::dict& d) {
    ConvLayerSpec g;
    g.c_in = d["c_in"].cast<int>();
    g.c_out = d["c_out"].cast<int>();
    g.h_in = d["h_in"].cast<int>();
    g.w_in = d["w_in"].cast<int>();
    g.h_k = d["h_k"].cast<int>();
    g.w_k = d["w_k"].cast<int>();
    if (d.contains("stride")) g.stride = d["stride"].cast<int>();
    if (d.contains("padding")) g.padding = d["padding"].cast<int>();
    if (d.contains("bias")) g.bias = d["bias"].cast<std::vector<std::int32_t>>();
    g.validate();
    return g;
}

py::array_t<std::int32_t> to_array(const Matrix<std::int32_t>& m) {
    py::array_t<std::int32_t> out({m.rows, m.cols});
    std::copy(m.data.begin(), m.data.end(), out.mutable_data());
    return out;
}

py::array_t<std::int32_t> to_array(const AccTensor& t) {
    const auto& dims = t.shape().dims();
    py::array_t<std::int32_t> out(std::vector<py::ssize_t>(dims.begin(), dims.end()));
    std::copy(t.data().begin(), t.data().end(), out.mutable_data());
    return out;
}

py::tuple simulate(const Int8Array& a, const Int8Array& w, int n, const std::string& mode,
                   const std::vector<std::string>& faults) {
    std::vector<CycleFault> cycle_faults;
    for (const auto& f : faults) cycle_faults.push_back(CycleFault::from(fault_from_json(Json::parse(f))));
    const MatmulResult r = SystolicArray(n, exec_mode(mode)).run_matmul(to_matrix(a), to_matrix(w), cycle_faults);
    return py::make_tuple(to_array(r.out), r.total_cycles);
}

std::string propagate_fault(const std::string& fault, const py::dict& layer, const Int8Array& input,
                            const Int8Array& weights, int n, const std::string& mode) {
    const ConvLayerSpec g = layer_from_dict(layer);
    const QTensor x = to_qtensor(input);
    const QTensor wt = to_qtensor(weights);
    const AccTensor golden = conv_forward(x, g, wt);
    const MappingContext ctx(g, n, exec_mode(mode));
    return to_json(propagate(fault_from_json(Json::parse(fault)), ctx, LayerOperands{x, wt, &golden})).dump();
}

py::tuple conv_pair(const std::string& fault, const py::dict& layer, const Int8Array& input, const Int8Array& weights,
                    int n, const std::string& mode) {
    const ConvLayerSpec g = layer_from_dict(layer);
    const QTensor x = to_qtensor(input);
    const QTensor wt = to_qtensor(weights);
    const FaultSpec f = fault_from_json(Json::parse(fault));
    const AccTensor golden = conv_forward(x, g, wt);
    const MappingContext ctx(g, n, exec_mode(mode));
    const AccTensor analytic = apply_patch(golden, propagate(f, ctx, LayerOperands{x, wt, &golden}));
    const AccTensor oracle = oracle_conv(x, g, wt, n, exec_mode(mode), {CycleFault::from(f)});
    return py::make_tuple(to_array(analytic), to_array(oracle));
}

std::string run_campaign_json(const std::string& network, const std::string& inputs, const std::string& config) {
    const NetworkSpec net = load_network(network);
    const std::vector<QTensor> in = load_inputs(inputs);
    return to_json(run_campaign(net, in, campaign_config_from_json(Json::parse(config)))).dump();
}

py::dict verify(std::size_t cases, std::uint64_t seed, const std::vector<int>& sizes, const std::string& mutation) {
    VerifyOptions opts;
    opts.cases = cases;
    opts.seed = seed;
    opts.sizes = sizes;
    const auto m = parse_mutation(mutation);
    if (!m) throw std::invalid_argument("unknown mutation '" + mutation + "'");
    opts.mutation = *m;
    const VerifyResult r = run_verification(opts);
    py::dict out;
    out["cases"] = r.cases;
    out["passed"] = r.passed;
    out["failed"] = r.failed;
    out["visible"] = r.visible;
    return out;
}

std::string explore_json(const std::vector<std::tuple<long long, long long, long long>>& layers,
                         const std::string& avf_table, int n, const std::vector<std::string>& modes,
                         const std::string& drg, const std::string& trg) {
    std::vector<LayerMatMul> mm;
    for (const auto& [p, m, k] : layers) mm.push_back({p, m, k});
    ExploreOptions opts;
    opts.n = n;
    opts.drg = drg == "drga" ? DrgOption::Average : DrgOption::Zero;
    opts.trg = trg == "trg4" ? TrgOption::Four : TrgOption::Three;
    opts.modes.clear();
    for (const auto& s : modes) {
        const auto mode = parse_mode(s);
        if (!mode) throw std::invalid_argument("unknown mode '" + s + "'");
        opts.modes.push_back(*mode);
    }
    Json out = Json::array();
    for (const MappingPoint& p : explore(mm, avf_table_from_json(Json::parse(avf_table)), opts)) {
        out.push_back({{"mapping", mapping_label(p.modes)},
                       {"latency_cycles", p.latency_cycles},
                       {"latency_normalized", p.latency_normalized},
                       {"energy_mwh", p.energy_mwh},
                       {"avf", p.avf},
                       {"pareto", p.pareto}});
    }
    return out.dump();
}

void save_fixture(const std::string& dir, std::uint64_t seed, std::size_t inputs) {
    const Fixture fx = make_fixture(seed, inputs);
    const fs::path out(dir);
    fs::create_directories(out);
    save_network(fx.net, out / "fixture.json", out / "fixture.bin");
    save_inputs(fx.inputs, out / "inputs.json", out / "inputs.bin");
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Fault injection and latency models for redundant systolic arrays";

    py::register_exception<IoError>(m, "IoError", PyExc_OSError);

    m.def("sample_size", &sample_size, py::arg("confidence"), py::arg("margin"), py::arg("population") = std::numeric_limits<double>::infinity(),
          "Fault samples needed for the given confidence and error margin");
    m.def(
        "wilson_interval",
        [](std::size_t errors, std::size_t samples, double confidence) {
            const Interval i = wilson_interval(errors, samples, confidence);
            return py::make_tuple(i.low, i.high);
        },
        py::arg("errors"), py::arg("samples"), py::arg("confidence") = 0.95);
    m.def(
        "mode_latency",
        [](long long p, long long mm, long long k, int n, const std::string& mode) {
            return mode_latency({p, mm, k}, n, exec_mode(mode));
        },
        py::arg("p"), py::arg("m"), py::arg("k"), py::arg("n"), py::arg("mode"));
    m.def(
        "effective_size",
        [](int n, const std::string& mode) {
            const EffectiveSize e = effective_size(n, exec_mode(mode));
            return py::make_tuple(e.rows, e.cols);
        },
        py::arg("n"), py::arg("mode"));
    m.def("simulate", &simulate, py::arg("a"), py::arg("w"), py::arg("n"), py::arg("mode") = "pm",
          py::arg("faults") = std::vector<std::string>{});
    m.def("propagate", &propagate_fault, py::arg("fault"), py::arg("layer"), py::arg("input"), py::arg("weights"),
          py::arg("n"), py::arg("mode") = "pm");
    m.def("conv_pair", &conv_pair, py::arg("fault"), py::arg("layer"), py::arg("input"), py::arg("weights"),
          py::arg("n"), py::arg("mode") = "pm");
    m.def("run_campaign", &run_campaign_json, py::arg("network"), py::arg("inputs"), py::arg("config"),
          py::call_guard<py::gil_scoped_release>());
    m.def("verify", &verify, py::arg("cases") = 1000, py::arg("seed") = 1,
          py::arg("sizes") = std::vector<int>{4, 6, 8, 12}, py::arg("mutation") = "none");
    m.def("explore", &explore_json, py::arg("layers"), py::arg("avf_table"), py::arg("n") = 48,
          py::arg("modes") = std::vector<std::string>{"pm", "drg", "trg"}, py::arg("drg") = "drg0",
          py::arg("trg") = "trg3");
    m.def("reference_network", [](const std::string& name) {
        std::vector<std::tuple<long long, long long, long long>> out;
        for (const LayerMatMul& l : reference_network(name)) out.emplace_back(l.p, l.m, l.k);
        return out;
    });
    m.def("make_fixture", &save_fixture, py::arg("out"), py::arg("seed") = 2024, py::arg("inputs") = 8);
}
