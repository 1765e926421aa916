/*
 * Copyright 2026 The rrsa Authors.
 * SPDX-License-Identifier: Apache-2.0
 */

// rrsa: command-line front end for golden runs, fault campaigns, mapping
// exploration, oracle verification and array simulation.

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "rrsa/campaign.hpp"
#include "rrsa/io.hpp"
#include "rrsa/perf.hpp"
#include "rrsa/sa_oracle.hpp"
#include "rrsa/verify.hpp"

using namespace rrsa;

namespace {

enum Exit { kOk = 0, kUsage = 1, kVerifyFailed = 2, kIo = 3 };

fs::path prepare_out(const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoError("cannot create output directory " + dir.string() + ": " + ec.message());
    return dir;
}

void write_file(RunManifest& m, const fs::path& path, const std::string& text) {
    write_text(path, text);
    m.outputs.push_back(path.string());
}

void finish_manifest(RunManifest& m, const fs::path& out) {
    m.finished = utc_timestamp();
    write_text(out / "manifest.json", m.to_json().dump(2) + "\n");
}

fs::path resolve_from(const fs::path& base, const std::string& p) {
    const fs::path path(p);
    return path.is_absolute() ? path : base / path;
}

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    for (std::string item; std::getline(ss, item, ',');)
        if (!item.empty()) out.push_back(item);
    return out;
}

// ---- make-fixture -------------------------------------------------------

struct FixtureArgs {
    std::string out = "fixture";
    std::uint64_t seed = 2024;
    std::size_t inputs = 8;
};

int cmd_make_fixture(const FixtureArgs& a) {
    const fs::path out = prepare_out(a.out);
    const Fixture fx = make_fixture(a.seed, a.inputs);
    save_network(fx.net, out / "fixture.json", out / "fixture.bin");
    save_inputs(fx.inputs, out / "inputs.json", out / "inputs.bin");
    std::cout << "wrote " << (out / "fixture.json").string() << " and " << (out / "inputs.json").string() << "\n";
    return kOk;
}

// ---- golden ------------------------------------------------------------

struct GoldenArgs {
    std::string net;
    std::string inputs;
    std::string out = "golden";
};

int cmd_golden(const GoldenArgs& a) {
    RunManifest m;
    m.command = "golden";
    m.started = utc_timestamp();
    m.add_input(a.net);
    m.add_input(a.inputs);
    const NetworkSpec net = load_network(a.net);
    const std::vector<QTensor> inputs = load_inputs(a.inputs);
    const fs::path out = prepare_out(a.out);

    std::string blob;
    Json runs = Json::array();
    for (std::size_t i = 0; i < inputs.size(); ++i) {
        Diagnostics diag;
        const GoldenRun g = golden_run(net, inputs[i], &diag);
        Json convs = Json::array();
        for (std::size_t c = 0; c < g.convs.size(); ++c) {
            const AccTensor& t = g.convs[c].output;
            const std::size_t offset = blob.size();
            for (std::int32_t v : t.data())
                for (int s = 0; s < 32; s += 8) blob.push_back(static_cast<char>(static_cast<std::uint32_t>(v) >> s));
            const auto* bytes = reinterpret_cast<const std::uint8_t*>(blob.data() + offset);
            convs.push_back({{"layer", net.conv(c).name},
                             {"shape", t.shape().dims()},
                             {"offset", offset},
                             {"sha256", sha256_hex(std::span(bytes, blob.size() - offset))}});
        }
        std::size_t top1 = 0;
        for (std::size_t k = 1; k < g.result.logits.size(); ++k)
            if (g.result.logits[k] > g.result.logits[top1]) top1 = k;
        runs.push_back({{"input", i},
                        {"top1", top1},
                        {"logits", g.result.logits},
                        {"scores", g.result.scores},
                        {"accumulator_overflows", diag.accumulator_overflows},
                        {"conv_outputs", std::move(convs)}});
    }
    const Json doc = {{"network", net.name}, {"layer_outputs", "layer_outputs.bin"}, {"runs", std::move(runs)}};
    write_file(m, out / "golden.json", doc.dump(2) + "\n");
    write_file(m, out / "layer_outputs.bin", blob);
    finish_manifest(m, out);
    std::cout << "golden: " << inputs.size() << " inputs -> " << (out / "golden.json").string() << "\n";
    return kOk;
}

// ---- campaign ----------------------------------------------------------

struct CampaignArgs {
    std::string config;
    std::string out = "campaign";
    std::optional<std::uint64_t> seed;
    std::optional<unsigned> threads;
};

int cmd_campaign(const CampaignArgs& a) {
    RunManifest m;
    m.command = "campaign";
    m.started = utc_timestamp();
    m.add_input(a.config);
    const Json j = read_json(a.config);
    const fs::path base = fs::path(a.config).parent_path();
    if (!j.contains("network") || !j.contains("inputs"))
        throw std::invalid_argument("campaign config needs 'network' and 'inputs' paths");
    const fs::path net_path = resolve_from(base, j.at("network").get<std::string>());
    const fs::path in_path = resolve_from(base, j.at("inputs").get<std::string>());
    m.add_input(net_path);
    m.add_input(in_path);
    CampaignConfig cfg = campaign_config_from_json(j);
    if (a.seed) cfg.seed = *a.seed;
    if (a.threads) cfg.threads = *a.threads;
    m.seed = cfg.seed;

    const NetworkSpec net = load_network(net_path);
    const std::vector<QTensor> inputs = load_inputs(in_path);
    const fs::path out = prepare_out(a.out);
    const AvfReport report = run_campaign(net, inputs, cfg);

    std::ostringstream csv;
    write_report_csv(csv, report);
    write_file(m, out / "report.json", to_json(report).dump(2) + "\n");
    write_file(m, out / "report.csv", csv.str());
    finish_manifest(m, out);
    std::cout << "campaign: " << report.cells.size() << " cells, " << cfg.sample_count() << " samples each -> "
              << (out / "report.csv").string() << "\n";
    if (report.accumulator_overflows)
        std::cerr << "warning: " << report.accumulator_overflows << " accumulator overflows in faulty runs\n";
    return kOk;
}

// ---- explore -----------------------------------------------------------

struct ExploreArgs {
    std::string config;
    std::string out = "explore";
    std::string modes;
};

std::vector<LayerMatMul> explore_layers(const Json& j, const fs::path& base, RunManifest& m) {
    if (j.contains("reference")) return reference_network(j.at("reference").get<std::string>());
    if (j.contains("network")) {
        const fs::path p = resolve_from(base, j.at("network").get<std::string>());
        m.add_input(p);
        return lowered_layers(load_network(p));
    }
    if (j.contains("layers")) {
        std::vector<LayerMatMul> out;
        for (const Json& l : j.at("layers"))
            out.push_back({l.at("p").get<long long>(), l.at("m").get<long long>(), l.at("k").get<long long>()});
        return out;
    }
    throw std::invalid_argument("explore config needs 'reference', 'network' or 'layers'");
}

int cmd_explore(const ExploreArgs& a) {
    RunManifest m;
    m.command = "explore";
    m.started = utc_timestamp();
    m.add_input(a.config);
    const Json j = read_json(a.config);
    const fs::path base = fs::path(a.config).parent_path();

    ExploreOptions opts;
    opts.n = j.value("n", opts.n);
    const std::string drg = j.value("drg", "drg0");
    const std::string trg = j.value("trg", "trg3");
    if (drg != "drg0" && drg != "drga") throw std::invalid_argument("explore: drg must be drg0 or drga");
    if (trg != "trg3" && trg != "trg4") throw std::invalid_argument("explore: trg must be trg3 or trg4");
    opts.drg = drg == "drg0" ? DrgOption::Zero : DrgOption::Average;
    opts.trg = trg == "trg3" ? TrgOption::Three : TrgOption::Four;
    opts.limit = j.value("limit", opts.limit);
    const std::string combine = j.value("combine", "work");
    if (combine != "work" && combine != "residency") throw std::invalid_argument("explore: combine must be work or residency");
    opts.combine = combine == "work" ? AvfCombine::WorkWeighted : AvfCombine::ResidencyWeighted;

    std::vector<std::string> modes;
    if (!a.modes.empty())
        modes = split_list(a.modes);
    else if (j.contains("modes"))
        modes = j.at("modes").get<std::vector<std::string>>();
    if (!modes.empty()) {
        opts.modes.clear();
        for (const auto& s : modes) {
            const auto mode = parse_mode(s);
            if (!mode) throw std::invalid_argument("explore: unknown mode '" + s + "'");
            opts.modes.push_back(*mode);
        }
    }

    const auto impl = implementation_params(opts.n, opts.drg, opts.trg);
    if (j.contains("power_w")) opts.power_w = j.at("power_w").get<double>();
    else if (impl) opts.power_w = impl->power_w;
    else throw std::invalid_argument("explore: power_w required for array size " + std::to_string(opts.n));
    if (j.contains("clock_mhz")) opts.clock_mhz = j.at("clock_mhz").get<double>();
    else if (impl) opts.clock_mhz = impl->clock_mhz;
    else throw std::invalid_argument("explore: clock_mhz required for array size " + std::to_string(opts.n));

    const std::vector<LayerMatMul> layers = explore_layers(j, base, m);
    std::vector<LayerAvf> table;
    if (j.contains("avf_report")) {
        const fs::path p = resolve_from(base, j.at("avf_report").get<std::string>());
        m.add_input(p);
        table = avf_table_from_report(report_from_json(read_json(p)), opts.drg);
    } else if (j.contains("avf_table")) {
        table = avf_table_from_json(j.at("avf_table"));
    } else {
        throw std::invalid_argument("explore config needs 'avf_report' or 'avf_table'");
    }

    const std::vector<MappingPoint> points = explore(layers, table, opts);
    const fs::path out = prepare_out(a.out);
    std::ostringstream csv, dat;
    write_explore_csv(csv, points);
    write_front_dat(dat, points);
    write_file(m, out / "pareto.csv", csv.str());
    write_file(m, out / "pareto.json", explore_summary(points, opts).dump(2) + "\n");
    write_file(m, out / "front.dat", dat.str());
    finish_manifest(m, out);
    std::size_t front = 0;
    for (const auto& p : points) front += p.pareto;
    std::cout << "explore: " << points.size() << " mappings, " << front << " on the Pareto front -> "
              << (out / "pareto.csv").string() << "\n";
    return kOk;
}

// ---- verify ------------------------------------------------------------

struct VerifyArgs {
    std::string config;
    std::string sizes;
    std::optional<std::size_t> cases;
    std::optional<std::uint64_t> seed;
    std::string mutation;
    unsigned threads = 1;
};

int cmd_verify(const VerifyArgs& a) {
    VerifyOptions opts;
    if (!a.config.empty()) {
        const Json j = read_json(a.config);
        if (j.contains("sizes")) opts.sizes = j.at("sizes").get<std::vector<int>>();
        opts.cases = j.value("cases", opts.cases);
        opts.seed = j.value("seed", opts.seed);
        if (j.contains("mutation")) {
            const auto mut = parse_mutation(j.at("mutation").get<std::string>());
            if (!mut) throw std::invalid_argument("verify: unknown mutation");
            opts.mutation = *mut;
        }
    }
    if (!a.sizes.empty()) {
        opts.sizes.clear();
        for (const auto& s : split_list(a.sizes)) opts.sizes.push_back(std::stoi(s));
    }
    if (a.cases) opts.cases = *a.cases;
    if (a.seed) opts.seed = *a.seed;
    if (!a.mutation.empty()) {
        const auto mut = parse_mutation(a.mutation);
        if (!mut) throw std::invalid_argument("verify: unknown mutation '" + a.mutation + "'");
        opts.mutation = *mut;
    }
    opts.threads = a.threads;

    const VerifyResult r = run_verification(opts);
    if (r.cases == 0) {
        std::cerr << "warning: zero cases requested, nothing was verified\n";
        std::cout << "verify: 0 cases, 0 passed, 0 failed\n";
        return kOk;
    }
    std::cout << "verify: " << r.cases << " cases, " << r.passed << " passed, " << r.failed << " failed (" << r.visible
              << " with a visible fault)";
    if (opts.mutation != Mutation::None) std::cout << " [mutation " << to_string(opts.mutation) << "]";
    std::cout << "\n";
    if (r.first_failure) {
        const Counterexample& c = *r.first_failure;
        const Json j = {{"fault", to_json(c.fault)},
                        {"n", c.n},
                        {"mode", to_string(c.mode)},
                        {"layer",
                         {{"c_in", c.layer.c_in},
                          {"c_out", c.layer.c_out},
                          {"h_in", c.layer.h_in},
                          {"w_in", c.layer.w_in},
                          {"kernel", {c.layer.h_k, c.layer.w_k}},
                          {"stride", c.layer.stride},
                          {"padding", c.layer.padding}}}};
        std::cerr << "first counterexample: " << j.dump() << "\n";
        return kVerifyFailed;
    }
    return kOk;
}

// ---- simulate ----------------------------------------------------------

struct SimulateArgs {
    int n = 8;
    std::string mode = "pm";
    int p = 8;
    int m = 8;
    int k = 8;
    std::uint64_t seed = 1;
    std::string fault;
    std::string trace;
};

int cmd_simulate(const SimulateArgs& a) {
    const auto mode = parse_exec_mode(a.mode);
    if (!mode) throw std::invalid_argument("simulate: unknown mode '" + a.mode + "'");
    if (a.p < 1 || a.m < 1 || a.k < 1) throw std::invalid_argument("simulate: P, M, K must be >= 1");
    std::mt19937_64 rng(a.seed);
    const auto fill = [&](int rows, int cols) {
        Matrix<std::int8_t> mat{rows, cols, std::vector<std::int8_t>(static_cast<std::size_t>(rows) * cols)};
        for (auto& v : mat.data) v = static_cast<std::int8_t>(static_cast<int>(rng() % 256) - 128);
        return mat;
    };
    const Matrix<std::int8_t> act = fill(a.p, a.m);
    const Matrix<std::int8_t> wt = fill(a.m, a.k);

    std::vector<CycleFault> faults;
    Json fault_json = nullptr;
    if (!a.fault.empty()) {
        fault_json = read_json(a.fault);
        faults.push_back(CycleFault::from(fault_from_json(fault_json)));
    }
    std::ofstream trace;
    SimOptions opts;
    if (!a.trace.empty()) {
        trace.open(a.trace);
        if (!trace) throw IoError("cannot write " + a.trace);
        opts.trace = &trace;
    }
    const SystolicArray sa(a.n, *mode);
    const MatmulResult r = sa.run_matmul(act, wt, faults, {}, opts);

    std::size_t wrong = 0;
    for (int i = 0; i < a.p; ++i)
        for (int j = 0; j < a.k; ++j) {
            std::int64_t acc = 0;
            for (int t = 0; t < a.m; ++t) acc += static_cast<std::int64_t>(act(i, t)) * wt(t, j);
            if (wrap32(acc) != r.out(i, j)) ++wrong;
        }
    const Json summary = {{"n", a.n},
                          {"mode", to_string(*mode)},
                          {"p", a.p},
                          {"m", a.m},
                          {"k", a.k},
                          {"tile_steps", r.tiles.size()},
                          {"cycles", r.total_cycles},
                          {"closed_form", mode_latency({a.p, a.m, a.k}, a.n, *mode)},
                          {"fault", fault_json},
                          {"corrupted_outputs", wrong}};
    std::cout << summary.dump(2) << "\n";
    return kOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"rrsa: reliability workbench for redundant systolic arrays"};
    app.require_subcommand(1);
    app.set_version_flag("--version", RRSA_VERSION);

    FixtureArgs fx;
    auto* mk = app.add_subcommand("make-fixture", "Write the seeded fixture network and inputs");
    mk->add_option("--out", fx.out, "Output directory")->capture_default_str();
    mk->add_option("--seed", fx.seed, "Generator seed")->capture_default_str();
    mk->add_option("--inputs", fx.inputs, "Number of inputs")->check(CLI::PositiveNumber)->capture_default_str();

    GoldenArgs ga;
    auto* golden = app.add_subcommand("golden", "Fault-free inference with per-layer outputs");
    golden->add_option("--net", ga.net, "Network JSON")->required();
    golden->add_option("--inputs", ga.inputs, "Input header JSON")->required();
    golden->add_option("--out", ga.out, "Output directory")->capture_default_str();

    CampaignArgs ca;
    auto* campaign = app.add_subcommand("campaign", "Statistical fault-injection campaign");
    campaign->add_option("config", ca.config, "Campaign config JSON")->required();
    campaign->add_option("--out", ca.out, "Output directory")->capture_default_str();
    campaign->add_option("--seed", ca.seed, "Override the config seed");
    campaign->add_option("--threads", ca.threads, "Concurrent fault evaluations")->check(CLI::PositiveNumber);

    ExploreArgs ea;
    auto* exp = app.add_subcommand("explore", "Mode-layer mapping exploration with Pareto front");
    exp->add_option("config", ea.config, "Explore config JSON")->required();
    exp->add_option("--out", ea.out, "Output directory")->capture_default_str();
    exp->add_option("--modes", ea.modes, "Comma-separated subset of pm,drg,trg");

    VerifyArgs va;
    auto* verify = app.add_subcommand("verify", "Propagation-vs-array equivalence sweep");
    verify->add_option("config", va.config, "Optional sweep config JSON");
    verify->add_option("--sizes", va.sizes, "Comma-separated array sizes (default 4,6,8,12)");
    verify->add_option("--cases", va.cases, "Number of random cases (default 1000)");
    verify->add_option("--seed", va.seed, "Sweep seed");
    verify->add_option("--mutation", va.mutation, "Inject a formula defect: channel, window or slot");
    verify->add_option("--threads", va.threads, "Worker threads")->check(CLI::PositiveNumber)->capture_default_str();

    SimulateArgs sa;
    auto* sim = app.add_subcommand("simulate", "Run a random matmul on the register-level array");
    sim->add_option("--n", sa.n, "Array size")->capture_default_str();
    sim->add_option("--mode", sa.mode, "pm, drg0, drga, trg3 or trg4")->capture_default_str();
    sim->add_option("--p", sa.p, "Activation rows")->capture_default_str();
    sim->add_option("--m", sa.m, "Reduction length")->capture_default_str();
    sim->add_option("--k", sa.k, "Weight columns")->capture_default_str();
    sim->add_option("--seed", sa.seed, "Operand seed")->capture_default_str();
    sim->add_option("--fault", sa.fault, "Fault JSON to inject");
    sim->add_option("--trace", sa.trace, "Write a per-cycle CSV trace to this file");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kUsage;
    }

    try {
        if (*mk) return cmd_make_fixture(fx);
        if (*golden) return cmd_golden(ga);
        if (*campaign) return cmd_campaign(ca);
        if (*exp) return cmd_explore(ea);
        if (*verify) return cmd_verify(va);
        if (*sim) return cmd_simulate(sa);
    } catch (const IoError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kIo;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kUsage;
    }
    return kUsage;
}
