/*
 * Copyright 2026 The rrsa Authors.
 * SPDX-License-Identifier: Apache-2.0
 */

#include "rrsa/io.hpp"

#include <algorithm>
#include <bit>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <ctime>
#include <functional>
#include <fstream>
#include <iterator>
#include <ostream>
#include <random>
#include <sstream>

#include <openssl/evp.h>

#ifndef RRSA_VERSION
#define RRSA_VERSION "0.0.0"
#endif

namespace rrsa {

std::string format_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.10g", v);
    return buf;
}

std::string utc_timestamp() {
    const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

namespace {

std::vector<std::uint8_t> read_bytes(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_bytes(const fs::path& path, const std::vector<std::uint8_t>& bytes) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path.string());
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("write failed for " + path.string());
}

// Little-endian cursor over a weight blob.
class Reader {
public:
    Reader(const std::vector<std::uint8_t>& bytes, std::size_t offset, std::string what)
        : bytes_(bytes), pos_(offset), what_(std::move(what)) {}

    std::int8_t i8() { return static_cast<std::int8_t>(take(1)[0]); }
    std::int32_t i32() { return static_cast<std::int32_t>(u32()); }
    float f32() { return std::bit_cast<float>(u32()); }

private:
    std::uint32_t u32() {
        const std::uint8_t* p = take(4);
        return static_cast<std::uint32_t>(p[0]) | static_cast<std::uint32_t>(p[1]) << 8 |
               static_cast<std::uint32_t>(p[2]) << 16 | static_cast<std::uint32_t>(p[3]) << 24;
    }
    const std::uint8_t* take(std::size_t n) {
        if (pos_ + n > bytes_.size()) throw IoError("weight blob truncated while reading " + what_);
        const std::uint8_t* p = bytes_.data() + pos_;
        pos_ += n;
        return p;
    }

    const std::vector<std::uint8_t>& bytes_;
    std::size_t pos_;
    std::string what_;
};

void put_i32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    for (int s = 0; s < 32; s += 8) out.push_back(static_cast<std::uint8_t>(v >> s));
}

// One parameter block: int8 weights, int32 biases, float32 weight scale.
void put_block(std::vector<std::uint8_t>& out, const QTensor& w, const std::vector<std::int32_t>& bias, int outputs) {
    for (std::int8_t v : w.data()) out.push_back(static_cast<std::uint8_t>(v));
    for (int k = 0; k < outputs; ++k) put_i32(out, static_cast<std::uint32_t>(bias.empty() ? 0 : bias[k]));
    put_i32(out, std::bit_cast<std::uint32_t>(static_cast<float>(w.scale())));
}

template <typename T>
T field(const Json& j, const char* key, const std::string& where) {
    if (!j.contains(key)) throw std::invalid_argument(where + ": missing field '" + key + "'");
    try {
        return j.at(key).get<T>();
    } catch (const nlohmann::json::exception& e) {
        throw std::invalid_argument(where + ": field '" + key + "': " + e.what());
    }
}

std::vector<int> int_list(const Json& j, const char* key, const std::string& where) {
    return field<std::vector<int>>(j, key, where);
}

}  // namespace

Json read_json(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    try {
        return Json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw std::invalid_argument(path.string() + ": " + e.what());
    }
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path.string());
    out << text;
    if (!out) throw IoError("write failed for " + path.string());
}

NetworkSpec load_network(const fs::path& json_path) {
    const Json j = read_json(json_path);
    const std::string where = json_path.string();
    NetworkSpec net;
    net.name = j.value("name", "network");
    const Json& input = j.at("input");
    net.input_shape = Shape(int_list(input, "shape", where + " input"));
    net.input_scale = field<double>(input, "scale", where + " input");
    net.num_classes = field<int>(j, "num_classes", where);
    const std::vector<std::uint8_t> blob = read_bytes(json_path.parent_path() / field<std::string>(j, "weights", where));

    std::size_t li = 0;
    for (const Json& l : field<Json>(j, "layers", where)) {
        const std::string at = where + " layer " + std::to_string(li++);
        const std::string type = field<std::string>(l, "type", at);
        if (type == "conv") {
            ConvLayer c;
            c.name = l.value("name", "conv" + std::to_string(li));
            ConvLayerSpec& g = c.geom;
            g.c_in = field<int>(l, "c_in", at);
            g.c_out = field<int>(l, "c_out", at);
            g.h_in = field<int>(l, "h_in", at);
            g.w_in = field<int>(l, "w_in", at);
            const auto k = int_list(l, "kernel", at);
            if (k.size() != 2) throw std::invalid_argument(at + ": kernel must be [h, w]");
            g.h_k = k[0];
            g.w_k = k[1];
            g.stride = l.value("stride", 1);
            g.padding = l.value("padding", 0);
            g.validate();
            Reader r(blob, field<std::size_t>(l, "offset", at), c.name);
            std::vector<std::int8_t> w(static_cast<std::size_t>(g.c_out) * g.c_in * g.h_k * g.w_k);
            for (auto& v : w) v = r.i8();
            g.bias.resize(static_cast<std::size_t>(g.c_out));
            for (auto& b : g.bias) b = r.i32();
            const float scale = r.f32();
            c.weights = QTensor(Shape{g.c_out, g.c_in, g.h_k, g.w_k}, std::move(w), scale);
            net.layers.emplace_back(std::move(c));
        } else if (type == "relu") {
            net.layers.emplace_back(ReluLayer{});
        } else if (type == "maxpool") {
            net.layers.emplace_back(MaxPoolLayer{l.value("kernel", 2), l.value("stride", 2)});
        } else if (type == "quantize") {
            net.layers.emplace_back(QuantizeLayer{field<double>(l, "scale", at)});
        } else if (type == "fc") {
            FcLayer fc;
            fc.name = l.value("name", "fc" + std::to_string(li));
            fc.in_features = field<int>(l, "in_features", at);
            fc.out_features = field<int>(l, "out_features", at);
            if (fc.in_features < 1 || fc.out_features < 1) throw std::invalid_argument(at + ": fc sizes must be >= 1");
            Reader r(blob, field<std::size_t>(l, "offset", at), fc.name);
            std::vector<std::int8_t> w(static_cast<std::size_t>(fc.out_features) * fc.in_features);
            for (auto& v : w) v = r.i8();
            fc.bias.resize(static_cast<std::size_t>(fc.out_features));
            for (auto& b : fc.bias) b = r.i32();
            const float scale = r.f32();
            fc.weights = QTensor(Shape{fc.out_features, fc.in_features}, std::move(w), scale);
            net.layers.emplace_back(std::move(fc));
        } else {
            throw std::invalid_argument(at + ": unknown layer type '" + type + "'");
        }
    }
    net.validate();
    return net;
}

void save_network(const NetworkSpec& net, const fs::path& json_path, const fs::path& weights_path) {
    std::vector<std::uint8_t> blob;
    Json layers = Json::array();
    for (const Layer& layer : net.layers) {
        Json l;
        if (const auto* c = std::get_if<ConvLayer>(&layer)) {
            const ConvLayerSpec& g = c->geom;
            l = {{"type", "conv"}, {"name", c->name}, {"c_in", g.c_in}, {"c_out", g.c_out}, {"h_in", g.h_in},
                 {"w_in", g.w_in}, {"kernel", {g.h_k, g.w_k}}, {"stride", g.stride}, {"padding", g.padding},
                 {"offset", blob.size()}};
            put_block(blob, c->weights, g.bias, g.c_out);
        } else if (std::holds_alternative<ReluLayer>(layer)) {
            l = {{"type", "relu"}};
        } else if (const auto* p = std::get_if<MaxPoolLayer>(&layer)) {
            l = {{"type", "maxpool"}, {"kernel", p->kernel}, {"stride", p->stride}};
        } else if (const auto* q = std::get_if<QuantizeLayer>(&layer)) {
            l = {{"type", "quantize"}, {"scale", q->scale}};
        } else if (const auto* fc = std::get_if<FcLayer>(&layer)) {
            l = {{"type", "fc"}, {"name", fc->name}, {"in_features", fc->in_features},
                 {"out_features", fc->out_features}, {"offset", blob.size()}};
            put_block(blob, fc->weights, fc->bias, fc->out_features);
        }
        layers.push_back(std::move(l));
    }
    Json j = {{"name", net.name},
              {"input", {{"shape", net.input_shape.dims()}, {"scale", net.input_scale}}},
              {"num_classes", net.num_classes},
              {"weights", fs::relative(weights_path, json_path.parent_path()).generic_string()},
              {"layers", std::move(layers)}};
    write_bytes(weights_path, blob);
    write_text(json_path, j.dump(2) + "\n");
}

std::vector<QTensor> load_inputs(const fs::path& header_path) {
    const Json j = read_json(header_path);
    const std::string where = header_path.string();
    const Shape shape(int_list(j, "shape", where));
    const double scale = field<double>(j, "scale", where);
    const auto count = field<std::size_t>(j, "count", where);
    if (count == 0) throw std::invalid_argument(where + ": input set is empty");
    const std::vector<std::uint8_t> data = read_bytes(header_path.parent_path() / field<std::string>(j, "data", where));
    if (data.size() != count * shape.numel())
        throw IoError(where + ": expected " + std::to_string(count * shape.numel()) + " bytes of input data, found " +
                      std::to_string(data.size()));
    std::vector<QTensor> out;
    for (std::size_t i = 0; i < count; ++i) {
        std::vector<std::int8_t> v(shape.numel());
        std::memcpy(v.data(), data.data() + i * shape.numel(), v.size());
        out.emplace_back(shape, std::move(v), scale);
    }
    return out;
}

void save_inputs(std::span<const QTensor> inputs, const fs::path& header_path, const fs::path& data_path) {
    if (inputs.empty()) throw std::invalid_argument("save_inputs: no inputs");
    std::vector<std::uint8_t> data;
    for (const QTensor& t : inputs) {
        if (t.shape() != inputs.front().shape()) throw std::invalid_argument("save_inputs: inputs differ in shape");
        for (std::int8_t v : t.data()) data.push_back(static_cast<std::uint8_t>(v));
    }
    const Json j = {{"shape", inputs.front().shape().dims()},
                    {"scale", inputs.front().scale()},
                    {"count", inputs.size()},
                    {"data", fs::relative(data_path, header_path.parent_path()).generic_string()}};
    write_bytes(data_path, data);
    write_text(header_path, j.dump(2) + "\n");
}

Fixture make_fixture(std::uint64_t seed, std::size_t count) {
    constexpr std::size_t kFixturePool = 16;
    std::mt19937_64 rng(seed);
    const auto uniform = [&](int lo, int hi) {
        return lo + static_cast<int>(rng() % static_cast<std::uint64_t>(hi - lo + 1));
    };
    const auto tensor = [&](Shape shape, int lo, int hi, double scale) {
        QTensor t(std::move(shape), scale);
        for (auto& v : t.data()) v = static_cast<std::int8_t>(uniform(lo, hi));
        return t;
    };
    const auto conv = [&](std::string name, int c_in, int c_out, int hw) {
        ConvLayer c;
        c.name = std::move(name);
        c.geom = ConvLayerSpec{c_in, c_out, hw, hw, 3, 3, 1, 1, {}};
        for (int k = 0; k < c_out; ++k) c.geom.bias.push_back(uniform(-256, 256));
        c.weights = tensor(Shape{c_out, c_in, 3, 3}, -64, 64, 1.0 / 128);
        return c;
    };

    Fixture fx;
    NetworkSpec& net = fx.net;
    net.name = "fixture";
    net.input_shape = Shape{3, 12, 12};
    net.input_scale = 1.0 / 64;
    net.num_classes = 10;
    net.layers.emplace_back(conv("conv1", 3, 12, 12));
    net.layers.emplace_back(ReluLayer{});
    net.layers.emplace_back(QuantizeLayer{1.0});
    net.layers.emplace_back(MaxPoolLayer{2, 2});
    net.layers.emplace_back(conv("conv2", 12, 24, 6));
    net.layers.emplace_back(ReluLayer{});
    net.layers.emplace_back(QuantizeLayer{1.0});
    net.layers.emplace_back(MaxPoolLayer{2, 2});
    FcLayer fc;
    fc.name = "fc";
    fc.in_features = 24 * 3 * 3;
    fc.out_features = 10;
    fc.weights = tensor(Shape{10, fc.in_features}, -64, 64, 1.0 / 128);
    for (int k = 0; k < 10; ++k) fc.bias.push_back(uniform(-512, 512));
    net.layers.emplace_back(std::move(fc));

    std::vector<QTensor> pool;
    for (std::size_t i = 0; i < count * kFixturePool; ++i)
        pool.push_back(tensor(net.input_shape, -128, 127, net.input_scale));

    // Max-abs calibration of each requantization step on the candidate pool.
    for (std::size_t li = 0; li < net.layers.size(); ++li) {
        auto* q = std::get_if<QuantizeLayer>(&net.layers[li]);
        if (!q) continue;
        NetworkSpec prefix = net;
        prefix.layers.resize(li);
        double peak = 0;
        for (const QTensor& in : pool)
            for (double v : forward(prefix, in).logits) peak = std::max(peak, std::abs(v));
        q->scale = peak > 0 ? peak / 127.0 : 1.0;
    }

    // Keep the candidates closest to a decision boundary, in pool order.
    std::vector<std::pair<double, std::size_t>> margins;
    for (std::size_t i = 0; i < pool.size(); ++i) {
        std::vector<double> logits = forward(net, pool[i]).logits;
        std::partial_sort(logits.begin(), logits.begin() + 2, logits.end(), std::greater<>());
        margins.emplace_back(logits[0] - logits[1], i);
    }
    std::sort(margins.begin(), margins.end());
    margins.resize(count);
    std::sort(margins.begin(), margins.end(), [](const auto& a, const auto& b) { return a.second < b.second; });
    for (const auto& m : margins) fx.inputs.push_back(std::move(pool[m.second]));
    net.validate();
    return fx;
}

Json to_json(const ErrorPatch& patch) {
    Json entries = Json::array();
    for (const PatchEntry& e : patch.entries) entries.push_back({e.channel, e.u, e.v, e.error});
    return {{"pattern", to_string(patch.pattern)}, {"entries", std::move(entries)}};
}

ErrorPatch patch_from_json(const Json& j) {
    ErrorPatch p;
    for (const Json& e : j.at("entries")) {
        if (!e.is_array() || e.size() != 4) throw std::invalid_argument("patch entry must be [channel, u, v, error]");
        p.entries.push_back({e[0].get<int>(), e[1].get<int>(), e[2].get<int>(), e[3].get<std::int32_t>()});
    }
    p.classify_pattern();
    return p;
}

Json to_json(const FaultSpec& f) {
    return std::visit(
        [](const auto& x) -> Json {
            using T = std::decay_t<decltype(x)>;
            if constexpr (std::is_same_v<T, TransientFault>)
                return {{"kind", "transient"}, {"target", to_string(x.target)}, {"cycle", x.cycle},
                        {"tile_a", x.tile_a},   {"tile_w", x.tile_w},           {"p_row", x.p_row},
                        {"p_col", x.p_col},     {"bit", x.bit}};
            else
                return {{"kind", "permanent"}, {"target", to_string(x.target)}, {"p_row", x.p_row},
                        {"p_col", x.p_col},    {"bit", x.bit},                  {"stuck", x.stuck}};
        },
        f);
}

FaultSpec fault_from_json(const Json& j) {
    const auto target = parse_target(field<std::string>(j, "target", "fault"));
    if (!target) throw std::invalid_argument("fault: unknown target");
    const std::string kind = j.value("kind", "transient");
    if (kind == "transient")
        return TransientFault{*target,
                              field<int>(j, "cycle", "fault"),
                              j.value("tile_w", 1),
                              j.value("tile_a", 1),
                              field<int>(j, "p_row", "fault"),
                              field<int>(j, "p_col", "fault"),
                              field<int>(j, "bit", "fault")};
    if (kind == "permanent")
        return PermanentFault{*target, field<int>(j, "p_row", "fault"), field<int>(j, "p_col", "fault"),
                              field<int>(j, "bit", "fault"), j.value("stuck", 1)};
    throw std::invalid_argument("fault: kind must be transient or permanent");
}

Json to_json(const AvfReport& report) {
    Json cells = Json::array();
    for (const AvfCell& c : report.cells) {
        Json errors, avf, ci;
        for (std::size_t k = 0; k < 4; ++k) {
            errors[kErrorClassNames[k]] = c.errors[k];
            avf[kErrorClassNames[k]] = c.avf[k];
            ci[kErrorClassNames[k]] = {c.ci[k].low, c.ci[k].high};
        }
        cells.push_back({{"layer", c.layer ? Json(*c.layer) : Json(nullptr)},
                         {"layer_name", c.layer_name},
                         {"mode", to_string(c.mode)},
                         {"samples", c.samples},
                         {"masked", c.masked},
                         {"errors", std::move(errors)},
                         {"avf", std::move(avf)},
                         {"ci", std::move(ci)}});
    }
    return {{"n", report.n},
            {"kind", to_string(report.kind)},
            {"seed", report.seed},
            {"confidence", report.confidence},
            {"inputs", report.inputs},
            {"accumulator_overflows", report.accumulator_overflows},
            {"cells", std::move(cells)}};
}

AvfReport report_from_json(const Json& j) {
    AvfReport r;
    r.n = j.at("n").get<int>();
    const auto kind = parse_fault_kind(j.at("kind").get<std::string>());
    if (!kind) throw std::invalid_argument("report: unknown fault kind");
    r.kind = *kind;
    r.seed = j.at("seed").get<std::uint64_t>();
    r.confidence = j.at("confidence").get<double>();
    r.inputs = j.value("inputs", std::size_t{0});
    r.accumulator_overflows = j.value("accumulator_overflows", std::size_t{0});
    for (const Json& c : j.at("cells")) {
        AvfCell cell;
        if (!c.at("layer").is_null()) cell.layer = c.at("layer").get<std::size_t>();
        cell.layer_name = c.value("layer_name", "");
        const auto mode = parse_exec_mode(c.at("mode").get<std::string>());
        if (!mode) throw std::invalid_argument("report: unknown mode");
        cell.mode = *mode;
        cell.samples = c.at("samples").get<std::size_t>();
        cell.masked = c.value("masked", std::size_t{0});
        for (std::size_t k = 0; k < 4; ++k) {
            cell.errors[k] = c.at("errors").at(kErrorClassNames[k]).get<std::size_t>();
            cell.avf[k] = c.at("avf").at(kErrorClassNames[k]).get<double>();
            const Json& ci = c.at("ci").at(kErrorClassNames[k]);
            cell.ci[k] = {ci.at(0).get<double>(), ci.at(1).get<double>()};
        }
        r.cells.push_back(std::move(cell));
    }
    return r;
}

void write_report_csv(std::ostream& os, const AvfReport& report) {
    os << "layer,mode,class,samples,errors,avf,ci_low,ci_high\n";
    for (const AvfCell& c : report.cells)
        for (std::size_t k = 0; k < 4; ++k)
            os << c.layer_name << ',' << to_string(c.mode) << ',' << kErrorClassNames[k] << ',' << c.samples << ','
               << c.errors[k] << ',' << format_double(c.avf[k]) << ',' << format_double(c.ci[k].low) << ','
               << format_double(c.ci[k].high) << '\n';
}

std::vector<LayerAvf> avf_table_from_report(const AvfReport& report, DrgOption drg) {
    const ExecMode drg_mode = drg == DrgOption::Zero ? ExecMode::DRG0 : ExecMode::DRGA;
    std::size_t layers = 0;
    for (const AvfCell& c : report.cells)
        if (c.layer) layers = std::max(layers, *c.layer + 1);
    if (layers == 0) throw std::invalid_argument("report has no layer-wise cells");
    std::vector<LayerAvf> table(layers);
    for (const AvfCell& c : report.cells) {
        if (!c.layer) continue;
        if (c.mode == ExecMode::PM) table[*c.layer].pm = c.avf;
        if (c.mode == drg_mode) table[*c.layer].drg = c.avf;
    }
    return table;
}

std::vector<LayerAvf> avf_table_from_json(const Json& j) {
    std::vector<LayerAvf> table;
    for (const Json& row : j) {
        LayerAvf l;
        if (row.contains("pm")) l.pm = row.at("pm").get<AvfVector>();
        if (row.contains("drg")) l.drg = row.at("drg").get<AvfVector>();
        table.push_back(l);
    }
    return table;
}

Json to_json(const std::vector<LayerAvf>& table) {
    Json out = Json::array();
    for (const LayerAvf& l : table) {
        Json row = Json::object();
        if (l.pm) row["pm"] = *l.pm;
        if (l.drg) row["drg"] = *l.drg;
        out.push_back(std::move(row));
    }
    return out;
}

void write_explore_csv(std::ostream& os, const std::vector<MappingPoint>& points) {
    os << "mapping,latency_cycles,latency_norm,energy_mwh,avf_top1class,avf_top1acc,avf_top5class,avf_top5acc,"
          "pareto\n";
    for (const MappingPoint& p : points) {
        os << mapping_label(p.modes) << ',' << p.latency_cycles << ',' << format_double(p.latency_normalized) << ','
           << format_double(p.energy_mwh);
        for (double a : p.avf) os << ',' << format_double(a);
        os << ',' << (p.pareto ? 1 : 0) << '\n';
    }
}

Json explore_summary(const std::vector<MappingPoint>& points, const ExploreOptions& opts) {
    Json front = Json::array();
    for (const MappingPoint& p : points)
        if (p.pareto)
            front.push_back({{"mapping", mapping_label(p.modes)},
                             {"latency_cycles", p.latency_cycles},
                             {"latency_norm", p.latency_normalized},
                             {"energy_mwh", p.energy_mwh},
                             {"avf_top1class", p.avf[0]}});
    Json modes = Json::array();
    for (Mode m : opts.modes) modes.push_back(to_string(m));
    return {{"n", opts.n},
            {"drg", to_string(resolve(Mode::DRG, opts.drg, opts.trg))},
            {"trg", to_string(resolve(Mode::TRG, opts.drg, opts.trg))},
            {"modes", std::move(modes)},
            {"power_w", opts.power_w},
            {"clock_mhz", opts.clock_mhz},
            {"combine", opts.combine == AvfCombine::WorkWeighted ? "work" : "residency"},
            {"points", points.size()},
            {"pareto", std::move(front)}};
}

void write_front_dat(std::ostream& os, const std::vector<MappingPoint>& points) {
    std::vector<const MappingPoint*> front;
    for (const MappingPoint& p : points)
        if (p.pareto) front.push_back(&p);
    std::sort(front.begin(), front.end(),
              [](const MappingPoint* a, const MappingPoint* b) { return a->latency_cycles < b->latency_cycles; });
    os << "# latency_norm avf_top1class\n";
    for (const MappingPoint* p : front) os << format_double(p->latency_normalized) << ' ' << format_double(p->avf[0]) << '\n';
}

CampaignConfig campaign_config_from_json(const Json& j) {
    CampaignConfig c;
    if (j.contains("layers")) c.layers = j.at("layers").get<std::vector<std::size_t>>();
    if (j.contains("modes")) {
        c.modes.clear();
        for (const Json& m : j.at("modes")) {
            const auto mode = parse_exec_mode(m.get<std::string>());
            if (!mode) throw std::invalid_argument("campaign config: unknown mode '" + m.get<std::string>() + "'");
            c.modes.push_back(*mode);
        }
    }
    if (j.contains("kind")) {
        const auto kind = parse_fault_kind(j.at("kind").get<std::string>());
        if (!kind) throw std::invalid_argument("campaign config: unknown fault kind");
        c.kind = *kind;
    }
    if (j.contains("samples")) c.samples = j.at("samples").get<std::size_t>();
    c.confidence = j.value("confidence", c.confidence);
    c.margin = j.value("margin", c.margin);
    c.seed = j.value("seed", c.seed);
    c.n = j.value("n", c.n);
    c.threads = j.value("threads", c.threads);
    c.validate();
    return c;
}

std::string sha256_hex(std::span<const std::uint8_t> bytes) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1)
        throw std::runtime_error("sha256 failed");
    static constexpr char hex[] = "0123456789abcdef";
    std::string out;
    for (unsigned int i = 0; i < len; ++i) {
        out += hex[digest[i] >> 4];
        out += hex[digest[i] & 15];
    }
    return out;
}

std::string sha256_file(const fs::path& path) { return sha256_hex(read_bytes(path)); }

void RunManifest::add_input(const fs::path& p) { inputs.emplace_back(p.string(), sha256_file(p)); }

std::string RunManifest::config_digest() const {
    std::string joined;
    for (const auto& [path, digest] : inputs) joined += digest;
    return sha256_hex(std::span(reinterpret_cast<const std::uint8_t*>(joined.data()), joined.size()));
}

Json RunManifest::to_json() const {
    Json in = Json::array();
    for (const auto& [path, digest] : inputs) in.push_back({{"path", path}, {"sha256", digest}});
    return {{"command", command},       {"tool_version", RRSA_VERSION}, {"seed", seed},
            {"config_digest", config_digest()}, {"started", started},       {"finished", finished},
            {"inputs", std::move(in)},  {"outputs", outputs}};
}

}  // namespace rrsa
