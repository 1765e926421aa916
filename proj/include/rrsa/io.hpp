/*
 * Copyright 2026 The rrsa Authors.
 * SPDX-License-Identifier: Apache-2.0
 */

#ifndef RRSA_IO_HPP
#define RRSA_IO_HPP

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "rrsa/campaign.hpp"
#include "rrsa/patch.hpp"
#include "rrsa/perf.hpp"
#include "rrsa/qnn.hpp"

namespace rrsa {

namespace fs = std::filesystem;
using Json = nlohmann::ordered_json;

/// File missing, unreadable, unwritable or truncated.
class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

Json read_json(const fs::path& path);
void write_text(const fs::path& path, const std::string& text);

/// Network description plus the weight blob it references. The JSON names
/// the blob (relative to the JSON file) and each conv/fc layer's offset.
NetworkSpec load_network(const fs::path& json_path);
void save_network(const NetworkSpec& net, const fs::path& json_path, const fs::path& weights_path);

/// Raw int8 input tensors described by a JSON header.
std::vector<QTensor> load_inputs(const fs::path& header_path);
void save_inputs(std::span<const QTensor> inputs, const fs::path& header_path, const fs::path& data_path);

struct Fixture {
    NetworkSpec net;
    std::vector<QTensor> inputs;
};

/// Small two-conv classifier (3x12x12 input, 10 classes) with seeded
/// weights and inputs and calibrated requantization scales.
Fixture make_fixture(std::uint64_t seed = 2024, std::size_t inputs = 8);

Json to_json(const ErrorPatch& patch);
ErrorPatch patch_from_json(const Json& j);

Json to_json(const FaultSpec& f);
FaultSpec fault_from_json(const Json& j);

Json to_json(const AvfReport& report);
AvfReport report_from_json(const Json& j);
/// Columns: layer,mode,class,samples,errors,avf,ci_low,ci_high.
void write_report_csv(std::ostream& os, const AvfReport& report);

/// PM and DRG rows per conv layer of a layer-wise report.
std::vector<LayerAvf> avf_table_from_report(const AvfReport& report, DrgOption drg);
std::vector<LayerAvf> avf_table_from_json(const Json& j);
Json to_json(const std::vector<LayerAvf>& table);

/// Columns: mapping,latency_cycles,latency_norm,energy_mwh,avf_top1class,
/// avf_top1acc,avf_top5class,avf_top5acc,pareto.
void write_explore_csv(std::ostream& os, const std::vector<MappingPoint>& points);
Json explore_summary(const std::vector<MappingPoint>& points, const ExploreOptions& opts);
/// Two columns (normalized latency, Top1-class AVF) of the Pareto front.
void write_front_dat(std::ostream& os, const std::vector<MappingPoint>& points);

CampaignConfig campaign_config_from_json(const Json& j);

std::string sha256_hex(std::span<const std::uint8_t> bytes);
std::string sha256_file(const fs::path& path);

/// Provenance record written next to every command's outputs.
struct RunManifest {
    std::string command;
    std::uint64_t seed = 0;
    std::string started;
    std::string finished;
    std::vector<std::pair<std::string, std::string>> inputs;  // path, sha256
    std::vector<std::string> outputs;

    void add_input(const fs::path& p);
    /// Digest over the input digests in insertion order.
    [[nodiscard]] std::string config_digest() const;
    [[nodiscard]] Json to_json() const;
};

std::string utc_timestamp();
std::string format_double(double v);

}  // namespace rrsa

#endif  // RRSA_IO_HPP
