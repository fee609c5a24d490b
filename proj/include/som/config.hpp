// Experiment configuration: JSON parsing with strict key checking,
// canonicalization and hashing for provenance, and the run manifest
// that ties transcripts back to the config that produced them.
#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "som/backend.hpp"
#include "som/core.hpp"
#include "som/metrics.hpp"
#include "som/tasks.hpp"

namespace som {

inline constexpr char kCodeVersion[] = "0.1.0";

struct BackendSpec {
    std::string type = "scripted";  // scripted | stochastic | http
    // scripted
    std::string reply = "(A)";
    // stochastic
    double base_accuracy = 0.7;
    double sway = 0.5;
    // http
    std::string base_url;
    std::string model;
    int rpm_limit = 0;
    int max_inflight = 0;
    std::size_t context_limit = 0;
    std::int64_t timeout_ms = 30000;
    int max_attempts = 3;
    std::int64_t base_backoff_ms = 100;
};

// `path` may point at a raw dataset or a frozen sample file (detected
// at load time).  total > 0 requests stratified sampling from a raw
// dataset; quota values must then sum to total.
struct DatasetSpec {
    TaskKind kind = TaskKind::MultipleChoice;
    std::string path;
    std::size_t total = 0;
    std::map<std::string, std::size_t> quotas;
};

struct ExperimentConfig {
    DatasetSpec dataset;
    std::vector<Society> societies;
    std::vector<Strategy> strategies;
    std::size_t trials = 5;
    BackendSpec backend;
    DecodingParams decoding;
    std::uint64_t seed = 0;
    int workers = 1;
    VoteMode vote = VoteMode::Majority;
    bool skip_aborted = false;
    std::string out_dir = "out";
    std::string prompts_dir;  // optional template overrides
};

// Strict parse: unknown keys raise ConfigError naming the full key
// path; a missing `seed` is an error naming `seed`.  `strategies`
// accepts a list of names or the string "all:R" (all 2^R strategies);
// "allocation": "part" switches every strategy to Part, which is
// rejected for single-agent societies.  Absent `decoding` falls back
// to the model's preset for http backends and to defaults otherwise.
ExperimentConfig parse_config(const nlohmann::json& root);
ExperimentConfig load_config(const std::string& path);

// Canonical form with defaults materialized and strategies/societies
// resolved.  Execution details that cannot change the produced data
// (workers, out_dir) are excluded, so reruns on different machines
// hash alike.
nlohmann::ordered_json canonical_config(const ExperimentConfig& config);

// "fnv1a:" + 16 hex digits over the canonical dump.
std::string config_hash(const ExperimentConfig& config);

struct RunManifest {
    std::string config_hash;
    std::string code_version = kCodeVersion;
    std::string started_at;
    std::string finished_at;
    std::vector<std::string> transcripts;  // file names, manifest-relative
    std::size_t completed = 0;
    std::size_t aborted = 0;
};

nlohmann::ordered_json manifest_to_json(const RunManifest& manifest);
RunManifest manifest_from_json(const nlohmann::json& j);  // IngestError on bad schema
RunManifest load_manifest(const std::string& path);

}  // namespace som
