// Command implementations behind the `som` executable; the binary only
// parses arguments and dispatches here, so every behavior is testable
// in-process.
#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "som/config.hpp"
#include "som/stats.hpp"

namespace som::cli {

struct RunOverrides {
    std::optional<std::string> out_dir;
    std::optional<int> workers;
    std::optional<std::uint64_t> seed;
    std::optional<VoteMode> vote;
    std::optional<Allocation> allocation;
};

// Loads the config, runs the full society x strategy grid over the
// dataset, and writes <out>/transcripts.jsonl plus <out>/manifest.json.
// Offline backends run on a fixed epoch clock, so a rerun of the same
// config writes byte-identical files.  Returns the manifest; the
// caller decides the exit status (a run where nothing completed is a
// failure).
RunManifest cmd_run(const std::string& config_path, const RunOverrides& overrides = {});

struct AnalyzeOptions {
    // Run directories (holding manifest.json), transcript .jsonl files,
    // or patterns whose final component may contain '*'.
    std::vector<std::string> inputs;
    std::string out_dir;
    VoteMode vote = VoteMode::Majority;
    bool skip_aborted = false;
    bool force = false;  // combine inputs with differing config hashes
    int workers = 1;
    LeveneCenter levene_center = LeveneCenter::Mean;
};

// Recomputes every report from the persisted transcripts alone (no
// backend, no network) and writes the six report files into out_dir.
// Inputs resolving to nothing raise Error("no transcripts matched");
// mixing config hashes without `force` is refused.
void cmd_analyze(const AnalyzeOptions& options);

struct SampleRequest {
    TaskKind kind = TaskKind::MultipleChoice;
    std::string dataset_path;
    SampleSpec spec;
    std::string out_path;
};

// Draws the stratified sample and freezes it to a som.sample.v1 file.
void cmd_datasets_sample(const SampleRequest& request);

// One full strategy name per line, in enumeration order.
std::string strategies_listing(int rounds, Allocation allocation = Allocation::All);

}  // namespace som::cli
