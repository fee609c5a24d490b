#include "som/cli.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <memory>
#include <set>

#include "som/analysis.hpp"
#include "som/engine.hpp"
#include "som/prompts.hpp"
#include "som/util.hpp"

namespace som::cli {
namespace {

namespace fs = std::filesystem;

constexpr char kEpochClock[] = "1970-01-01T00:00:00Z";

std::unique_ptr<Backend> make_backend(const BackendSpec& spec) {
    if (spec.type == "scripted") {
        auto backend = std::make_unique<ScriptedBackend>();
        backend->script_default(spec.reply);
        backend->set_context_limit(spec.context_limit);
        return backend;
    }
    if (spec.type == "stochastic")
        return std::make_unique<StochasticBackend>(spec.base_accuracy, spec.sway);
    HttpBackendOptions options;
    options.base_url = spec.base_url;
    options.model = spec.model;
    options.rpm_limit = spec.rpm_limit;
    options.max_inflight = spec.max_inflight;
    options.context_limit = spec.context_limit;
    options.timeout_ms = spec.timeout_ms;
    RetryPolicy policy;
    policy.max_attempts = spec.max_attempts;
    policy.base_backoff_ms = spec.base_backoff_ms;
    return std::make_unique<RetryBackend>(std::make_shared<HttpBackend>(std::move(options)),
                                          policy);
}

// A frozen sample is a JSON object with the sample schema; raw datasets
// are CSV (multiple choice) or JSON arrays (math, chess).
bool is_frozen_sample(const std::string& text) {
    const auto parsed = nlohmann::json::parse(text, nullptr, false);
    return parsed.is_object() && parsed.value("schema", "") == "som.sample.v1";
}

std::vector<TaskCase> load_cases(const ExperimentConfig& config) {
    const DatasetSpec& dataset = config.dataset;
    if (is_frozen_sample(read_file(dataset.path))) {
        FrozenSample sample = load_frozen_sample(dataset.path);
        if (sample.kind != dataset.kind)
            throw ConfigError("dataset.kind", "frozen sample holds " + to_string(sample.kind) +
                                                  " cases, config says " +
                                                  to_string(dataset.kind));
        return std::move(sample.cases);
    }
    if (dataset.total > 0) {
        SampleSpec spec;
        spec.total = dataset.total;
        spec.quotas = dataset.quotas;
        spec.seed = config.seed;
        return load_dataset(dataset.kind, dataset.path, spec);
    }
    return load_all_cases(dataset.kind, dataset.path);
}

void apply(const RunOverrides& overrides, ExperimentConfig& config) {
    if (overrides.out_dir) config.out_dir = *overrides.out_dir;
    if (overrides.workers) {
        if (*overrides.workers < 1) throw ConfigError("workers", "expected >= 1");
        config.workers = *overrides.workers;
    }
    if (overrides.seed) config.seed = *overrides.seed;
    if (overrides.vote) config.vote = *overrides.vote;
    if (overrides.allocation) {
        for (Strategy& s : config.strategies) s.allocation = *overrides.allocation;
        if (*overrides.allocation == Allocation::Part)
            for (const Society& society : config.societies)
                if (society.size() < 2)
                    throw ConfigError("allocation",
                                      "part allocation needs >= 2 agents, society " +
                                          society.label() + " has " +
                                          std::to_string(society.size()));
    }
}

// Expands one analyze input into transcript files tagged with the
// config hash of the run they belong to ("unknown" without a manifest).
void resolve_input(const std::string& input,
                   std::vector<std::pair<std::string, std::string>>& files) {
    const fs::path path(input);
    if (fs::is_directory(path)) {
        const RunManifest manifest = load_manifest((path / "manifest.json").string());
        for (const std::string& name : manifest.transcripts)
            files.emplace_back((path / name).string(), manifest.config_hash);
        return;
    }
    std::vector<fs::path> matches;
    if (fs::is_regular_file(path)) {
        matches.push_back(path);
    } else if (path.filename().string().find('*') != std::string::npos &&
               fs::is_directory(path.parent_path())) {
        // minimal glob: a single '*' wildcard in the final component
        const std::string pattern = path.filename().string();
        const std::size_t star = pattern.find('*');
        const std::string prefix = pattern.substr(0, star);
        const std::string suffix = pattern.substr(star + 1);
        for (const auto& entry : fs::directory_iterator(path.parent_path())) {
            if (!entry.is_regular_file()) continue;
            const std::string name = entry.path().filename().string();
            if (name.size() >= prefix.size() + suffix.size() &&
                name.rfind(prefix, 0) == 0 &&
                name.compare(name.size() - suffix.size(), suffix.size(), suffix) == 0)
                matches.push_back(entry.path());
        }
        std::sort(matches.begin(), matches.end());
    }
    for (const fs::path& match : matches) {
        const fs::path manifest_path = match.parent_path() / "manifest.json";
        std::string hash = "unknown";
        if (fs::is_regular_file(manifest_path))
            hash = load_manifest(manifest_path.string()).config_hash;
        files.emplace_back(match.string(), hash);
    }
}

}  // namespace

RunManifest cmd_run(const std::string& config_path, const RunOverrides& overrides) {
    ExperimentConfig config = load_config(config_path);
    apply(overrides, config);

    const std::vector<TaskCase> cases = load_cases(config);
    const std::unique_ptr<Backend> backend = make_backend(config.backend);
    const PromptSet prompts = config.prompts_dir.empty()
                                  ? default_prompts()
                                  : load_prompt_overrides(config.prompts_dir);

    // Offline runs get a constant clock: rerunning the config must
    // reproduce the output byte for byte.  Live runs keep real time.
    const bool offline = config.backend.type != "http";
    ExperimentOptions options;
    options.decoding = config.decoding;
    options.workers = config.workers;
    if (offline) options.clock = [] { return std::string(kEpochClock); };

    fs::create_directories(config.out_dir);
    const fs::path transcripts_path = fs::path(config.out_dir) / "transcripts.jsonl";
    std::ofstream out(transcripts_path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + transcripts_path.string());

    RunManifest manifest;
    manifest.config_hash = config_hash(config);
    manifest.started_at = offline ? kEpochClock : utc_timestamp();
    options.sink = [&](const Transcript& t) {
        out << transcript_line(t);
        if (t.status == "complete")
            ++manifest.completed;
        else
            ++manifest.aborted;
    };

    for (const Society& society : config.societies)
        for (const Strategy& strategy : config.strategies)
            run_experiment(society, strategy, *backend, prompts, cases, config.trials,
                           config.seed, options);
    out.close();

    manifest.finished_at = offline ? kEpochClock : utc_timestamp();
    manifest.transcripts = {"transcripts.jsonl"};
    const fs::path manifest_path = fs::path(config.out_dir) / "manifest.json";
    write_file(manifest_path.string(), manifest_to_json(manifest).dump(2) + "\n");
    return manifest;
}

void cmd_analyze(const AnalyzeOptions& options) {
    std::vector<std::pair<std::string, std::string>> files;
    for (const std::string& input : options.inputs) resolve_input(input, files);
    if (files.empty()) throw Error("no transcripts matched");

    std::set<std::string> hashes;
    std::vector<Transcript> transcripts;
    for (const auto& [path, hash] : files) {
        hashes.insert(hash);
        std::vector<Transcript> batch = load_transcripts(path);
        transcripts.insert(transcripts.end(), std::make_move_iterator(batch.begin()),
                           std::make_move_iterator(batch.end()));
    }
    if (transcripts.empty()) throw Error("no transcripts matched");
    if (hashes.size() > 1 && !options.force) {
        std::string listing;
        for (const std::string& hash : hashes) listing += (listing.empty() ? "" : ", ") + hash;
        throw Error("inputs mix config hashes (" + listing +
                    "); rerun with --force to combine them");
    }

    AnalysisOptions analysis;
    analysis.vote = options.vote;
    analysis.skip_aborted = options.skip_aborted;
    analysis.levene_center = options.levene_center;
    analysis.workers = options.workers;
    analysis.config_hash = hashes.size() == 1 ? *hashes.begin() : "mixed";

    const auto rows = compute_metrics(transcripts, analysis);
    const auto records = compute_dynamics(transcripts, analysis);

    fs::create_directories(options.out_dir);
    const fs::path dir(options.out_dir);
    write_file((dir / "report_metrics.csv").string(), render_metrics_csv(rows, analysis));
    write_file((dir / "report_metrics.md").string(), render_metrics_md(rows, analysis));
    write_file((dir / "report_conformity.csv").string(),
               render_conformity_csv(records, analysis));
    write_file((dir / "report_clusters.csv").string(), render_clusters_csv(records, analysis));
    write_file((dir / "report_behaviors.csv").string(),
               render_behaviors_csv(records, analysis));
    write_file((dir / "report_anova_society.csv").string(),
               render_anova_csv(rows, "society", analysis));
    write_file((dir / "report_anova_strategy.csv").string(),
               render_anova_csv(rows, "strategy", analysis));
}

void cmd_datasets_sample(const SampleRequest& request) {
    FrozenSample sample;
    sample.kind = request.kind;
    sample.seed = request.spec.seed;
    sample.source = request.dataset_path;
    sample.quotas = request.spec.quotas;
    sample.cases = load_dataset(request.kind, request.dataset_path, request.spec);
    const fs::path out(request.out_path);
    if (out.has_parent_path()) fs::create_directories(out.parent_path());
    write_frozen_sample(request.out_path, sample);
}

std::string strategies_listing(int rounds, Allocation allocation) {
    std::string out;
    for (Strategy strategy : enumerate_strategies(rounds)) {
        strategy.allocation = allocation;
        out += strategy.full_name() + "\n";
    }
    return out;
}

}  // namespace som::cli
