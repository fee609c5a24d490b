#include <cstdio>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "som/cli.hpp"

namespace {

// CLI11 validators run on raw strings; parse failures surface as usage
// errors before any command code executes.
som::VoteMode parse_vote_flag(const std::string& text) { return som::parse_vote_mode(text); }

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"machine-society simulation laboratory"};
    app.set_version_flag("--version", std::string("som ") + som::kCodeVersion);
    app.require_subcommand(1);

    // som run --config experiment.json [--out dir] [--workers N]
    //         [--seed S] [--vote majority|unanimity] [--allocation all|part]
    CLI::App* run = app.add_subcommand("run", "execute the configured experiment grid");
    std::string run_config;
    run->add_option("--config", run_config, "experiment config JSON")->required();
    std::string run_out;
    run->add_option("--out", run_out, "output directory (overrides config)");
    int run_workers = 0;
    run->add_option("--workers", run_workers, "parallel case runners (overrides config)");
    std::uint64_t run_seed = 0;
    CLI::Option* run_seed_opt =
        run->add_option("--seed", run_seed, "experiment seed (overrides config)");
    std::string run_vote;
    run->add_option("--vote", run_vote, "majority|unanimity (overrides config)");
    std::string run_allocation;
    run->add_option("--allocation", run_allocation, "all|part (overrides config)");

    // som analyze --in run_dir [--in more...] --out reports/
    CLI::App* analyze = app.add_subcommand("analyze", "rebuild reports from transcripts");
    som::cli::AnalyzeOptions analyze_options;
    analyze->add_option("--in", analyze_options.inputs,
                        "run directory, transcripts.jsonl, or glob")
        ->required();
    analyze->add_option("--out", analyze_options.out_dir, "report directory")->required();
    std::string analyze_vote = "majority";
    analyze->add_option("--vote", analyze_vote, "majority|unanimity (default majority)");
    analyze->add_flag("--skip-aborted", analyze_options.skip_aborted,
                      "drop aborted cases instead of scoring them wrong");
    analyze->add_flag("--force", analyze_options.force,
                      "combine inputs with differing config hashes");
    analyze->add_option("--workers", analyze_options.workers, "parallel analytics workers");
    bool median_center = false;
    analyze->add_flag("--median-center", median_center,
                      "Levene test on median-centered deviations (Brown-Forsythe)");

    // som datasets sample --kind mmlu --data file.csv --total 50
    //     --quota stratum=count... --seed S --out sample.json
    CLI::App* datasets = app.add_subcommand("datasets", "dataset utilities");
    datasets->require_subcommand(1);
    CLI::App* sample = datasets->add_subcommand("sample", "freeze a stratified sample");
    std::string sample_kind;
    sample->add_option("--kind", sample_kind, "mmlu|math|chess")->required();
    som::cli::SampleRequest request;
    sample->add_option("--data", request.dataset_path, "raw dataset file")->required();
    sample->add_option("--total", request.spec.total, "sample size")->required();
    std::vector<std::string> quota_args;
    sample->add_option("--quota", quota_args, "stratum=count (repeatable)")->required();
    sample->add_option("--seed", request.spec.seed, "sampling seed")->required();
    sample->add_option("--out", request.out_path, "frozen sample file")->required();

    // som strategies list [--rounds R] [--allocation all|part]
    CLI::App* strategies = app.add_subcommand("strategies", "strategy utilities");
    strategies->require_subcommand(1);
    CLI::App* list = strategies->add_subcommand("list", "print all strategies for R rounds");
    int list_rounds = 3;
    list->add_option("--rounds", list_rounds, "collaboration rounds (default 3)");
    std::string list_allocation = "all";
    list->add_option("--allocation", list_allocation, "all|part");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*run) {
            som::cli::RunOverrides overrides;
            if (!run_out.empty()) overrides.out_dir = run_out;
            if (run_workers > 0) overrides.workers = run_workers;
            if (run_seed_opt->count() > 0) overrides.seed = run_seed;
            if (!run_vote.empty()) overrides.vote = parse_vote_flag(run_vote);
            if (!run_allocation.empty())
                overrides.allocation = som::parse_allocation(run_allocation);
            const som::RunManifest manifest = som::cli::cmd_run(run_config, overrides);
            std::printf("completed %zu, aborted %zu\n", manifest.completed, manifest.aborted);
            if (manifest.completed == 0 && manifest.aborted > 0) {
                std::fprintf(stderr, "som: every case aborted; backend unusable\n");
                return 1;
            }
        } else if (*analyze) {
            analyze_options.vote = parse_vote_flag(analyze_vote);
            if (median_center) analyze_options.levene_center = som::LeveneCenter::Median;
            som::cli::cmd_analyze(analyze_options);
        } else if (*datasets) {
            request.kind = som::parse_task_kind(sample_kind);
            for (const std::string& arg : quota_args) {
                const std::size_t eq = arg.find('=');
                if (eq == std::string::npos || eq == 0)
                    throw som::ConfigError("quota", "expected stratum=count, got " + arg);
                request.spec.quotas[arg.substr(0, eq)] =
                    static_cast<std::size_t>(std::stoull(arg.substr(eq + 1)));
            }
            som::cli::cmd_datasets_sample(request);
        } else if (*strategies) {
            const std::string listing = som::cli::strategies_listing(
                list_rounds, som::parse_allocation(list_allocation));
            std::fputs(listing.c_str(), stdout);
        }
    } catch (const som::Error& e) {
        std::fprintf(stderr, "som: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "som: unexpected: %s\n", e.what());
        return 3;
    }
    return 0;
}
