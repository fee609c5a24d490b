// Compares the parallel experiment runner and analytics against their
// serial counterparts: same bytes out, wall time side by side.
#include <chrono>
#include <cstdio>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "som/analysis.hpp"
#include "som/backend.hpp"
#include "som/engine.hpp"
#include "som/prompts.hpp"
#include "som/tasks.hpp"

using namespace som;

namespace {

double ms_since(const std::chrono::steady_clock::time_point& start) {
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() -
                                                     start)
        .count();
}

std::string serialize(const std::vector<Transcript>& transcripts) {
    std::string out;
    for (const Transcript& t : transcripts) out += transcript_line(t);
    return out;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"benchmark: parallel vs serial execution and analytics"};
    std::size_t n_cases = 40;
    std::size_t trials = 3;
    int workers = static_cast<int>(std::thread::hardware_concurrency());
    if (workers < 2) workers = 4;
    app.add_option("--cases", n_cases, "synthetic cases to run");
    app.add_option("--trials", trials, "trials per case");
    app.add_option("--workers", workers, "parallel worker count");
    CLI11_PARSE(app, argc, argv);

    std::vector<TaskCase> cases;
    for (std::size_t i = 0; i < n_cases; ++i) {
        TaskCase c;
        c.id = "bench-" + std::to_string(i);
        c.kind = TaskKind::MultipleChoice;
        c.slots = {{"Question", "Pick the letter"},
                   {"A", "alpha"},
                   {"B", "beta"},
                   {"C", "gamma"},
                   {"D", "delta"}};
        c.gold = {i % 4 == 0 ? "B" : "A"};
        c.stratum = "synthetic";
        cases.push_back(std::move(c));
    }

    StochasticBackend backend(0.7, 0.6);
    const PromptSet prompts = default_prompts();
    const Society society = build_society(2, 1);
    const Strategy strategy = parse_strategy("p0p1p0");
    ExperimentOptions options;
    options.clock = [] { return std::string("1970-01-01T00:00:00Z"); };

    options.workers = 1;
    auto t0 = std::chrono::steady_clock::now();
    const auto serial =
        run_experiment(society, strategy, backend, prompts, cases, trials, 99, options);
    const double run_serial_ms = ms_since(t0);

    options.workers = workers;
    t0 = std::chrono::steady_clock::now();
    const auto parallel =
        run_experiment(society, strategy, backend, prompts, cases, trials, 99, options);
    const double run_parallel_ms = ms_since(t0);

    if (serialize(serial) != serialize(parallel)) {
        std::fprintf(stderr, "parallel run produced different transcripts\n");
        return 1;
    }

    AnalysisOptions analysis;
    analysis.workers = 1;
    t0 = std::chrono::steady_clock::now();
    const auto dyn_serial = compute_dynamics(serial, analysis);
    const double dyn_serial_ms = ms_since(t0);

    analysis.workers = workers;
    t0 = std::chrono::steady_clock::now();
    const auto dyn_parallel = compute_dynamics(serial, analysis);
    const double dyn_parallel_ms = ms_since(t0);

    analysis.workers = 1;
    if (render_conformity_csv(dyn_serial, analysis) !=
            render_conformity_csv(dyn_parallel, analysis) ||
        render_clusters_csv(dyn_serial, analysis) !=
            render_clusters_csv(dyn_parallel, analysis) ||
        render_behaviors_csv(dyn_serial, analysis) !=
            render_behaviors_csv(dyn_parallel, analysis)) {
        std::fprintf(stderr, "parallel analytics rendered different reports\n");
        return 1;
    }

    std::printf("%zu cases x %zu trials, strategy %s, %zu transcripts\n", n_cases, trials,
                strategy.full_name().c_str(), serial.size());
    std::printf("run_experiment   serial %8.1f ms   %d workers %8.1f ms   (x%.2f)\n",
                run_serial_ms, workers, run_parallel_ms,
                run_parallel_ms > 0 ? run_serial_ms / run_parallel_ms : 0.0);
    std::printf("compute_dynamics serial %8.1f ms   %d workers %8.1f ms   (x%.2f)\n",
                dyn_serial_ms, workers, dyn_parallel_ms,
                dyn_parallel_ms > 0 ? dyn_serial_ms / dyn_parallel_ms : 0.0);
    std::printf("parallel output matches the serial reference byte for byte\n");
    return 0;
}
