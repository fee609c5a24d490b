// Report builders: turns persisted transcripts into the metrics table,
// the dynamics CSVs, and the two ANOVA tables.  Pure functions of the
// transcripts plus options, so re-running analysis reproduces
// identical bytes.
#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "som/dynamics.hpp"
#include "som/engine.hpp"
#include "som/metrics.hpp"
#include "som/stats.hpp"

namespace som {

struct AnalysisOptions {
    VoteMode vote = VoteMode::Majority;
    bool skip_aborted = false;
    LeveneCenter levene_center = LeveneCenter::Mean;
    int workers = 1;             // parallel per-transcript analytics
    std::string config_hash;     // stamped into every report header
    double alpha = 0.05;         // homogeneity flag threshold
};

// One (society, strategy) cell of the metrics table.
struct MetricsRow {
    std::string society;
    std::string strategy;
    AccuracySummary acc;
    std::vector<double> trial_accuracy;       // per-trial, index = trial
    std::optional<std::size_t> wins;          // absent when no baseline ran
    CostSummary cost;
    std::size_t transcripts = 0;
    std::size_t aborted = 0;
};

// Per-transcript dynamics, computed once and aggregated by the CSV
// builders.  Kept per transcript so the parallel and serial paths can
// be compared element-wise.
struct DynamicsRecord {
    std::string society;
    std::string strategy;
    ConformityReport conformity;
    ClusterTrajectory clusters;
    std::string sequence;
    BehaviorCategory behavior = BehaviorCategory::Other;
    bool complete = true;
};

std::vector<MetricsRow> compute_metrics(const std::vector<Transcript>& transcripts,
                                        const AnalysisOptions& options);

// Skips aborted transcripts (their columns are partial); order matches
// the input.  workers > 1 uses the parallel path; results are
// identical to workers == 1.
std::vector<DynamicsRecord> compute_dynamics(const std::vector<Transcript>& transcripts,
                                             const AnalysisOptions& options);

// CSV/markdown renderings.  Every file starts with
// "# config_hash: <hash>".
std::string render_metrics_csv(const std::vector<MetricsRow>& rows,
                               const AnalysisOptions& options);
std::string render_metrics_md(const std::vector<MetricsRow>& rows,
                              const AnalysisOptions& options);
std::string render_conformity_csv(const std::vector<DynamicsRecord>& records,
                                  const AnalysisOptions& options);
std::string render_clusters_csv(const std::vector<DynamicsRecord>& records,
                                const AnalysisOptions& options);
std::string render_behaviors_csv(const std::vector<DynamicsRecord>& records,
                                 const AnalysisOptions& options);

// One-way ANOVA of per-trial accuracy.  factor = "society" groups by
// society within each strategy (one output row per strategy);
// factor = "strategy" groups by strategy within each society.  The
// display column repeats the p-value but shows "-" when the groups
// fail the homogeneity-of-variance test at options.alpha, and "n/a"
// when the test is undefined (degenerate data or too few groups).
std::string render_anova_csv(const std::vector<MetricsRow>& rows, const std::string& factor,
                             const AnalysisOptions& options);

}  // namespace som
