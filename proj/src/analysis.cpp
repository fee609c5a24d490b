#include "som/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>

#include "som/errors.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace som {
namespace {

std::string fmt(double value, int decimals) {
    if (!std::isfinite(value)) return "n/a";
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.*f", decimals, value);
    return buf;
}

std::string header(const AnalysisOptions& options) {
    std::string hash = options.config_hash.empty() ? "unknown" : options.config_hash;
    return "# config_hash: " + hash + "\n";
}

struct GroupKey {
    std::string society;
    std::string strategy;
    bool operator<(const GroupKey& other) const {
        if (society != other.society) return society < other.society;
        return strategy < other.strategy;
    }
};

std::map<GroupKey, std::vector<const Transcript*>> group_by_cell(
    const std::vector<Transcript>& transcripts) {
    std::map<GroupKey, std::vector<const Transcript*>> groups;
    for (const Transcript& t : transcripts)
        groups[{t.society.label(), t.strategy.full_name()}].push_back(&t);
    return groups;
}

std::size_t infer_trials(const std::vector<Transcript>& transcripts) {
    std::size_t trials = 0;
    for (const Transcript& t : transcripts) trials = std::max(trials, t.trial + 1);
    return trials;
}

}  // namespace

std::vector<MetricsRow> compute_metrics(const std::vector<Transcript>& transcripts,
                                        const AnalysisOptions& options) {
    const std::size_t trials = infer_trials(transcripts);
    auto groups = group_by_cell(transcripts);

    std::vector<MetricsRow> rows;
    rows.reserve(groups.size());
    for (const auto& [key, members] : groups) {
        MetricsRow row;
        row.society = key.society;
        row.strategy = key.strategy;
        row.transcripts = members.size();
        for (const Transcript* t : members)
            if (t->status != "complete") ++row.aborted;

        auto stats = trial_stats(members, trials, options.vote, options.skip_aborted);
        row.trial_accuracy.reserve(stats.size());
        for (const TrialStats& s : stats) row.trial_accuracy.push_back(s.accuracy);
        row.acc = accuracy_over_trials(row.trial_accuracy);
        row.cost = average_cost(members);
        rows.push_back(std::move(row));
    }

    // Wins-and-ties against the all-debate strategy of matching length and
    // allocation within the same society.  The baseline row itself reports
    // no value: comparing it to itself would count every trial as a tie.
    for (MetricsRow& row : rows) {
        const Transcript* sample = groups[{row.society, row.strategy}].front();
        Strategy baseline;
        baseline.rounds.assign(sample->strategy.rounds.size(), ThinkingPattern::Debate);
        baseline.allocation = sample->strategy.allocation;
        const std::string baseline_name = baseline.full_name();
        if (row.strategy == baseline_name) continue;
        for (const MetricsRow& other : rows) {
            if (other.society == row.society && other.strategy == baseline_name) {
                row.wins = win_tie(row.trial_accuracy, other.trial_accuracy);
                break;
            }
        }
    }
    return rows;
}

std::vector<DynamicsRecord> compute_dynamics(const std::vector<Transcript>& transcripts,
                                             const AnalysisOptions& options) {
    std::vector<DynamicsRecord> all(transcripts.size());
    auto one = [&](std::size_t i) {
        const Transcript& t = transcripts[i];
        DynamicsRecord& rec = all[i];
        rec.society = t.society.label();
        rec.strategy = t.strategy.full_name();
        rec.complete = t.status == "complete";
        if (!rec.complete) return;  // partial columns would distort the tallies
        rec.conformity = detect_conformity(t);
        rec.clusters = cluster_trajectory(t);
        rec.sequence = sequence_of(t);
        rec.behavior = classify_sequence(rec.sequence);
    };

#ifdef _OPENMP
    if (options.workers > 1) {
#pragma omp parallel for schedule(dynamic) num_threads(options.workers)
        for (long i = 0; i < static_cast<long>(transcripts.size()); ++i)
            one(static_cast<std::size_t>(i));
    } else {
        for (std::size_t i = 0; i < transcripts.size(); ++i) one(i);
    }
#else
    for (std::size_t i = 0; i < transcripts.size(); ++i) one(i);
#endif

    std::vector<DynamicsRecord> kept;
    kept.reserve(all.size());
    for (DynamicsRecord& rec : all)
        if (rec.complete) kept.push_back(std::move(rec));
    return kept;
}

std::string render_metrics_csv(const std::vector<MetricsRow>& rows,
                               const AnalysisOptions& options) {
    std::string out = header(options);
    out += "society,strategy,acc_mean,acc_std,win_tie,cost\n";
    bool any_single = false;
    for (const MetricsRow& row : rows) {
        out += row.society + "," + row.strategy + ",";
        out += fmt(row.acc.mean, 4) + "," + fmt(row.acc.std_dev, 4) + ",";
        out += row.wins ? std::to_string(*row.wins) : std::string("n/a");
        out += "," + fmt(row.cost.mean_tokens, 2) + "\n";
        any_single |= row.acc.single_trial;
    }
    if (any_single)
        out += "# note: single-trial rows have no spread estimate; acc_std shown as 0\n";
    return out;
}

std::string render_metrics_md(const std::vector<MetricsRow>& rows,
                              const AnalysisOptions& options) {
    std::string out = header(options);
    out += "\n| Society | Strategy | Accuracy | W-T | Cost |\n";
    out += "|---|---|---|---|---|\n";
    bool any_single = false;
    for (const MetricsRow& row : rows) {
        out += "| " + row.society + " | " + row.strategy + " | ";
        out += fmt(row.acc.mean, 1) + "±" + fmt(row.acc.std_dev, 1);
        if (row.acc.single_trial) {
            out += "*";
            any_single = true;
        }
        out += " | " + (row.wins ? std::to_string(*row.wins) : std::string("n/a"));
        out += " | " + fmt(row.cost.mean_tokens, 0) + " |\n";
    }
    if (any_single) out += "\n\\* single trial, no spread estimate\n";
    return out;
}

std::string render_conformity_csv(const std::vector<DynamicsRecord>& records,
                                  const AnalysisOptions& options) {
    // Per cell and debate round: how many conformity events occurred and how
    // they split across the four correctness transitions.  Eligibility and
    // skip tallies are whole-transcript counters, so they appear only on the
    // per-cell summary row (round column "all").
    struct Tally {
        std::size_t events = 0, eligible = 0, skipped = 0;
        std::size_t by_kind[4] = {0, 0, 0, 0};
    };
    std::map<GroupKey, std::map<int, Tally>> cells;
    constexpr int kAllRounds = -1;
    for (const DynamicsRecord& rec : records) {
        auto& rounds = cells[{rec.society, rec.strategy}];
        for (const ConformityEvent& ev : rec.conformity.events) {
            ++rounds[ev.round_index].events;
            ++rounds[ev.round_index].by_kind[static_cast<int>(ev.transition)];
            ++rounds[kAllRounds].events;
            ++rounds[kAllRounds].by_kind[static_cast<int>(ev.transition)];
        }
        rounds[kAllRounds].eligible += rec.conformity.eligible;
        rounds[kAllRounds].skipped += rec.conformity.skipped;
    }

    std::string out = header(options);
    out += "society,strategy,round,events,eligible,skipped,"
           "tt_share,tf_share,ft_share,ff_share\n";
    for (const auto& [key, rounds] : cells) {
        // kAllRounds sorts first in the map; emit it after the real rounds.
        for (const auto& [round, tally] : rounds) {
            if (round == kAllRounds) continue;
            out += key.society + "," + key.strategy + "," + std::to_string(round) + ",";
            out += std::to_string(tally.events) + ",n/a,n/a";
            for (int k = 0; k < 4; ++k) {
                double share = tally.events == 0
                                   ? 0.0
                                   : static_cast<double>(tally.by_kind[k]) / tally.events;
                out += "," + fmt(share, 4);
            }
            out += "\n";
        }
        const Tally& total = rounds.at(kAllRounds);
        out += key.society + "," + key.strategy + ",all,";
        out += std::to_string(total.events) + "," + std::to_string(total.eligible) + "," +
               std::to_string(total.skipped);
        for (int k = 0; k < 4; ++k) {
            double share = total.events == 0
                               ? 0.0
                               : static_cast<double>(total.by_kind[k]) / total.events;
            out += "," + fmt(share, 4);
        }
        out += "\n";
    }
    return out;
}

std::string render_clusters_csv(const std::vector<DynamicsRecord>& records,
                                const AnalysisOptions& options) {
    struct Tally {
        double sum = 0;
        std::size_t n = 0;
    };
    std::map<GroupKey, std::map<std::size_t, Tally>> cells;
    for (const DynamicsRecord& rec : records) {
        auto& rounds = cells[{rec.society, rec.strategy}];
        for (std::size_t r = 0; r < rec.clusters.counts.size(); ++r) {
            rounds[r].sum += static_cast<double>(rec.clusters.counts[r]);
            ++rounds[r].n;
        }
    }
    std::string out = header(options);
    out += "society,strategy,round,transcripts,mean_clusters\n";
    for (const auto& [key, rounds] : cells) {
        for (const auto& [round, tally] : rounds) {
            out += key.society + "," + key.strategy + "," + std::to_string(round) + ",";
            out += std::to_string(tally.n) + ",";
            out += fmt(tally.n == 0 ? 0.0 : tally.sum / static_cast<double>(tally.n), 4);
            out += "\n";
        }
    }
    return out;
}

std::string render_behaviors_csv(const std::vector<DynamicsRecord>& records,
                                 const AnalysisOptions& options) {
    static const BehaviorCategory kOrder[] = {
        BehaviorCategory::CorrectingMistakes,
        BehaviorCategory::ChangingCorrectAnswers,
        BehaviorCategory::WaveringAnswers,
        BehaviorCategory::Other,
    };
    std::map<GroupKey, std::map<int, std::size_t>> cells;
    std::map<GroupKey, std::size_t> sizes;
    for (const DynamicsRecord& rec : records) {
        GroupKey key{rec.society, rec.strategy};
        ++cells[key][static_cast<int>(rec.behavior)];
        ++sizes[key];
    }
    std::string out = header(options);
    out += "society,strategy,category,count,share\n";
    for (const auto& [key, counts] : cells) {
        const std::size_t total = sizes[key];
        for (BehaviorCategory cat : kOrder) {
            std::size_t count = 0;
            auto it = counts.find(static_cast<int>(cat));
            if (it != counts.end()) count = it->second;
            double share =
                total == 0 ? 0.0 : static_cast<double>(count) / static_cast<double>(total);
            out += key.society + "," + key.strategy + "," + to_string(cat) + ",";
            out += std::to_string(count) + "," + fmt(share, 4) + "\n";
        }
    }
    return out;
}

std::string render_anova_csv(const std::vector<MetricsRow>& rows, const std::string& factor,
                             const AnalysisOptions& options) {
    if (factor != "society" && factor != "strategy")
        throw ConfigError("anova.factor", "expected society or strategy, got " + factor);
    const bool by_society = factor == "society";

    // Fixed axis = the one we iterate row-wise; varying axis = the factor
    // whose levels form the compared groups.
    std::map<std::string, std::vector<const MetricsRow*>> fixed;
    for (const MetricsRow& row : rows)
        fixed[by_society ? row.strategy : row.society].push_back(&row);

    std::string out = header(options);
    out += "# note: one-way ANOVA of per-trial accuracy; normality is not tested;\n";
    out += "# note: p_display shows - when Levene rejects homogeneity at alpha=" +
           fmt(options.alpha, 2) + "\n";
    out += std::string(by_society ? "strategy" : "society") +
           ",groups,f_stat,p_value,levene_stat,levene_p,p_display\n";

    for (const auto& [level, members] : fixed) {
        std::vector<std::vector<double>> groups;
        groups.reserve(members.size());
        for (const MetricsRow* row : members) groups.push_back(row->trial_accuracy);
        out += level + "," + std::to_string(groups.size()) + ",";
        try {
            TestResult anova = one_way_anova(groups);
            TestResult levene = levene_test(groups, options.levene_center);
            const bool homogeneous = levene.p_value >= options.alpha;
            out += fmt(anova.statistic, 6) + "," + fmt(anova.p_value, 6) + ",";
            out += fmt(levene.statistic, 6) + "," + fmt(levene.p_value, 6) + ",";
            out += homogeneous ? fmt(anova.p_value, 6) : std::string("-");
        } catch (const Error&) {
            // Too few groups or degenerate spread: no test is defined.
            out += "n/a,n/a,n/a,n/a,n/a";
        }
        out += "\n";
    }
    return out;
}

}  // namespace som
