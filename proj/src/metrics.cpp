#include "som/metrics.hpp"

#include <cmath>
#include <map>

namespace som {

std::string to_string(VoteMode m) { return m == VoteMode::Majority ? "majority" : "unanimity"; }

VoteMode parse_vote_mode(const std::string& text) {
    if (text == "majority") return VoteMode::Majority;
    if (text == "unanimity") return VoteMode::Unanimity;
    throw ParseError("unknown vote mode '" + text + "'", 0);
}

SocietyAnswer majority_vote(const std::vector<std::optional<std::string>>& answers) {
    std::map<std::string, std::size_t> counts;
    for (const auto& a : answers)
        if (a) counts[*a]++;
    SocietyAnswer result;
    std::size_t best = 0;
    bool unique = false;
    for (const auto& [text, count] : counts) {
        if (count > best) {
            best = count;
            result.answer = text;
            unique = true;
        } else if (count == best) {
            unique = false;
        }
    }
    if (best == 0 || !unique) {
        result.answer.reset();
        result.status = SocietyAnswer::Status::NoConsensus;
    } else {
        result.status = SocietyAnswer::Status::Agreed;
    }
    return result;
}

SocietyAnswer unanimity_vote(const std::vector<std::optional<std::string>>& answers) {
    SocietyAnswer result;
    for (const auto& a : answers) {
        if (!a) continue;  // disregarded
        if (!result.answer) {
            result.answer = *a;
        } else if (*result.answer != *a) {
            result.answer.reset();
            result.status = SocietyAnswer::Status::NoConsensus;
            return result;
        }
    }
    result.status = result.answer ? SocietyAnswer::Status::Agreed
                                  : SocietyAnswer::Status::NoConsensus;
    return result;
}

SocietyAnswer vote(const std::vector<std::optional<std::string>>& answers, VoteMode mode) {
    return mode == VoteMode::Majority ? majority_vote(answers) : unanimity_vote(answers);
}

std::vector<SocietyAnswer> society_answers(const Transcript& t, VoteMode mode) {
    const std::size_t columns = t.answers.empty() ? 0 : t.answers.front().size();
    std::vector<SocietyAnswer> out;
    out.reserve(columns);
    for (std::size_t j = 0; j < columns; ++j) {
        std::vector<std::optional<std::string>> column;
        column.reserve(t.answers.size());
        for (const auto& row : t.answers) {
            if (row[j])
                column.emplace_back(canonical_answer(t.kind, *row[j]));
            else
                column.emplace_back(std::nullopt);
        }
        SocietyAnswer sa = vote(column, mode);
        sa.round_index = static_cast<int>(j);
        out.push_back(std::move(sa));
    }
    return out;
}

bool final_answer_correct(const Transcript& t, VoteMode mode) {
    if (t.status != "complete") return false;
    const auto votes = society_answers(t, mode);
    if (votes.empty()) return false;
    const SocietyAnswer& last = votes.back();
    if (last.status != SocietyAnswer::Status::Agreed) return false;
    return match_answer(t.kind, *last.answer, t.gold);
}

std::vector<TrialStats> trial_stats(const std::vector<const Transcript*>& group,
                                    std::size_t trials, VoteMode mode, bool skip_aborted) {
    std::vector<TrialStats> out(trials);
    for (const Transcript* t : group) {
        if (t->trial >= trials)
            throw BoundsError("transcript trial " + std::to_string(t->trial) +
                              " outside 0.." + std::to_string(trials - 1));
        TrialStats& s = out[t->trial];
        if (t->status != "complete") {
            if (skip_aborted) continue;
            s.case_count++;  // counted, scored incorrect
            continue;
        }
        s.case_count++;
        if (final_answer_correct(*t, mode)) s.correct_count++;
    }
    for (TrialStats& s : out)
        s.accuracy = s.case_count == 0
                         ? 0.0
                         : 100.0 * static_cast<double>(s.correct_count) /
                               static_cast<double>(s.case_count);
    return out;
}

AccuracySummary accuracy_over_trials(const std::vector<TrialStats>& trials) {
    std::vector<double> accuracies;
    accuracies.reserve(trials.size());
    for (const TrialStats& t : trials) accuracies.push_back(t.accuracy);
    return accuracy_over_trials(accuracies);
}

AccuracySummary accuracy_over_trials(const std::vector<double>& accuracies) {
    if (accuracies.empty()) throw DomainError("accuracy_over_trials: no trials");
    AccuracySummary s;
    double sum = 0.0;
    for (double a : accuracies) sum += a;
    s.mean = sum / static_cast<double>(accuracies.size());
    if (accuracies.size() == 1) {
        s.std_dev = 0.0;
        s.single_trial = true;
        return s;
    }
    double ss = 0.0;
    for (double a : accuracies) ss += (a - s.mean) * (a - s.mean);
    s.std_dev = std::sqrt(ss / static_cast<double>(accuracies.size() - 1));
    return s;
}

std::size_t win_tie(const std::vector<double>& strategy_trials,
                    const std::vector<double>& baseline_trials) {
    if (strategy_trials.size() != baseline_trials.size())
        throw DomainError("win_tie: trial vectors differ in length (" +
                          std::to_string(strategy_trials.size()) + " vs " +
                          std::to_string(baseline_trials.size()) + ")");
    std::size_t count = 0;
    for (std::size_t i = 0; i < strategy_trials.size(); ++i)
        if (strategy_trials[i] >= baseline_trials[i]) ++count;
    return count;
}

CostSummary average_cost(const std::vector<const Transcript*>& group) {
    if (group.empty()) throw DomainError("average_cost: empty transcript group");
    CostSummary s;
    s.case_count = group.size();
    std::size_t flagged = 0;
    double total = 0.0;
    for (const Transcript* t : group) {
        total += static_cast<double>(t->total_prompt_tokens + t->total_completion_tokens);
        for (const UsageRecord& u : t->usage) {
            if (u.approximate) {
                ++flagged;
                break;
            }
        }
    }
    s.mean_tokens = total / static_cast<double>(group.size());
    s.approximate_share = static_cast<double>(flagged) / static_cast<double>(group.size());
    return s;
}

}  // namespace som
