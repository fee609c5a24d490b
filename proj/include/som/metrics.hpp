// Society-level scoring: per-round votes, accuracy over trials,
// win/tie counts against a baseline, and token costs.
#pragma once

#include <optional>
#include <string>
#include <vector>

#include "som/engine.hpp"

namespace som {

// Majority: unique strictly-maximal count wins.  Unanimity: every
// non-disregarded agent must give the same answer.
enum class VoteMode { Majority, Unanimity };
std::string to_string(VoteMode m);
VoteMode parse_vote_mode(const std::string& text);

struct SocietyAnswer {
    enum class Status { Agreed, NoConsensus };
    int round_index = 0;
    std::optional<std::string> answer;  // set iff status == Agreed
    Status status = Status::NoConsensus;

    bool operator==(const SocietyAnswer& other) const = default;
};

// One unified answer from the agents' answers at a round.  Absent
// entries are disregarded; a tie for the maximal count, or nothing to
// count, yields NoConsensus (scored as an error downstream).
SocietyAnswer majority_vote(const std::vector<std::optional<std::string>>& answers);
SocietyAnswer unanimity_vote(const std::vector<std::optional<std::string>>& answers);
SocietyAnswer vote(const std::vector<std::optional<std::string>>& answers, VoteMode mode);

// Per-column society answers, R+1 entries.  Agents' extracted answers
// are canonicalized for the task kind before counting, so "3/4" and
// "0.75" pool into one candidate.
std::vector<SocietyAnswer> society_answers(const Transcript& t,
                                           VoteMode mode = VoteMode::Majority);

// Whether the LAST round's society answer matches gold.  Aborted
// transcripts and NoConsensus rounds score false.
bool final_answer_correct(const Transcript& t, VoteMode mode = VoteMode::Majority);

struct TrialStats {
    double accuracy = 0.0;  // percent, 100 * correct / cases
    std::size_t correct_count = 0;
    std::size_t case_count = 0;
};

// Scores one (society, strategy) group of transcripts per trial.
// skip_aborted=false counts aborted cases as incorrect; true drops
// them from both numerator and denominator.
std::vector<TrialStats> trial_stats(const std::vector<const Transcript*>& group,
                                    std::size_t trials, VoteMode mode = VoteMode::Majority,
                                    bool skip_aborted = false);

struct AccuracySummary {
    double mean = 0.0;
    double std_dev = 0.0;      // sample (n-1) standard deviation
    bool single_trial = false;  // std_dev forced to 0
};

AccuracySummary accuracy_over_trials(const std::vector<TrialStats>& trials);
AccuracySummary accuracy_over_trials(const std::vector<double>& accuracies);

// Count of trials where the strategy's accuracy is >= the baseline's,
// index-aligned (the baseline is the all-debate strategy).  Not
// symmetric and not permutation-invariant.
std::size_t win_tie(const std::vector<double>& strategy_trials,
                    const std::vector<double>& baseline_trials);

struct CostSummary {
    double mean_tokens = 0.0;       // prompt + completion, averaged per case run
    double approximate_share = 0.0;  // fraction of runs with any estimated usage
    std::size_t case_count = 0;
};

CostSummary average_cost(const std::vector<const Transcript*>& group);

}  // namespace som
