// Per-transcript social analytics: conformity events with correctness
// transitions, consensus-cluster trajectories, and group-dynamics
// sequence classification.
#pragma once

#include <optional>
#include <string>
#include <vector>

#include "som/engine.hpp"
#include "som/metrics.hpp"

namespace som {

// prev-correctness -> new-correctness of a conforming agent
enum class Transition { TT, TF, FT, FF };
std::string to_string(Transition t);

struct ConformityEvent {
    std::size_t agent_index = 0;
    int round_index = 0;  // j >= 1
    std::string modal_answer;
    Transition transition = Transition::FF;

    bool operator==(const ConformityEvent& other) const = default;
};

struct ConformityReport {
    std::vector<ConformityEvent> events;
    // debate agent-rounds not assessed because an answer was missing
    std::size_t skipped = 0;
    // debate agent-rounds whose previous column had a unique mode (the
    // denominator for conformity rates)
    std::size_t eligible = 0;
};

struct ClusterTrajectory {
    std::vector<std::size_t> counts;  // index 0 = pre-collaboration
    bool degenerate = false;          // some column had no answers at all

    bool operator==(const ClusterTrajectory& other) const = default;
};

enum class BehaviorCategory { CorrectingMistakes, ChangingCorrectAnswers, WaveringAnswers, Other };
std::string to_string(BehaviorCategory c);

// Unique mode of a non-empty answer list; none when every answer
// occurs exactly once or the maximal count is tied.
std::optional<std::string> frequency_answer(const std::vector<std::string>& answers);

// Conformity at round j >= 1: a Debate agent whose round-j answer
// equals the unique mode of ALL agents' round-(j-1) answers (own
// included, canonical comparison).  Reflection agents are never
// assessed; agents missing either answer are tallied as skipped.
ConformityReport detect_conformity(const Transcript& t);

// Distinct canonical answers per column; a column with no answers
// counts 0 and flags the trajectory degenerate.
ClusterTrajectory cluster_trajectory(const Transcript& t);

// Length-4 sequences use the published taxonomy: FFFT/FFTT/FTTT
// correct mistakes, TFFF/TTFF/TTTF change correct answers,
// FTFT/FTTF/TFTF/TFFT waver, the remaining 6 (uniform included) are
// Other.  Other lengths fall back to the same three pattern families:
// F+T+, T+F+, and two-char blocks "TF"/"FT" repeated in either order.
BehaviorCategory classify_sequence(const std::string& tf);

// Per-column society correctness, "T"/"F" over columns 0..R: majority
// vote then gold match; NoConsensus scores F.
std::string sequence_of(const Transcript& t);

}  // namespace som
