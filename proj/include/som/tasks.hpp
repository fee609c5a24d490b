// Task families: dataset ingestion, seed-deterministic stratified
// sampling, free-text answer extraction, and gold matching.
#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "som/errors.hpp"

namespace som {

enum class TaskKind { MultipleChoice, BoxedMath, ChessMove };

// Serialized names: "multiple_choice", "boxed_math", "chess_move".
// parse_task_kind also accepts the dataset aliases mmlu/math/chess.
std::string to_string(TaskKind k);
TaskKind parse_task_kind(const std::string& text);

// One evaluation case.  `slots` carries the prompt placeholder fill-ins
// (MultipleChoice: Question/A/B/C/D; BoxedMath: problem;
// ChessMove: "chess move"/square).  `gold` holds >= 1 accepted answers:
// a single letter for MultipleChoice, the legal destination squares for
// ChessMove, one canonical value for BoxedMath.
struct TaskCase {
    std::string id;
    TaskKind kind = TaskKind::MultipleChoice;
    std::map<std::string, std::string> slots;
    std::vector<std::string> gold;
    std::string stratum;

    bool operator==(const TaskCase& other) const = default;
};

// Stratified sampling request; quota values must sum to `total`.
struct SampleSpec {
    std::size_t total = 0;
    std::map<std::string, std::size_t> quotas;
    std::uint64_t seed = 0;
};

// Reads a dataset file and draws the stratified sample.
// File formats (see README for the ingest schema):
//   MultipleChoice: CSV question,A,B,C,D,answer,subject (header optional)
//   BoxedMath:      JSON array of {problem, level, answer}
//   ChessMove:      JSON array of {moves, square, valid: [squares]}
// Missing or undersized strata raise SamplingError naming the stratum;
// malformed records raise IngestError with the line number.
std::vector<TaskCase> load_dataset(TaskKind kind, const std::string& path,
                                   const SampleSpec& spec);

// Reads every record without sampling, in file order.
std::vector<TaskCase> load_all_cases(TaskKind kind, const std::string& path);

// Last well-formed answer token in `raw`: "(X)" for MultipleChoice,
// \boxed{...} for BoxedMath, standalone [a-h][1-8] for ChessMove.
// No token -> nullopt.  Two or more canonically distinct tokens count
// only when the reply ends by restating one (last token sits on the
// last non-empty line); otherwise the response is disregarded.
std::optional<std::string> extract_answer(TaskKind kind, const std::string& raw);

// Equality key used by votes, clusters, and conformity comparisons:
// MultipleChoice folds to upper case, ChessMove to lower case, BoxedMath
// canonicalizes (LaTeX wrapper stripping, \frac -> a/b, exact
// fraction/decimal unification, e.g. "3/4" and "0.75" coincide).
std::string canonical_answer(TaskKind kind, const std::string& raw);

struct MatchDetail {
    bool matched = false;
    // BoxedMath answer that neither matched nor reduced to an exact
    // rational on both sides; the scoring rules may not cover it.
    bool manual_review = false;
};

MatchDetail match_answer_detailed(TaskKind kind, const std::string& extracted,
                                  const std::vector<std::string>& gold);
bool match_answer(TaskKind kind, const std::string& extracted,
                  const std::vector<std::string>& gold);

// Frozen sample files pin the exact sampled cases of an experiment.
struct FrozenSample {
    TaskKind kind = TaskKind::MultipleChoice;
    std::uint64_t seed = 0;
    std::string source;  // dataset path the sample was drawn from
    std::map<std::string, std::size_t> quotas;
    std::vector<TaskCase> cases;
};

void write_frozen_sample(const std::string& path, const FrozenSample& sample);
FrozenSample load_frozen_sample(const std::string& path);

}  // namespace som
