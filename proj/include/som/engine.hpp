// Runs one task case through a society under a strategy: persona
// priming, initial answers, then R rounds of debate/reflection with
// per-round message routing.  Produces Transcripts and persists them
// as JSONL.
#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "som/backend.hpp"
#include "som/core.hpp"
#include "som/prompts.hpp"
#include "som/tasks.hpp"

namespace som {

struct RoundPlan {
    int round_index = 0;                      // 0-based strategy round
    std::vector<ThinkingPattern> assignment;  // one entry per agent
};

struct UsageRecord {
    std::size_t agent_index = 0;
    int round = 0;  // -1 = persona priming
    std::size_t prompt_tokens = 0;
    std::size_t completion_tokens = 0;
    bool approximate = false;
};

// One case run.  answers is n x (R+1): column 0 holds the
// pre-collaboration answers, column j the answers after strategy
// round j.  Cells are extracted answer tokens; absent when the reply
// carried no well-formed answer or the run aborted first.
struct Transcript {
    std::string case_id;
    TaskKind kind = TaskKind::MultipleChoice;
    std::string stratum;
    Society society;
    Strategy strategy;
    std::size_t trial = 0;
    std::uint64_t seed = 0;
    std::string status = "complete";  // "complete" | "aborted"
    std::string abort_reason;         // empty unless aborted
    std::vector<std::string> gold;
    std::vector<RoundPlan> round_plans;                            // R entries
    std::vector<std::vector<std::optional<std::string>>> answers;  // n x (R+1)
    std::vector<std::vector<ChatMessage>> histories;               // n agents
    std::vector<UsageRecord> usage;
    std::size_t total_prompt_tokens = 0;
    std::size_t total_completion_tokens = 0;
    std::string started_at;
    std::string finished_at;

    std::size_t agent_count() const { return answers.size(); }
    std::size_t round_count() const { return strategy.round_count(); }
};

// Per-round pattern assignments.  All mode gives every agent the
// round's pattern.  Part mode gives it to a strict majority
// (n == 2 splits one each) and the complement to the rest, minority
// membership drawn from rng, so no Part round is ever uniform.
std::vector<RoundPlan> plan_rounds(const Strategy& strategy, std::size_t n_agents, Rng& rng);

// Sends each agent its persona message and records the backend's
// acknowledgment: history k = [persona, ack].  `base` carries the
// call identity; agent_index and round (-1) are filled in here.
std::vector<std::vector<ChatMessage>> prime_agents(const Society& society,
                                                   const PromptSet& prompts, TaskKind kind,
                                                   Backend& backend,
                                                   const DecodingParams& decoding, CallMeta base,
                                                   std::vector<UsageRecord>* usage = nullptr);

struct RunOptions {
    DecodingParams decoding{};
    std::uint64_t experiment_seed = 0;  // routed to backends via CallMeta
    std::size_t trial = 0;
    std::function<std::string()> clock;  // ISO-8601 UTC; null = system clock
};

// Full pipeline for one case.  Debate agents at round j receive the
// round-(j-1) replies of all other agents, embedded in agent-index
// order as "Agent <i+1>: <reply>\n"; reflection agents receive the
// reflection template only.  A backend failure aborts the case: the
// partial transcript comes back with status = "aborted" and the cause.
Transcript run_case(const Society& society, const Strategy& strategy, Backend& backend,
                    const PromptSet& prompts, const TaskCase& task, std::uint64_t seed,
                    const RunOptions& options = {});

struct ExperimentOptions {
    DecodingParams decoding{};
    int workers = 1;  // > 1 runs case-trials in parallel
    std::function<std::string()> clock;
    // Invoked once per transcript in case-major, trial-minor order,
    // after all runs finish; use for persistence.
    std::function<void(const Transcript&)> sink;
};

// |cases| x trials independent runs; the run for (case, trial) is
// seeded by hash(experiment_seed, case_id, trial) regardless of
// society or strategy, so paired comparisons line up across
// strategies.  Results are returned (and passed to the sink) in
// case-major order whatever the worker count.
std::vector<Transcript> run_experiment(const Society& society, const Strategy& strategy,
                                       Backend& backend, const PromptSet& prompts,
                                       const std::vector<TaskCase>& cases, std::size_t trials,
                                       std::uint64_t experiment_seed,
                                       const ExperimentOptions& options = {});

// JSONL persistence, schema "som.transcript.v1".
nlohmann::ordered_json transcript_to_json(const Transcript& t);
Transcript transcript_from_json(const nlohmann::json& j);
std::string transcript_line(const Transcript& t);  // one line, '\n'-terminated
// Reads every record of a JSONL transcript file; blank lines are
// skipped, malformed records raise IngestError with the line number.
std::vector<Transcript> load_transcripts(const std::string& path);

// Current time as "YYYY-MM-DDTHH:MM:SSZ".
std::string utc_timestamp();

}  // namespace som
