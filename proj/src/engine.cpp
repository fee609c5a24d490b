#include "som/engine.hpp"

#include <chrono>
#include <ctime>
#include <fstream>
#include <numeric>
#include <sstream>

#include "som/util.hpp"

namespace som {

namespace {

ThinkingPattern complement(ThinkingPattern p) {
    return p == ThinkingPattern::Debate ? ThinkingPattern::Reflection : ThinkingPattern::Debate;
}

std::string persona_slot(Persona p) {
    return p == Persona::EasyGoing ? "persona_easygoing" : "persona_overconfident";
}

std::size_t approximate_tokens(const std::vector<ChatMessage>& messages) {
    std::size_t total = 0;
    for (const ChatMessage& m : messages) total += word_count(m.content);
    return total;
}

// Drops the oldest question/debate/reflection exchange (indices 2,3)
// until the request fits; the persona pair and the trailing user
// message always survive.
std::vector<ChatMessage> prune_to_limit(const std::vector<ChatMessage>& history,
                                        std::size_t limit) {
    std::vector<ChatMessage> sent = history;
    if (limit == 0) return sent;
    while (approximate_tokens(sent) > limit && sent.size() >= 5)
        sent.erase(sent.begin() + 2, sent.begin() + 4);
    return sent;
}

struct CaseRunner {
    const Society& society;
    const Strategy& strategy;
    Backend& backend;
    const PromptSet& prompts;
    const TaskCase& task;
    const RunOptions& options;
    Transcript& t;
    CallMeta base;

    // Appends the user message and the backend's reply to agent k's
    // history; extracts the answer for rounds >= 0.
    void ask(std::size_t k, int round, const std::string& text) {
        t.histories[k].push_back({Role::User, text});
        const std::vector<ChatMessage> sent =
            prune_to_limit(t.histories[k], backend.context_limit());
        CallMeta meta = base;
        meta.agent_index = k;
        meta.round = round;
        const Completion reply = backend.complete(sent, options.decoding, meta);
        t.histories[k].push_back({Role::Assistant, reply.text});
        t.usage.push_back({k, round, reply.prompt_tokens, reply.completion_tokens,
                           reply.approximate_usage});
        if (round >= 0)
            t.answers[k][static_cast<std::size_t>(round)] = extract_answer(task.kind, reply.text);
    }

    void run() {
        const std::size_t n = society.size();
        t.histories = prime_agents(society, prompts, task.kind, backend, options.decoding, base,
                                   &t.usage);
        const std::string question =
            render_template(prompts.get(task.kind, "question"), task.slots);
        for (std::size_t k = 0; k < n; ++k) ask(k, 0, question);

        const std::string& debate_tmpl = prompts.get(task.kind, "debate");
        const std::string& reflect_tmpl = prompts.get(task.kind, "reflection");
        for (std::size_t j = 1; j <= strategy.round_count(); ++j) {
            const RoundPlan& plan = t.round_plans[j - 1];
            // round-(j-1) replies, captured before this round appends
            std::vector<std::string> prev(n);
            for (std::size_t i = 0; i < n; ++i) prev[i] = t.histories[i].back().content;
            for (std::size_t k = 0; k < n; ++k) {
                if (plan.assignment[k] == ThinkingPattern::Debate) {
                    std::string embed;
                    for (std::size_t i = 0; i < n; ++i) {
                        if (i == k) continue;
                        embed += "Agent " + std::to_string(i + 1) + ": " + prev[i] + "\n";
                    }
                    ask(k, static_cast<int>(j),
                        render_template(debate_tmpl, {{"other agent responses", embed}}));
                } else {
                    ask(k, static_cast<int>(j), reflect_tmpl);
                }
            }
        }
    }
};

}  // namespace

std::vector<RoundPlan> plan_rounds(const Strategy& strategy, std::size_t n_agents, Rng& rng) {
    if (n_agents == 0) throw BoundsError("plan_rounds: society is empty");
    if (strategy.allocation == Allocation::Part && n_agents < 2)
        throw ConfigError("strategy.allocation", "part allocation needs at least 2 agents");
    std::vector<RoundPlan> plans;
    plans.reserve(strategy.round_count());
    for (std::size_t r = 0; r < strategy.round_count(); ++r) {
        const ThinkingPattern labeled = strategy.rounds[r];
        RoundPlan plan{static_cast<int>(r),
                       std::vector<ThinkingPattern>(n_agents, labeled)};
        if (strategy.allocation == Allocation::Part) {
            const std::size_t majority = n_agents == 2 ? 1 : (n_agents + 2) / 2;
            std::vector<std::size_t> order(n_agents);
            std::iota(order.begin(), order.end(), 0);
            deterministic_shuffle(order, rng);
            for (std::size_t i = 0; i < n_agents - majority; ++i)
                plan.assignment[order[i]] = complement(labeled);
        }
        plans.push_back(std::move(plan));
    }
    return plans;
}

std::vector<std::vector<ChatMessage>> prime_agents(const Society& society,
                                                   const PromptSet& prompts, TaskKind kind,
                                                   Backend& backend,
                                                   const DecodingParams& decoding, CallMeta base,
                                                   std::vector<UsageRecord>* usage) {
    std::vector<std::vector<ChatMessage>> histories(society.size());
    for (std::size_t k = 0; k < society.size(); ++k) {
        histories[k].push_back({Role::System, prompts.get(kind, persona_slot(society.agents[k]))});
        CallMeta meta = base;
        meta.agent_index = k;
        meta.round = -1;
        const Completion ack = backend.complete(histories[k], decoding, meta);
        histories[k].push_back({Role::Assistant, ack.text});
        if (usage)
            usage->push_back({k, -1, ack.prompt_tokens, ack.completion_tokens,
                              ack.approximate_usage});
    }
    return histories;
}

Transcript run_case(const Society& society, const Strategy& strategy, Backend& backend,
                    const PromptSet& prompts, const TaskCase& task, std::uint64_t seed,
                    const RunOptions& options) {
    const std::size_t n = society.size();
    const std::size_t rounds = strategy.round_count();
    Transcript t;
    t.case_id = task.id;
    t.kind = task.kind;
    t.stratum = task.stratum;
    t.society = society;
    t.strategy = strategy;
    t.trial = options.trial;
    t.seed = seed;
    t.gold = task.gold;
    t.answers.assign(n, std::vector<std::optional<std::string>>(rounds + 1));
    t.started_at = options.clock ? options.clock() : utc_timestamp();

    Rng plan_rng(seed);
    t.round_plans = plan_rounds(strategy, n, plan_rng);

    CaseRunner runner{society, strategy,  backend,
                      prompts, task,      options,
                      t,       CallMeta{task.id, options.experiment_seed, options.trial, 0, 0}};
    try {
        runner.run();
    } catch (const BackendError& e) {
        t.status = "aborted";
        t.abort_reason = e.what();
    }
    for (const UsageRecord& u : t.usage) {
        t.total_prompt_tokens += u.prompt_tokens;
        t.total_completion_tokens += u.completion_tokens;
    }
    t.finished_at = options.clock ? options.clock() : utc_timestamp();
    return t;
}

std::vector<Transcript> run_experiment(const Society& society, const Strategy& strategy,
                                       Backend& backend, const PromptSet& prompts,
                                       const std::vector<TaskCase>& cases, std::size_t trials,
                                       std::uint64_t experiment_seed,
                                       const ExperimentOptions& options) {
    // surface missing templates before entering the parallel region
    for (const TaskCase& c : cases) {
        prompts.get(c.kind, "persona_easygoing");
        prompts.get(c.kind, "persona_overconfident");
        prompts.get(c.kind, "question");
        prompts.get(c.kind, "debate");
        prompts.get(c.kind, "reflection");
    }
    const std::size_t jobs = cases.size() * trials;
    std::vector<Transcript> out(jobs);
    auto one = [&](std::size_t idx) {
        const TaskCase& task = cases[idx / trials];
        const std::size_t trial = idx % trials;
        RunOptions ro;
        ro.decoding = options.decoding;
        ro.experiment_seed = experiment_seed;
        ro.trial = trial;
        ro.clock = options.clock;
        out[idx] = run_case(society, strategy, backend, prompts, task,
                            derive_case_seed(experiment_seed, task.id, static_cast<int>(trial)),
                            ro);
    };
#ifdef _OPENMP
    if (options.workers > 1) {
#pragma omp parallel for schedule(dynamic) num_threads(options.workers)
        for (long long i = 0; i < static_cast<long long>(jobs); ++i)
            one(static_cast<std::size_t>(i));
    } else {
        for (std::size_t i = 0; i < jobs; ++i) one(i);
    }
#else
    for (std::size_t i = 0; i < jobs; ++i) one(i);
#endif
    if (options.sink)
        for (const Transcript& t : out) options.sink(t);
    return out;
}

nlohmann::ordered_json transcript_to_json(const Transcript& t) {
    nlohmann::ordered_json j;
    j["schema"] = "som.transcript.v1";
    j["case_id"] = t.case_id;
    j["kind"] = to_string(t.kind);
    j["stratum"] = t.stratum;
    nlohmann::ordered_json society;
    society["label"] = t.society.label();
    society["personas"] = nlohmann::ordered_json::array();
    for (Persona p : t.society.agents) society["personas"].push_back(to_string(p));
    j["society"] = std::move(society);
    j["strategy"] = {{"rounds", t.strategy.canonical_name()},
                     {"allocation", to_string(t.strategy.allocation)}};
    j["trial"] = t.trial;
    j["seed"] = t.seed;
    j["status"] = t.status;
    j["abort_reason"] =
        t.abort_reason.empty() ? nlohmann::ordered_json() : nlohmann::ordered_json(t.abort_reason);
    j["gold"] = t.gold;
    j["round_plans"] = nlohmann::ordered_json::array();
    for (const RoundPlan& plan : t.round_plans) {
        nlohmann::ordered_json row = nlohmann::ordered_json::array();
        for (ThinkingPattern p : plan.assignment) row.push_back(to_string(p));
        j["round_plans"].push_back(std::move(row));
    }
    j["answers"] = nlohmann::ordered_json::array();
    for (const auto& row : t.answers) {
        nlohmann::ordered_json cells = nlohmann::ordered_json::array();
        for (const auto& cell : row)
            cells.push_back(cell ? nlohmann::ordered_json(*cell) : nlohmann::ordered_json());
        j["answers"].push_back(std::move(cells));
    }
    j["histories"] = nlohmann::ordered_json::array();
    for (const auto& history : t.histories) {
        nlohmann::ordered_json msgs = nlohmann::ordered_json::array();
        for (const ChatMessage& m : history)
            msgs.push_back({{"role", to_string(m.role)}, {"content", m.content}});
        j["histories"].push_back(std::move(msgs));
    }
    j["usage"] = nlohmann::ordered_json::array();
    for (const UsageRecord& u : t.usage)
        j["usage"].push_back({{"agent", u.agent_index},
                              {"round", u.round},
                              {"prompt_tokens", u.prompt_tokens},
                              {"completion_tokens", u.completion_tokens},
                              {"approximate", u.approximate}});
    j["total_prompt_tokens"] = t.total_prompt_tokens;
    j["total_completion_tokens"] = t.total_completion_tokens;
    j["started_at"] = t.started_at;
    j["finished_at"] = t.finished_at;
    return j;
}

Transcript transcript_from_json(const nlohmann::json& j) {
    if (j.value("schema", "") != "som.transcript.v1")
        throw IngestError("unknown transcript schema '" + j.value("schema", "") + "'", 0);
    Transcript t;
    t.case_id = j.at("case_id").get<std::string>();
    t.kind = parse_task_kind(j.at("kind").get<std::string>());
    t.stratum = j.value("stratum", "");
    for (const auto& p : j.at("society").at("personas"))
        t.society.agents.push_back(parse_persona(p.get<std::string>()));
    t.strategy = parse_strategy(j.at("strategy").at("rounds").get<std::string>());
    t.strategy.allocation = parse_allocation(j.at("strategy").at("allocation").get<std::string>());
    t.trial = j.at("trial").get<std::size_t>();
    t.seed = j.at("seed").get<std::uint64_t>();
    t.status = j.at("status").get<std::string>();
    if (j.contains("abort_reason") && !j.at("abort_reason").is_null())
        t.abort_reason = j.at("abort_reason").get<std::string>();
    t.gold = j.at("gold").get<std::vector<std::string>>();
    int round_index = 0;
    for (const auto& row : j.at("round_plans")) {
        RoundPlan plan;
        plan.round_index = round_index++;
        for (const auto& p : row)
            plan.assignment.push_back(parse_thinking_pattern(p.get<std::string>()));
        t.round_plans.push_back(std::move(plan));
    }
    for (const auto& row : j.at("answers")) {
        std::vector<std::optional<std::string>> cells;
        for (const auto& cell : row) {
            if (cell.is_null())
                cells.emplace_back(std::nullopt);
            else
                cells.emplace_back(cell.get<std::string>());
        }
        t.answers.push_back(std::move(cells));
    }
    if (j.contains("histories")) {
        for (const auto& history : j.at("histories")) {
            std::vector<ChatMessage> msgs;
            for (const auto& m : history)
                msgs.push_back({parse_role(m.at("role").get<std::string>()),
                                m.at("content").get<std::string>()});
            t.histories.push_back(std::move(msgs));
        }
    }
    if (j.contains("usage")) {
        for (const auto& u : j.at("usage"))
            t.usage.push_back({u.at("agent").get<std::size_t>(), u.at("round").get<int>(),
                               u.at("prompt_tokens").get<std::size_t>(),
                               u.at("completion_tokens").get<std::size_t>(),
                               u.value("approximate", false)});
    }
    t.total_prompt_tokens = j.value("total_prompt_tokens", std::size_t{0});
    t.total_completion_tokens = j.value("total_completion_tokens", std::size_t{0});
    t.started_at = j.value("started_at", "");
    t.finished_at = j.value("finished_at", "");
    return t;
}

std::string transcript_line(const Transcript& t) { return transcript_to_json(t).dump() + "\n"; }

std::vector<Transcript> load_transcripts(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IngestError("cannot open transcript file '" + path + "'", 0);
    std::vector<Transcript> out;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        try {
            out.push_back(transcript_from_json(nlohmann::json::parse(line)));
        } catch (const IngestError& e) {
            throw IngestError(std::string(e.what()) + " in '" + path + "'", line_no);
        } catch (const std::exception& e) {
            throw IngestError("bad transcript record in '" + path + "': " + e.what(), line_no);
        }
    }
    return out;
}

std::string utc_timestamp() {
    const std::time_t now =
        std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[24];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

}  // namespace som
