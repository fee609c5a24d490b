#include "som/config.hpp"

#include <cinttypes>
#include <cstdio>
#include <initializer_list>

#include "som/rng.hpp"
#include "som/util.hpp"

namespace som {
namespace {

using nlohmann::json;

void check_keys(const json& obj, const std::string& prefix,
                std::initializer_list<const char*> allowed) {
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        bool known = false;
        for (const char* key : allowed)
            if (it.key() == key) {
                known = true;
                break;
            }
        if (!known)
            throw ConfigError(prefix.empty() ? it.key() : prefix + "." + it.key(),
                              "unknown key");
    }
}

std::string as_string(const json& v, const std::string& path) {
    if (!v.is_string()) throw ConfigError(path, "expected a string");
    return v.get<std::string>();
}

bool as_bool(const json& v, const std::string& path) {
    if (!v.is_boolean()) throw ConfigError(path, "expected true or false");
    return v.get<bool>();
}

double as_number(const json& v, const std::string& path) {
    if (!v.is_number()) throw ConfigError(path, "expected a number");
    return v.get<double>();
}

std::int64_t as_int(const json& v, const std::string& path) {
    if (!v.is_number_integer()) throw ConfigError(path, "expected an integer");
    return v.get<std::int64_t>();
}

std::uint64_t as_uint(const json& v, const std::string& path) {
    if (v.is_number_unsigned()) return v.get<std::uint64_t>();
    if (v.is_number_integer() && v.get<std::int64_t>() >= 0)
        return static_cast<std::uint64_t>(v.get<std::int64_t>());
    throw ConfigError(path, "expected a non-negative integer");
}

DatasetSpec parse_dataset(const json& j) {
    if (!j.is_object()) throw ConfigError("dataset", "expected an object");
    check_keys(j, "dataset", {"kind", "path", "total", "quotas"});
    DatasetSpec spec;
    if (!j.contains("kind")) throw ConfigError("dataset.kind", "required");
    try {
        spec.kind = parse_task_kind(as_string(j.at("kind"), "dataset.kind"));
    } catch (const ParseError& e) {
        throw ConfigError("dataset.kind", e.what());
    }
    if (!j.contains("path")) throw ConfigError("dataset.path", "required");
    spec.path = as_string(j.at("path"), "dataset.path");
    if (j.contains("total"))
        spec.total = static_cast<std::size_t>(as_uint(j.at("total"), "dataset.total"));
    if (j.contains("quotas")) {
        const json& q = j.at("quotas");
        if (!q.is_object()) throw ConfigError("dataset.quotas", "expected an object");
        for (auto it = q.begin(); it != q.end(); ++it)
            spec.quotas[it.key()] = static_cast<std::size_t>(
                as_uint(it.value(), "dataset.quotas." + it.key()));
    }
    if (spec.total > 0) {
        if (spec.quotas.empty())
            throw ConfigError("dataset.quotas", "sampling needs per-stratum quotas");
        std::size_t sum = 0;
        for (const auto& [_, count] : spec.quotas) sum += count;
        if (sum != spec.total)
            throw ConfigError("dataset.quotas", "quota sum " + std::to_string(sum) +
                                                    " != total " + std::to_string(spec.total));
    } else if (!spec.quotas.empty()) {
        throw ConfigError("dataset.total", "quotas given but total is 0");
    }
    return spec;
}

std::vector<Society> parse_societies(const json& j) {
    if (!j.is_array() || j.empty())
        throw ConfigError("societies", "expected a non-empty array");
    std::vector<Society> societies;
    for (std::size_t i = 0; i < j.size(); ++i) {
        const std::string path = "societies[" + std::to_string(i) + "]";
        const json& s = j.at(i);
        if (!s.is_object()) throw ConfigError(path, "expected an object");
        check_keys(s, path, {"overconfident", "easy_going"});
        const std::size_t over =
            s.contains("overconfident")
                ? static_cast<std::size_t>(as_uint(s.at("overconfident"), path + ".overconfident"))
                : 0;
        const std::size_t easy =
            s.contains("easy_going")
                ? static_cast<std::size_t>(as_uint(s.at("easy_going"), path + ".easy_going"))
                : 0;
        try {
            societies.push_back(build_society(over, easy));
        } catch (const Error& e) {
            throw ConfigError(path, e.what());
        }
    }
    return societies;
}

std::vector<Strategy> parse_strategies(const json& j) {
    std::vector<Strategy> strategies;
    if (j.is_string()) {
        const std::string text = j.get<std::string>();
        if (text.rfind("all:", 0) != 0)
            throw ConfigError("strategies", "expected a list of names or \"all:R\"");
        int rounds = 0;
        try {
            rounds = std::stoi(text.substr(4));
        } catch (const std::exception&) {
            throw ConfigError("strategies", "bad round count in \"" + text + "\"");
        }
        try {
            return enumerate_strategies(rounds);
        } catch (const Error& e) {
            throw ConfigError("strategies", e.what());
        }
    }
    if (!j.is_array() || j.empty())
        throw ConfigError("strategies", "expected a non-empty array or \"all:R\"");
    for (std::size_t i = 0; i < j.size(); ++i) {
        const std::string path = "strategies[" + std::to_string(i) + "]";
        try {
            strategies.push_back(parse_strategy(as_string(j.at(i), path)));
        } catch (const ParseError& e) {
            throw ConfigError(path, e.what());
        }
    }
    return strategies;
}

BackendSpec parse_backend(const json& j) {
    if (!j.is_object()) throw ConfigError("backend", "expected an object");
    BackendSpec spec;
    if (!j.contains("type")) throw ConfigError("backend.type", "required");
    spec.type = as_string(j.at("type"), "backend.type");
    if (spec.type == "scripted") {
        check_keys(j, "backend", {"type", "reply", "context_limit"});
        if (j.contains("reply")) spec.reply = as_string(j.at("reply"), "backend.reply");
        if (j.contains("context_limit"))
            spec.context_limit =
                static_cast<std::size_t>(as_uint(j.at("context_limit"), "backend.context_limit"));
    } else if (spec.type == "stochastic") {
        check_keys(j, "backend", {"type", "base_accuracy", "sway"});
        if (j.contains("base_accuracy"))
            spec.base_accuracy = as_number(j.at("base_accuracy"), "backend.base_accuracy");
        if (j.contains("sway")) spec.sway = as_number(j.at("sway"), "backend.sway");
        if (spec.base_accuracy < 0.0 || spec.base_accuracy > 1.0)
            throw ConfigError("backend.base_accuracy", "expected a probability in [0, 1]");
        if (spec.sway < 0.0 || spec.sway > 1.0)
            throw ConfigError("backend.sway", "expected a probability in [0, 1]");
    } else if (spec.type == "http") {
        check_keys(j, "backend",
                   {"type", "base_url", "model", "rpm_limit", "max_inflight", "context_limit",
                    "timeout_ms", "max_attempts", "base_backoff_ms"});
        if (!j.contains("base_url")) throw ConfigError("backend.base_url", "required");
        spec.base_url = as_string(j.at("base_url"), "backend.base_url");
        if (!j.contains("model")) throw ConfigError("backend.model", "required");
        spec.model = as_string(j.at("model"), "backend.model");
        if (j.contains("rpm_limit"))
            spec.rpm_limit = static_cast<int>(as_int(j.at("rpm_limit"), "backend.rpm_limit"));
        if (j.contains("max_inflight"))
            spec.max_inflight =
                static_cast<int>(as_int(j.at("max_inflight"), "backend.max_inflight"));
        if (j.contains("context_limit"))
            spec.context_limit =
                static_cast<std::size_t>(as_uint(j.at("context_limit"), "backend.context_limit"));
        if (j.contains("timeout_ms"))
            spec.timeout_ms = as_int(j.at("timeout_ms"), "backend.timeout_ms");
        if (j.contains("max_attempts"))
            spec.max_attempts =
                static_cast<int>(as_int(j.at("max_attempts"), "backend.max_attempts"));
        if (spec.max_attempts < 1)
            throw ConfigError("backend.max_attempts", "expected >= 1");
        if (j.contains("base_backoff_ms"))
            spec.base_backoff_ms = as_int(j.at("base_backoff_ms"), "backend.base_backoff_ms");
    } else {
        throw ConfigError("backend.type", "expected scripted, stochastic, or http, got " +
                                              spec.type);
    }
    return spec;
}

DecodingParams parse_decoding(const json& j) {
    if (!j.is_object()) throw ConfigError("decoding", "expected an object");
    check_keys(j, "decoding", {"temperature", "top_p", "top_k"});
    DecodingParams params;
    if (j.contains("temperature"))
        params.temperature = as_number(j.at("temperature"), "decoding.temperature");
    if (j.contains("top_p")) params.top_p = as_number(j.at("top_p"), "decoding.top_p");
    if (j.contains("top_k"))
        params.top_k = static_cast<int>(as_int(j.at("top_k"), "decoding.top_k"));
    validate_decoding(params);
    return params;
}

}  // namespace

ExperimentConfig parse_config(const nlohmann::json& root) {
    if (!root.is_object()) throw ConfigError("", "config must be a JSON object");
    check_keys(root, "",
               {"dataset", "societies", "strategies", "allocation", "trials", "backend",
                "decoding", "seed", "workers", "vote", "skip_aborted", "out_dir",
                "prompts_dir"});

    ExperimentConfig config;
    if (!root.contains("dataset")) throw ConfigError("dataset", "required");
    config.dataset = parse_dataset(root.at("dataset"));
    if (!root.contains("societies")) throw ConfigError("societies", "required");
    config.societies = parse_societies(root.at("societies"));
    if (!root.contains("strategies")) throw ConfigError("strategies", "required");
    config.strategies = parse_strategies(root.at("strategies"));
    if (!root.contains("backend")) throw ConfigError("backend", "required");
    config.backend = parse_backend(root.at("backend"));

    if (!root.contains("seed"))
        throw ConfigError("seed", "required: a 64-bit unsigned experiment seed");
    config.seed = as_uint(root.at("seed"), "seed");

    if (root.contains("allocation")) {
        Allocation allocation;
        try {
            allocation = parse_allocation(as_string(root.at("allocation"), "allocation"));
        } catch (const ParseError& e) {
            throw ConfigError("allocation", e.what());
        }
        if (allocation == Allocation::Part)
            for (Strategy& s : config.strategies) s.allocation = Allocation::Part;
    }
    if (root.contains("trials")) {
        config.trials = static_cast<std::size_t>(as_uint(root.at("trials"), "trials"));
        if (config.trials == 0) throw ConfigError("trials", "expected >= 1");
    }
    if (root.contains("workers")) {
        config.workers = static_cast<int>(as_int(root.at("workers"), "workers"));
        if (config.workers < 1) throw ConfigError("workers", "expected >= 1");
    }
    if (root.contains("vote")) {
        try {
            config.vote = parse_vote_mode(as_string(root.at("vote"), "vote"));
        } catch (const ParseError& e) {
            throw ConfigError("vote", e.what());
        }
    }
    if (root.contains("skip_aborted"))
        config.skip_aborted = as_bool(root.at("skip_aborted"), "skip_aborted");
    if (root.contains("out_dir"))
        config.out_dir = as_string(root.at("out_dir"), "out_dir");
    if (root.contains("prompts_dir"))
        config.prompts_dir = as_string(root.at("prompts_dir"), "prompts_dir");

    if (root.contains("decoding")) {
        config.decoding = parse_decoding(root.at("decoding"));
    } else if (config.backend.type == "http") {
        try {
            config.decoding = decoding_preset(config.backend.model);
        } catch (const ConfigError&) {
            throw ConfigError("decoding", "no preset for model '" + config.backend.model +
                                              "'; set decoding explicitly");
        }
    }

    // Part assignment needs someone to hold the minority pattern.
    for (const Strategy& strategy : config.strategies) {
        if (strategy.allocation != Allocation::Part) continue;
        for (const Society& society : config.societies)
            if (society.size() < 2)
                throw ConfigError("allocation",
                                  "part allocation needs >= 2 agents, society " +
                                      society.label() + " has " +
                                      std::to_string(society.size()));
    }
    return config;
}

ExperimentConfig load_config(const std::string& path) {
    const std::string text = read_file(path);
    nlohmann::json root;
    try {
        root = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw IngestError(std::string("config is not valid JSON: ") + e.what(), 1);
    }
    return parse_config(root);
}

nlohmann::ordered_json canonical_config(const ExperimentConfig& config) {
    nlohmann::ordered_json j;
    j["dataset"] = {{"kind", to_string(config.dataset.kind)},
                    {"path", config.dataset.path},
                    {"total", config.dataset.total},
                    {"quotas", config.dataset.quotas}};
    j["societies"] = nlohmann::ordered_json::array();
    for (const Society& s : config.societies)
        j["societies"].push_back({{"overconfident", s.overconfident_count()},
                                  {"easy_going", s.easygoing_count()}});
    j["strategies"] = nlohmann::ordered_json::array();
    for (const Strategy& s : config.strategies) j["strategies"].push_back(s.full_name());
    j["trials"] = config.trials;
    nlohmann::ordered_json backend;
    backend["type"] = config.backend.type;
    if (config.backend.type == "scripted") {
        backend["reply"] = config.backend.reply;
        backend["context_limit"] = config.backend.context_limit;
    } else if (config.backend.type == "stochastic") {
        backend["base_accuracy"] = config.backend.base_accuracy;
        backend["sway"] = config.backend.sway;
    } else {
        backend["base_url"] = config.backend.base_url;
        backend["model"] = config.backend.model;
        backend["rpm_limit"] = config.backend.rpm_limit;
        backend["max_inflight"] = config.backend.max_inflight;
        backend["context_limit"] = config.backend.context_limit;
        backend["timeout_ms"] = config.backend.timeout_ms;
        backend["max_attempts"] = config.backend.max_attempts;
        backend["base_backoff_ms"] = config.backend.base_backoff_ms;
    }
    j["backend"] = backend;
    nlohmann::ordered_json decoding;
    decoding["temperature"] = config.decoding.temperature;
    decoding["top_p"] = config.decoding.top_p;
    if (config.decoding.top_k) decoding["top_k"] = *config.decoding.top_k;
    j["decoding"] = decoding;
    j["seed"] = config.seed;
    j["vote"] = to_string(config.vote);
    j["skip_aborted"] = config.skip_aborted;
    j["prompts_dir"] = config.prompts_dir;
    return j;
}

std::string config_hash(const ExperimentConfig& config) {
    const std::uint64_t h = fnv1a(canonical_config(config).dump());
    char buf[32];
    std::snprintf(buf, sizeof(buf), "fnv1a:%016" PRIx64, h);
    return buf;
}

nlohmann::ordered_json manifest_to_json(const RunManifest& manifest) {
    nlohmann::ordered_json j;
    j["schema"] = "som.manifest.v1";
    j["config_hash"] = manifest.config_hash;
    j["code_version"] = manifest.code_version;
    j["started_at"] = manifest.started_at;
    j["finished_at"] = manifest.finished_at;
    j["transcripts"] = manifest.transcripts;
    j["counts"] = {{"completed", manifest.completed}, {"aborted", manifest.aborted}};
    return j;
}

RunManifest manifest_from_json(const nlohmann::json& j) {
    if (!j.is_object() || j.value("schema", "") != "som.manifest.v1")
        throw IngestError("not a som.manifest.v1 record", 1);
    RunManifest m;
    try {
        m.config_hash = j.at("config_hash").get<std::string>();
        m.code_version = j.at("code_version").get<std::string>();
        m.started_at = j.at("started_at").get<std::string>();
        m.finished_at = j.at("finished_at").get<std::string>();
        m.transcripts = j.at("transcripts").get<std::vector<std::string>>();
        m.completed = j.at("counts").at("completed").get<std::size_t>();
        m.aborted = j.at("counts").at("aborted").get<std::size_t>();
    } catch (const nlohmann::json::exception& e) {
        throw IngestError(std::string("malformed manifest: ") + e.what(), 1);
    }
    return m;
}

RunManifest load_manifest(const std::string& path) {
    const std::string text = read_file(path);
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw IngestError(std::string("manifest is not valid JSON: ") + e.what(), 1);
    }
    return manifest_from_json(j);
}

}  // namespace som
