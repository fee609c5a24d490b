#include "som/tasks.hpp"

#include <algorithm>
#include <cctype>
#include <numeric>

#include <json.hpp>

#include "som/rng.hpp"
#include "som/util.hpp"

namespace som {

namespace {

using nlohmann::json;
using nlohmann::ordered_json;

bool is_square(const std::string& s) {
    return s.size() == 2 && s[0] >= 'a' && s[0] <= 'h' && s[1] >= '1' && s[1] <= '8';
}

long line_of_byte(const std::string& text, std::size_t byte) {
    long line = 1;
    for (std::size_t i = 0; i < byte && i < text.size(); ++i)
        if (text[i] == '\n') ++line;
    return line;
}

json parse_json_file(const std::string& path, const std::string& text) {
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        throw IngestError("invalid JSON in '" + path + "': " + e.what(),
                          line_of_byte(text, e.byte));
    }
}

std::string require_string(const json& rec, const char* field, long record_no) {
    if (!rec.is_object() || !rec.contains(field) || !rec[field].is_string())
        throw IngestError(std::string("record missing string field '") + field + "'",
                          record_no);
    std::string value = rec[field].get<std::string>();
    if (trim(value).empty())
        throw IngestError(std::string("record field '") + field + "' is empty", record_no);
    return value;
}

// --- CSV (RFC 4180 quoting; blank lines skipped) ---

struct CsvRecord {
    std::vector<std::string> fields;
    long line = 0;
};

std::vector<CsvRecord> parse_csv(const std::string& text) {
    std::vector<CsvRecord> out;
    std::vector<std::string> fields;
    std::string field;
    bool in_quotes = false;
    bool record_started = false;
    long line = 1;
    long record_line = 1;

    auto end_record = [&]() {
        fields.push_back(std::move(field));
        field.clear();
        out.push_back({std::move(fields), record_line});
        fields.clear();
        record_started = false;
    };

    for (std::size_t i = 0; i < text.size(); ++i) {
        const char c = text[i];
        if (in_quotes) {
            if (c == '"') {
                if (i + 1 < text.size() && text[i + 1] == '"') {
                    field += '"';
                    ++i;
                } else {
                    in_quotes = false;
                }
            } else {
                if (c == '\n') ++line;
                field += c;
            }
            continue;
        }
        switch (c) {
            case '"':
                in_quotes = true;
                record_started = true;
                break;
            case ',':
                fields.push_back(std::move(field));
                field.clear();
                record_started = true;
                break;
            case '\r':
                break;
            case '\n':
                if (record_started || !field.empty() || !fields.empty()) end_record();
                ++line;
                record_line = line;
                break;
            default:
                field += c;
                record_started = true;
        }
    }
    if (in_quotes) throw IngestError("unterminated quoted field", record_line);
    if (record_started || !field.empty() || !fields.empty()) end_record();
    return out;
}

// --- per-kind loaders ---

const std::vector<std::string> kMmluHeader = {"question", "A", "B",      "C",
                                              "D",        "answer", "subject"};

std::vector<TaskCase> load_mmlu(const std::string& path) {
    const std::string text = read_file(path);
    const auto records = parse_csv(text);
    std::size_t start = 0;
    if (!records.empty() && records[0].fields == kMmluHeader) start = 1;

    std::vector<TaskCase> out;
    std::map<std::string, std::size_t> per_subject;
    for (std::size_t i = start; i < records.size(); ++i) {
        const auto& rec = records[i];
        if (rec.fields.size() != 7)
            throw IngestError("expected 7 CSV fields, got " +
                                  std::to_string(rec.fields.size()),
                              rec.line);
        const std::string answer = to_upper(trim(rec.fields[5]));
        if (answer.size() != 1 || answer[0] < 'A' || answer[0] > 'D')
            throw IngestError("gold answer must be one of A,B,C,D, got '" +
                                  rec.fields[5] + "'",
                              rec.line);
        const std::string subject = trim(rec.fields[6]);
        if (subject.empty()) throw IngestError("empty subject", rec.line);
        if (trim(rec.fields[0]).empty()) throw IngestError("empty question", rec.line);

        TaskCase c;
        c.kind = TaskKind::MultipleChoice;
        c.id = subject + "-" + std::to_string(per_subject[subject]++);
        c.slots = {{"Question", rec.fields[0]},
                   {"A", rec.fields[1]},
                   {"B", rec.fields[2]},
                   {"C", rec.fields[3]},
                   {"D", rec.fields[4]}};
        c.gold = {answer};
        c.stratum = subject;
        out.push_back(std::move(c));
    }
    return out;
}

std::vector<TaskCase> load_math(const std::string& path) {
    const std::string text = read_file(path);
    const json doc = parse_json_file(path, text);
    if (!doc.is_array()) throw IngestError("expected a JSON array of records", 1);

    std::vector<TaskCase> out;
    std::map<std::string, std::size_t> per_level;
    long record_no = 0;
    for (const auto& rec : doc) {
        ++record_no;
        const std::string problem = require_string(rec, "problem", record_no);
        const std::string level = trim(require_string(rec, "level", record_no));
        const std::string answer = require_string(rec, "answer", record_no);

        TaskCase c;
        c.kind = TaskKind::BoxedMath;
        c.id = "math-" + level + "-" + std::to_string(per_level[level]++);
        c.slots = {{"problem", problem}};
        c.gold = {answer};
        c.stratum = level;
        out.push_back(std::move(c));
    }
    return out;
}

std::vector<TaskCase> load_chess(const std::string& path) {
    const std::string text = read_file(path);
    const json doc = parse_json_file(path, text);
    if (!doc.is_array()) throw IngestError("expected a JSON array of records", 1);

    std::vector<TaskCase> out;
    long record_no = 0;
    for (const auto& rec : doc) {
        ++record_no;
        const std::string moves = require_string(rec, "moves", record_no);
        const std::string square = trim(require_string(rec, "square", record_no));
        if (!is_square(square))
            throw IngestError("square '" + square + "' does not match [a-h][1-8]",
                              record_no);
        if (!rec.contains("valid") || !rec["valid"].is_array() || rec["valid"].empty())
            throw IngestError("record needs a non-empty 'valid' array", record_no);

        TaskCase c;
        c.kind = TaskKind::ChessMove;
        c.id = "chess-" + std::to_string(record_no - 1);
        c.slots = {{"chess move", moves}, {"square", square}};
        for (const auto& v : rec["valid"]) {
            if (!v.is_string() || !is_square(v.get<std::string>()))
                throw IngestError("valid moves must match [a-h][1-8]", record_no);
            c.gold.push_back(v.get<std::string>());
        }
        c.stratum = "all";
        out.push_back(std::move(c));
    }
    return out;
}

// --- extraction ---

struct Token {
    std::string value;
    std::size_t pos = 0;
};

// Byte range [first, second) of the last line containing non-whitespace.
std::pair<std::size_t, std::size_t> last_nonempty_line(const std::string& raw) {
    std::size_t best_start = 0;
    std::size_t best_end = 0;
    std::size_t line_start = 0;
    bool has_content = false;
    for (std::size_t i = 0; i <= raw.size(); ++i) {
        if (i == raw.size() || raw[i] == '\n') {
            if (has_content) {
                best_start = line_start;
                best_end = i;
            }
            line_start = i + 1;
            has_content = false;
        } else if (!std::isspace(static_cast<unsigned char>(raw[i]))) {
            has_content = true;
        }
    }
    return {best_start, best_end};
}

std::vector<Token> mc_tokens(const std::string& raw) {
    std::vector<Token> out;
    for (std::size_t i = 0; i + 3 <= raw.size(); ++i) {
        if (raw[i] != '(' || raw[i + 2] != ')') continue;
        const char c = static_cast<char>(std::toupper(static_cast<unsigned char>(raw[i + 1])));
        if (c >= 'A' && c <= 'D') out.push_back({std::string(1, c), i});
    }
    return out;
}

// Fallback for bare answers like "answer: B": final word of the last
// non-empty line, minus trailing punctuation.
std::vector<Token> mc_fallback(const std::string& raw,
                               std::pair<std::size_t, std::size_t> line) {
    std::size_t end = line.second;
    while (end > line.first && std::isspace(static_cast<unsigned char>(raw[end - 1]))) --end;
    while (end > line.first &&
           (raw[end - 1] == '.' || raw[end - 1] == ',' || raw[end - 1] == '!'))
        --end;
    if (end == line.first) return {};
    std::size_t start = end;
    while (start > line.first && !std::isspace(static_cast<unsigned char>(raw[start - 1])))
        --start;
    if (end - start != 1) return {};
    const char c = static_cast<char>(std::toupper(static_cast<unsigned char>(raw[start])));
    if (c < 'A' || c > 'D') return {};
    return {{std::string(1, c), start}};
}

std::vector<Token> boxed_tokens(const std::string& raw) {
    static const std::string kMarker = "\\boxed{";
    std::vector<Token> out;
    std::size_t from = 0;
    while (true) {
        const std::size_t at = raw.find(kMarker, from);
        if (at == std::string::npos) break;
        std::size_t j = at + kMarker.size();
        int depth = 1;
        while (j < raw.size() && depth > 0) {
            if (raw[j] == '{') ++depth;
            if (raw[j] == '}') --depth;
            ++j;
        }
        if (depth == 0) {
            const std::size_t inner = at + kMarker.size();
            out.push_back({trim(raw.substr(inner, j - 1 - inner)), at});
        }
        from = at + kMarker.size();
    }
    return out;
}

// Fallback for bare answers like "answer: 3/4": text after the last
// colon of the last non-empty line, accepted only when whitespace-free.
std::vector<Token> boxed_fallback(const std::string& raw,
                                  std::pair<std::size_t, std::size_t> line) {
    const std::string text = raw.substr(line.first, line.second - line.first);
    const std::size_t colon = text.rfind(':');
    if (colon == std::string::npos) return {};
    const std::string tail = trim(text.substr(colon + 1));
    if (tail.empty() || tail.find_first_of(" \t") != std::string::npos) return {};
    return {{tail, line.first + colon + 1}};
}

std::vector<Token> chess_tokens(const std::string& raw) {
    std::vector<Token> out;
    for (std::size_t i = 0; i + 2 <= raw.size(); ++i) {
        if (raw[i] < 'a' || raw[i] > 'h' || raw[i + 1] < '1' || raw[i + 1] > '8') continue;
        const bool left_ok =
            i == 0 || !std::isalnum(static_cast<unsigned char>(raw[i - 1]));
        const bool right_ok =
            i + 2 == raw.size() || !std::isalnum(static_cast<unsigned char>(raw[i + 2]));
        if (left_ok && right_ok) out.push_back({raw.substr(i, 2), i});
    }
    return out;
}

// --- math canonicalization ---

struct Rational {
    long long num = 0;
    long long den = 1;
};

std::optional<long long> parse_ll(const std::string& s) {
    if (s.empty()) return std::nullopt;
    std::size_t i = s[0] == '-' ? 1 : 0;
    if (i == s.size() || s.size() - i > 18) return std::nullopt;
    long long v = 0;
    for (; i < s.size(); ++i) {
        if (!std::isdigit(static_cast<unsigned char>(s[i]))) return std::nullopt;
        v = v * 10 + (s[i] - '0');
    }
    return s[0] == '-' ? -v : v;
}

Rational reduce(long long num, long long den) {
    if (den < 0) {
        num = -num;
        den = -den;
    }
    if (num == 0) return {0, 1};
    const long long g = std::gcd(num < 0 ? -num : num, den);
    return {num / g, den / g};
}

std::optional<Rational> parse_rational(const std::string& s) {
    if (s.empty()) return std::nullopt;
    const std::size_t slash = s.find('/');
    if (slash != std::string::npos) {
        if (s.find('/', slash + 1) != std::string::npos) return std::nullopt;
        const auto num = parse_ll(s.substr(0, slash));
        const auto den = parse_ll(s.substr(slash + 1));
        if (!num || !den || *den == 0) return std::nullopt;
        return reduce(*num, *den);
    }
    // integer or terminating decimal
    std::size_t i = s[0] == '-' ? 1 : 0;
    std::string digits;
    std::size_t frac_len = 0;
    bool seen_dot = false;
    for (; i < s.size(); ++i) {
        if (s[i] == '.') {
            if (seen_dot) return std::nullopt;
            seen_dot = true;
        } else if (std::isdigit(static_cast<unsigned char>(s[i]))) {
            digits += s[i];
            if (seen_dot) ++frac_len;
        } else {
            return std::nullopt;
        }
    }
    if (digits.empty() || digits.size() > 18) return std::nullopt;
    long long num = 0;
    for (char c : digits) num = num * 10 + (c - '0');
    if (s[0] == '-') num = -num;
    long long den = 1;
    for (std::size_t k = 0; k < frac_len; ++k) den *= 10;
    return reduce(num, den);
}

std::optional<std::pair<std::string, std::size_t>> balanced_group(const std::string& s,
                                                                  std::size_t open) {
    if (open >= s.size() || s[open] != '{') return std::nullopt;
    int depth = 1;
    std::size_t j = open + 1;
    while (j < s.size() && depth > 0) {
        if (s[j] == '{') ++depth;
        if (s[j] == '}') --depth;
        ++j;
    }
    if (depth != 0) return std::nullopt;
    return std::make_pair(s.substr(open + 1, j - 1 - (open + 1)), j);
}

std::string strip_math(const std::string& raw) {
    std::string s;
    s.reserve(raw.size());
    for (char c : raw)
        if (c != '$') s += c;
    for (const char* macro : {"\\left", "\\right", "\\!", "\\,", "\\;", "\\ "})
        replace_all(s, macro, "");
    std::string compact;
    compact.reserve(s.size());
    for (char c : s)
        if (!std::isspace(static_cast<unsigned char>(c))) compact += c;
    s = std::move(compact);
    replace_all(s, "\\dfrac", "\\frac");
    replace_all(s, "\\tfrac", "\\frac");
    static const std::string kFrac = "\\frac{";
    const bool negated = !s.empty() && s.front() == '-';
    const std::size_t frac_at = negated ? 1 : 0;
    if (s.compare(frac_at, kFrac.size(), kFrac) == 0) {
        const auto a = balanced_group(s, frac_at + kFrac.size() - 1);
        if (a) {
            const auto b = balanced_group(s, a->second);
            if (b && b->second == s.size())
                s = (negated ? "-" : "") + a->first + "/" + b->first;
        }
    }
    if (!s.empty() && s.back() == '.') s.pop_back();
    if (!s.empty() && s.front() == '+') s.erase(0, 1);
    return s;
}

std::string canonical_math(const std::string& raw) {
    const std::string s = strip_math(trim(raw));
    if (const auto r = parse_rational(s)) {
        std::string out = std::to_string(r->num);
        if (r->den != 1) out += "/" + std::to_string(r->den);
        return out;
    }
    return s;
}

}  // namespace

std::string to_string(TaskKind k) {
    switch (k) {
        case TaskKind::MultipleChoice: return "multiple_choice";
        case TaskKind::BoxedMath: return "boxed_math";
        case TaskKind::ChessMove: return "chess_move";
    }
    throw DomainError("unreachable task kind");
}

TaskKind parse_task_kind(const std::string& text) {
    if (text == "multiple_choice" || text == "mmlu") return TaskKind::MultipleChoice;
    if (text == "boxed_math" || text == "math") return TaskKind::BoxedMath;
    if (text == "chess_move" || text == "chess") return TaskKind::ChessMove;
    throw ParseError("unknown task kind '" + text + "'", 0);
}

std::vector<TaskCase> load_all_cases(TaskKind kind, const std::string& path) {
    switch (kind) {
        case TaskKind::MultipleChoice: return load_mmlu(path);
        case TaskKind::BoxedMath: return load_math(path);
        case TaskKind::ChessMove: return load_chess(path);
    }
    throw DomainError("unreachable task kind");
}

std::vector<TaskCase> load_dataset(TaskKind kind, const std::string& path,
                                   const SampleSpec& spec) {
    std::size_t quota_sum = 0;
    for (const auto& [stratum, quota] : spec.quotas) quota_sum += quota;
    if (quota_sum != spec.total)
        throw SamplingError("quota sum " + std::to_string(quota_sum) +
                            " does not equal total " + std::to_string(spec.total));

    const std::vector<TaskCase> all = load_all_cases(kind, path);
    std::map<std::string, std::vector<std::size_t>> by_stratum;
    for (std::size_t i = 0; i < all.size(); ++i)
        by_stratum[all[i].stratum].push_back(i);

    std::vector<TaskCase> out;
    out.reserve(spec.total);
    for (const auto& [stratum, quota] : spec.quotas) {
        if (quota == 0) continue;
        const auto it = by_stratum.find(stratum);
        if (it == by_stratum.end())
            throw SamplingError("stratum '" + stratum + "' not present in dataset");
        if (it->second.size() < quota)
            throw SamplingError("stratum '" + stratum + "' has " +
                                std::to_string(it->second.size()) + " cases, quota is " +
                                std::to_string(quota));
        std::vector<std::size_t> indices = it->second;
        Rng rng(mix_u64(spec.seed, fnv1a(stratum)));
        deterministic_shuffle(indices, rng);
        for (std::size_t k = 0; k < quota; ++k) out.push_back(all[indices[k]]);
    }
    return out;
}

std::optional<std::string> extract_answer(TaskKind kind, const std::string& raw) {
    const auto line = last_nonempty_line(raw);
    std::vector<Token> tokens;
    switch (kind) {
        case TaskKind::MultipleChoice:
            tokens = mc_tokens(raw);
            if (tokens.empty()) tokens = mc_fallback(raw, line);
            break;
        case TaskKind::BoxedMath:
            tokens = boxed_tokens(raw);
            if (tokens.empty()) tokens = boxed_fallback(raw, line);
            break;
        case TaskKind::ChessMove:
            tokens = chess_tokens(raw);
            break;
    }
    if (tokens.empty()) return std::nullopt;
    const std::string last_key = canonical_answer(kind, tokens.back().value);
    const bool all_same =
        std::all_of(tokens.begin(), tokens.end(), [&](const Token& t) {
            return canonical_answer(kind, t.value) == last_key;
        });
    if (all_same) return tokens.back().value;
    // distinct answers: honor them only when the reply ends by restating one
    const Token& last = tokens.back();
    if (last.pos >= line.first && last.pos < line.second) return last.value;
    return std::nullopt;
}

std::string canonical_answer(TaskKind kind, const std::string& raw) {
    switch (kind) {
        case TaskKind::MultipleChoice: return to_upper(trim(raw));
        case TaskKind::ChessMove: return to_lower(trim(raw));
        case TaskKind::BoxedMath: return canonical_math(raw);
    }
    throw DomainError("unreachable task kind");
}

MatchDetail match_answer_detailed(TaskKind kind, const std::string& extracted,
                                  const std::vector<std::string>& gold) {
    MatchDetail d;
    const std::string key = canonical_answer(kind, extracted);
    for (const auto& g : gold) {
        if (canonical_answer(kind, g) == key) {
            d.matched = true;
            return d;
        }
    }
    if (kind == TaskKind::BoxedMath) {
        // mismatches between two exact rationals are clean rejections;
        // anything else fell back to string comparison
        const bool extracted_rational = parse_rational(key).has_value();
        const bool gold_rational =
            std::all_of(gold.begin(), gold.end(), [](const std::string& g) {
                return parse_rational(canonical_math(g)).has_value();
            });
        d.manual_review = !(extracted_rational && gold_rational);
    }
    return d;
}

bool match_answer(TaskKind kind, const std::string& extracted,
                  const std::vector<std::string>& gold) {
    return match_answer_detailed(kind, extracted, gold).matched;
}

void write_frozen_sample(const std::string& path, const FrozenSample& sample) {
    ordered_json doc;
    doc["schema"] = "som.sample.v1";
    doc["kind"] = to_string(sample.kind);
    doc["seed"] = sample.seed;
    doc["source"] = sample.source;
    doc["quotas"] = ordered_json::object();
    for (const auto& [stratum, quota] : sample.quotas) doc["quotas"][stratum] = quota;
    doc["cases"] = ordered_json::array();
    for (const auto& c : sample.cases) {
        ordered_json rec;
        rec["id"] = c.id;
        rec["kind"] = to_string(c.kind);
        rec["stratum"] = c.stratum;
        rec["slots"] = ordered_json::object();
        for (const auto& [k, v] : c.slots) rec["slots"][k] = v;
        rec["gold"] = c.gold;
        doc["cases"].push_back(std::move(rec));
    }
    write_file(path, doc.dump(2) + "\n");
}

FrozenSample load_frozen_sample(const std::string& path) {
    const std::string text = read_file(path);
    const json doc = parse_json_file(path, text);
    if (!doc.is_object() || doc.value("schema", "") != "som.sample.v1")
        throw IngestError("not a som.sample.v1 file", 1);
    FrozenSample s;
    s.kind = parse_task_kind(doc.at("kind").get<std::string>());
    s.seed = doc.at("seed").get<std::uint64_t>();
    s.source = doc.value("source", "");
    if (doc.contains("quotas"))
        for (const auto& [stratum, quota] : doc["quotas"].items())
            s.quotas[stratum] = quota.get<std::size_t>();
    long record_no = 0;
    for (const auto& rec : doc.at("cases")) {
        ++record_no;
        TaskCase c;
        c.id = require_string(rec, "id", record_no);
        c.kind = parse_task_kind(require_string(rec, "kind", record_no));
        c.stratum = rec.value("stratum", "");
        if (rec.contains("slots"))
            for (const auto& [k, v] : rec["slots"].items())
                c.slots[k] = v.get<std::string>();
        if (!rec.contains("gold") || !rec["gold"].is_array() || rec["gold"].empty())
            throw IngestError("case needs a non-empty 'gold' array", record_no);
        for (const auto& g : rec["gold"]) c.gold.push_back(g.get<std::string>());
        s.cases.push_back(std::move(c));
    }
    return s;
}

}  // namespace som
