#include <doctest.h>

#include <filesystem>
#include <json.hpp>
#include <set>
#include <string>
#include <vector>

#include "som/tasks.hpp"
#include "som/util.hpp"

using namespace som;

namespace {

std::string fixture_path(const std::string& name) {
    return std::string(SOM_FIXTURES_DIR) + "/" + name;
}

std::string temp_path(const std::string& name) {
    return (std::filesystem::temp_directory_path() / name).string();
}

const std::vector<std::string> kSubjects = {"statistics", "math",      "cs",
                                            "biology",    "chemistry", "physics"};

std::string make_mmlu_csv(int per_subject, bool header = true) {
    std::string csv;
    if (header) csv += "question,A,B,C,D,answer,subject\n";
    const char* letters = "ABCD";
    for (const auto& subject : kSubjects) {
        for (int i = 0; i < per_subject; ++i) {
            csv += "\"Question " + std::to_string(i) + ", about " + subject +
                   "?\",opt a,opt b,opt c,opt d," + letters[i % 4] + "," + subject + "\n";
        }
    }
    return csv;
}

std::string make_math_json(int per_level) {
    nlohmann::ordered_json doc = nlohmann::ordered_json::array();
    for (const auto& level : {"level3", "level4", "level5"}) {
        for (int i = 0; i < per_level; ++i) {
            doc.push_back({{"problem", std::string("Compute case ") + level + " " +
                                           std::to_string(i)},
                           {"level", level},
                           {"answer", std::to_string(i) + "/7"}});
        }
    }
    return doc.dump();
}

std::string make_chess_json(int count) {
    nlohmann::ordered_json doc = nlohmann::ordered_json::array();
    for (int i = 0; i < count; ++i) {
        const char file = static_cast<char>('a' + i % 8);
        doc.push_back({{"moves", "1.e4 e5 2.Nf3 game " + std::to_string(i)},
                       {"square", std::string(1, file) + "2"},
                       {"valid", {std::string(1, file) + "3", std::string(1, file) + "4"}}});
    }
    return doc.dump();
}

SampleSpec mmlu_paper_spec(std::uint64_t seed) {
    SampleSpec spec;
    spec.total = 50;
    spec.quotas = {{"statistics", 8}, {"math", 8},      {"cs", 8},
                   {"biology", 8},    {"chemistry", 9}, {"physics", 9}};
    spec.seed = seed;
    return spec;
}

}  // namespace

TEST_CASE("mmlu sampling honors the 8:8:8:8:9:9 quotas") {
    const std::string path = temp_path("som_mmlu.csv");
    write_file(path, make_mmlu_csv(12));
    const auto cases = load_dataset(TaskKind::MultipleChoice, path, mmlu_paper_spec(7));
    CHECK(cases.size() == 50);

    std::map<std::string, int> per_stratum;
    std::set<std::string> ids;
    for (const auto& c : cases) {
        per_stratum[c.stratum]++;
        CHECK(ids.insert(c.id).second);
        CHECK(c.kind == TaskKind::MultipleChoice);
        CHECK(c.gold.size() == 1);
        CHECK(c.slots.count("Question") == 1);
        CHECK(c.slots.count("D") == 1);
    }
    CHECK(per_stratum["statistics"] == 8);
    CHECK(per_stratum["chemistry"] == 9);
    CHECK(per_stratum["physics"] == 9);

    // strata appear grouped, in sorted order
    std::vector<std::string> seen_order;
    for (const auto& c : cases)
        if (seen_order.empty() || seen_order.back() != c.stratum)
            seen_order.push_back(c.stratum);
    CHECK(seen_order == std::vector<std::string>{"biology", "chemistry", "cs", "math",
                                                 "physics", "statistics"});
}

TEST_CASE("sampling is seed-deterministic and seed-sensitive") {
    const std::string path = temp_path("som_mmlu.csv");
    write_file(path, make_mmlu_csv(12));
    auto ids_of = [&](std::uint64_t seed) {
        std::vector<std::string> ids;
        for (const auto& c :
             load_dataset(TaskKind::MultipleChoice, path, mmlu_paper_spec(seed)))
            ids.push_back(c.id);
        return ids;
    };
    CHECK(ids_of(7) == ids_of(7));
    CHECK(ids_of(7) != ids_of(8));
}

TEST_CASE("math sampling honors the 22:22:6 quotas") {
    const std::string path = temp_path("som_math.json");
    write_file(path, make_math_json(25));
    SampleSpec spec;
    spec.total = 50;
    spec.quotas = {{"level3", 22}, {"level4", 22}, {"level5", 6}};
    spec.seed = 9;
    const auto cases = load_dataset(TaskKind::BoxedMath, path, spec);
    CHECK(cases.size() == 50);
    std::map<std::string, int> per_stratum;
    for (const auto& c : cases) {
        per_stratum[c.stratum]++;
        CHECK(c.kind == TaskKind::BoxedMath);
        CHECK(c.slots.count("problem") == 1);
    }
    CHECK(per_stratum["level3"] == 22);
    CHECK(per_stratum["level4"] == 22);
    CHECK(per_stratum["level5"] == 6);
}

TEST_CASE("chess sampling with a single stratum") {
    const std::string path = temp_path("som_chess.json");
    write_file(path, make_chess_json(55));
    SampleSpec spec;
    spec.total = 50;
    spec.quotas = {{"all", 50}};
    spec.seed = 3;
    const auto cases = load_dataset(TaskKind::ChessMove, path, spec);
    CHECK(cases.size() == 50);
    for (const auto& c : cases) {
        CHECK(c.kind == TaskKind::ChessMove);
        CHECK(c.slots.count("chess move") == 1);
        CHECK(c.slots.count("square") == 1);
        CHECK(!c.gold.empty());
    }
}

TEST_CASE("sampling errors name the offending stratum") {
    const std::string path = temp_path("som_mmlu_small.csv");
    write_file(path, make_mmlu_csv(4));

    SampleSpec over;
    over.total = 8;
    over.quotas = {{"statistics", 8}};
    over.seed = 1;
    CHECK_THROWS_WITH_AS(load_dataset(TaskKind::MultipleChoice, path, over),
                         doctest::Contains("statistics"), SamplingError);

    SampleSpec missing;
    missing.total = 2;
    missing.quotas = {{"geology", 2}};
    missing.seed = 1;
    CHECK_THROWS_WITH_AS(load_dataset(TaskKind::MultipleChoice, path, missing),
                         doctest::Contains("geology"), SamplingError);

    SampleSpec mismatch;
    mismatch.total = 5;
    mismatch.quotas = {{"statistics", 2}};
    mismatch.seed = 1;
    CHECK_THROWS_AS(load_dataset(TaskKind::MultipleChoice, path, mismatch), SamplingError);
}

TEST_CASE("csv ingestion reports malformed rows with line numbers") {
    const std::string path = temp_path("som_bad.csv");
    write_file(path,
               "question,A,B,C,D,answer,subject\n"
               "q1,a,b,c,d,A,math\n"
               "short,row,with,six,fields,A\n");
    try {
        load_all_cases(TaskKind::MultipleChoice, path);
        FAIL("expected IngestError");
    } catch (const IngestError& e) {
        CHECK(e.line == 3);
    }

    write_file(path,
               "q1,a,b,c,d,X,math\n");
    try {
        load_all_cases(TaskKind::MultipleChoice, path);
        FAIL("expected IngestError");
    } catch (const IngestError& e) {
        CHECK(e.line == 1);
        CHECK(std::string(e.what()).find("A,B,C,D") != std::string::npos);
    }
}

TEST_CASE("csv quoting handles commas, quotes, and embedded newlines") {
    const std::string path = temp_path("som_quoted.csv");
    write_file(path,
               "\"What, exactly, is \"\"2\"\"?\",one,two,three,four,B,math\n"
               "\"line one\nline two\",a,b,c,d,C,math\n");
    const auto cases = load_all_cases(TaskKind::MultipleChoice, path);
    REQUIRE(cases.size() == 2);
    CHECK(cases[0].slots.at("Question") == "What, exactly, is \"2\"?");
    CHECK(cases[1].slots.at("Question") == "line one\nline two");
    CHECK(cases[1].gold == std::vector<std::string>{"C"});
}

TEST_CASE("json ingestion rejects malformed documents and records") {
    const std::string path = temp_path("som_bad.json");

    write_file(path, "{\"not\": \"an array\"}");
    CHECK_THROWS_AS(load_all_cases(TaskKind::BoxedMath, path), IngestError);

    write_file(path, "[{\"problem\": \"p\", \"answer\": \"1\"}]");
    CHECK_THROWS_WITH_AS(load_all_cases(TaskKind::BoxedMath, path),
                         doctest::Contains("level"), IngestError);

    write_file(path, "[");
    CHECK_THROWS_AS(load_all_cases(TaskKind::BoxedMath, path), IngestError);

    write_file(path, "[{\"moves\": \"1.e4\", \"square\": \"z9\", \"valid\": [\"e4\"]}]");
    CHECK_THROWS_AS(load_all_cases(TaskKind::ChessMove, path), IngestError);

    write_file(path, "[{\"moves\": \"1.e4\", \"square\": \"e2\", \"valid\": []}]");
    CHECK_THROWS_AS(load_all_cases(TaskKind::ChessMove, path), IngestError);
}

TEST_CASE("extraction corpus passes in full") {
    const auto doc = nlohmann::json::parse(read_file(fixture_path("extraction_corpus.json")));
    REQUIRE(doc.is_array());
    std::map<std::string, int> per_kind;
    for (const auto& entry : doc) {
        const TaskKind kind = parse_task_kind(entry.at("kind").get<std::string>());
        per_kind[entry.at("kind").get<std::string>()]++;
        const std::string text = entry.at("text").get<std::string>();
        const auto got = extract_answer(kind, text);
        INFO("text: ", text);
        if (entry.at("expect").is_null()) {
            CHECK(!got.has_value());
            continue;
        }
        REQUIRE(got.has_value());
        CHECK(*got == entry.at("expect").get<std::string>());
        if (entry.contains("gold")) {
            const auto gold = entry.at("gold").get<std::vector<std::string>>();
            CHECK(match_answer(kind, *got, gold) == entry.at("matched").get<bool>());
        }
    }
    CHECK(per_kind["multiple_choice"] >= 20);
    CHECK(per_kind["boxed_math"] >= 20);
    CHECK(per_kind["chess_move"] >= 20);
}

TEST_CASE("extraction is idempotent over canonical answers") {
    const auto doc = nlohmann::json::parse(read_file(fixture_path("extraction_corpus.json")));
    for (const auto& entry : doc) {
        if (!entry.contains("gold")) continue;
        const TaskKind kind = parse_task_kind(entry.at("kind").get<std::string>());
        for (const auto& g : entry.at("gold").get<std::vector<std::string>>()) {
            const std::string canonical = canonical_answer(kind, g);
            const auto round = extract_answer(kind, "answer: " + canonical);
            INFO("canonical: ", canonical);
            REQUIRE(round.has_value());
            CHECK(*round == canonical);
        }
    }
}

TEST_CASE("math canonicalization behaves as an equivalence relation on the corpus") {
    const auto doc = nlohmann::json::parse(read_file(fixture_path("extraction_corpus.json")));
    std::vector<std::string> values;
    for (const auto& entry : doc) {
        if (entry.at("kind").get<std::string>() != "boxed_math") continue;
        if (!entry.at("expect").is_null()) values.push_back(entry.at("expect").get<std::string>());
        if (entry.contains("gold"))
            for (const auto& g : entry.at("gold").get<std::vector<std::string>>())
                values.push_back(g);
    }
    REQUIRE(values.size() > 10);
    auto eq = [](const std::string& a, const std::string& b) {
        return match_answer(TaskKind::BoxedMath, a, {b});
    };
    for (const auto& a : values) CHECK(eq(a, a));
    for (const auto& a : values)
        for (const auto& b : values) CHECK(eq(a, b) == eq(b, a));
    for (const auto& a : values)
        for (const auto& b : values)
            for (const auto& c : values)
                if (eq(a, b) && eq(b, c)) CHECK(eq(a, c));
}

TEST_CASE("matching rules per task family") {
    CHECK(match_answer(TaskKind::BoxedMath, "3/4", {"0.75"}));
    CHECK(match_answer(TaskKind::MultipleChoice, "b", {"B"}));
    CHECK(match_answer(TaskKind::ChessMove, "e4", {"e3", "e4"}));
    CHECK(!match_answer(TaskKind::BoxedMath, "1/3", {"0.3333"}));
    CHECK(!match_answer(TaskKind::ChessMove, "e5", {"e3", "e4"}));
    CHECK(match_answer(TaskKind::ChessMove, "E4", {"e4"}));
    CHECK(match_answer(TaskKind::BoxedMath, "\\frac{3}{4}", {"0.75"}));
    CHECK(match_answer(TaskKind::BoxedMath, "-\\frac{1}{2}", {"-0.5"}));
    CHECK(match_answer(TaskKind::BoxedMath, "x^2 + 1", {"x^2+1"}));
    CHECK(!match_answer(TaskKind::BoxedMath, "x^2+1", {"x^2+2"}));
}

TEST_CASE("manual review flags only unruly math mismatches") {
    CHECK(!match_answer_detailed(TaskKind::BoxedMath, "3/4", {"0.75"}).manual_review);
    CHECK(!match_answer_detailed(TaskKind::BoxedMath, "1/3", {"0.3333"}).manual_review);
    CHECK(match_answer_detailed(TaskKind::BoxedMath, "x+2", {"x+3"}).manual_review);
    CHECK(match_answer_detailed(TaskKind::BoxedMath, "\\sqrt{2}", {"1.41"}).manual_review);
    CHECK(!match_answer_detailed(TaskKind::MultipleChoice, "A", {"B"}).manual_review);
}

TEST_CASE("frozen samples round-trip and serialize deterministically") {
    const std::string dataset = temp_path("som_chess_frozen.json");
    write_file(dataset, make_chess_json(12));
    SampleSpec spec;
    spec.total = 5;
    spec.quotas = {{"all", 5}};
    spec.seed = 21;

    FrozenSample sample;
    sample.kind = TaskKind::ChessMove;
    sample.seed = spec.seed;
    sample.source = dataset;
    sample.quotas = spec.quotas;
    sample.cases = load_dataset(TaskKind::ChessMove, dataset, spec);

    const std::string frozen1 = temp_path("som_frozen1.json");
    const std::string frozen2 = temp_path("som_frozen2.json");
    write_frozen_sample(frozen1, sample);
    write_frozen_sample(frozen2, sample);
    CHECK(read_file(frozen1) == read_file(frozen2));

    const FrozenSample loaded = load_frozen_sample(frozen1);
    CHECK(loaded.kind == sample.kind);
    CHECK(loaded.seed == sample.seed);
    CHECK(loaded.source == sample.source);
    CHECK(loaded.quotas == sample.quotas);
    CHECK(loaded.cases == sample.cases);

    write_file(frozen1, "{\"schema\": \"other\"}");
    CHECK_THROWS_AS(load_frozen_sample(frozen1), IngestError);
}

TEST_CASE("task kind names round-trip, with dataset aliases") {
    CHECK(to_string(TaskKind::MultipleChoice) == "multiple_choice");
    CHECK(to_string(TaskKind::BoxedMath) == "boxed_math");
    CHECK(to_string(TaskKind::ChessMove) == "chess_move");
    CHECK(parse_task_kind("multiple_choice") == TaskKind::MultipleChoice);
    CHECK(parse_task_kind("mmlu") == TaskKind::MultipleChoice);
    CHECK(parse_task_kind("math") == TaskKind::BoxedMath);
    CHECK(parse_task_kind("chess") == TaskKind::ChessMove);
    CHECK_THROWS_AS(parse_task_kind("riddles"), ParseError);
}
