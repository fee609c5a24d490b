#include <doctest.h>

#include <map>

#include "som/dynamics.hpp"
#include "support/transcript_builder.hpp"

using namespace som;
using testsupport::make_transcript;

TEST_CASE("frequency_answer finds the unique mode or nothing") {
    CHECK(*frequency_answer({"A", "A", "B"}) == "A");
    CHECK(!frequency_answer({"A", "B", "C"}).has_value());  // all occur once
    CHECK(!frequency_answer({"A", "A", "B", "B"}).has_value());  // tied
    CHECK(*frequency_answer({"B", "B"}) == "B");
    CHECK(!frequency_answer({"A"}).has_value());
    CHECK(!frequency_answer({}).has_value());
}

TEST_CASE("conformity: adopting the wrong crowd answer is a TF event") {
    // gold B; agents start A, A, B; agent 3 debates and adopts the modal A
    const Transcript t = make_transcript(TaskKind::MultipleChoice, {"B"},
                                         {{"A", "A"}, {"A", "A"}, {"B", "A"}});
    const ConformityReport r = detect_conformity(t);
    // all three agents answered the mode A at round 1: three events
    REQUIRE(r.events.size() == 3);
    const ConformityEvent& third = r.events[2];
    CHECK(third.agent_index == 2);
    CHECK(third.round_index == 1);
    CHECK(third.modal_answer == "A");
    CHECK(third.transition == Transition::TF);
    // agents 1 and 2 stayed on the wrong mode: FF
    CHECK(r.events[0].transition == Transition::FF);
    CHECK(r.events[1].transition == Transition::FF);
    CHECK(r.eligible == 3);
    CHECK(r.skipped == 0);
}

TEST_CASE("conformity: all-singleton previous round produces no events") {
    const Transcript t = make_transcript(TaskKind::MultipleChoice, {"A"},
                                         {{"A", "A"}, {"B", "A"}, {"C", "A"}});
    const ConformityReport r = detect_conformity(t);
    CHECK(r.events.empty());
    CHECK(r.eligible == 0);
    CHECK(r.skipped == 0);
}

TEST_CASE("conformity: reflection agents are never assessed") {
    // agent 3 reflects at round 1 while answering the mode
    const Transcript t = make_transcript(TaskKind::MultipleChoice, {"B"},
                                         {{"A", "A"}, {"A", "A"}, {"B", "A"}}, {"ddr"});
    const ConformityReport r = detect_conformity(t);
    REQUIRE(r.events.size() == 2);
    for (const ConformityEvent& e : r.events) CHECK(e.agent_index != 2);

    // a fully-reflective round yields nothing at all
    const Transcript u = make_transcript(TaskKind::MultipleChoice, {"B"},
                                         {{"A", "A"}, {"A", "A"}, {"B", "A"}}, {"rrr"});
    CHECK(detect_conformity(u).events.empty());
    CHECK(detect_conformity(u).eligible == 0);
}

TEST_CASE("conformity: transitions cover all four correctness moves") {
    // TT: gold B, mode B, agent 1 stays correct on the mode
    const Transcript tt = make_transcript(TaskKind::MultipleChoice, {"B"},
                                          {{"B", "B"}, {"B", "B"}, {"A", "C"}});
    const auto rtt = detect_conformity(tt);
    REQUIRE(rtt.events.size() == 2);
    CHECK(rtt.events[0].transition == Transition::TT);
    CHECK(rtt.events[0].modal_answer == "B");

    // FT: gold B, mode B, agent 3 moves from wrong A to the correct mode
    const Transcript ft = make_transcript(TaskKind::MultipleChoice, {"B"},
                                          {{"B", "C"}, {"B", "C"}, {"A", "B"}});
    const auto rft = detect_conformity(ft);
    REQUIRE(rft.events.size() == 1);
    CHECK(rft.events[0].agent_index == 2);
    CHECK(rft.events[0].transition == Transition::FT);

    // FF: gold D, mode A, agent 3 moves from wrong B to the wrong mode
    const Transcript ff = make_transcript(TaskKind::MultipleChoice, {"D"},
                                          {{"A", "C"}, {"A", "C"}, {"B", "A"}});
    const auto rff = detect_conformity(ff);
    REQUIRE(rff.events.size() == 1);
    CHECK(rff.events[0].transition == Transition::FF);

    // TF covered in the first conformity test
}

TEST_CASE("conformity: missing answers are skipped and tallied") {
    // agent 2 has no round-0 answer; agent 3 has no round-1 answer
    const Transcript t = make_transcript(TaskKind::MultipleChoice, {"B"},
                                         {{"A", "A"}, {nullptr, "A"}, {"A", nullptr}});
    const ConformityReport r = detect_conformity(t);
    CHECK(r.skipped == 2);
    // agent 1 debated with both answers present: mode over {A, A} = A
    REQUIRE(r.events.size() == 1);
    CHECK(r.events[0].agent_index == 0);
    CHECK(r.eligible == 1);
}

TEST_CASE("conformity: a tied previous round has no mode") {
    const Transcript t = make_transcript(TaskKind::MultipleChoice, {"A"},
                                         {{"A", "A"}, {"A", "A"}, {"B", "A"}, {"B", "A"}});
    const ConformityReport r = detect_conformity(t);
    CHECK(r.events.empty());
    CHECK(r.eligible == 0);
}

TEST_CASE("conformity: non-modal debate answers are eligible but not events") {
    const Transcript t = make_transcript(TaskKind::MultipleChoice, {"B"},
                                         {{"A", "A"}, {"A", "A"}, {"B", "C"}});
    const ConformityReport r = detect_conformity(t);
    CHECK(r.eligible == 3);
    CHECK(r.events.size() == 2);  // agents 1 and 2 stay on the mode
    for (const ConformityEvent& e : r.events) CHECK(e.agent_index != 2);
}

TEST_CASE("conformity: equivalent math forms count into one mode") {
    // canonical mode 3/4 from {"3/4", "0.75", "1/2"}; agent 3 adopts "0.75"
    const Transcript t = make_transcript(TaskKind::BoxedMath, {"3/4"},
                                         {{"3/4", "1"}, {"0.75", "1"}, {"1/2", "0.75"}});
    const ConformityReport r = detect_conformity(t);
    REQUIRE(r.events.size() == 1);
    CHECK(r.events[0].agent_index == 2);
    CHECK(r.events[0].modal_answer == "3/4");
    CHECK(r.events[0].transition == Transition::FT);
}

TEST_CASE("conformity: the mode includes the conforming agent's own answer") {
    // round 0 = A, B, B: mode B only because agent 2's own B counts
    const Transcript t = make_transcript(TaskKind::MultipleChoice, {"B"},
                                         {{"A", "C"}, {"B", "B"}, {"B", "C"}});
    const ConformityReport r = detect_conformity(t);
    REQUIRE(r.events.size() == 1);
    CHECK(r.events[0].agent_index == 1);
    CHECK(r.events[0].transition == Transition::TT);
}

TEST_CASE("conformity: multi-round events carry their round index") {
    const Transcript t = make_transcript(
        TaskKind::MultipleChoice, {"C"},
        {{"A", "A", "C"}, {"A", "A", "C"}, {"B", "A", "C"}});
    const ConformityReport r = detect_conformity(t);
    // round 1: mode A, all three adopt/keep it; round 2: mode... A (3 of 3) -> C? no:
    // round-1 answers are A,A,A so the round-2 mode is A, yet everyone answers C.
    std::size_t first = 0, second = 0;
    for (const ConformityEvent& e : r.events) (e.round_index == 1 ? first : second)++;
    CHECK(first == 3);
    CHECK(second == 0);
    CHECK(r.eligible == 6);
}

TEST_CASE("conformity: aborted columns simply stop contributing") {
    Transcript t = make_transcript(TaskKind::MultipleChoice, {"B"},
                                   {{"A", nullptr}, {"A", nullptr}, {"B", nullptr}});
    t.status = "aborted";
    const ConformityReport r = detect_conformity(t);
    CHECK(r.events.empty());
    CHECK(r.skipped == 3);
}

TEST_CASE("cluster_trajectory counts distinct canonical answers per column") {
    const Transcript t = make_transcript(TaskKind::MultipleChoice, {"A"},
                                         {{"A", "A", "A"}, {"A", "B", "A"}, {"B", "C", "A"}});
    const ClusterTrajectory c = cluster_trajectory(t);
    CHECK(c.counts == std::vector<std::size_t>{2, 3, 1});
    CHECK(!c.degenerate);

    const Transcript merged = make_transcript(TaskKind::BoxedMath, {"1"},
                                              {{"3/4", "1"}, {"0.75", "1"}});
    CHECK(cluster_trajectory(merged).counts == std::vector<std::size_t>{1, 1});

    const Transcript holes = make_transcript(TaskKind::MultipleChoice, {"A"},
                                             {{"A", nullptr}, {nullptr, nullptr}});
    const ClusterTrajectory h = cluster_trajectory(holes);
    CHECK(h.counts == std::vector<std::size_t>{1, 0});
    CHECK(h.degenerate);
}

TEST_CASE("classify_sequence: the sixteen length-4 sequences partition 3/3/4/6") {
    const std::map<std::string, BehaviorCategory> expected = {
        {"FFFT", BehaviorCategory::CorrectingMistakes},
        {"FFTT", BehaviorCategory::CorrectingMistakes},
        {"FTTT", BehaviorCategory::CorrectingMistakes},
        {"TFFF", BehaviorCategory::ChangingCorrectAnswers},
        {"TTFF", BehaviorCategory::ChangingCorrectAnswers},
        {"TTTF", BehaviorCategory::ChangingCorrectAnswers},
        {"FTFT", BehaviorCategory::WaveringAnswers},
        {"FTTF", BehaviorCategory::WaveringAnswers},
        {"TFTF", BehaviorCategory::WaveringAnswers},
        {"TFFT", BehaviorCategory::WaveringAnswers},
    };
    std::map<BehaviorCategory, int> tally;
    for (int code = 0; code < 16; ++code) {
        std::string seq;
        for (int bit = 3; bit >= 0; --bit) seq += (code >> bit) & 1 ? 'T' : 'F';
        const BehaviorCategory got = classify_sequence(seq);
        const auto it = expected.find(seq);
        if (it != expected.end())
            CHECK(got == it->second);
        else
            CHECK(got == BehaviorCategory::Other);
        tally[got]++;
    }
    CHECK(tally[BehaviorCategory::CorrectingMistakes] == 3);
    CHECK(tally[BehaviorCategory::ChangingCorrectAnswers] == 3);
    CHECK(tally[BehaviorCategory::WaveringAnswers] == 4);
    CHECK(tally[BehaviorCategory::Other] == 6);
}

TEST_CASE("classify_sequence: general lengths follow the three pattern families") {
    CHECK(classify_sequence("FFFTTT") == BehaviorCategory::CorrectingMistakes);
    CHECK(classify_sequence("FT") == BehaviorCategory::CorrectingMistakes);
    CHECK(classify_sequence("TTTTTF") == BehaviorCategory::ChangingCorrectAnswers);
    CHECK(classify_sequence("TF") == BehaviorCategory::ChangingCorrectAnswers);
    CHECK(classify_sequence("TFTFTF") == BehaviorCategory::WaveringAnswers);
    CHECK(classify_sequence("FTTFTF") == BehaviorCategory::WaveringAnswers);  // FT TF TF
    CHECK(classify_sequence("TFFTFT") == BehaviorCategory::WaveringAnswers);  // TF FT FT
    CHECK(classify_sequence("TTTTT") == BehaviorCategory::Other);
    CHECK(classify_sequence("FFFFF") == BehaviorCategory::Other);
    CHECK(classify_sequence("TTFTT") == BehaviorCategory::Other);
    CHECK(classify_sequence("TFT") == BehaviorCategory::Other);  // odd length never wavers
    CHECK(classify_sequence("T") == BehaviorCategory::Other);
    CHECK_THROWS_AS(classify_sequence("TFXT"), DomainError);
    CHECK_THROWS_AS(classify_sequence(""), DomainError);
}

TEST_CASE("sequence_of maps round votes to T/F with NoConsensus as F") {
    const Transcript all_correct = make_transcript(
        TaskKind::MultipleChoice, {"A"},
        {{"A", "A", "A", "A"}, {"A", "A", "A", "A"}, {"A", "A", "A", "A"}});
    CHECK(sequence_of(all_correct) == "TTTT");

    const Transcript corrected = make_transcript(
        TaskKind::MultipleChoice, {"B"},
        {{"A", "B", "B", "B"}, {"A", "B", "B", "B"}, {"B", "B", "B", "B"}});
    CHECK(sequence_of(corrected) == "FTTT");

    // round 2 has no consensus (three distinct answers)
    const Transcript split = make_transcript(
        TaskKind::MultipleChoice, {"A"},
        {{"A", "A", "A", "A"}, {"A", "A", "B", "A"}, {"A", "A", "C", "A"}});
    CHECK(sequence_of(split) == "TTFT");

    CHECK(classify_sequence(sequence_of(corrected)) == BehaviorCategory::CorrectingMistakes);
}

TEST_CASE("forced-sway debates never grow the cluster count") {
    const PromptSet prompts = default_prompts();
    StochasticBackend backend(0.5, 1.0);
    ExperimentOptions opts;
    opts.clock = [] { return std::string("1970-01-01T00:00:00Z"); };
    std::vector<TaskCase> cases;
    for (int i = 0; i < 200; ++i) {
        TaskCase c;
        c.id = "mono-" + std::to_string(i);
        c.kind = TaskKind::MultipleChoice;
        c.slots = {{"Question", "q"}, {"A", "a"}, {"B", "b"}, {"C", "c"}, {"D", "d"}};
        c.gold = {"A"};
        cases.push_back(c);
    }
    const auto transcripts = run_experiment(build_society(2, 1), parse_strategy("p0p0p0"),
                                            backend, prompts, cases, 1, 77, opts);
    for (const Transcript& t : transcripts) {
        const ClusterTrajectory c = cluster_trajectory(t);
        REQUIRE(c.counts.size() == 4);
        for (std::size_t j = 1; j < c.counts.size(); ++j) CHECK(c.counts[j] <= c.counts[j - 1]);
    }
}

TEST_CASE("measured conformity rate tracks the sway probability") {
    const PromptSet prompts = default_prompts();
    ExperimentOptions opts;
    opts.clock = [] { return std::string("1970-01-01T00:00:00Z"); };
    opts.workers = 4;
    std::vector<TaskCase> cases;
    for (int i = 0; i < 2000; ++i) {
        TaskCase c;
        c.id = "rate-" + std::to_string(i);
        c.kind = TaskKind::MultipleChoice;
        c.slots = {{"Question", "q"}, {"A", "a"}, {"B", "b"}, {"C", "c"}, {"D", "d"}};
        c.gold = {"A"};
        cases.push_back(c);
    }
    const Society society = build_society(2, 1);
    const Strategy strategy = parse_strategy("p0");

    auto measure = [&](double q) {
        StochasticBackend backend(0.5, q);
        const auto ts = run_experiment(society, strategy, backend, prompts, cases, 1, 4242, opts);
        std::size_t conformed = 0, eligible = 0;
        for (const Transcript& t : ts) {
            const ConformityReport r = detect_conformity(t);
            conformed += r.events.size();
            eligible += r.eligible;
        }
        REQUIRE(eligible > 1000);
        return static_cast<double>(conformed) / static_cast<double>(eligible);
    };

    CHECK(measure(0.0) == 0.0);   // sway off: never lands on the mode
    CHECK(measure(1.0) == 1.0);   // forced sway: always the mode
    const double mid = measure(0.4);
    CHECK(mid > 0.37);
    CHECK(mid < 0.43);
}
