#include "som/dynamics.hpp"

#include <map>
#include <set>

namespace som {

namespace {

// s == first repeated i times then second repeated j times (i, j >= 0)?
// Greedy two-char scanning is exact here: once `first` stops matching
// it can never legally resume.
bool two_char_blocks(const std::string& s, const char* first, const char* second) {
    std::size_t pos = 0;
    while (pos + 2 <= s.size() && s.compare(pos, 2, first) == 0) pos += 2;
    while (pos + 2 <= s.size() && s.compare(pos, 2, second) == 0) pos += 2;
    return pos == s.size();
}

bool run_then_run(const std::string& s, char a, char b) {
    std::size_t pos = 0;
    while (pos < s.size() && s[pos] == a) ++pos;
    if (pos == 0 || pos == s.size()) return false;  // both runs must be non-empty
    while (pos < s.size() && s[pos] == b) ++pos;
    return pos == s.size();
}

}  // namespace

std::string to_string(Transition t) {
    switch (t) {
        case Transition::TT: return "TT";
        case Transition::TF: return "TF";
        case Transition::FT: return "FT";
        default: return "FF";
    }
}

std::string to_string(BehaviorCategory c) {
    switch (c) {
        case BehaviorCategory::CorrectingMistakes: return "correcting_mistakes";
        case BehaviorCategory::ChangingCorrectAnswers: return "changing_correct_answers";
        case BehaviorCategory::WaveringAnswers: return "wavering_answers";
        default: return "other";
    }
}

std::optional<std::string> frequency_answer(const std::vector<std::string>& answers) {
    std::map<std::string, std::size_t> counts;
    for (const std::string& a : answers) counts[a]++;
    std::optional<std::string> mode;
    std::size_t best = 0;
    bool unique = false;
    for (const auto& [text, count] : counts) {
        if (count > best) {
            best = count;
            mode = text;
            unique = true;
        } else if (count == best) {
            unique = false;
        }
    }
    if (!unique || best < 2) return std::nullopt;  // all-singleton or tied
    return mode;
}

ConformityReport detect_conformity(const Transcript& t) {
    ConformityReport report;
    const std::size_t n = t.answers.size();
    if (n == 0) return report;
    const std::size_t columns = t.answers.front().size();

    // canonical answers, cached per cell
    std::vector<std::vector<std::optional<std::string>>> canon(n);
    for (std::size_t k = 0; k < n; ++k) {
        canon[k].resize(columns);
        for (std::size_t j = 0; j < columns; ++j)
            if (t.answers[k][j]) canon[k][j] = canonical_answer(t.kind, *t.answers[k][j]);
    }

    for (std::size_t j = 1; j < columns; ++j) {
        if (j - 1 >= t.round_plans.size()) break;
        const RoundPlan& plan = t.round_plans[j - 1];
        std::vector<std::string> previous;
        for (std::size_t k = 0; k < n; ++k)
            if (canon[k][j - 1]) previous.push_back(*canon[k][j - 1]);
        const std::optional<std::string> mode =
            previous.empty() ? std::nullopt : frequency_answer(previous);
        for (std::size_t k = 0; k < n; ++k) {
            if (plan.assignment[k] != ThinkingPattern::Debate) continue;
            if (!canon[k][j - 1] || !canon[k][j]) {
                report.skipped++;
                continue;
            }
            if (!mode) continue;
            report.eligible++;
            if (*canon[k][j] != *mode) continue;
            const bool prev_correct = match_answer(t.kind, *canon[k][j - 1], t.gold);
            const bool now_correct = match_answer(t.kind, *canon[k][j], t.gold);
            ConformityEvent event;
            event.agent_index = k;
            event.round_index = static_cast<int>(j);
            event.modal_answer = *mode;
            event.transition = prev_correct ? (now_correct ? Transition::TT : Transition::TF)
                                            : (now_correct ? Transition::FT : Transition::FF);
            report.events.push_back(std::move(event));
        }
    }
    return report;
}

ClusterTrajectory cluster_trajectory(const Transcript& t) {
    ClusterTrajectory out;
    if (t.answers.empty()) return out;
    const std::size_t columns = t.answers.front().size();
    for (std::size_t j = 0; j < columns; ++j) {
        std::set<std::string> distinct;
        for (const auto& row : t.answers)
            if (row[j]) distinct.insert(canonical_answer(t.kind, *row[j]));
        if (distinct.empty()) out.degenerate = true;
        out.counts.push_back(distinct.size());
    }
    return out;
}

BehaviorCategory classify_sequence(const std::string& tf) {
    if (tf.empty()) throw DomainError("classify_sequence: empty sequence");
    for (char c : tf)
        if (c != 'T' && c != 'F')
            throw DomainError(std::string("classify_sequence: invalid character '") + c + "'");
    if (run_then_run(tf, 'F', 'T')) return BehaviorCategory::CorrectingMistakes;
    if (run_then_run(tf, 'T', 'F')) return BehaviorCategory::ChangingCorrectAnswers;
    if (tf.size() >= 4 && tf.size() % 2 == 0 &&
        (two_char_blocks(tf, "TF", "FT") || two_char_blocks(tf, "FT", "TF")))
        return BehaviorCategory::WaveringAnswers;
    return BehaviorCategory::Other;
}

std::string sequence_of(const Transcript& t) {
    std::string out;
    for (const SocietyAnswer& sa : society_answers(t, VoteMode::Majority)) {
        const bool correct = sa.status == SocietyAnswer::Status::Agreed &&
                             match_answer(t.kind, *sa.answer, t.gold);
        out += correct ? 'T' : 'F';
    }
    return out;
}

}  // namespace som
