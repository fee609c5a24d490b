#include "som/core.hpp"

#include <algorithm>
#include <array>

namespace som {

std::string to_string(Persona p) {
    return p == Persona::EasyGoing ? "easy_going" : "overconfident";
}

Persona parse_persona(const std::string& text) {
    if (text == "easy_going") return Persona::EasyGoing;
    if (text == "overconfident") return Persona::Overconfident;
    throw ParseError("unknown persona '" + text + "'", 0);
}

std::string to_string(ThinkingPattern p) {
    return p == ThinkingPattern::Debate ? "p0" : "p1";
}

ThinkingPattern parse_thinking_pattern(const std::string& text) {
    if (text == "p0") return ThinkingPattern::Debate;
    if (text == "p1") return ThinkingPattern::Reflection;
    throw ParseError("unknown thinking pattern '" + text + "'", 0);
}

std::string to_string(Allocation a) {
    return a == Allocation::All ? "all" : "part";
}

Allocation parse_allocation(const std::string& text) {
    if (text == "all") return Allocation::All;
    if (text == "part") return Allocation::Part;
    throw ParseError("unknown allocation '" + text + "'", 0);
}

std::size_t Society::overconfident_count() const {
    return static_cast<std::size_t>(
        std::count(agents.begin(), agents.end(), Persona::Overconfident));
}

std::size_t Society::easygoing_count() const {
    return agents.size() - overconfident_count();
}

namespace {

// Composition categories in fixed display order.
enum class Category {
    TotallyOverconfident,
    MostlyOverconfident,
    Half,
    MostlyEasyGoing,
    TotallyEasyGoing,
};

Category classify(std::size_t over, std::size_t easy) {
    if (over + easy == 0) throw DomainError("society has no agents");
    if (easy == 0) return Category::TotallyOverconfident;
    if (over == 0) return Category::TotallyEasyGoing;
    if (over == easy) return Category::Half;
    return over > easy ? Category::MostlyOverconfident : Category::MostlyEasyGoing;
}

bool realizable(Category c, std::size_t n) {
    switch (c) {
        case Category::TotallyOverconfident:
        case Category::TotallyEasyGoing:
            return true;
        case Category::Half:
            return n >= 2 && n % 2 == 0;
        case Category::MostlyOverconfident:
        case Category::MostlyEasyGoing:
            return n >= 3;
    }
    throw DomainError("unreachable society category");
}

constexpr std::array<Category, 5> kCategoryOrder = {
    Category::TotallyOverconfident, Category::MostlyOverconfident,
    Category::Half, Category::MostlyEasyGoing, Category::TotallyEasyGoing};

}  // namespace

std::string Society::label() const {
    const std::size_t over = overconfident_count();
    const std::size_t easy = easygoing_count();
    const Category mine = classify(over, easy);
    int index = 0;
    for (Category c : kCategoryOrder) {
        if (realizable(c, agents.size())) ++index;
        if (c == mine) break;
    }
    return "S" + std::to_string(index);
}

std::string Society::description() const {
    switch (classify(overconfident_count(), easygoing_count())) {
        case Category::TotallyOverconfident: return "totally overconfident";
        case Category::MostlyOverconfident: return "mostly overconfident";
        case Category::Half: return "half overconfident and half easy-going";
        case Category::MostlyEasyGoing: return "mostly easy-going";
        case Category::TotallyEasyGoing: return "totally easy-going";
    }
    throw DomainError("unreachable society category");
}

std::string Strategy::canonical_name() const {
    std::string name;
    name.reserve(rounds.size() * 2);
    for (ThinkingPattern p : rounds) name += to_string(p);
    return name;
}

std::string Strategy::full_name() const {
    std::string name = canonical_name();
    if (allocation == Allocation::Part) name += ":part";
    return name;
}

std::vector<Strategy> enumerate_strategies(int round_count) {
    if (round_count < 1 || round_count > 16)
        throw BoundsError("round_count must be in 1..16, got " + std::to_string(round_count));
    const std::size_t total = std::size_t{1} << round_count;
    std::vector<Strategy> out;
    out.reserve(total);
    // Counting with p0 = 0 on the most significant round yields
    // lexicographic order of the canonical names.
    for (std::size_t code = 0; code < total; ++code) {
        Strategy s;
        s.rounds.reserve(static_cast<std::size_t>(round_count));
        for (int r = round_count - 1; r >= 0; --r) {
            const bool bit = (code >> r) & 1u;
            s.rounds.push_back(bit ? ThinkingPattern::Reflection : ThinkingPattern::Debate);
        }
        out.push_back(std::move(s));
    }
    return out;
}

Strategy parse_strategy(const std::string& name) {
    Strategy s;
    std::size_t i = 0;
    while (i < name.size() && name[i] != ':') {
        if (i + 1 >= name.size() || name[i] != 'p' ||
            (name[i + 1] != '0' && name[i + 1] != '1'))
            throw ParseError("expected 'p0' or 'p1'", i);
        s.rounds.push_back(name[i + 1] == '0' ? ThinkingPattern::Debate
                                              : ThinkingPattern::Reflection);
        i += 2;
    }
    if (s.rounds.empty()) throw ParseError("strategy needs at least one round", 0);
    if (i < name.size()) {
        if (name.compare(i, std::string::npos, ":part") != 0)
            throw ParseError("expected ':part' suffix", i);
        s.allocation = Allocation::Part;
    }
    return s;
}

Society build_society(std::size_t overconfident_count, std::size_t easygoing_count) {
    if (overconfident_count + easygoing_count == 0)
        throw DomainError("society must contain at least one agent");
    Society society;
    society.agents.reserve(overconfident_count + easygoing_count);
    society.agents.insert(society.agents.end(), overconfident_count, Persona::Overconfident);
    society.agents.insert(society.agents.end(), easygoing_count, Persona::EasyGoing);
    return society;
}

}  // namespace som
