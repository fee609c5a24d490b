// Society/strategy vocabulary shared by every other module.
// All values here are immutable and cheap to copy; operations are pure.
#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "som/errors.hpp"

namespace som {

enum class Persona { EasyGoing, Overconfident };

enum class ThinkingPattern { Debate, Reflection };

enum class Allocation { All, Part };

std::string to_string(Persona p);
Persona parse_persona(const std::string& text);

// Short names: Debate = "p0", Reflection = "p1".
std::string to_string(ThinkingPattern p);
ThinkingPattern parse_thinking_pattern(const std::string& text);

std::string to_string(Allocation a);
Allocation parse_allocation(const std::string& text);

// Ordered list of agent personas.  The label ("S1".."S5") and the
// description ("mostly overconfident", ...) depend only on the persona
// multiset, never on agent order.
struct Society {
    std::vector<Persona> agents;

    std::size_t size() const { return agents.size(); }
    std::size_t overconfident_count() const;
    std::size_t easygoing_count() const;

    // "S1".."S5": 1-based position of this society's composition category
    // among the categories realizable at this size, in the fixed order
    // totally overconfident, mostly overconfident, half/half,
    // mostly easy-going, totally easy-going.  Odd sizes skip half/half,
    // sizes < 3 skip the two "mostly" categories.
    std::string label() const;

    // Human-readable category, e.g. "totally overconfident".
    std::string description() const;

    bool operator==(const Society& other) const = default;
};

// A collaborative strategy: one thinking pattern per round plus the
// allocation mode.  All = every agent follows the round's pattern;
// Part = a majority follows it and the rest get the complement
// (assignment happens in the engine).
struct Strategy {
    std::vector<ThinkingPattern> rounds;
    Allocation allocation = Allocation::All;

    std::size_t round_count() const { return rounds.size(); }

    // Concatenated short names, e.g. "p0p1p1".  Does not encode allocation.
    std::string canonical_name() const;

    // canonical_name() plus ":part" when allocation = Part.
    std::string full_name() const;

    bool operator==(const Strategy& other) const = default;
};

// All 2^round_count strategies with allocation = All, in lexicographic
// order of their canonical names.  round_count outside 1..16 is a
// bounds error.
std::vector<Strategy> enumerate_strategies(int round_count);

// Inverse of full_name(): "(p0|p1)+" with optional ":part" suffix.
// Malformed input raises ParseError carrying the offending index.
Strategy parse_strategy(const std::string& name);

// Agents listed overconfident-first, then easy-going.  Total of zero is
// a domain error.
Society build_society(std::size_t overconfident_count, std::size_t easygoing_count);

}  // namespace som
