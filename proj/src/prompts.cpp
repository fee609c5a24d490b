#include "som/prompts.hpp"

#include <array>
#include <filesystem>

#include "som/util.hpp"

namespace som {

namespace {

constexpr std::array<const char*, 5> kSlots = {"persona_easygoing", "persona_overconfident",
                                               "question", "debate", "reflection"};

// The double braces around "answer" in the original table are template
// escaping, rendered here as single braces; "\n" inside the math
// question is rendered as a real newline.
void fill_defaults(PromptSet& p) {
    p.set(TaskKind::BoxedMath, "persona_easygoing",
          "You are an expert skilled in solving mathematical problems and are objective "
          "and unbiased, and you can be persuaded if other agent's answers make sense. "
          "Please keep this in mind. If you understand please say ok only.");
    p.set(TaskKind::BoxedMath, "persona_overconfident",
          "Imagine you are an expert in solving mathematical problems and are confident "
          "in your answer and often persuades other agents to believe in you. Please keep "
          "this in mind. If you understand please say ok only.");
    p.set(TaskKind::BoxedMath, "question",
          "Here is a math problem written in LaTeX: <problem>\n Please carefully "
          "consider it and explain your reasoning. Put your answer in the form "
          "\\boxed{answer}, at the end of your response.");
    p.set(TaskKind::BoxedMath, "debate",
          "These are the solutions to the problem from other agents: "
          "<other agent responses> Using the reasoning from other agents as "
          "additional information and referring to your historical answers, can "
          "you give an updated answer? Put your answer in the form \\boxed{answer}, "
          "at the end of your response.");
    p.set(TaskKind::BoxedMath, "reflection",
          "Can you double check that your answer is correct? Please reiterate your "
          "answer, with your answer in the form \\boxed{answer}, at the end of "
          "your response.");

    p.set(TaskKind::MultipleChoice, "persona_easygoing",
          "You are an expert in biology, chemistry, computer science, mathematics, "
          "physics and are objective and unbiased, and you can be persuaded if other "
          "agent's answers make sense. Please keep this in mind. If you understand "
          "please say ok only.");
    p.set(TaskKind::MultipleChoice, "persona_overconfident",
          "Imagine you are an expert in biology, chemistry, computer science, "
          "mathematics, physics and are confident in your answer and often persuades "
          "other agents to believe in you. Please keep this in mind. If you "
          "understand please say ok only.");
    p.set(TaskKind::MultipleChoice, "question",
          "Can you answer the following question as accurately as possible? <Question>: "
          "A) <A>, B) <B>, C) <C>, D) <D> Explain your answer, putting the answer in "
          "the form (X) at the end of your response.");
    p.set(TaskKind::MultipleChoice, "debate",
          "These are the solutions to the problem from other agents: "
          "<other agent responses> Using the reasoning from other agents as additional "
          "advice, can you give an updated answer? Examine your solution and that other "
          "agents. Put your answer in the form (X) at the end of your response.");
    p.set(TaskKind::MultipleChoice, "reflection",
          "Can you double check that your answer is correct. Put your final answer in "
          "the form (X) at the end of your response.");

    p.set(TaskKind::ChessMove, "persona_easygoing",
          "You are an expert skilled in playing chess and are objective and unbiased, "
          "and you can be persuaded if other agent's answers make sense. Please keep "
          "this in mind. If you understand, please say ok only.");
    p.set(TaskKind::ChessMove, "persona_overconfident",
          "Imagine you are an expert skilled in playing chess and are confident in "
          "your answer and often persuades other agents to believe in you. Please keep "
          "this in mind. If you understand, please say ok only.");
    p.set(TaskKind::ChessMove, "question",
          "Given the chess game <chess move>, give one valid destination square for "
          "the chess piece at <square>. Give a one-line explanation of why your "
          "destination square is a valid move. State your final answer in a newline "
          "with a 2 letter response following the regex [a-h][1-8].");
    // The original chess debate row names the other agents' suggestions
    // without marking where they go; the placeholder is inserted right
    // after the colon, matching the other two families.
    p.set(TaskKind::ChessMove, "debate",
          "Here are destination square suggestions from other agents: "
          "<other agent responses> Can you double check that your destination square "
          "is a valid move? Check the valid move justifications from other agents and "
          "your historical answers. State your final answer in a newline with a "
          "2-letter response following the regex [a-h][1-8].");
    p.set(TaskKind::ChessMove, "reflection",
          "Can you double check that your destination square is a valid move? Check the "
          "valid move justifications from your historical answers. State your final "
          "answer in a newline with a 2 letter response following the regex [a-h][1-8].");
}

}  // namespace

const std::string& PromptSet::get(TaskKind kind, const std::string& slot) const {
    const auto it = templates_.find({kind, slot});
    if (it == templates_.end())
        throw ConfigError("prompts", "no template for " + to_string(kind) + "." + slot);
    return it->second;
}

void PromptSet::set(TaskKind kind, const std::string& slot, std::string text) {
    templates_[{kind, slot}] = std::move(text);
}

bool PromptSet::has(TaskKind kind, const std::string& slot) const {
    return templates_.count({kind, slot}) > 0;
}

PromptSet default_prompts() {
    PromptSet p;
    fill_defaults(p);
    return p;
}

PromptSet load_prompt_overrides(const std::string& dir) {
    PromptSet p = default_prompts();
    if (!std::filesystem::is_directory(dir))
        throw ConfigError("prompts.dir", "not a directory: '" + dir + "'");
    for (const auto& entry : std::filesystem::directory_iterator(dir)) {
        if (!entry.is_regular_file()) continue;
        const std::string name = entry.path().filename().string();
        if (name.size() < 4 || name.substr(name.size() - 4) != ".txt") continue;
        const std::string stem = name.substr(0, name.size() - 4);
        const std::size_t dot = stem.find('.');
        if (dot == std::string::npos)
            throw ConfigError("prompts.dir", "expected {kind}.{slot}.txt, got '" + name + "'");
        TaskKind kind;
        try {
            kind = parse_task_kind(stem.substr(0, dot));
        } catch (const ParseError&) {
            throw ConfigError("prompts.dir", "unknown task kind in '" + name + "'");
        }
        const std::string slot = stem.substr(dot + 1);
        bool known = false;
        for (const char* s : kSlots)
            if (slot == s) known = true;
        if (!known) throw ConfigError("prompts.dir", "unknown prompt slot in '" + name + "'");
        std::string text = read_file(entry.path().string());
        if (!text.empty() && text.back() == '\n') text.pop_back();
        p.set(kind, slot, std::move(text));
    }
    return p;
}

std::string render_template(const std::string& tmpl,
                            const std::map<std::string, std::string>& slots) {
    std::string out = tmpl;
    for (const auto& [key, value] : slots) replace_all(out, "<" + key + ">", value);
    return out;
}

}  // namespace som
