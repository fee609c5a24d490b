// Prompt templates per task family, with file-based overrides and
// placeholder rendering.
#pragma once

#include <map>
#include <string>

#include "som/errors.hpp"
#include "som/tasks.hpp"

namespace som {

// Template slots: persona_easygoing, persona_overconfident, question,
// debate, reflection.  Placeholders use the <name> form; the debate
// templates carry <other agent responses> which the engine fills with
// the other agents' latest replies.
class PromptSet {
public:
    const std::string& get(TaskKind kind, const std::string& slot) const;
    void set(TaskKind kind, const std::string& slot, std::string text);
    bool has(TaskKind kind, const std::string& slot) const;

private:
    std::map<std::pair<TaskKind, std::string>, std::string> templates_;
};

// Built-in templates for all three task families.
PromptSet default_prompts();

// Defaults with any file `{kind}.{slot}.txt` in `dir` substituted in,
// e.g. "multiple_choice.debate.txt".  A single trailing newline per
// file is dropped.  Unknown slot names in the directory raise
// ConfigError.
PromptSet load_prompt_overrides(const std::string& dir);

// Replaces each <key> with its slot value; placeholders without a
// binding are left untouched.
std::string render_template(const std::string& tmpl,
                            const std::map<std::string, std::string>& slots);

}  // namespace som
