#pragma once
// Prompt text registry. Templates use {name} placeholders; rendering with an
// unbound placeholder is an error. The builtin registry mirrors the text
// assets under data/prompts/ (a test keeps them in sync).

#include <map>
#include <string>
#include <vector>

namespace ehk::ermodels {

struct PromptTemplate {
    std::string prompt_id;
    std::string text;

    // Substitutes {name} occurrences. Throws ParseError when a placeholder
    // has no binding; unused bindings are fine.
    std::string render(const std::map<std::string, std::string>& vars = {}) const;
};

class PromptRegistry {
public:
    static const PromptRegistry& builtin();

    const PromptTemplate& get(const std::string& prompt_id) const;
    std::vector<std::string> ids() const;

    void add(PromptTemplate prompt);

private:
    std::map<std::string, PromptTemplate> prompts_;
};

} // namespace ehk::ermodels
