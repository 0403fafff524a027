#include "ehk/prompts.hpp"

#include "ehk/errors.hpp"

namespace ehk::ermodels {

std::string PromptTemplate::render(const std::map<std::string, std::string>& vars) const {
    std::string out;
    out.reserve(text.size());
    std::size_t i = 0;
    while (i < text.size()) {
        const char c = text[i];
        if (c == '{') {
            const auto close = text.find('}', i + 1);
            if (close == std::string::npos) {
                throw ParseError("prompt '" + prompt_id + "': unterminated placeholder");
            }
            const std::string name = text.substr(i + 1, close - i - 1);
            auto it = vars.find(name);
            if (it == vars.end()) {
                throw ParseError("prompt '" + prompt_id + "': unbound placeholder {" + name + "}");
            }
            out += it->second;
            i = close + 1;
        } else {
            out.push_back(c);
            ++i;
        }
    }
    return out;
}

const PromptRegistry& PromptRegistry::builtin() {
    static const PromptRegistry registry = [] {
        PromptRegistry r;
        // "1\xe2\x80\x93 2" below is an en dash (U+2013); the other prompts
        // use a plain hyphen. The difference is deliberate.
        r.add({"er_study1",
               "Please describe what emotions the human is expressing with 1\xE2\x80\x93"
               "2 sentences."});
        r.add({"er_study2",
               "Please describe what emotions the human is expressing in 1-2 sentences."});
        r.add({"vlm_classifier",
               "Analyze this video. First, choose the single most dominant human emotion from "
               "the following list: [happy, sad, angry, neutral, surprise, fear, disgust]. "
               "Second, list up to the four most dominant subjects and objects in the scene "
               "relevant to the interaction. Format your answer ONLY as: emotion label, "
               "object1, object2, object3, object4"});
        r.add({"apology_adapt",
               "Adapt the current apology to better match the detected emotional context in "
               "1-2 sentences. Current apology: Apologies for the delay; here are your items. "
               "Context: {er_output}"});
        return r;
    }();
    return registry;
}

const PromptTemplate& PromptRegistry::get(const std::string& prompt_id) const {
    auto it = prompts_.find(prompt_id);
    if (it == prompts_.end()) {
        throw ParseError("unknown prompt id: " + prompt_id);
    }
    return it->second;
}

std::vector<std::string> PromptRegistry::ids() const {
    std::vector<std::string> out;
    for (const auto& [id, _] : prompts_) out.push_back(id);
    return out;
}

void PromptRegistry::add(PromptTemplate prompt) {
    prompts_[prompt.prompt_id] = std::move(prompt);
}

} // namespace ehk::ermodels
