#pragma once
// Free-text normalization ahead of embedding: lowercase, markdown strip,
// tokenize, stop-word removal, rule-based lemmatization. Deterministic and
// byte-identical across platforms for a fixed config.

#include <filesystem>
#include <string>
#include <unordered_set>
#include <vector>

namespace ehk::textnorm {

struct NormConfig {
    bool lowercase = true;
    bool strip_markdown = true;
    // "rule_en_v1" (default) or "none".
    std::string lemmatizer = "rule_en_v1";
    // Empty means the builtin pinned list.
    std::vector<std::string> stopwords;

    // Builds the effective stop-word set. The builtin list is served from a
    // shared immutable set; custom lists are materialized per call.
    std::unordered_set<std::string> stopword_set() const;
    // sha256 over a canonical rendering of every knob plus the stop list;
    // recorded in report headers so published numbers are reconstructible.
    std::string config_hash() const;
};

struct NormalizedText {
    std::string original;
    std::vector<std::string> tokens; // lowercase lemmas, stop words removed
    std::string joined;              // tokens joined by single spaces
};

NormalizedText normalize(const std::string& text, const NormConfig& config = {});

// The pinned default stop list (mirrors data/stopwords_en.txt).
const std::vector<std::string>& builtin_stopwords();

// One token per line, UTF-8, '#' comments, blank lines ignored.
std::vector<std::string> load_stoplist(const std::filesystem::path& path);

// rule_en_v1: small irregular table plus ordered suffix rules with
// Porter-style restoration. Expects a lowercased token.
std::string lemmatize(const std::string& token);

} // namespace ehk::textnorm
