#pragma once
// Lexicon-and-rules compound sentiment scorer following Hutto & Gilbert's
// published algorithm: valence lexicon, booster/negation/idiom heuristics,
// contrastive-conjunction reweighting, punctuation and ALLCAPS emphasis,
// x/sqrt(x^2 + 15) normalization. Scores are computed on RAW text; the
// heuristics depend on capitalization, punctuation and function words that
// normalization would destroy.

#include <filesystem>
#include <string>
#include <unordered_map>

namespace ehk::sentiment {

struct SentimentScore {
    double compound = 0.0; // in [-1, 1]
    double positive = 0.0;
    double neutral = 0.0;
    double negative = 0.0; // positive + neutral + negative == 1 for nonempty input
};

class Analyzer {
public:
    // Lexicon format: token<TAB>mean-valence per line, UTF-8.
    explicit Analyzer(const std::filesystem::path& lexicon_path);

    SentimentScore score(const std::string& text) const;
    double compound(const std::string& text) const { return score(text).compound; }

    // model minus annotation: positive means the model reads more positive.
    double sentiment_difference(const std::string& model_text,
                                const std::string& annotation_text) const {
        return compound(model_text) - compound(annotation_text);
    }

    std::size_t lexicon_size() const { return lexicon_.size(); }

private:
    std::unordered_map<std::string, double> lexicon_;
};

} // namespace ehk::sentiment
