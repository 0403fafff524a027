#include "ehk/sentiment.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <unordered_set>
#include <vector>

#include "ehk/errors.hpp"

namespace ehk::sentiment {

namespace {

// Empirically derived constants from the published algorithm.
constexpr double kBoosterIncr = 0.293;
constexpr double kBoosterDecr = -0.293;
constexpr double kCapsIncr = 0.733;
constexpr double kNegationScalar = -0.74;
constexpr double kNormAlpha = 15.0;

const std::unordered_set<std::string>& negate_words() {
    static const std::unordered_set<std::string> words = {
        "aint", "arent", "cannot", "cant", "couldnt", "darent", "didnt", "doesnt",
        "ain't", "aren't", "can't", "couldn't", "daren't", "didn't", "doesn't",
        "dont", "hadnt", "hasnt", "havent", "isnt", "mightnt", "mustnt", "neither",
        "don't", "hadn't", "hasn't", "haven't", "isn't", "mightn't", "mustn't",
        "neednt", "needn't", "never", "none", "nope", "nor", "not", "nothing", "nowhere",
        "oughtnt", "shant", "shouldnt", "uhuh", "wasnt", "werent",
        "oughtn't", "shan't", "shouldn't", "uh-uh", "wasn't", "weren't",
        "without", "wont", "wouldnt", "won't", "wouldn't", "rarely", "seldom", "despite"};
    return words;
}

const std::unordered_map<std::string, double>& booster_dict() {
    static const std::unordered_map<std::string, double> dict = {
        {"absolutely", kBoosterIncr}, {"amazingly", kBoosterIncr}, {"awfully", kBoosterIncr},
        {"completely", kBoosterIncr}, {"considerable", kBoosterIncr}, {"considerably", kBoosterIncr},
        {"decidedly", kBoosterIncr}, {"deeply", kBoosterIncr}, {"effing", kBoosterIncr},
        {"enormous", kBoosterIncr}, {"enormously", kBoosterIncr},
        {"entirely", kBoosterIncr}, {"especially", kBoosterIncr}, {"exceptional", kBoosterIncr},
        {"exceptionally", kBoosterIncr}, {"extreme", kBoosterIncr}, {"extremely", kBoosterIncr},
        {"fabulously", kBoosterIncr}, {"flipping", kBoosterIncr}, {"flippin", kBoosterIncr},
        {"frackin", kBoosterIncr}, {"fracking", kBoosterIncr},
        {"fricking", kBoosterIncr}, {"frickin", kBoosterIncr}, {"frigging", kBoosterIncr},
        {"friggin", kBoosterIncr}, {"fully", kBoosterIncr},
        {"fuckin", kBoosterIncr}, {"fucking", kBoosterIncr}, {"fuggin", kBoosterIncr},
        {"fugging", kBoosterIncr},
        {"greatly", kBoosterIncr}, {"hella", kBoosterIncr}, {"highly", kBoosterIncr},
        {"hugely", kBoosterIncr},
        {"incredible", kBoosterIncr}, {"incredibly", kBoosterIncr}, {"intensely", kBoosterIncr},
        {"major", kBoosterIncr}, {"majorly", kBoosterIncr}, {"more", kBoosterIncr},
        {"most", kBoosterIncr}, {"particularly", kBoosterIncr},
        {"purely", kBoosterIncr}, {"quite", kBoosterIncr}, {"really", kBoosterIncr},
        {"remarkably", kBoosterIncr},
        {"so", kBoosterIncr}, {"substantially", kBoosterIncr},
        {"thoroughly", kBoosterIncr}, {"total", kBoosterIncr}, {"totally", kBoosterIncr},
        {"tremendous", kBoosterIncr}, {"tremendously", kBoosterIncr},
        {"uber", kBoosterIncr}, {"unbelievably", kBoosterIncr}, {"unusually", kBoosterIncr},
        {"utter", kBoosterIncr}, {"utterly", kBoosterIncr},
        {"very", kBoosterIncr},
        {"almost", kBoosterDecr}, {"barely", kBoosterDecr}, {"hardly", kBoosterDecr},
        {"just enough", kBoosterDecr},
        {"kind of", kBoosterDecr}, {"kinda", kBoosterDecr}, {"kindof", kBoosterDecr},
        {"kind-of", kBoosterDecr},
        {"less", kBoosterDecr}, {"little", kBoosterDecr}, {"marginal", kBoosterDecr},
        {"marginally", kBoosterDecr},
        {"occasional", kBoosterDecr}, {"occasionally", kBoosterDecr}, {"partly", kBoosterDecr},
        {"scarce", kBoosterDecr}, {"scarcely", kBoosterDecr}, {"slight", kBoosterDecr},
        {"slightly", kBoosterDecr}, {"somewhat", kBoosterDecr},
        {"sort of", kBoosterDecr}, {"sorta", kBoosterDecr}, {"sortof", kBoosterDecr},
        {"sort-of", kBoosterDecr}};
    return dict;
}

const std::unordered_map<std::string, double>& special_cases() {
    static const std::unordered_map<std::string, double> dict = {
        {"the shit", 3.0},  {"the bomb", 3.0},      {"bad ass", 1.5},
        {"badass", 1.5},    {"bus stop", 0.0},      {"yeah right", -2.0},
        {"kiss of death", -1.5}, {"to die for", 3.0}, {"beating heart", 3.5}};
    return dict;
}

const std::string kPunctuation = "!\"#$%&'()*+,-./:;<=>?@[\\]^_`{|}~";

std::string ascii_lower(std::string s) {
    for (char& c : s) {
        if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
    }
    return s;
}

// At least one ASCII letter and no lowercase letters.
bool is_upper_token(const std::string& s) {
    bool has_alpha = false;
    for (char c : s) {
        if (c >= 'a' && c <= 'z') return false;
        if (c >= 'A' && c <= 'Z') has_alpha = true;
    }
    return has_alpha;
}

// Strip leading/trailing punctuation; if two or fewer characters remain the
// token was likely an emoticon, so keep it whole.
std::string strip_punc_if_word(const std::string& token) {
    std::size_t b = 0, e = token.size();
    while (b < e && kPunctuation.find(token[b]) != std::string::npos) ++b;
    while (e > b && kPunctuation.find(token[e - 1]) != std::string::npos) --e;
    std::string stripped = token.substr(b, e - b);
    if (stripped.size() <= 2) return token;
    return stripped;
}

std::vector<std::string> words_and_emoticons(const std::string& text) {
    std::vector<std::string> out;
    std::istringstream stream(text);
    std::string tok;
    while (stream >> tok) out.push_back(strip_punc_if_word(tok));
    return out;
}

bool allcap_differential(const std::vector<std::string>& words) {
    std::size_t allcaps = 0;
    for (const auto& w : words) {
        if (is_upper_token(w)) ++allcaps;
    }
    std::size_t diff = words.size() - allcaps;
    return diff > 0 && diff < words.size();
}

bool negated(const std::string& word_lower) {
    if (negate_words().count(word_lower)) return true;
    return word_lower.find("n't") != std::string::npos;
}

double normalize_score(double score) {
    double norm = score / std::sqrt(score * score + kNormAlpha);
    return std::clamp(norm, -1.0, 1.0);
}

double scalar_inc_dec(const std::string& word, double valence, bool is_cap_diff) {
    double scalar = 0.0;
    auto it = booster_dict().find(ascii_lower(word));
    if (it != booster_dict().end()) {
        scalar = it->second;
        if (valence < 0) scalar *= -1.0;
        if (is_upper_token(word) && is_cap_diff) {
            scalar += (valence > 0) ? kCapsIncr : -kCapsIncr;
        }
    }
    return scalar;
}

struct Context {
    const std::unordered_map<std::string, double>& lexicon;
    const std::vector<std::string>& words;
    std::vector<std::string> words_lower;
    bool is_cap_diff;
};

double negation_check(double valence, const Context& ctx, int start_i, int i) {
    const auto& wl = ctx.words_lower;
    if (start_i == 0) {
        if (negated(wl[i - 1])) valence *= kNegationScalar;
    }
    if (start_i == 1) {
        if (wl[i - 2] == "never" && (wl[i - 1] == "so" || wl[i - 1] == "this")) {
            valence *= 1.25;
        } else if (wl[i - 2] == "without" && wl[i - 1] == "doubt") {
            // no change
        } else if (negated(wl[i - 2])) {
            valence *= kNegationScalar;
        }
    }
    if (start_i == 2) {
        if ((wl[i - 3] == "never" && (wl[i - 2] == "so" || wl[i - 2] == "this")) ||
            (wl[i - 1] == "so" || wl[i - 1] == "this")) {
            valence *= 1.25;
        } else if (wl[i - 3] == "without" && (wl[i - 2] == "doubt" || wl[i - 1] == "doubt")) {
            // no change
        } else if (negated(wl[i - 3])) {
            valence *= kNegationScalar;
        }
    }
    return valence;
}

double special_idioms_check(double valence, const Context& ctx, int i) {
    const auto& wl = ctx.words_lower;
    auto join2 = [&](int a, int b) { return wl[a] + " " + wl[b]; };
    auto join3 = [&](int a, int b, int c) { return wl[a] + " " + wl[b] + " " + wl[c]; };

    const std::string onezero = join2(i - 1, i);
    const std::string twoonezero = join3(i - 2, i - 1, i);
    const std::string twoone = join2(i - 2, i - 1);
    const std::string threetwoone = join3(i - 3, i - 2, i - 1);
    const std::string threetwo = join2(i - 3, i - 2);

    for (const auto& seq : {onezero, twoonezero, twoone, threetwoone, threetwo}) {
        auto it = special_cases().find(seq);
        if (it != special_cases().end()) {
            valence = it->second;
            break;
        }
    }
    int n = static_cast<int>(wl.size());
    if (n - 1 > i) {
        auto it = special_cases().find(join2(i, i + 1));
        if (it != special_cases().end()) valence = it->second;
    }
    if (n - 1 > i + 1) {
        auto it = special_cases().find(join3(i, i + 1, i + 2));
        if (it != special_cases().end()) valence = it->second;
    }
    // booster bigrams such as "sort of" or "kind of"
    for (const auto& gram : {threetwoone, threetwo, twoone}) {
        auto it = booster_dict().find(gram);
        if (it != booster_dict().end()) valence += it->second;
    }
    return valence;
}

double least_check(double valence, const Context& ctx, int i) {
    const auto& wl = ctx.words_lower;
    if (i > 1 && !ctx.lexicon.count(wl[i - 1]) && wl[i - 1] == "least") {
        if (wl[i - 2] != "at" && wl[i - 2] != "very") valence *= kNegationScalar;
    } else if (i > 0 && !ctx.lexicon.count(wl[i - 1]) && wl[i - 1] == "least") {
        valence *= kNegationScalar;
    }
    return valence;
}

double sentiment_valence(const Context& ctx, int i, double valence) {
    const std::string& item = ctx.words[static_cast<std::size_t>(i)];
    const std::string& item_lower = ctx.words_lower[static_cast<std::size_t>(i)];
    auto lex_it = ctx.lexicon.find(item_lower);
    if (lex_it == ctx.lexicon.end()) return valence;

    valence = lex_it->second;
    const int n = static_cast<int>(ctx.words.size());

    // "no" next to a lexicon word negates it instead of scoring itself
    if (item_lower == "no" && i != n - 1 && ctx.lexicon.count(ctx.words_lower[i + 1])) {
        valence = 0.0;
    }
    if ((i > 0 && ctx.words_lower[i - 1] == "no") ||
        (i > 1 && ctx.words_lower[i - 2] == "no") ||
        (i > 2 && ctx.words_lower[i - 3] == "no" &&
         (ctx.words_lower[i - 1] == "or" || ctx.words_lower[i - 1] == "nor"))) {
        valence = lex_it->second * kNegationScalar;
    }

    if (is_upper_token(item) && ctx.is_cap_diff) {
        valence += (valence > 0) ? kCapsIncr : -kCapsIncr;
    }

    for (int start_i = 0; start_i < 3; ++start_i) {
        if (i > start_i && !ctx.lexicon.count(ctx.words_lower[i - (start_i + 1)])) {
            double s = scalar_inc_dec(ctx.words[static_cast<std::size_t>(i - (start_i + 1))],
                                      valence, ctx.is_cap_diff);
            if (start_i == 1 && s != 0.0) s *= 0.95;
            if (start_i == 2 && s != 0.0) s *= 0.9;
            valence += s;
            valence = negation_check(valence, ctx, start_i, i);
            if (start_i == 2) valence = special_idioms_check(valence, ctx, i);
        }
    }
    return least_check(valence, ctx, i);
}

// Contrastive conjunction: sentiment after "but" dominates. Mirrors the
// published implementation exactly, including its find-by-value index
// lookup, which matters when duplicate valences occur.
void but_check(const std::vector<std::string>& words_lower, std::vector<double>& sentiments) {
    auto but_it = std::find(words_lower.begin(), words_lower.end(), "but");
    if (but_it == words_lower.end()) return;
    const auto bi = static_cast<std::size_t>(but_it - words_lower.begin());
    for (std::size_t k = 0; k < sentiments.size(); ++k) {
        double v = sentiments[k];
        auto first = std::find(sentiments.begin(), sentiments.end(), v);
        auto si = static_cast<std::size_t>(first - sentiments.begin());
        if (si < bi) {
            sentiments[si] = v * 0.5;
        } else if (si > bi) {
            sentiments[si] = v * 1.5;
        }
    }
}

double amplify_ep(const std::string& text) {
    long count = std::count(text.begin(), text.end(), '!');
    if (count > 4) count = 4;
    return static_cast<double>(count) * 0.292;
}

double amplify_qm(const std::string& text) {
    long count = std::count(text.begin(), text.end(), '?');
    if (count > 1) {
        return (count <= 3) ? static_cast<double>(count) * 0.18 : 0.96;
    }
    return 0.0;
}

} // namespace

Analyzer::Analyzer(const std::filesystem::path& lexicon_path) {
    std::ifstream in(lexicon_path);
    if (!in) {
        throw LoadError("cannot open sentiment lexicon: " + lexicon_path.string());
    }
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        auto tab = line.find('\t');
        if (tab == std::string::npos) {
            throw ParseError("lexicon line without tab: " + line);
        }
        std::string word = line.substr(0, tab);
        auto rest = line.substr(tab + 1);
        auto tab2 = rest.find('\t');
        if (tab2 != std::string::npos) rest.resize(tab2);
        try {
            lexicon_[word] = std::stod(rest); // last duplicate wins
        } catch (const std::exception&) {
            throw ParseError("lexicon line with bad valence: " + line);
        }
    }
    if (lexicon_.empty()) {
        throw LoadError("sentiment lexicon is empty: " + lexicon_path.string());
    }
}

SentimentScore Analyzer::score(const std::string& text) const {
    Context ctx{lexicon_, words_and_emoticons(text), {}, false};
    ctx.words_lower.reserve(ctx.words.size());
    for (const auto& w : ctx.words) ctx.words_lower.push_back(ascii_lower(w));
    ctx.is_cap_diff = allcap_differential(ctx.words);

    std::vector<double> sentiments;
    sentiments.reserve(ctx.words.size());
    const int n = static_cast<int>(ctx.words.size());
    for (int i = 0; i < n; ++i) {
        const std::string& lower = ctx.words_lower[static_cast<std::size_t>(i)];
        if (booster_dict().count(lower) ||
            (i < n - 1 && lower == "kind" && ctx.words_lower[static_cast<std::size_t>(i + 1)] == "of")) {
            sentiments.push_back(0.0);
            continue;
        }
        sentiments.push_back(sentiment_valence(ctx, i, 0.0));
    }
    but_check(ctx.words_lower, sentiments);

    SentimentScore out;
    if (sentiments.empty()) return out;

    double sum = 0.0;
    for (double s : sentiments) sum += s;
    const double punct = amplify_ep(text) + amplify_qm(text);
    if (sum > 0) sum += punct;
    else if (sum < 0) sum -= punct;
    out.compound = normalize_score(sum);

    double pos_sum = 0.0, neg_sum = 0.0, neu_count = 0.0;
    for (double s : sentiments) {
        if (s > 0) pos_sum += s + 1.0; // +1 compensates for neutrals counted as 1
        if (s < 0) neg_sum += s - 1.0;
        if (s == 0) neu_count += 1.0;
    }
    if (pos_sum > std::fabs(neg_sum)) pos_sum += punct;
    else if (pos_sum < std::fabs(neg_sum)) neg_sum -= punct;

    const double total = pos_sum + std::fabs(neg_sum) + neu_count;
    out.positive = std::fabs(pos_sum / total);
    out.negative = std::fabs(neg_sum / total);
    out.neutral = std::fabs(neu_count / total);
    return out;
}

} // namespace ehk::sentiment
