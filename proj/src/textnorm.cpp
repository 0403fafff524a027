#include "ehk/textnorm.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>
#include <unordered_map>

#include "ehk/errors.hpp"
#include "ehk/hash.hpp"

namespace ehk::textnorm {

namespace {

bool is_ascii_alnum(char c) {
    return (c >= '0' && c <= '9') || (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z');
}

// Bytes >= 0x80 (UTF-8 continuation or lead) count as word content so
// emoji and accented words survive as tokens.
bool is_word_content(char c) {
    return is_ascii_alnum(c) || static_cast<unsigned char>(c) >= 0x80;
}

std::string ascii_lower(std::string s) {
    for (char& c : s) {
        if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
    }
    return s;
}

// Trim ASCII punctuation from both ends, leaving UTF-8 bytes alone.
std::string trim_punct(const std::string& token) {
    std::size_t b = 0, e = token.size();
    auto is_edge_punct = [](char c) {
        unsigned char u = static_cast<unsigned char>(c);
        return u < 0x80 && !is_ascii_alnum(c);
    };
    while (b < e && is_edge_punct(token[b])) ++b;
    while (e > b && is_edge_punct(token[e - 1])) --e;
    return token.substr(b, e - b);
}

const std::unordered_map<std::string, std::string>& irregulars() {
    static const std::unordered_map<std::string, std::string> table = {
        {"men", "man"},         {"women", "woman"},     {"children", "child"},
        {"people", "person"},   {"feet", "foot"},       {"teeth", "tooth"},
        {"mice", "mouse"},      {"geese", "goose"},     {"lives", "life"},
        {"leaves", "leaf"},     {"selves", "self"},     {"eyes", "eye"},
        {"hands", "hand"},      {"added", "add"},       {"adding", "add"},
        {"used", "use"},        {"using", "use"},       {"doing", "do"},
        {"done", "do"},         {"did", "do"},          {"going", "go"},
        {"goes", "go"},         {"went", "go"},         {"gone", "go"},
        {"making", "make"},     {"made", "make"},       {"taking", "take"},
        {"taken", "take"},      {"took", "take"},       {"giving", "give"},
        {"given", "give"},      {"gave", "give"},       {"getting", "get"},
        {"got", "get"},         {"gotten", "get"},      {"seen", "see"},
        {"saw", "see"},         {"seeing", "see"},      {"felt", "feel"},
        {"feeling", "feel"},    {"feelings", "feeling"},{"kept", "keep"},
        {"held", "hold"},       {"left", "leave"},      {"lost", "lose"},
        {"said", "say"},        {"seemed", "seem"},     {"seems", "seem"},
        {"shown", "show"},      {"showed", "show"},     {"engaged", "engage"},
        {"engaging", "engage"}, {"smiled", "smile"},    {"smiling", "smile"},
        {"coming", "come"},     {"came", "come"},       {"putting", "put"},
        {"sitting", "sit"},     {"sat", "sit"},         {"standing", "stand"},
        {"stood", "stand"},     {"writing", "write"},   {"written", "write"},
        {"wrote", "write"},
    };
    return table;
}

bool is_vowel_at(const std::string& s, std::size_t i) {
    char c = s[i];
    if (c == 'a' || c == 'e' || c == 'i' || c == 'o' || c == 'u') return true;
    // y counts as a vowel after a consonant
    if (c == 'y' && i > 0) return !is_vowel_at(s, i - 1);
    return false;
}

bool has_vowel(const std::string& s) {
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (is_vowel_at(s, i)) return true;
    }
    return false;
}

// Porter's measure: number of vowel-consonant sequences.
int measure(const std::string& s) {
    int m = 0;
    bool in_vowel_run = false;
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (is_vowel_at(s, i)) {
            in_vowel_run = true;
        } else if (in_vowel_run) {
            ++m;
            in_vowel_run = false;
        }
    }
    return m;
}

// consonant-vowel-consonant ending where the final consonant is not w/x/y.
bool ends_cvc(const std::string& s) {
    if (s.size() < 3) return false;
    std::size_t n = s.size();
    if (is_vowel_at(s, n - 3) || !is_vowel_at(s, n - 2) || is_vowel_at(s, n - 1)) return false;
    char last = s[n - 1];
    return last != 'w' && last != 'x' && last != 'y';
}

bool ascii_only(const std::string& s) {
    return std::all_of(s.begin(), s.end(), [](char c) { return static_cast<unsigned char>(c) < 0x80; });
}

bool ends_with(const std::string& s, const char* suffix) {
    std::string_view sv(suffix);
    return s.size() >= sv.size() && s.compare(s.size() - sv.size(), sv.size(), sv) == 0;
}

// Undo consonant doubling and restore dropped 'e' after stripping -ing/-ed.
std::string fix_stripped_stem(std::string stem) {
    std::size_t n = stem.size();
    if (n >= 2 && stem[n - 1] == stem[n - 2] && !is_vowel_at(stem, n - 1) &&
        stem[n - 1] != 'l' && stem[n - 1] != 's' && stem[n - 1] != 'z') {
        stem.pop_back();
        return stem;
    }
    if (measure(stem) == 1 && ends_cvc(stem)) {
        stem.push_back('e');
    }
    return stem;
}

} // namespace

std::string lemmatize(const std::string& token) {
    if (!ascii_only(token) || token.size() < 3) return token;

    auto it = irregulars().find(token);
    if (it != irregulars().end()) return it->second;

    std::string t = token;
    // possessives
    if (ends_with(t, "'s")) t.resize(t.size() - 2);
    else if (ends_with(t, "'")) t.resize(t.size() - 1);

    it = irregulars().find(t);
    if (it != irregulars().end()) return it->second;

    if (ends_with(t, "ies") && t.size() >= 5) {
        t.resize(t.size() - 3);
        t += "y";
        return t;
    }
    if (ends_with(t, "s") && !ends_with(t, "ss") && !ends_with(t, "us") &&
        !ends_with(t, "is") && t.size() >= 4) {
        t.resize(t.size() - 1);
        // kisses -> kisse -> kiss, boxes -> boxe -> box, churches -> church
        if (ends_with(t, "sse") || ends_with(t, "xe") || ends_with(t, "ze") ||
            ends_with(t, "che") || ends_with(t, "she")) {
            t.resize(t.size() - 1);
        }
        return t;
    }
    if (ends_with(t, "ied") && t.size() >= 5) {
        t.resize(t.size() - 3);
        t += "y";
        return t;
    }
    if (ends_with(t, "ing") && t.size() >= 6) {
        std::string stem = t.substr(0, t.size() - 3);
        if (stem.size() >= 3 && has_vowel(stem)) return fix_stripped_stem(std::move(stem));
        return t;
    }
    if (ends_with(t, "ed") && t.size() >= 5) {
        std::string stem = t.substr(0, t.size() - 2);
        if (stem.size() >= 3 && has_vowel(stem)) return fix_stripped_stem(std::move(stem));
        return t;
    }
    return t;
}

const std::vector<std::string>& builtin_stopwords() {
    static const std::vector<std::string> words = {
        "a", "about", "above", "after", "again", "against", "all", "am", "an", "and",
        "any", "are", "as", "at", "be", "because", "been", "before", "being", "below",
        "between", "both", "but", "by", "can", "cannot", "could", "did", "do", "does",
        "doing", "down", "during", "each", "few", "for", "from", "further", "had",
        "has", "have", "having", "he", "her", "here", "hers", "herself", "him",
        "himself", "his", "how", "i", "if", "in", "into", "is", "it", "its", "itself",
        "just", "me", "more", "most", "my", "myself", "now", "of", "off", "on", "once",
        "only", "or", "other", "our", "ours", "ourselves", "out", "over", "own",
        "same", "she", "should", "so", "some", "such", "than", "that", "the", "their",
        "theirs", "them", "themselves", "then", "there", "these", "they", "this",
        "those", "through", "to", "too", "under", "until", "up", "upon", "very",
        "was", "we", "were", "what", "when", "where", "which", "while", "who", "whom",
        "why", "will", "with", "would", "you", "your", "yours", "yourself",
        "yourselves", "also", "although", "though", "however", "either", "may",
        "might", "must", "shall", "us", "via", "per", "onto", "among", "within",
        "across", "along", "toward", "towards",
    };
    return words;
}

std::vector<std::string> load_stoplist(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw LoadError("cannot open stop list: " + path.string());
    }
    std::vector<std::string> words;
    std::string line;
    while (std::getline(in, line)) {
        auto hash = line.find('#');
        if (hash != std::string::npos) line.resize(hash);
        // trim
        std::size_t b = line.find_first_not_of(" \t\r");
        if (b == std::string::npos) continue;
        std::size_t e = line.find_last_not_of(" \t\r");
        words.push_back(line.substr(b, e - b + 1));
    }
    return words;
}

std::unordered_set<std::string> NormConfig::stopword_set() const {
    static const std::unordered_set<std::string> builtin_set(builtin_stopwords().begin(),
                                                             builtin_stopwords().end());
    if (stopwords.empty()) return builtin_set;
    return {stopwords.begin(), stopwords.end()};
}

std::string NormConfig::config_hash() const {
    std::ostringstream canon;
    canon << "lowercase=" << (lowercase ? 1 : 0)
          << ";strip_markdown=" << (strip_markdown ? 1 : 0)
          << ";lemmatizer=" << lemmatizer << ";stopwords=";
    auto sorted = stopwords.empty() ? builtin_stopwords() : stopwords;
    std::sort(sorted.begin(), sorted.end());
    for (const auto& w : sorted) canon << w << ',';
    return sha256_hex(canon.str());
}

NormalizedText normalize(const std::string& text, const NormConfig& config) {
    if (config.lemmatizer != "rule_en_v1" && config.lemmatizer != "none") {
        throw ParseError("unknown lemmatizer: " + config.lemmatizer);
    }

    std::string work = text;
    if (config.strip_markdown) {
        for (char& c : work) {
            if (c == '*' || c == '_' || c == '#') c = ' ';
        }
    }
    if (config.lowercase) work = ascii_lower(std::move(work));

    NormalizedText out;
    out.original = text;

    const auto& stops = config.stopword_set();
    std::istringstream stream(work);
    std::string raw;
    while (stream >> raw) {
        std::string token = trim_punct(raw);
        if (token.empty()) continue;
        bool has_content = std::any_of(token.begin(), token.end(), is_word_content);
        if (!has_content) continue;
        if (stops.count(config.lowercase ? token : ascii_lower(token))) continue;
        if (config.lemmatizer == "rule_en_v1") token = lemmatize(token);
        if (token.empty() || stops.count(token)) continue;
        out.tokens.push_back(std::move(token));
    }

    for (std::size_t i = 0; i < out.tokens.size(); ++i) {
        if (i) out.joined.push_back(' ');
        out.joined += out.tokens[i];
    }
    return out;
}

} // namespace ehk::textnorm
