#pragma once
// Annotation corpus: episodes, free-text annotations, and the interaction
// study's self-reports, questionnaires and preferences. Plain CSV on disk,
// read-only and shareable after load.

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace ehk::corpus {

enum class Gender { male, female, other };
enum class Stage { preparation, assembly, painting };
enum class Quality { good, bad };
enum class Condition { success, control, ea };
enum class Phase { pre, success, control, ea };
enum class Instrument { godspeed, hrc };

std::string to_string(Gender g);
std::string to_string(Stage s);
std::string to_string(Quality q);
std::string to_string(Condition c);
std::string to_string(Phase p);
std::string to_string(Instrument i);

Gender gender_from_string(const std::string& s);
Stage stage_from_string(const std::string& s);
Quality quality_from_string(const std::string& s);
Condition condition_from_string(const std::string& s);
Phase phase_from_string(const std::string& s);
Instrument instrument_from_string(const std::string& s);

struct EpisodeRecord {
    std::string episode_id;
    std::string participant_id;
    Gender gender = Gender::other;
    Stage stage = Stage::preparation;
    Quality handover_quality = Quality::good;
    std::string video_path; // relative to the corpus root
    double duration_s = 0.0;

    bool operator==(const EpisodeRecord&) const = default;
};

struct AnnotationRecord {
    std::string episode_id;
    std::string annotator_id;
    std::string text;

    bool operator==(const AnnotationRecord&) const = default;
};

struct SelfReportRecord {
    std::string participant_id;
    Condition condition = Condition::success;
    int delivery_index = 1;
    std::string text;

    bool operator==(const SelfReportRecord&) const = default;
};

struct QuestionnaireRecord {
    std::string participant_id;
    Phase phase = Phase::pre;
    Instrument instrument = Instrument::godspeed;
    std::string subscale;
    double score = 1.0; // in [1, 5]

    bool operator==(const QuestionnaireRecord&) const = default;
};

struct PreferenceRecord {
    std::string participant_id;
    Condition choice = Condition::ea; // ea or control only

    bool operator==(const PreferenceRecord&) const = default;
};

struct Corpus {
    std::filesystem::path root;
    std::vector<EpisodeRecord> episodes;
    std::vector<AnnotationRecord> annotations;
    std::vector<SelfReportRecord> self_reports;
    std::vector<QuestionnaireRecord> questionnaires;
    std::vector<PreferenceRecord> preferences;
    std::vector<std::string> warnings;

    const EpisodeRecord* find_episode(const std::string& episode_id) const;
    std::vector<const AnnotationRecord*> annotations_for(const std::string& episode_id) const;
    const SelfReportRecord* find_self_report(const std::string& participant_id,
                                             Condition condition, int delivery_index) const;
};

struct LoadOptions {
    // When set, every episode's video_path must resolve under the root.
    bool strict_media = false;
    // 0 keeps everything; otherwise only the first N annotations per episode
    // (file order) are retained, with a warning.
    int max_annotations_per_episode = 0;
};

// Loads episodes.csv, annotations.csv and study2/{selfreports,
// questionnaires, preferences}.csv from root. Throws LoadError for missing
// files, ParseError with the row number for malformed rows, IntegrityError
// for dangling references and uniqueness violations.
Corpus load_corpus(const std::filesystem::path& root, const LoadOptions& options = {});

// Writes the same layout back out (used by round-trip checks and fixture
// tooling). Videos are not copied.
void save_corpus(const Corpus& corpus, const std::filesystem::path& root);

struct ValidationIssue {
    std::string episode_id;
    int annotation_count = 0;
    std::string message;
};

// One issue per episode with fewer than min_annotations annotations.
std::vector<ValidationIssue> validate_corpus(const Corpus& corpus, int min_annotations);

// Balanced subset with per_cell episodes for every cell of
// (observed genders) x (all qualities) x (all stages). Quality and stage are
// experiment design axes, so every enum value must be covered; gender
// balances over the genders present in the input. Deterministic for a fixed
// seed; the result is sorted by episode_id.
std::vector<EpisodeRecord> select_balanced(const std::vector<EpisodeRecord>& episodes,
                                           int per_cell, std::uint64_t seed);

} // namespace ehk::corpus
