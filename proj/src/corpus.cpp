#include "ehk/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>
#include <tuple>
#include <unordered_map>
#include <unordered_set>

#include "ehk/csv.hpp"
#include "ehk/errors.hpp"
#include "ehk/fsutil.hpp"
#include "ehk/rng.hpp"

namespace ehk::corpus {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

[[noreturn]] void bad_enum(const std::string& file, std::size_t row, const std::string& field,
                           const std::string& value) {
    std::ostringstream msg;
    msg << file << ": row " << row << ": invalid " << field << " value '" << value << "'";
    throw ParseError(msg.str());
}

double parse_nonneg_double(const std::string& file, std::size_t row, const std::string& field,
                           const std::string& value) {
    try {
        std::size_t pos = 0;
        const double d = std::stod(value, &pos);
        if (pos != value.size() || d < 0.0 || !std::isfinite(d)) {
            bad_enum(file, row, field, value);
        }
        return d;
    } catch (const ParseError&) {
        throw;
    } catch (const std::exception&) {
        bad_enum(file, row, field, value);
    }
}

int parse_positive_int(const std::string& file, std::size_t row, const std::string& field,
                       const std::string& value) {
    try {
        std::size_t pos = 0;
        const int v = std::stoi(value, &pos);
        if (pos != value.size() || v < 1) bad_enum(file, row, field, value);
        return v;
    } catch (const ParseError&) {
        throw;
    } catch (const std::exception&) {
        bad_enum(file, row, field, value);
    }
}

void expect_header(const csv::Table& table, const std::vector<std::string>& expected,
                   const std::string& file) {
    if (table.header != expected) {
        std::string want;
        for (const auto& h : expected) {
            if (!want.empty()) want += ",";
            want += h;
        }
        throw ParseError(file + ": unexpected header (want '" + want + "')");
    }
}

const std::set<std::string>& godspeed_subscales() {
    static const std::set<std::string> s = {"anthropomorphism", "animacy", "likeability",
                                            "intelligence", "safety"};
    return s;
}

const std::set<std::string>& hrc_subscales() {
    static const std::set<std::string> s = {"fluency", "trust", "alliance"};
    return s;
}

} // namespace

std::string to_string(Gender g) {
    switch (g) {
        case Gender::male: return "male";
        case Gender::female: return "female";
        case Gender::other: return "other";
    }
    return "other";
}

std::string to_string(Stage s) {
    switch (s) {
        case Stage::preparation: return "preparation";
        case Stage::assembly: return "assembly";
        case Stage::painting: return "painting";
    }
    return "preparation";
}

std::string to_string(Quality q) { return q == Quality::good ? "good" : "bad"; }

std::string to_string(Condition c) {
    switch (c) {
        case Condition::success: return "success";
        case Condition::control: return "control";
        case Condition::ea: return "ea";
    }
    return "success";
}

std::string to_string(Phase p) {
    switch (p) {
        case Phase::pre: return "pre";
        case Phase::success: return "success";
        case Phase::control: return "control";
        case Phase::ea: return "ea";
    }
    return "pre";
}

std::string to_string(Instrument i) { return i == Instrument::godspeed ? "godspeed" : "hrc"; }

Gender gender_from_string(const std::string& s) {
    if (s == "male") return Gender::male;
    if (s == "female") return Gender::female;
    if (s == "other") return Gender::other;
    throw ParseError("invalid gender value '" + s + "'");
}

Stage stage_from_string(const std::string& s) {
    if (s == "preparation") return Stage::preparation;
    if (s == "assembly") return Stage::assembly;
    if (s == "painting") return Stage::painting;
    throw ParseError("invalid stage value '" + s + "'");
}

Quality quality_from_string(const std::string& s) {
    if (s == "good") return Quality::good;
    if (s == "bad") return Quality::bad;
    throw ParseError("invalid handover_quality value '" + s + "'");
}

Condition condition_from_string(const std::string& s) {
    if (s == "success") return Condition::success;
    if (s == "control") return Condition::control;
    if (s == "ea") return Condition::ea;
    throw ParseError("invalid condition value '" + s + "'");
}

Phase phase_from_string(const std::string& s) {
    if (s == "pre") return Phase::pre;
    if (s == "success") return Phase::success;
    if (s == "control") return Phase::control;
    if (s == "ea") return Phase::ea;
    throw ParseError("invalid phase value '" + s + "'");
}

Instrument instrument_from_string(const std::string& s) {
    if (s == "godspeed") return Instrument::godspeed;
    if (s == "hrc") return Instrument::hrc;
    throw ParseError("invalid instrument value '" + s + "'");
}

const EpisodeRecord* Corpus::find_episode(const std::string& episode_id) const {
    for (const auto& e : episodes) {
        if (e.episode_id == episode_id) return &e;
    }
    return nullptr;
}

std::vector<const AnnotationRecord*> Corpus::annotations_for(const std::string& episode_id) const {
    std::vector<const AnnotationRecord*> out;
    for (const auto& a : annotations) {
        if (a.episode_id == episode_id) out.push_back(&a);
    }
    return out;
}

const SelfReportRecord* Corpus::find_self_report(const std::string& participant_id,
                                                 Condition condition, int delivery_index) const {
    for (const auto& r : self_reports) {
        if (r.participant_id == participant_id && r.condition == condition &&
            r.delivery_index == delivery_index) {
            return &r;
        }
    }
    return nullptr;
}

Corpus load_corpus(const std::filesystem::path& root, const LoadOptions& options) {
    Corpus corpus;
    corpus.root = root;

    const auto episodes_path = root / "episodes.csv";
    const auto annotations_path = root / "annotations.csv";
    const auto selfreports_path = root / "study2" / "selfreports.csv";
    const auto questionnaires_path = root / "study2" / "questionnaires.csv";
    const auto preferences_path = root / "study2" / "preferences.csv";
    for (const auto& p :
         {episodes_path, annotations_path, selfreports_path, questionnaires_path, preferences_path}) {
        if (!std::filesystem::exists(p)) {
            throw LoadError("missing corpus file: " + p.string());
        }
    }

    // episodes
    {
        const auto table = csv::read_file(episodes_path);
        expect_header(table,
                      {"episode_id", "participant_id", "gender", "stage", "handover_quality",
                       "video_path", "duration_s"},
                      "episodes.csv");
        std::unordered_set<std::string> seen;
        for (std::size_t r = 0; r < table.rows.size(); ++r) {
            const auto& row = table.rows[r];
            const std::size_t rownum = r + 1;
            EpisodeRecord e;
            e.episode_id = trim(row[0]);
            e.participant_id = trim(row[1]);
            if (e.episode_id.empty()) bad_enum("episodes.csv", rownum, "episode_id", row[0]);
            try {
                e.gender = gender_from_string(row[2]);
                e.stage = stage_from_string(row[3]);
                e.handover_quality = quality_from_string(row[4]);
            } catch (const ParseError& ex) {
                throw ParseError("episodes.csv: row " + std::to_string(rownum) + ": " + ex.what());
            }
            e.video_path = row[5];
            e.duration_s = parse_nonneg_double("episodes.csv", rownum, "duration_s", row[6]);
            if (!seen.insert(e.episode_id).second) {
                throw IntegrityError("episodes.csv: duplicate episode_id '" + e.episode_id + "'");
            }
            if (options.strict_media) {
                const auto video = root / e.video_path;
                if (!std::filesystem::exists(video)) {
                    throw IntegrityError("episodes.csv: row " + std::to_string(rownum) +
                                         ": video_path does not resolve: " + video.string());
                }
            }
            corpus.episodes.push_back(std::move(e));
        }
    }

    // annotations
    {
        const auto table = csv::read_file(annotations_path);
        expect_header(table, {"episode_id", "annotator_id", "text"}, "annotations.csv");
        std::unordered_map<std::string, int> per_episode;
        for (std::size_t r = 0; r < table.rows.size(); ++r) {
            const auto& row = table.rows[r];
            const std::size_t rownum = r + 1;
            AnnotationRecord a;
            a.episode_id = trim(row[0]);
            a.annotator_id = trim(row[1]);
            a.text = row[2];
            if (trim(a.text).empty()) {
                throw ParseError("annotations.csv: row " + std::to_string(rownum) +
                                 ": empty annotation text");
            }
            if (!corpus.find_episode(a.episode_id)) {
                throw IntegrityError("annotations.csv: row " + std::to_string(rownum) +
                                     ": annotation references unknown episode '" + a.episode_id +
                                     "'");
            }
            int& count = per_episode[a.episode_id];
            ++count;
            if (options.max_annotations_per_episode > 0 &&
                count > options.max_annotations_per_episode) {
                continue; // capped, first N in file order win
            }
            corpus.annotations.push_back(std::move(a));
        }
        if (options.max_annotations_per_episode > 0) {
            for (const auto& [eid, count] : per_episode) {
                if (count > options.max_annotations_per_episode) {
                    corpus.warnings.push_back(
                        "episode " + eid + ": capped annotations from " + std::to_string(count) +
                        " to " + std::to_string(options.max_annotations_per_episode));
                }
            }
        }
        if (table.rows.empty()) {
            corpus.warnings.push_back("annotations.csv contains no annotations");
        }
    }

    // study2/selfreports
    {
        const auto table = csv::read_file(selfreports_path);
        expect_header(table, {"participant_id", "condition", "delivery_index", "text"},
                      "selfreports.csv");
        std::set<std::tuple<std::string, Condition, int>> seen;
        for (std::size_t r = 0; r < table.rows.size(); ++r) {
            const auto& row = table.rows[r];
            const std::size_t rownum = r + 1;
            SelfReportRecord s;
            s.participant_id = trim(row[0]);
            try {
                s.condition = condition_from_string(row[1]);
            } catch (const ParseError& ex) {
                throw ParseError("selfreports.csv: row " + std::to_string(rownum) + ": " + ex.what());
            }
            s.delivery_index = parse_positive_int("selfreports.csv", rownum, "delivery_index", row[2]);
            s.text = row[3];
            if (trim(s.text).empty()) {
                throw ParseError("selfreports.csv: row " + std::to_string(rownum) +
                                 ": empty self-report text");
            }
            if (!seen.insert({s.participant_id, s.condition, s.delivery_index}).second) {
                throw IntegrityError("selfreports.csv: row " + std::to_string(rownum) +
                                     ": duplicate (participant, condition, delivery_index)");
            }
            corpus.self_reports.push_back(std::move(s));
        }
    }

    // study2/questionnaires
    {
        const auto table = csv::read_file(questionnaires_path);
        expect_header(table, {"participant_id", "phase", "instrument", "subscale", "score"},
                      "questionnaires.csv");
        for (std::size_t r = 0; r < table.rows.size(); ++r) {
            const auto& row = table.rows[r];
            const std::size_t rownum = r + 1;
            QuestionnaireRecord q;
            q.participant_id = trim(row[0]);
            try {
                q.phase = phase_from_string(row[1]);
                q.instrument = instrument_from_string(row[2]);
            } catch (const ParseError& ex) {
                throw ParseError("questionnaires.csv: row " + std::to_string(rownum) + ": " +
                                 ex.what());
            }
            q.subscale = trim(row[3]);
            const auto& allowed =
                q.instrument == Instrument::godspeed ? godspeed_subscales() : hrc_subscales();
            if (!allowed.count(q.subscale)) {
                bad_enum("questionnaires.csv", rownum,
                         to_string(q.instrument) + " subscale", q.subscale);
            }
            q.score = parse_nonneg_double("questionnaires.csv", rownum, "score", row[4]);
            if (q.score < 1.0 || q.score > 5.0) {
                throw ParseError("questionnaires.csv: row " + std::to_string(rownum) +
                                 ": score outside [1,5]: " + row[4]);
            }
            corpus.questionnaires.push_back(std::move(q));
        }
    }

    // study2/preferences
    {
        const auto table = csv::read_file(preferences_path);
        expect_header(table, {"participant_id", "choice"}, "preferences.csv");
        std::unordered_set<std::string> seen;
        for (std::size_t r = 0; r < table.rows.size(); ++r) {
            const auto& row = table.rows[r];
            const std::size_t rownum = r + 1;
            PreferenceRecord p;
            p.participant_id = trim(row[0]);
            try {
                p.choice = condition_from_string(row[1]);
            } catch (const ParseError& ex) {
                throw ParseError("preferences.csv: row " + std::to_string(rownum) + ": " + ex.what());
            }
            if (p.choice == Condition::success) {
                bad_enum("preferences.csv", rownum, "choice", row[1]);
            }
            if (!seen.insert(p.participant_id).second) {
                throw IntegrityError("preferences.csv: row " + std::to_string(rownum) +
                                     ": more than one preference for participant '" +
                                     p.participant_id + "'");
            }
            corpus.preferences.push_back(std::move(p));
        }
    }

    return corpus;
}

void save_corpus(const Corpus& corpus, const std::filesystem::path& root) {
    std::filesystem::create_directories(root / "study2");

    csv::Table episodes;
    episodes.header = {"episode_id", "participant_id", "gender", "stage", "handover_quality",
                       "video_path", "duration_s"};
    for (const auto& e : corpus.episodes) {
        std::ostringstream dur;
        dur << e.duration_s;
        episodes.rows.push_back({e.episode_id, e.participant_id, to_string(e.gender),
                                 to_string(e.stage), to_string(e.handover_quality), e.video_path,
                                 dur.str()});
    }
    atomic_write_file(root / "episodes.csv", csv::format(episodes));

    csv::Table annotations;
    annotations.header = {"episode_id", "annotator_id", "text"};
    for (const auto& a : corpus.annotations) {
        annotations.rows.push_back({a.episode_id, a.annotator_id, a.text});
    }
    atomic_write_file(root / "annotations.csv", csv::format(annotations));

    csv::Table selfreports;
    selfreports.header = {"participant_id", "condition", "delivery_index", "text"};
    for (const auto& s : corpus.self_reports) {
        selfreports.rows.push_back(
            {s.participant_id, to_string(s.condition), std::to_string(s.delivery_index), s.text});
    }
    atomic_write_file(root / "study2" / "selfreports.csv", csv::format(selfreports));

    csv::Table questionnaires;
    questionnaires.header = {"participant_id", "phase", "instrument", "subscale", "score"};
    for (const auto& q : corpus.questionnaires) {
        std::ostringstream score;
        score << q.score;
        questionnaires.rows.push_back({q.participant_id, to_string(q.phase),
                                       to_string(q.instrument), q.subscale, score.str()});
    }
    atomic_write_file(root / "study2" / "questionnaires.csv", csv::format(questionnaires));

    csv::Table preferences;
    preferences.header = {"participant_id", "choice"};
    for (const auto& p : corpus.preferences) {
        preferences.rows.push_back({p.participant_id, to_string(p.choice)});
    }
    atomic_write_file(root / "study2" / "preferences.csv", csv::format(preferences));
}

std::vector<ValidationIssue> validate_corpus(const Corpus& corpus, int min_annotations) {
    std::unordered_map<std::string, int> counts;
    for (const auto& a : corpus.annotations) counts[a.episode_id]++;
    std::vector<ValidationIssue> issues;
    for (const auto& e : corpus.episodes) {
        const int have = counts.count(e.episode_id) ? counts.at(e.episode_id) : 0;
        if (have < min_annotations) {
            ValidationIssue issue;
            issue.episode_id = e.episode_id;
            issue.annotation_count = have;
            issue.message = "episode " + e.episode_id + " has " + std::to_string(have) +
                            " annotations, needs at least " + std::to_string(min_annotations);
            issues.push_back(std::move(issue));
        }
    }
    return issues;
}

std::vector<EpisodeRecord> select_balanced(const std::vector<EpisodeRecord>& episodes,
                                           int per_cell, std::uint64_t seed) {
    if (per_cell < 1) {
        throw DomainError("select_balanced: per_cell must be >= 1");
    }
    std::set<Gender> genders;
    for (const auto& e : episodes) genders.insert(e.gender);
    if (genders.empty()) {
        throw DomainError("select_balanced: no episodes given");
    }

    using Cell = std::tuple<Gender, Quality, Stage>;
    std::map<Cell, std::vector<const EpisodeRecord*>> cells;
    for (Gender g : genders) {
        for (Quality q : {Quality::good, Quality::bad}) {
            for (Stage s : {Stage::preparation, Stage::assembly, Stage::painting}) {
                cells[{g, q, s}] = {};
            }
        }
    }
    for (const auto& e : episodes) {
        cells[{e.gender, e.handover_quality, e.stage}].push_back(&e);
    }

    std::vector<std::string> deficient;
    for (const auto& [cell, members] : cells) {
        if (static_cast<int>(members.size()) < per_cell) {
            const auto& [g, q, s] = cell;
            deficient.push_back("gender=" + to_string(g) + ",quality=" + to_string(q) +
                                ",stage=" + to_string(s) + " (have " +
                                std::to_string(members.size()) + ", need " +
                                std::to_string(per_cell) + ")");
        }
    }
    if (!deficient.empty()) {
        std::string msg = "select_balanced: infeasible, deficient cells:";
        for (const auto& d : deficient) msg += " [" + d + "]";
        throw DomainError(msg);
    }

    Rng rng(seed);
    std::vector<EpisodeRecord> out;
    for (auto& [cell, members] : cells) {
        std::sort(members.begin(), members.end(),
                  [](const EpisodeRecord* a, const EpisodeRecord* b) {
                      return a->episode_id < b->episode_id;
                  });
        rng.shuffle(members);
        for (int i = 0; i < per_cell; ++i) out.push_back(*members[static_cast<std::size_t>(i)]);
    }
    std::sort(out.begin(), out.end(), [](const EpisodeRecord& a, const EpisodeRecord& b) {
        return a.episode_id < b.episode_id;
    });
    return out;
}

} // namespace ehk::corpus
