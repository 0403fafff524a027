#include <doctest.h>

#include <unistd.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <tuple>

#include "ehk/corpus.hpp"
#include "ehk/errors.hpp"
#include "ehk/fsutil.hpp"

using namespace ehk;
using namespace ehk::corpus;

namespace {

std::filesystem::path fixture_root() {
    return std::filesystem::path(EHK_SOURCE_DIR) / "fixtures" / "corpus6";
}

std::filesystem::path temp_dir(const char* tag) {
    auto dir = std::filesystem::temp_directory_path() /
               (std::string("ehk_corpus_") + tag + "_" + std::to_string(::getpid()));
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

void copy_fixture(const std::filesystem::path& dst) {
    std::filesystem::copy(fixture_root(), dst,
                          std::filesystem::copy_options::recursive |
                              std::filesystem::copy_options::overwrite_existing);
}

EpisodeRecord make_episode(const std::string& id, Gender g, Quality q, Stage s) {
    EpisodeRecord e;
    e.episode_id = id;
    e.participant_id = "P" + id;
    e.gender = g;
    e.handover_quality = q;
    e.stage = s;
    e.video_path = "videos/" + id + ".mp4";
    e.duration_s = 10.0;
    return e;
}

} // namespace

TEST_CASE("bundled fixture loads with expected counts") {
    const auto corpus = load_corpus(fixture_root());
    CHECK(corpus.episodes.size() == 6);
    CHECK(corpus.annotations.size() == 18);
    CHECK(corpus.self_reports.size() == 320);
    CHECK(corpus.preferences.size() == 40);
    CHECK(corpus.questionnaires.size() == 1160);
    CHECK(corpus.find_episode("E03") != nullptr);
    CHECK(corpus.annotations_for("E01").size() == 3);
    CHECK(corpus.find_self_report("S01", Condition::ea, 2) != nullptr);
}

TEST_CASE("strict media validation passes on the fixture") {
    LoadOptions opts;
    opts.strict_media = true;
    CHECK_NOTHROW(load_corpus(fixture_root(), opts));
}

TEST_CASE("missing file errors name the file") {
    const auto dir = temp_dir("missing");
    copy_fixture(dir);
    std::filesystem::remove(dir / "annotations.csv");
    CHECK_THROWS_WITH_AS(load_corpus(dir), doctest::Contains("annotations.csv"), LoadError);
    std::filesystem::remove_all(dir);
}

TEST_CASE("empty annotations file loads with a warning") {
    const auto dir = temp_dir("empty_ann");
    copy_fixture(dir);
    atomic_write_file(dir / "annotations.csv", "episode_id,annotator_id,text\n");
    const auto corpus = load_corpus(dir);
    CHECK(corpus.annotations.empty());
    REQUIRE_FALSE(corpus.warnings.empty());
    CHECK(corpus.warnings.front().find("no annotations") != std::string::npos);
    std::filesystem::remove_all(dir);
}

TEST_CASE("dangling episode reference is an integrity error naming the id") {
    const auto dir = temp_dir("dangling");
    copy_fixture(dir);
    atomic_write_file(dir / "annotations.csv",
                      "episode_id,annotator_id,text\nE99,A01,Looks happy enough.\n");
    CHECK_THROWS_WITH_AS(load_corpus(dir), doctest::Contains("E99"), IntegrityError);
    std::filesystem::remove_all(dir);
}

TEST_CASE("malformed rows carry row numbers; unknown enums are hard errors") {
    const auto dir = temp_dir("badenum");
    copy_fixture(dir);
    atomic_write_file(
        dir / "episodes.csv",
        "episode_id,participant_id,gender,stage,handover_quality,video_path,duration_s\n"
        "E01,P01,male,preparation,good,videos/E01.mp4,10\n"
        "E02,P02,robot,assembly,good,videos/E02.mp4,10\n");
    CHECK_THROWS_WITH_AS(load_corpus(dir), doctest::Contains("row 2"), ParseError);
    std::filesystem::remove_all(dir);
}

TEST_CASE("duplicate episode ids and duplicate preferences are integrity errors") {
    const auto dir = temp_dir("dups");
    copy_fixture(dir);
    atomic_write_file(
        dir / "episodes.csv",
        "episode_id,participant_id,gender,stage,handover_quality,video_path,duration_s\n"
        "E01,P01,male,preparation,good,videos/E01.mp4,10\n"
        "E01,P02,female,assembly,bad,videos/E01.mp4,10\n");
    CHECK_THROWS_AS(load_corpus(dir), IntegrityError);
    std::filesystem::remove_all(dir);

    const auto dir2 = temp_dir("dups2");
    copy_fixture(dir2);
    atomic_write_file(dir2 / "study2" / "preferences.csv",
                      "participant_id,choice\nS01,ea\nS01,control\n");
    CHECK_THROWS_AS(load_corpus(dir2), IntegrityError);
    std::filesystem::remove_all(dir2);
}

TEST_CASE("questionnaire subscales and score ranges are enforced") {
    const auto dir = temp_dir("qrange");
    copy_fixture(dir);
    atomic_write_file(dir / "study2" / "questionnaires.csv",
                      "participant_id,phase,instrument,subscale,score\n"
                      "S01,pre,godspeed,fluency,3\n");
    CHECK_THROWS_AS(load_corpus(dir), ParseError); // fluency is not a godspeed subscale
    atomic_write_file(dir / "study2" / "questionnaires.csv",
                      "participant_id,phase,instrument,subscale,score\n"
                      "S01,pre,godspeed,animacy,5.5\n");
    CHECK_THROWS_WITH_AS(load_corpus(dir), doctest::Contains("[1,5]"), ParseError);
    std::filesystem::remove_all(dir);
}

TEST_CASE("annotation cap keeps the first N per episode with a warning") {
    LoadOptions opts;
    opts.max_annotations_per_episode = 2;
    const auto corpus = load_corpus(fixture_root(), opts);
    CHECK(corpus.annotations_for("E01").size() == 2);
    CHECK(corpus.annotations.size() == 12);
    CHECK_FALSE(corpus.warnings.empty());
}

TEST_CASE("load -> save -> load round-trips to an equal corpus") {
    const auto corpus = load_corpus(fixture_root());
    const auto dir = temp_dir("roundtrip");
    save_corpus(corpus, dir);
    // videos are not copied by save; strict mode stays off
    const auto back = load_corpus(dir);
    CHECK(back.episodes == corpus.episodes);
    CHECK(back.annotations == corpus.annotations);
    CHECK(back.self_reports == corpus.self_reports);
    CHECK(back.questionnaires == corpus.questionnaires);
    CHECK(back.preferences == corpus.preferences);
    std::filesystem::remove_all(dir);
}

TEST_CASE("validate_corpus flags episodes under the minimum") {
    auto corpus = load_corpus(fixture_root());
    CHECK(validate_corpus(corpus, 3).empty());

    // 27 annotations on one episode is fine (no maximum)
    for (int i = 0; i < 24; ++i) {
        corpus.annotations.push_back({"E01", "AX" + std::to_string(i), "Another calm reading."});
    }
    CHECK(validate_corpus(corpus, 3).empty());
    CHECK(corpus.annotations_for("E01").size() == 27);

    // strip E02 down to zero
    auto pruned = load_corpus(fixture_root());
    pruned.annotations.erase(
        std::remove_if(pruned.annotations.begin(), pruned.annotations.end(),
                       [](const AnnotationRecord& a) { return a.episode_id == "E02"; }),
        pruned.annotations.end());
    const auto issues = validate_corpus(pruned, 3);
    REQUIRE(issues.size() == 1);
    CHECK(issues[0].episode_id == "E02");
    CHECK(issues[0].annotation_count == 0);
}

TEST_CASE("validate_corpus is order independent") {
    auto corpus = load_corpus(fixture_root());
    auto shuffled = corpus;
    std::reverse(shuffled.annotations.begin(), shuffled.annotations.end());
    std::reverse(shuffled.episodes.begin(), shuffled.episodes.end());
    const auto a = validate_corpus(corpus, 4);
    const auto b = validate_corpus(shuffled, 4);
    CHECK(a.size() == b.size());
}

TEST_CASE("select_balanced: exact cover returns everything") {
    std::vector<EpisodeRecord> episodes;
    int n = 0;
    for (Gender g : {Gender::male, Gender::female}) {
        for (Quality q : {Quality::good, Quality::bad}) {
            for (Stage s : {Stage::preparation, Stage::assembly, Stage::painting}) {
                episodes.push_back(make_episode("E" + std::to_string(++n), g, q, s));
            }
        }
    }
    const auto picked = select_balanced(episodes, 1, 7);
    CHECK(picked.size() == 12);
}

TEST_CASE("select_balanced: missing stage cells are named in the error") {
    std::vector<EpisodeRecord> episodes;
    int n = 0;
    for (Gender g : {Gender::male, Gender::female}) {
        for (Quality q : {Quality::good, Quality::bad}) {
            for (Stage s : {Stage::preparation, Stage::assembly}) {
                episodes.push_back(make_episode("E" + std::to_string(++n), g, q, s));
            }
        }
    }
    CHECK_THROWS_WITH_AS(select_balanced(episodes, 1, 7), doctest::Contains("painting"),
                         DomainError);
}

TEST_CASE("select_balanced: deterministic for a fixed seed on a 24-episode pool") {
    std::vector<EpisodeRecord> episodes;
    int n = 0;
    for (Gender g : {Gender::male, Gender::female}) {
        for (Quality q : {Quality::good, Quality::bad}) {
            for (Stage s : {Stage::preparation, Stage::assembly, Stage::painting}) {
                episodes.push_back(make_episode("E" + std::to_string(++n), g, q, s));
                episodes.push_back(make_episode("E" + std::to_string(++n), g, q, s));
            }
        }
    }
    const auto first = select_balanced(episodes, 1, 123);
    const auto second = select_balanced(episodes, 1, 123);
    CHECK(first == second);
    CHECK(first.size() == 12);
    const auto other_seed = select_balanced(episodes, 1, 124);
    CHECK(other_seed.size() == 12);

    // per-cell counts all equal per_cell
    std::map<std::tuple<Gender, Quality, Stage>, int> counts;
    for (const auto& e : first) counts[{e.gender, e.handover_quality, e.stage}]++;
    for (const auto& [cell, count] : counts) CHECK(count == 1);
    CHECK(counts.size() == 12);

    const auto two = select_balanced(episodes, 2, 9);
    CHECK(two.size() == 24);
}

TEST_CASE("select_balanced: genders are balanced over observed values only") {
    // all-male pool covering quality x stage twice
    std::vector<EpisodeRecord> episodes;
    int n = 0;
    for (Quality q : {Quality::good, Quality::bad}) {
        for (Stage s : {Stage::preparation, Stage::assembly, Stage::painting}) {
            episodes.push_back(make_episode("E" + std::to_string(++n), Gender::male, q, s));
        }
    }
    const auto picked = select_balanced(episodes, 1, 5);
    CHECK(picked.size() == 6);
}
