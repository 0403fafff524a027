#include <doctest.h>

#include <filesystem>
#include <thread>

#include "ehk/clock.hpp"
#include "ehk/corpus.hpp"
#include "ehk/ermodels.hpp"
#include "ehk/errors.hpp"
#include "ehk/fsutil.hpp"
#include "ehk/hash.hpp"
#include "ehk/rng.hpp"

using namespace ehk;
using namespace ehk::ermodels;

namespace {

std::filesystem::path fixture_root() {
    return std::filesystem::path(EHK_SOURCE_DIR) / "fixtures";
}

std::filesystem::path temp_dir(const char* tag) {
    auto dir = std::filesystem::temp_directory_path() /
               (std::string("ehk_ermodels_") + tag + "_" + std::to_string(::getpid()));
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

corpus::Corpus fixture_corpus() {
    return corpus::load_corpus(fixture_root() / "corpus6");
}

} // namespace

TEST_CASE("prompt registry carries the four canonical prompts verbatim") {
    const auto& registry = PromptRegistry::builtin();
    CHECK(registry.get("er_study1").text ==
          "Please describe what emotions the human is expressing with 1\xE2\x80\x93"
          "2 sentences.");
    CHECK(registry.get("er_study2").text ==
          "Please describe what emotions the human is expressing in 1-2 sentences.");
    const auto& classifier = registry.get("vlm_classifier").text;
    CHECK(classifier.find("[happy, sad, angry, neutral, surprise, fear, disgust]") !=
          std::string::npos);
    CHECK(classifier.find("Format your answer ONLY as: emotion label, object1, object2, "
                          "object3, object4") != std::string::npos);
    CHECK(registry.get("apology_adapt").text.find("{er_output}") != std::string::npos);
    CHECK_THROWS_AS(registry.get("nope"), ParseError);
}

TEST_CASE("prompt asset files stay in sync with the builtin registry") {
    const auto dir = std::filesystem::path(EHK_SOURCE_DIR) / "data" / "prompts";
    for (const auto& id : PromptRegistry::builtin().ids()) {
        CAPTURE(id);
        CHECK(read_file_bytes(dir / (id + ".txt")) == PromptRegistry::builtin().get(id).text);
    }
}

TEST_CASE("prompt rendering binds placeholders and rejects unbound ones") {
    const auto& tpl = PromptRegistry::builtin().get("apology_adapt");
    const auto rendered = tpl.render({{"er_output", "joy and amusement"}});
    CHECK(rendered ==
          "Adapt the current apology to better match the detected emotional context in "
          "1-2 sentences. Current apology: Apologies for the delay; here are your items. "
          "Context: joy and amusement");
    CHECK_THROWS_AS(tpl.render({}), ParseError);
}

TEST_CASE("parse_classifier_output: canonical, no-comma and messy inputs") {
    const auto p1 = parse_classifier_output("neutral, person, chair, box");
    CHECK(p1.emotion_label == "neutral");
    CHECK(p1.objects == std::vector<std::string>{"person", "chair", "box"});

    const auto p2 = parse_classifier_output("happy");
    CHECK(p2.emotion_label == "happy");
    CHECK(p2.objects.empty());

    const auto p3 = parse_classifier_output(" Sad ,  cup , , table ");
    CHECK(p3.emotion_label == "Sad");
    CHECK(p3.objects == std::vector<std::string>{"cup", "table"});

    CHECK_THROWS_AS(parse_classifier_output(""), ParseError);
    CHECK_THROWS_AS(parse_classifier_output("   "), ParseError);
}

TEST_CASE("parse(format) round-trips for comma-free parses") {
    Rng rng(6060);
    const std::vector<std::string> emotions = {"happy", "sad",     "angry", "neutral",
                                               "surprise", "fear", "disgust"};
    const std::vector<std::string> objects = {"person", "chair", "box",   "table",
                                              "scissors", "cup", "brush", "bag"};
    for (int i = 0; i < 1000; ++i) {
        ClassifierParse parse;
        parse.emotion_label = emotions[rng.next_below(emotions.size())];
        const auto n_obj = rng.next_below(5);
        for (std::uint64_t j = 0; j < n_obj; ++j) {
            parse.objects.push_back(objects[rng.next_below(objects.size())]);
        }
        CHECK(parse_classifier_output(format_classifier(parse)) == parse);
    }
}

TEST_CASE("replay backend returns the pinned fixture texts") {
    const auto corpus = fixture_corpus();
    auto backend = std::make_shared<ReplayVlmBackend>(
        "gemini-2.5-flash", fixture_root() / "replay" / "gemini-2.5-flash.json");
    ModelRunner runner(backend);
    const auto out = runner.run_generative(corpus, *corpus.find_episode("E01"), "er_study1");
    CHECK(out.raw_text.rfind("The human expresses a calm and pleasant demeanor", 0) == 0);
    CHECK(out.kind == OutputKind::generative);
    CHECK(out.model_id == "gemini-2.5-flash");
    CHECK(out.latency_s == 5.9);

    const auto cls = runner.run_vlm_classifier(corpus, *corpus.find_episode("E01"));
    CHECK(cls.raw_text == "neutral, person, chair, box");
    CHECK(cls.kind == OutputKind::classifier_labels);

    CHECK_THROWS_AS(runner.run_generative(corpus, *corpus.find_episode("E01"), "er_study2"),
                    TransportError);
}

TEST_CASE("replay runs are byte-deterministic") {
    const auto corpus = fixture_corpus();
    auto backend = std::make_shared<ReplayVlmBackend>(
        "gemini-2.5-pro", fixture_root() / "replay" / "gemini-2.5-pro.json");
    ModelRunner r1(backend), r2(backend);
    for (const auto& episode : corpus.episodes) {
        const auto a = r1.run_generative(corpus, episode, "er_study1");
        const auto b = r2.run_generative(corpus, episode, "er_study1");
        CHECK(a.raw_text == b.raw_text);
        CHECK(a.latency_s == b.latency_s);
    }
}

TEST_CASE("response cache: second run hits cache with zero backend invocations") {
    const auto corpus = fixture_corpus();
    const auto dir = temp_dir("cache");
    ResponseCache cache(dir);

    struct CountingBackend final : VlmBackend {
        int calls = 0;
        std::string id() const override { return "counting"; }
        VlmResponse run(const VlmRequest&) override {
            ++calls;
            return {"The human looks focused and calm.", 1.5};
        }
    };
    auto backend = std::make_shared<CountingBackend>();
    ModelRunner runner(backend, nullptr, &cache);
    const auto& episode = *corpus.find_episode("E01");
    const auto first = runner.run_generative(corpus, episode, "er_study1");
    const auto second = runner.run_generative(corpus, episode, "er_study1");
    CHECK(backend->calls == 1);
    CHECK(first.raw_text == second.raw_text);
    CHECK(first.latency_s == second.latency_s);
    std::filesystem::remove_all(dir);
}

TEST_CASE("cache store/lookup round-trip, absent keys, corrupt entries") {
    const auto dir = temp_dir("roundtrip");
    ResponseCache cache(dir);
    const auto key = ResponseCache::key("m1", "prompt text", "digest");
    CHECK_FALSE(cache.lookup("m1", key).has_value());

    CachedResponse entry;
    entry.prompt_hash = sha256_hex("prompt text");
    entry.media_digest = "digest";
    entry.raw_text = "stored bytes \xE2\x80\x94 exactly";
    entry.latency_s = 2.25;
    entry.timestamp = "2026-01-01T00:00:00.000Z";
    cache.store("m1", key, entry);
    const auto back = cache.lookup("m1", key);
    REQUIRE(back.has_value());
    CHECK(back->raw_text == entry.raw_text);
    CHECK(back->latency_s == entry.latency_s);
    CHECK_FALSE(cache.last_lookup_corrupt);

    atomic_write_file(cache.entry_path("m1", key), "definitely not json");
    CHECK_FALSE(cache.lookup("m1", key).has_value());
    CHECK(cache.last_lookup_corrupt);
    std::filesystem::remove_all(dir);
}

TEST_CASE("concurrent writers to one cache key leave one intact winner") {
    const auto dir = temp_dir("race");
    ResponseCache cache(dir);
    const auto key = ResponseCache::key("m", "p", "d");
    auto writer = [&](const std::string& text) {
        for (int i = 0; i < 100; ++i) {
            CachedResponse entry;
            entry.prompt_hash = "ph";
            entry.media_digest = "d";
            entry.raw_text = text;
            entry.latency_s = 1.0;
            cache.store("m", key, entry);
        }
    };
    std::thread t1(writer, std::string(4000, 'x'));
    std::thread t2(writer, std::string(4000, 'y'));
    t1.join();
    t2.join();
    const auto final = cache.lookup("m", key);
    REQUIRE(final.has_value()); // never truncated
    CHECK(final->raw_text.size() == 4000);
    std::filesystem::remove_all(dir);
}

TEST_CASE("mock backend with injected delay reports it as latency via the clock") {
    ManualClock clock;
    auto backend = std::make_shared<MockVlmBackend>("mock-vlm", &clock, 6.82);
    ModelRunner runner(backend, &clock);
    const auto corpus = fixture_corpus();
    const auto out = runner.run_generative(corpus, *corpus.find_episode("E01"), "er_study1");
    CHECK(out.latency_s == doctest::Approx(6.82).epsilon(0.05 / 6.82));
    CHECK_FALSE(out.raw_text.empty());
}

TEST_CASE("dominant emotion: highest score, ties break lexicographically") {
    CHECK(dominant_emotion({{"happy", 0.6}, {"neutral", 0.3}}) == "happy");
    CHECK(dominant_emotion({{"surprise", 0.4}, {"angry", 0.4}}) == "angry");
    CHECK(dominant_emotion({}) == "unknown");
}

TEST_CASE("stacked baseline: threshold, dedup and Table-style formatting") {
    const auto corpus = fixture_corpus();
    FixturePerception perception(fixture_root() / "replay" / "stacked-perception.json");
    const auto out =
        run_stacked_baseline(*corpus.find_episode("E04"), perception, perception);
    CHECK(out.raw_text == "neutral person, scissors, chair");
    CHECK(out.kind == OutputKind::stacked_labels);

    // E06 has a duplicate person detection at 0.82: kept once
    const auto e06 = run_stacked_baseline(*corpus.find_episode("E06"), perception, perception);
    CHECK(e06.raw_text == "surprise person, bag, table");
}

TEST_CASE("stacked baseline: all detections below threshold leave emotion only") {
    struct Face final : FaceBackend {
        std::map<std::string, double> emotion_scores(const std::string&) override {
            return {{"neutral", 0.9}};
        }
    } face;
    struct Objects final : ObjectBackend {
        std::vector<Detection> detections(const std::string&) override {
            return {{"cup", 0.4}, {"table", 0.79}};
        }
    } objects;
    corpus::EpisodeRecord episode;
    episode.episode_id = "EX";
    const auto out = run_stacked_baseline(episode, face, objects);
    CHECK(out.raw_text == "neutral");
}

TEST_CASE("stacked baseline: threshold is inclusive at 0.80") {
    struct Face final : FaceBackend {
        std::map<std::string, double> emotion_scores(const std::string&) override {
            return {{"neutral", 0.9}};
        }
    } face;
    struct Objects final : ObjectBackend {
        std::vector<Detection> detections(const std::string&) override {
            return {{"person", 0.80}};
        }
    } objects;
    corpus::EpisodeRecord episode;
    episode.episode_id = "EX";
    CHECK(run_stacked_baseline(episode, face, objects).raw_text == "neutral person");
}

TEST_CASE("stacked baseline: no face found warns and yields 'unknown'") {
    struct Face final : FaceBackend {
        std::map<std::string, double> emotion_scores(const std::string&) override { return {}; }
    } face;
    struct Objects final : ObjectBackend {
        std::vector<Detection> detections(const std::string&) override {
            return {{"person", 0.9}};
        }
    } objects;
    corpus::EpisodeRecord episode;
    episode.episode_id = "EX";
    std::vector<std::string> warnings;
    const auto out = run_stacked_baseline(episode, face, objects, "stacked-cnn", 0.8, &warnings);
    CHECK(out.raw_text == "unknown person");
    REQUIRE(warnings.size() == 1);
    CHECK(warnings[0].find("no face") != std::string::npos);
}

TEST_CASE("baseline output never contains objects below the threshold") {
    Rng rng(808);
    struct Face final : FaceBackend {
        std::map<std::string, double> emotion_scores(const std::string&) override {
            return {{"neutral", 1.0}};
        }
    } face;
    for (int trial = 0; trial < 50; ++trial) {
        struct Objects final : ObjectBackend {
            std::vector<Detection> dets;
            std::vector<Detection> detections(const std::string&) override { return dets; }
        } objects;
        std::vector<std::string> low_labels;
        for (int i = 0; i < 6; ++i) {
            const double conf = rng.next_unit();
            const std::string label = "obj" + std::to_string(i);
            objects.dets.push_back({label, conf});
            if (conf < 0.8) low_labels.push_back(label);
        }
        corpus::EpisodeRecord episode;
        episode.episode_id = "EX";
        const auto out = run_stacked_baseline(episode, face, objects);
        for (const auto& label : low_labels) {
            CHECK(out.raw_text.find(label) == std::string::npos);
        }
    }
}

TEST_CASE("remote vlm backend fails with TransportError when unreachable") {
    RemoteVlmConfig config;
    config.model = "remote-x";
    config.endpoint = "http://127.0.0.1:1";
    config.max_retries = 2;
    config.backoff_initial_s = 0.01;
    ManualClock clock;
    RemoteVlmBackend backend(config, &clock);
    VlmRequest request;
    request.model_id = "remote-x";
    request.episode_id = "E01";
    request.prompt_id = "er_study1";
    request.prompt_text = "text";
    CHECK_THROWS_AS(backend.run(request), TransportError);
}
