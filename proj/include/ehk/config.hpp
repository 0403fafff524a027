#pragma once
// Run configuration: one JSON file plus env vars for secrets. Flags override
// fields; every reported number must be reconstructible from the file.

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "ehk/embed.hpp"
#include "ehk/textnorm.hpp"

namespace ehk::cfg {

struct ModelBackendConfig {
    std::string kind; // "replay" | "mock" | "remote" | "stacked"
    std::filesystem::path fixture;            // replay fixture
    std::filesystem::path perception_fixture; // stacked: faces + objects
    std::string endpoint;                     // remote
    double injected_delay_s = 0.0;            // mock
};

struct EmbedConfig {
    std::string backend = "mock"; // "mock" | "remote"
    int dim = 64;
    std::string model = "BAAI/bge-large-en-v1.5";
    std::string endpoint;
    std::string api_key_env = "EHK_EMBED_API_KEY";
    bool cache = true;
    int max_retries = 3;
};

struct RunConfig {
    std::filesystem::path config_path; // where this config was loaded from
    std::filesystem::path corpus_root;
    std::filesystem::path output_dir;
    std::filesystem::path cache_dir;
    std::filesystem::path session_root;
    std::filesystem::path data_dir; // lexicon and prompt assets
    std::uint64_t seed = 0;
    int concurrency = 4;
    embed::AggregationMode aggregation_mode = embed::AggregationMode::mean_similarity;
    textnorm::NormConfig norm;
    bool sentiment_on_normalized = false;
    int max_annotations_per_episode = 0;
    EmbedConfig embed;
    std::map<std::string, ModelBackendConfig> models;
    std::vector<std::string> study1_model_ids;
    int min_annotations = 3;
    std::string ablation_classifier_model;
    std::string ablation_baseline_model;
    std::string session_er_model;
    std::string session_apology_model;
    double session_fps = 30.0;
    bool clip_from_message_end = false;

    // sha256 of the canonical JSON echo; used as the deterministic run id.
    std::string config_hash() const;
    std::string run_id() const { return "run-" + config_hash().substr(0, 12); }
    // canonical JSON echo of every field (what run.json records)
    std::string echo_json() const;
};

// Parses the file; relative paths resolve against the config file's
// directory. Throws LoadError/ParseError. A seed is required: reproducing a
// run must never depend on the wall clock.
RunConfig load_config(const std::filesystem::path& path);

// Checks referenced paths exist (corpus root, fixtures, data dir).
// Returns human-readable problems; empty means valid.
std::vector<std::string> validate_config(const RunConfig& config);

} // namespace ehk::cfg
