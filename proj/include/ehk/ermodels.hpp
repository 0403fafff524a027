#pragma once
// Emotion-recognition model adapters: generative multimodal backends
// (remote / replay / mock), the label-constrained classifier variant, the
// stacked face+object baseline, and disk response caching.

#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "ehk/clock.hpp"
#include "ehk/corpus.hpp"
#include "ehk/prompts.hpp"

namespace ehk::ermodels {

enum class OutputKind { generative, classifier_labels, stacked_labels };

std::string to_string(OutputKind k);

struct ModelOutput {
    std::string model_id;
    std::string episode_id;
    std::string raw_text;
    OutputKind kind = OutputKind::generative;
    double latency_s = 0.0;
};

struct ClassifierParse {
    std::string emotion_label;
    std::vector<std::string> objects; // comma-free, whitespace-trimmed

    bool operator==(const ClassifierParse&) const = default;
};

struct Detection {
    std::string label;
    double confidence = 0.0; // in [0, 1]
};

// emotion label = trimmed text before the first comma; objects = trimmed
// nonempty terms after it. No comma means no objects. Empty input is a
// parse error.
ClassifierParse parse_classifier_output(const std::string& raw_text);

// "emotion, obj1, obj2" (the classifier answer format).
std::string format_classifier(const ClassifierParse& parse);

struct VlmRequest {
    std::string model_id;
    std::string episode_id;
    std::string prompt_id;
    std::string prompt_text;
    std::string media_digest; // sha256 of the clip/video bytes
    std::filesystem::path media_path;
};

struct VlmResponse {
    std::string text;
    double latency_s = 0.0;
};

class VlmBackend {
public:
    virtual ~VlmBackend() = default;
    virtual std::string id() const = 0;
    virtual VlmResponse run(const VlmRequest& request) = 0;
};

// Replays responses from a fixture file:
// {"responses": {"<episode_id>": {"<prompt_id>": {"raw_text", "latency_s"}}}}
class ReplayVlmBackend final : public VlmBackend {
public:
    ReplayVlmBackend(std::string id, const std::filesystem::path& fixture_path);
    std::string id() const override { return id_; }
    VlmResponse run(const VlmRequest& request) override;
    std::vector<std::pair<std::string, std::string>> available() const;

private:
    std::string id_;
    std::map<std::string, std::map<std::string, VlmResponse>> responses_;
};

// Synthesizes deterministic text from (episode, prompt). injected_delay_s is
// observed through the clock, so manual clocks make latency exact.
class MockVlmBackend final : public VlmBackend {
public:
    explicit MockVlmBackend(std::string id = "mock-vlm", Clock* clock = nullptr,
                            double injected_delay_s = 0.0);
    std::string id() const override { return id_; }
    VlmResponse run(const VlmRequest& request) override;

private:
    std::string id_;
    Clock* clock_;
    double injected_delay_s_;
};

struct RemoteVlmConfig {
    std::string model;
    std::string endpoint;
    std::string path = "/generate";
    std::string api_key_env = "EHK_VLM_API_KEY";
    int max_retries = 3;
    double backoff_initial_s = 0.5;
};

// POST {"model", "prompt", "media_b64"} -> {"text"}. Empty model text is a
// model error.
class RemoteVlmBackend final : public VlmBackend {
public:
    RemoteVlmBackend(RemoteVlmConfig config, Clock* clock = nullptr);
    std::string id() const override { return config_.model; }
    VlmResponse run(const VlmRequest& request) override;

private:
    RemoteVlmConfig config_;
    Clock* clock_;
};

struct CachedResponse {
    std::string prompt_hash;
    std::string media_digest;
    std::string raw_text;
    double latency_s = 0.0;
    std::string timestamp;
};

// Disk cache under <dir>/<model_id>/<sha256(model_id|prompt|media)>.json.
// Atomic writes; corrupt entries read as misses with a warning flag.
class ResponseCache {
public:
    explicit ResponseCache(std::filesystem::path dir) : dir_(std::move(dir)) {}

    static std::string key(const std::string& model_id, const std::string& prompt_text,
                           const std::string& media_digest);

    std::optional<CachedResponse> lookup(const std::string& model_id, const std::string& key) const;
    void store(const std::string& model_id, const std::string& key,
               const CachedResponse& response) const;
    std::filesystem::path entry_path(const std::string& model_id, const std::string& key) const;
    const std::filesystem::path& dir() const { return dir_; }

    // Set when the last lookup saw a corrupt entry.
    mutable bool last_lookup_corrupt = false;

private:
    std::filesystem::path dir_;
};

// Runs prompts against a backend with optional caching. Media digests come
// from hashing the episode's video file under the corpus root.
class ModelRunner {
public:
    ModelRunner(std::shared_ptr<VlmBackend> backend, Clock* clock = nullptr,
                ResponseCache* cache = nullptr,
                const PromptRegistry* prompts = &PromptRegistry::builtin());

    ModelOutput run_generative(const corpus::Corpus& corpus, const corpus::EpisodeRecord& episode,
                               const std::string& prompt_id);
    ModelOutput run_vlm_classifier(const corpus::Corpus& corpus,
                                   const corpus::EpisodeRecord& episode);

    // Direct invocation with an explicit media identity (sessions use this
    // for clips that never touch the corpus).
    ModelOutput run_prompt(const std::string& episode_id, const std::string& prompt_id,
                           const std::map<std::string, std::string>& vars,
                           const std::string& media_digest,
                           const std::filesystem::path& media_path, OutputKind kind);

    int backend_invocations() const { return backend_invocations_; }

private:
    std::shared_ptr<VlmBackend> backend_;
    Clock* clock_;
    ResponseCache* cache_;
    const PromptRegistry* prompts_;
    int backend_invocations_ = 0;
};

// Perception backends for the stacked baseline.
class FaceBackend {
public:
    virtual ~FaceBackend() = default;
    // emotion label -> score; empty map when no face was found.
    virtual std::map<std::string, double> emotion_scores(const std::string& episode_id) = 0;
};

class ObjectBackend {
public:
    virtual ~ObjectBackend() = default;
    virtual std::vector<Detection> detections(const std::string& episode_id) = 0;
};

// Fixture-file implementations:
// {"faces": {"<episode_id>": {"neutral": 0.8, ...}},
//  "objects": {"<episode_id>": [{"label": "person", "confidence": 0.95}, ...]}}
class FixturePerception final : public FaceBackend, public ObjectBackend {
public:
    explicit FixturePerception(const std::filesystem::path& fixture_path);
    std::map<std::string, double> emotion_scores(const std::string& episode_id) override;
    std::vector<Detection> detections(const std::string& episode_id) override;

private:
    std::map<std::string, std::map<std::string, double>> faces_;
    std::map<std::string, std::vector<Detection>> objects_;
};

// Highest score wins; exact ties break to the lexicographically smallest
// label. Empty scores give "unknown".
std::string dominant_emotion(const std::map<std::string, double>& scores);

// Objects at confidence >= threshold (inclusive), deduplicated keeping first
// occurrence, formatted "<emotion> <obj1>, <obj2>". A warning is appended to
// *warnings when no face was found.
ModelOutput run_stacked_baseline(const corpus::EpisodeRecord& episode, FaceBackend& face,
                                 ObjectBackend& objects, const std::string& model_id = "stacked-cnn",
                                 double confidence_threshold = 0.8,
                                 std::vector<std::string>* warnings = nullptr);

std::string format_stacked(const std::string& emotion, const std::vector<std::string>& objects);

} // namespace ehk::ermodels
