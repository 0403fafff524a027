#include "ehk/ermodels.hpp"

#include <algorithm>
#include <chrono>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "ehk/errors.hpp"
#include "ehk/fsutil.hpp"
#include "ehk/hash.hpp"
#include "ehk/rng.hpp"

#include <httplib.h>

namespace ehk::ermodels {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

const char* kBase64Chars = "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";

std::string base64_encode(const std::string& bytes) {
    std::string out;
    out.reserve((bytes.size() + 2) / 3 * 4);
    std::size_t i = 0;
    while (i + 2 < bytes.size()) {
        const unsigned v = (static_cast<unsigned char>(bytes[i]) << 16) |
                           (static_cast<unsigned char>(bytes[i + 1]) << 8) |
                           static_cast<unsigned char>(bytes[i + 2]);
        out.push_back(kBase64Chars[(v >> 18) & 63]);
        out.push_back(kBase64Chars[(v >> 12) & 63]);
        out.push_back(kBase64Chars[(v >> 6) & 63]);
        out.push_back(kBase64Chars[v & 63]);
        i += 3;
    }
    const std::size_t rest = bytes.size() - i;
    if (rest == 1) {
        const unsigned v = static_cast<unsigned char>(bytes[i]) << 16;
        out.push_back(kBase64Chars[(v >> 18) & 63]);
        out.push_back(kBase64Chars[(v >> 12) & 63]);
        out += "==";
    } else if (rest == 2) {
        const unsigned v = (static_cast<unsigned char>(bytes[i]) << 16) |
                           (static_cast<unsigned char>(bytes[i + 1]) << 8);
        out.push_back(kBase64Chars[(v >> 18) & 63]);
        out.push_back(kBase64Chars[(v >> 12) & 63]);
        out.push_back(kBase64Chars[(v >> 6) & 63]);
        out.push_back('=');
    }
    return out;
}

} // namespace

std::string to_string(OutputKind k) {
    switch (k) {
        case OutputKind::generative: return "generative";
        case OutputKind::classifier_labels: return "classifier_labels";
        case OutputKind::stacked_labels: return "stacked_labels";
    }
    return "generative";
}

ClassifierParse parse_classifier_output(const std::string& raw_text) {
    if (trim(raw_text).empty()) {
        throw ParseError("parse_classifier_output: empty input");
    }
    ClassifierParse parse;
    const auto comma = raw_text.find(',');
    parse.emotion_label = trim(raw_text.substr(0, comma == std::string::npos ? raw_text.size() : comma));
    if (comma != std::string::npos) {
        std::size_t start = comma + 1;
        while (start <= raw_text.size()) {
            const auto next = raw_text.find(',', start);
            const std::string term =
                trim(raw_text.substr(start, next == std::string::npos ? std::string::npos : next - start));
            if (!term.empty()) parse.objects.push_back(term);
            if (next == std::string::npos) break;
            start = next + 1;
        }
    }
    if (parse.emotion_label.empty()) {
        throw ParseError("parse_classifier_output: empty emotion label in '" + raw_text + "'");
    }
    return parse;
}

std::string format_classifier(const ClassifierParse& parse) {
    std::string out = parse.emotion_label;
    for (const auto& obj : parse.objects) {
        out += ", " + obj;
    }
    return out;
}

ReplayVlmBackend::ReplayVlmBackend(std::string id, const std::filesystem::path& fixture_path)
    : id_(std::move(id)) {
    nlohmann::json parsed;
    try {
        parsed = nlohmann::json::parse(read_file_bytes(fixture_path));
    } catch (const nlohmann::json::exception& e) {
        throw ParseError("replay fixture " + fixture_path.string() + ": " + e.what());
    }
    for (const auto& [episode_id, prompts] : parsed.at("responses").items()) {
        for (const auto& [prompt_id, entry] : prompts.items()) {
            VlmResponse response;
            response.text = entry.at("raw_text").get<std::string>();
            response.latency_s = entry.value("latency_s", 0.0);
            responses_[episode_id][prompt_id] = std::move(response);
        }
    }
}

VlmResponse ReplayVlmBackend::run(const VlmRequest& request) {
    auto ep = responses_.find(request.episode_id);
    if (ep != responses_.end()) {
        auto pr = ep->second.find(request.prompt_id);
        if (pr != ep->second.end()) return pr->second;
    }
    throw TransportError("replay backend '" + id_ + "': no fixture response for episode '" +
                         request.episode_id + "', prompt '" + request.prompt_id + "'");
}

std::vector<std::pair<std::string, std::string>> ReplayVlmBackend::available() const {
    std::vector<std::pair<std::string, std::string>> out;
    for (const auto& [eid, prompts] : responses_) {
        for (const auto& [pid, _] : prompts) out.emplace_back(eid, pid);
    }
    return out;
}

MockVlmBackend::MockVlmBackend(std::string id, Clock* clock, double injected_delay_s)
    : id_(std::move(id)), clock_(clock), injected_delay_s_(injected_delay_s) {}

VlmResponse MockVlmBackend::run(const VlmRequest& request) {
    if (clock_ && injected_delay_s_ > 0.0) {
        clock_->sleep_s(injected_delay_s_);
    }
    static const std::vector<std::string> emotions = {
        "calm engagement",        "focused concentration", "mild surprise",
        "quiet contentment",      "slight frustration",    "visible amusement",
        "curious interest",       "patient attentiveness"};
    const std::uint64_t pick = sha256_seed(id_ + "|" + request.episode_id + "|" + request.prompt_id);
    const std::string& emotion = emotions[pick % emotions.size()];

    VlmResponse response;
    response.latency_s = injected_delay_s_;
    if (request.prompt_id == "vlm_classifier") {
        static const std::vector<std::string> labels = {"happy", "sad",  "angry",   "neutral",
                                                        "surprise", "fear", "disgust"};
        response.text = labels[pick % labels.size()] + ", person, table, box";
    } else if (request.prompt_id == "apology_adapt") {
        response.text = "I am sorry about the wait; seeing your " + emotion +
                        ", here are your items now.";
    } else {
        response.text = "The human shows " + emotion + " while interacting with the robot.";
    }
    return response;
}

RemoteVlmBackend::RemoteVlmBackend(RemoteVlmConfig config, Clock* clock)
    : config_(std::move(config)), clock_(clock) {
    if (config_.endpoint.empty()) {
        throw ParseError("RemoteVlmBackend: endpoint is required");
    }
}

VlmResponse RemoteVlmBackend::run(const VlmRequest& request) {
    nlohmann::json body;
    body["model"] = config_.model;
    body["prompt"] = request.prompt_text;
    if (!request.media_path.empty() && std::filesystem::exists(request.media_path)) {
        body["media_b64"] = base64_encode(read_file_bytes(request.media_path));
    }
    body["media_digest"] = request.media_digest;

    SystemClock fallback_clock;
    Clock& clock = clock_ ? *clock_ : static_cast<Clock&>(fallback_clock);

    std::string last_error;
    double backoff = config_.backoff_initial_s;
    for (int attempt = 0; attempt < config_.max_retries; ++attempt) {
        if (attempt > 0) {
            clock.sleep_s(backoff);
            backoff *= 2.0;
        }
        httplib::Client client(config_.endpoint);
        client.set_connection_timeout(10, 0);
        client.set_read_timeout(120, 0);
        httplib::Headers headers;
        if (const char* key = std::getenv(config_.api_key_env.c_str()); key && *key) {
            headers.emplace("Authorization", std::string("Bearer ") + key);
        }
        const double t0 = clock.now_s();
        auto res = client.Post(config_.path, headers, body.dump(), "application/json");
        const double elapsed = clock.now_s() - t0;
        if (!res) {
            last_error = "transport failure: " + httplib::to_string(res.error());
            continue;
        }
        if (res->status != 200) {
            last_error = "http status " + std::to_string(res->status);
            if (res->status >= 500) continue;
            throw ProtocolError("model endpoint: " + last_error);
        }
        try {
            const auto parsed = nlohmann::json::parse(res->body);
            VlmResponse response;
            response.text = parsed.at("text").get<std::string>();
            response.latency_s = elapsed;
            if (trim(response.text).empty()) {
                throw ProtocolError("model endpoint returned an empty response");
            }
            return response;
        } catch (const nlohmann::json::exception& e) {
            throw ProtocolError(std::string("model endpoint: malformed response: ") + e.what());
        }
    }
    throw TransportError("model endpoint unreachable after " + std::to_string(config_.max_retries) +
                         " attempts: " + last_error);
}

std::string ResponseCache::key(const std::string& model_id, const std::string& prompt_text,
                               const std::string& media_digest) {
    return sha256_hex(model_id + "\x1f" + prompt_text + "\x1f" + media_digest);
}

std::filesystem::path ResponseCache::entry_path(const std::string& model_id,
                                                const std::string& key) const {
    return dir_ / model_id / (key + ".json");
}

std::optional<CachedResponse> ResponseCache::lookup(const std::string& model_id,
                                                    const std::string& key) const {
    last_lookup_corrupt = false;
    const auto path = entry_path(model_id, key);
    std::error_code ec;
    if (!std::filesystem::exists(path, ec)) return std::nullopt;
    try {
        const auto parsed = nlohmann::json::parse(read_file_bytes(path));
        CachedResponse response;
        response.prompt_hash = parsed.at("prompt_hash").get<std::string>();
        response.media_digest = parsed.at("media_digest").get<std::string>();
        response.raw_text = parsed.at("raw_text").get<std::string>();
        response.latency_s = parsed.at("latency_s").get<double>();
        response.timestamp = parsed.value("timestamp", "");
        return response;
    } catch (const std::exception&) {
        last_lookup_corrupt = true; // treated as a miss
        return std::nullopt;
    }
}

void ResponseCache::store(const std::string& model_id, const std::string& key,
                          const CachedResponse& response) const {
    nlohmann::json entry;
    entry["prompt_hash"] = response.prompt_hash;
    entry["media_digest"] = response.media_digest;
    entry["raw_text"] = response.raw_text;
    entry["latency_s"] = response.latency_s;
    entry["timestamp"] = response.timestamp;
    atomic_write_file(entry_path(model_id, key), entry.dump());
}

ModelRunner::ModelRunner(std::shared_ptr<VlmBackend> backend, Clock* clock, ResponseCache* cache,
                         const PromptRegistry* prompts)
    : backend_(std::move(backend)), clock_(clock), cache_(cache), prompts_(prompts) {}

ModelOutput ModelRunner::run_prompt(const std::string& episode_id, const std::string& prompt_id,
                                    const std::map<std::string, std::string>& vars,
                                    const std::string& media_digest,
                                    const std::filesystem::path& media_path, OutputKind kind) {
    const std::string prompt_text = prompts_->get(prompt_id).render(vars);
    const std::string prompt_hash = sha256_hex(prompt_text);
    const std::string cache_key = ResponseCache::key(backend_->id(), prompt_text, media_digest);

    if (cache_) {
        if (auto hit = cache_->lookup(backend_->id(), cache_key)) {
            ModelOutput out;
            out.model_id = backend_->id();
            out.episode_id = episode_id;
            out.raw_text = hit->raw_text;
            out.kind = kind;
            out.latency_s = hit->latency_s;
            return out;
        }
    }

    VlmRequest request;
    request.model_id = backend_->id();
    request.episode_id = episode_id;
    request.prompt_id = prompt_id;
    request.prompt_text = prompt_text;
    request.media_digest = media_digest;
    request.media_path = media_path;

    SystemClock fallback_clock;
    Clock& clock = clock_ ? *clock_ : static_cast<Clock&>(fallback_clock);
    const double t0 = clock.now_s();
    VlmResponse response = backend_->run(request);
    const double elapsed = clock.now_s() - t0;
    ++backend_invocations_;

    if (trim(response.text).empty()) {
        throw ProtocolError("model '" + backend_->id() + "' returned empty text for episode '" +
                            episode_id + "'");
    }
    // Replay fixtures carry their recorded latency; live calls are timed here.
    const double latency = response.latency_s > 0.0 ? response.latency_s : elapsed;

    if (cache_) {
        CachedResponse entry;
        entry.prompt_hash = prompt_hash;
        entry.media_digest = media_digest;
        entry.raw_text = response.text;
        entry.latency_s = latency;
        entry.timestamp = iso8601_utc(clock.wall_epoch_s() + clock.now_s());
        cache_->store(backend_->id(), cache_key, entry);
    }

    ModelOutput out;
    out.model_id = backend_->id();
    out.episode_id = episode_id;
    out.raw_text = response.text;
    out.kind = kind;
    out.latency_s = latency;
    return out;
}

ModelOutput ModelRunner::run_generative(const corpus::Corpus& corpus,
                                        const corpus::EpisodeRecord& episode,
                                        const std::string& prompt_id) {
    const auto media_path = corpus.root / episode.video_path;
    std::string media_digest;
    if (std::filesystem::exists(media_path)) {
        media_digest = sha256_file_hex(media_path);
    } else {
        media_digest = sha256_hex("missing-media:" + episode.episode_id);
    }
    return run_prompt(episode.episode_id, prompt_id, {}, media_digest, media_path,
                      OutputKind::generative);
}

ModelOutput ModelRunner::run_vlm_classifier(const corpus::Corpus& corpus,
                                            const corpus::EpisodeRecord& episode) {
    const auto media_path = corpus.root / episode.video_path;
    std::string media_digest;
    if (std::filesystem::exists(media_path)) {
        media_digest = sha256_file_hex(media_path);
    } else {
        media_digest = sha256_hex("missing-media:" + episode.episode_id);
    }
    return run_prompt(episode.episode_id, "vlm_classifier", {}, media_digest, media_path,
                      OutputKind::classifier_labels);
}

FixturePerception::FixturePerception(const std::filesystem::path& fixture_path) {
    nlohmann::json parsed;
    try {
        parsed = nlohmann::json::parse(read_file_bytes(fixture_path));
    } catch (const nlohmann::json::exception& e) {
        throw ParseError("perception fixture " + fixture_path.string() + ": " + e.what());
    }
    if (parsed.contains("faces")) {
        for (const auto& [eid, scores] : parsed.at("faces").items()) {
            for (const auto& [label, score] : scores.items()) {
                faces_[eid][label] = score.get<double>();
            }
        }
    }
    if (parsed.contains("objects")) {
        for (const auto& [eid, detections] : parsed.at("objects").items()) {
            for (const auto& d : detections) {
                objects_[eid].push_back(
                    {d.at("label").get<std::string>(), d.at("confidence").get<double>()});
            }
        }
    }
}

std::map<std::string, double> FixturePerception::emotion_scores(const std::string& episode_id) {
    auto it = faces_.find(episode_id);
    return it == faces_.end() ? std::map<std::string, double>{} : it->second;
}

std::vector<Detection> FixturePerception::detections(const std::string& episode_id) {
    auto it = objects_.find(episode_id);
    return it == objects_.end() ? std::vector<Detection>{} : it->second;
}

std::string dominant_emotion(const std::map<std::string, double>& scores) {
    std::string best = "unknown";
    double best_score = -1.0;
    // std::map iterates labels in order, so the first maximum is the
    // lexicographically smallest among ties.
    for (const auto& [label, score] : scores) {
        if (score > best_score) {
            best = label;
            best_score = score;
        }
    }
    return best;
}

std::string format_stacked(const std::string& emotion, const std::vector<std::string>& objects) {
    std::string out = emotion;
    for (std::size_t i = 0; i < objects.size(); ++i) {
        out += (i == 0 ? " " : ", ") + objects[i];
    }
    return out;
}

ModelOutput run_stacked_baseline(const corpus::EpisodeRecord& episode, FaceBackend& face,
                                 ObjectBackend& objects, const std::string& model_id,
                                 double confidence_threshold, std::vector<std::string>* warnings) {
    const auto scores = face.emotion_scores(episode.episode_id);
    std::string emotion = dominant_emotion(scores);
    if (scores.empty() && warnings) {
        warnings->push_back("episode " + episode.episode_id + ": no face found, emotion 'unknown'");
    }

    std::vector<std::string> labels;
    for (const auto& d : objects.detections(episode.episode_id)) {
        if (d.confidence < 0.0 || d.confidence > 1.0) {
            throw DomainError("detection confidence outside [0,1] for episode " +
                              episode.episode_id);
        }
        if (d.confidence >= confidence_threshold &&
            std::find(labels.begin(), labels.end(), d.label) == labels.end()) {
            labels.push_back(d.label);
        }
    }

    ModelOutput out;
    out.model_id = model_id;
    out.episode_id = episode.episode_id;
    out.kind = OutputKind::stacked_labels;
    out.raw_text = format_stacked(emotion, labels);
    out.latency_s = 0.0;
    return out;
}

} // namespace ehk::ermodels
