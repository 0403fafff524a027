#include "ehk/embed.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <condition_variable>
#include <cstdlib>
#include <mutex>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "ehk/errors.hpp"
#include "ehk/fsutil.hpp"
#include "ehk/hash.hpp"
#include "ehk/rng.hpp"

// keep the heavy header out of embed.hpp
#define CPPHTTPLIB_NO_EXCEPTIONS 0
#include <httplib.h>

namespace ehk::embed {

EmbeddingVector embed(const textnorm::NormalizedText& text, EmbeddingBackend& backend) {
    Vector v = backend.embed_text(text.joined);
    if (v.size() != backend.dim()) {
        std::ostringstream msg;
        msg << "backend '" << backend.backend_id() << "' returned dimension " << v.size()
            << ", declared " << backend.dim();
        throw ProtocolError(msg.str());
    }
    if (backend.normalizes()) {
        const double norm = std::sqrt(v.dot(v));
        if (std::fabs(norm - 1.0) > 1e-6) {
            std::ostringstream msg;
            msg << "backend '" << backend.backend_id()
                << "' declares unit normalization but returned norm " << norm;
            throw ProtocolError(msg.str());
        }
    }
    return {std::move(v), backend.dim(), backend.backend_id()};
}

double cosine(const Vector& a, const Vector& b) {
    if (a.size() != b.size()) {
        throw DomainError("cosine: dimension mismatch (" + std::to_string(a.size()) + " vs " +
                          std::to_string(b.size()) + ")");
    }
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (Eigen::Index i = 0; i < a.size(); ++i) {
        dot += a(i) * b(i);
        na += a(i) * a(i);
        nb += b(i) * b(i);
    }
    if (na == 0.0 || nb == 0.0) {
        throw DomainError("cosine: zero vector");
    }
    const double c = dot / (std::sqrt(na) * std::sqrt(nb));
    return std::clamp(c, -1.0, 1.0);
}

double cosine(const EmbeddingVector& a, const EmbeddingVector& b) {
    return cosine(a.values, b.values);
}

AggregationMode aggregation_mode_from_string(const std::string& s) {
    if (s == "mean_similarity") return AggregationMode::mean_similarity;
    if (s == "mean_embedding") return AggregationMode::mean_embedding;
    throw ParseError("unknown aggregation mode: " + s);
}

std::string to_string(AggregationMode mode) {
    return mode == AggregationMode::mean_similarity ? "mean_similarity" : "mean_embedding";
}

double episode_similarity(const textnorm::NormalizedText& model_text,
                          const std::vector<textnorm::NormalizedText>& annotations,
                          EmbeddingBackend& backend,
                          AggregationMode mode) {
    if (annotations.empty()) {
        throw DomainError("episode_similarity: empty annotation list");
    }
    const EmbeddingVector model_vec = embed(model_text, backend);
    if (mode == AggregationMode::mean_similarity) {
        double sum = 0.0;
        for (const auto& ann : annotations) {
            sum += cosine(model_vec, embed(ann, backend));
        }
        return sum / static_cast<double>(annotations.size());
    }
    // explicit loops with a fixed accumulation order so independent
    // recomputations agree bit for bit
    Vector mean = Vector::Zero(backend.dim());
    for (const auto& ann : annotations) {
        const Vector v = embed(ann, backend).values;
        for (Eigen::Index i = 0; i < mean.size(); ++i) mean(i) += v(i);
    }
    double norm_sq = 0.0;
    for (Eigen::Index i = 0; i < mean.size(); ++i) {
        mean(i) /= static_cast<double>(annotations.size());
        norm_sq += mean(i) * mean(i);
    }
    if (norm_sq == 0.0) {
        throw DomainError("episode_similarity: annotation mean embedding is zero");
    }
    const double norm = std::sqrt(norm_sq);
    for (Eigen::Index i = 0; i < mean.size(); ++i) mean(i) /= norm;
    return cosine(model_vec.values, mean);
}

MockBackend::MockBackend(int dim, std::string id) : dim_(dim), id_(std::move(id)) {
    if (dim_ < 1) throw DomainError("MockBackend: dim must be positive");
}

Vector MockBackend::token_vector(const std::string& token) const {
    Rng rng(sha256_seed(token));
    Vector v(dim_);
    for (int i = 0; i < dim_; ++i) v(i) = rng.next_normal();
    v /= std::sqrt(v.dot(v));
    return v;
}

Vector MockBackend::embed_text(const std::string& joined) {
    Vector sum = Vector::Zero(dim_);
    std::istringstream stream(joined);
    std::string token;
    bool any = false;
    while (stream >> token) {
        sum += token_vector(token);
        any = true;
    }
    if (!any) {
        // empty text embeds as the sentinel token vector so downstream
        // cosine stays defined
        return token_vector("");
    }
    const double norm = std::sqrt(sum.dot(sum));
    if (norm == 0.0) return token_vector("");
    return sum / norm;
}

std::filesystem::path EmbeddingCache::entry_path(const std::string& backend_id,
                                                 const std::string& text_hash) const {
    return dir_ / backend_id / (text_hash + ".json");
}

std::optional<Vector> EmbeddingCache::lookup(const std::string& backend_id,
                                             const std::string& text_hash,
                                             int expected_dim) const {
    const auto path = entry_path(backend_id, text_hash);
    std::error_code ec;
    if (!std::filesystem::exists(path, ec)) return std::nullopt;
    try {
        const auto parsed = nlohmann::json::parse(read_file_bytes(path));
        if (parsed.at("text_hash").get<std::string>() != text_hash) return std::nullopt;
        const auto dim = parsed.at("dim").get<int>();
        if (dim != expected_dim) return std::nullopt;
        const auto& vals = parsed.at("values");
        if (static_cast<int>(vals.size()) != dim) return std::nullopt;
        Vector v(dim);
        for (int i = 0; i < dim; ++i) v(i) = vals[static_cast<std::size_t>(i)].get<double>();
        return v;
    } catch (const std::exception&) {
        return std::nullopt; // corrupt entry reads as a miss
    }
}

void EmbeddingCache::store(const std::string& backend_id, const std::string& text_hash,
                           const Vector& values) const {
    nlohmann::json entry;
    entry["text_hash"] = text_hash;
    entry["dim"] = static_cast<int>(values.size());
    auto arr = nlohmann::json::array();
    for (Eigen::Index i = 0; i < values.size(); ++i) arr.push_back(values(i));
    entry["values"] = std::move(arr);
    atomic_write_file(entry_path(backend_id, text_hash), entry.dump());
}

Vector CachingBackend::embed_text(const std::string& joined) {
    const std::string text_hash = sha256_hex(joined);
    if (auto hit = cache_.lookup(inner_->backend_id(), text_hash, inner_->dim())) {
        return *hit;
    }
    Vector v = inner_->embed_text(joined);
    cache_.store(inner_->backend_id(), text_hash, v);
    return v;
}

struct RemoteBackend::Impl {
    std::mutex mutex;
    std::condition_variable cv;
    int in_flight = 0;
};

RemoteBackend::RemoteBackend(RemoteBackendConfig config)
    : config_(std::move(config)), impl_(std::make_unique<Impl>()) {
    if (config_.endpoint.empty()) {
        throw ParseError("RemoteBackend: endpoint is required");
    }
}

RemoteBackend::~RemoteBackend() = default;

Vector RemoteBackend::embed_text(const std::string& joined) {
    {
        std::unique_lock lock(impl_->mutex);
        impl_->cv.wait(lock, [&] { return impl_->in_flight < config_.max_in_flight; });
        ++impl_->in_flight;
    }
    struct Release {
        Impl* impl;
        ~Release() {
            std::lock_guard lock(impl->mutex);
            --impl->in_flight;
            impl->cv.notify_one();
        }
    } release{impl_.get()};

    nlohmann::json body;
    body["model"] = config_.model;
    body["input"] = nlohmann::json::array({joined});

    std::string last_error;
    double backoff = config_.backoff_initial_s;
    for (int attempt = 0; attempt < config_.max_retries; ++attempt) {
        if (attempt > 0) {
            std::this_thread::sleep_for(std::chrono::duration<double>(backoff));
            backoff *= 2.0;
        }
        httplib::Client client(config_.endpoint);
        client.set_connection_timeout(10, 0);
        client.set_read_timeout(60, 0);
        httplib::Headers headers;
        if (const char* key = std::getenv(config_.api_key_env.c_str()); key && *key) {
            headers.emplace("Authorization", std::string("Bearer ") + key);
        }
        auto res = client.Post(config_.path, headers, body.dump(), "application/json");
        if (!res) {
            last_error = "transport failure: " + httplib::to_string(res.error());
            continue;
        }
        if (res->status != 200) {
            last_error = "http status " + std::to_string(res->status);
            if (res->status >= 500) continue; // retry server errors only
            throw ProtocolError("embedding endpoint: " + last_error);
        }
        try {
            const auto parsed = nlohmann::json::parse(res->body);
            const auto& emb = parsed.at("data").at(0).at("embedding");
            Vector v(static_cast<Eigen::Index>(emb.size()));
            for (std::size_t i = 0; i < emb.size(); ++i) {
                v(static_cast<Eigen::Index>(i)) = emb[i].get<double>();
            }
            if (v.size() != config_.dim) {
                throw ProtocolError("embedding endpoint returned dimension " +
                                    std::to_string(v.size()) + ", expected " +
                                    std::to_string(config_.dim));
            }
            return v;
        } catch (const nlohmann::json::exception& e) {
            throw ProtocolError(std::string("embedding endpoint: malformed response: ") + e.what());
        }
    }
    throw TransportError("embedding endpoint unreachable after " +
                         std::to_string(config_.max_retries) + " attempts: " + last_error);
}

} // namespace ehk::embed
