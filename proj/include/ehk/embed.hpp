#pragma once
// Sentence embeddings behind a pluggable backend interface, cosine
// similarity, and per-episode similarity aggregation.

#include <Eigen/Dense>

#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "ehk/textnorm.hpp"

namespace ehk::embed {

using Vector = Eigen::VectorXd;

struct EmbeddingVector {
    Vector values;
    int dim = 0;
    std::string backend_id;
};

class EmbeddingBackend {
public:
    virtual ~EmbeddingBackend() = default;
    virtual std::string backend_id() const = 0;
    virtual int dim() const = 0;
    virtual bool normalizes() const = 0;
    // Embeds joined normalized text. May throw TransportError/ProtocolError.
    virtual Vector embed_text(const std::string& joined) = 0;
};

// Embeds a normalized text and checks the backend's declared contract
// (dimension, unit norm when declared).
EmbeddingVector embed(const textnorm::NormalizedText& text, EmbeddingBackend& backend);

// dot(a,b) / (|a||b|), clamped to [-1, 1]. Plain loops with a fixed
// summation order so independent recomputations agree bit for bit.
double cosine(const Vector& a, const Vector& b);
double cosine(const EmbeddingVector& a, const EmbeddingVector& b);

enum class AggregationMode { mean_similarity, mean_embedding };

AggregationMode aggregation_mode_from_string(const std::string& s);
std::string to_string(AggregationMode mode);

// mean_similarity: arithmetic mean of cosine(model, each annotation).
// mean_embedding: cosine(model, renormalized mean of annotation vectors).
double episode_similarity(const textnorm::NormalizedText& model_text,
                          const std::vector<textnorm::NormalizedText>& annotations,
                          EmbeddingBackend& backend,
                          AggregationMode mode);

// Deterministic offline backend: every token hashes to a pseudo-random unit
// vector; a text embeds as the L2-normalized sum of its token vectors, so
// shared tokens raise cosine.
class MockBackend final : public EmbeddingBackend {
public:
    explicit MockBackend(int dim = 64, std::string id = "mock");
    std::string backend_id() const override { return id_; }
    int dim() const override { return dim_; }
    bool normalizes() const override { return true; }
    Vector embed_text(const std::string& joined) override;

private:
    Vector token_vector(const std::string& token) const;
    int dim_;
    std::string id_;
};

// Disk cache: <dir>/<backend_id>/<sha256(text)>.json holding
// {text_hash, dim, values}. Writes are atomic; corrupt entries read as
// misses.
class EmbeddingCache {
public:
    explicit EmbeddingCache(std::filesystem::path dir) : dir_(std::move(dir)) {}
    std::optional<Vector> lookup(const std::string& backend_id, const std::string& text_hash,
                                 int expected_dim) const;
    void store(const std::string& backend_id, const std::string& text_hash,
               const Vector& values) const;
    std::filesystem::path entry_path(const std::string& backend_id,
                                     const std::string& text_hash) const;

private:
    std::filesystem::path dir_;
};

// Wraps any backend with the disk cache.
class CachingBackend final : public EmbeddingBackend {
public:
    CachingBackend(std::shared_ptr<EmbeddingBackend> inner, EmbeddingCache cache)
        : inner_(std::move(inner)), cache_(std::move(cache)) {}
    std::string backend_id() const override { return inner_->backend_id(); }
    int dim() const override { return inner_->dim(); }
    bool normalizes() const override { return inner_->normalizes(); }
    Vector embed_text(const std::string& joined) override;

private:
    std::shared_ptr<EmbeddingBackend> inner_;
    EmbeddingCache cache_;
};

struct RemoteBackendConfig {
    std::string endpoint;      // http://host:port
    std::string path = "/embed";
    std::string model = "BAAI/bge-large-en-v1.5";
    std::string api_key_env = "EHK_EMBED_API_KEY";
    int dim = 1024;
    bool normalizes = true;
    int max_retries = 3;
    double backoff_initial_s = 0.5;
    int max_in_flight = 4;
};

// Remote HTTP backend: POST {"model", "input"} -> {"data":[{"embedding":[...]}]}.
// Bounded retries with exponential backoff and a concurrent in-flight limit.
class RemoteBackend final : public EmbeddingBackend {
public:
    explicit RemoteBackend(RemoteBackendConfig config);
    ~RemoteBackend() override;
    std::string backend_id() const override { return config_.model; }
    int dim() const override { return config_.dim; }
    bool normalizes() const override { return config_.normalizes; }
    Vector embed_text(const std::string& joined) override;

private:
    struct Impl;
    RemoteBackendConfig config_;
    std::unique_ptr<Impl> impl_;
};

} // namespace ehk::embed
