#pragma once
// Composes corpus, normalization, embeddings, sentiment and the statistical
// battery into the three analysis pipelines, and emits deterministic
// reports.

#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "ehk/corpus.hpp"
#include "ehk/embed.hpp"
#include "ehk/ermodels.hpp"
#include "ehk/sentiment.hpp"
#include "ehk/session.hpp"
#include "ehk/stats.hpp"
#include "ehk/textnorm.hpp"

namespace ehk::eval {

// Serves one model's output for one episode (replay, cache or live behind
// the callable). Missing outputs must throw.
using OutputProvider =
    std::function<ermodels::ModelOutput(const std::string& model_id,
                                        const corpus::EpisodeRecord& episode)>;

struct PipelineOptions {
    textnorm::NormConfig norm;
    embed::AggregationMode mode = embed::AggregationMode::mean_similarity;
    // The cited sentiment rules are defined over raw text; this flag exists
    // for the alternative reading.
    bool sentiment_on_normalized = false;
    std::uint64_t seed = 1;
};

struct MetricBlock {
    // model -> episode -> value, plus per-model mean and sample SD
    std::map<std::string, std::map<std::string, double>> table;
    std::map<std::string, double> mean;
    std::map<std::string, double> sd;
    stats::TestResult anova;
    std::vector<stats::TukeyPair> tukey;
};

struct Study1Result {
    std::vector<std::string> model_ids;
    std::vector<std::string> episode_ids;
    MetricBlock similarity;
    MetricBlock sentiment_diff; // model minus human, per-episode mean
    std::string norm_hash;
    embed::AggregationMode mode = embed::AggregationMode::mean_similarity;
};

Study1Result run_study1(const corpus::Corpus& corpus, const std::vector<std::string>& model_ids,
                        const OutputProvider& outputs, embed::EmbeddingBackend& backend,
                        const sentiment::Analyzer& analyzer, const PipelineOptions& options);

struct AblationVariant {
    std::string name; // e.g. "vlm_combined"
    std::map<std::string, double> scores; // episode -> similarity
    double mean = 0.0;
    double sd = 0.0;
};

struct AblationComparison {
    std::string label; // "vlm_combined vs cnn_combined"
    std::optional<stats::TestResult> t; // absent when pairing is degenerate
    std::string note;                   // e.g. "no variance in paired differences"
};

struct AblationResult {
    std::vector<AblationVariant> variants;
    std::vector<AblationComparison> comparisons;
    std::vector<std::string> episode_ids; // episodes scored (parseable everywhere)
    int unparseable_count = 0;
    std::vector<std::string> unparseable_episodes;
    std::string norm_hash;
    embed::AggregationMode mode = embed::AggregationMode::mean_similarity;
};

// classifier_outputs/baseline_outputs: episode_id -> ModelOutput.
AblationResult run_ablation(const corpus::Corpus& corpus,
                            const std::map<std::string, ermodels::ModelOutput>& classifier_outputs,
                            const std::map<std::string, ermodels::ModelOutput>& baseline_outputs,
                            embed::EmbeddingBackend& backend, const PipelineOptions& options);

struct Study2Result {
    // per-participant ER/self-report alignment (ea sessions with a clip)
    std::map<std::string, double> alignment; // participant -> cosine
    double alignment_mean = 0.0;
    double alignment_sd = 0.0;
    int sessions_total = 0;
    int sessions_excluded = 0; // no clip, no ER output, or no self-report
    std::vector<std::string> exclusions;

    int preference_ea = 0;
    int preference_control = 0;
    double preference_binomial_p = 1.0;

    std::optional<stats::TestResult> preference_alignment_mwu;
    std::map<std::string, stats::TestResult> friedman_hrc;      // subscale -> result
    std::map<std::string, stats::TestResult> ancova_godspeed;   // subscale -> result
    std::map<std::string, std::vector<stats::PosteriorContrast>> bayes; // subscale -> contrasts
    std::map<std::string, stats::TestResult> normality; // subscale -> D'Agostino-Pearson
    std::vector<std::string> notes;
    std::string norm_hash;
};

Study2Result run_study2(const corpus::Corpus& corpus,
                        const std::vector<session::SessionLog>& logs,
                        embed::EmbeddingBackend& backend, const PipelineOptions& options);

struct RunMeta {
    std::string run_id;
    std::uint64_t seed = 1;
    std::string norm_hash;
    std::string embed_backend_id;
    std::string aggregation_mode;
    std::map<std::string, std::string> extra; // echoed into headers
};

enum class ReportFormat { markdown, csv, json };

std::set<ReportFormat> report_formats_from_strings(const std::vector<std::string>& names);

// Deterministic files under out_dir: <name>.md / <name>.csv plus run.json.
// Returns the paths written. Numbers in CSV are fixed at 6 decimals.
std::vector<std::filesystem::path> emit_study1(const Study1Result& result,
                                               const std::filesystem::path& out_dir,
                                               const std::set<ReportFormat>& formats,
                                               const RunMeta& meta);
std::vector<std::filesystem::path> emit_ablation(const AblationResult& result,
                                                 const std::filesystem::path& out_dir,
                                                 const std::set<ReportFormat>& formats,
                                                 const RunMeta& meta);
std::vector<std::filesystem::path> emit_study2(const Study2Result& result,
                                               const std::filesystem::path& out_dir,
                                               const std::set<ReportFormat>& formats,
                                               const RunMeta& meta);

} // namespace ehk::eval
