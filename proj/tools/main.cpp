// ehk command line: validate, eval, session, cache.
//
// Exit codes are stable API: 0 ok, 1 validation issues, 2 load failure,
// 3 offline cache miss, 4 internal state violation.

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "ehk/config.hpp"
#include "ehk/corpus.hpp"
#include "ehk/embed.hpp"
#include "ehk/ermodels.hpp"
#include "ehk/errors.hpp"
#include "ehk/evalrunner.hpp"
#include "ehk/fsutil.hpp"
#include "ehk/hash.hpp"
#include "ehk/sentiment.hpp"
#include "ehk/session.hpp"

#include <json.hpp>

namespace {

using namespace ehk;

constexpr int kExitOk = 0;
constexpr int kExitIssues = 1;
constexpr int kExitLoadFailure = 2;
constexpr int kExitOfflineMiss = 3;
constexpr int kExitStateViolation = 4;

struct Backends {
    std::shared_ptr<embed::EmbeddingBackend> embedder;
    std::unique_ptr<ermodels::ResponseCache> model_cache;
    std::map<std::string, std::shared_ptr<ermodels::VlmBackend>> vlm;
    std::map<std::string, std::shared_ptr<ermodels::FixturePerception>> perception;
};

// Offline resolution for a remote embedding backend: cache hits only.
class CacheOnlyEmbedBackend final : public embed::EmbeddingBackend {
public:
    CacheOnlyEmbedBackend(const cfg::EmbedConfig& config, std::filesystem::path cache_dir)
        : config_(config), cache_(std::move(cache_dir)) {}
    std::string backend_id() const override { return config_.model; }
    int dim() const override { return config_.dim; }
    bool normalizes() const override { return false; } // cached entries are served verbatim
    embed::Vector embed_text(const std::string& joined) override {
        const auto hash = ehk::sha256_hex(joined);
        if (auto hit = cache_.lookup(config_.model, hash, config_.dim)) {
            return *hit;
        }
        throw TransportError("offline: no cached embedding for " + config_.model + "/" + hash);
    }

private:
    cfg::EmbedConfig config_;
    embed::EmbeddingCache cache_;
};

Backends make_backends(const cfg::RunConfig& config, bool offline, Clock* clock) {
    Backends b;
    if (config.embed.backend == "mock") {
        b.embedder = std::make_shared<embed::MockBackend>(config.embed.dim, "mock");
    } else if (config.embed.backend == "remote") {
        if (offline) {
            b.embedder = std::make_shared<CacheOnlyEmbedBackend>(
                config.embed, config.cache_dir / "embeddings");
        } else {
            embed::RemoteBackendConfig rc;
            rc.endpoint = config.embed.endpoint;
            rc.model = config.embed.model;
            rc.api_key_env = config.embed.api_key_env;
            rc.dim = config.embed.dim;
            rc.max_retries = config.embed.max_retries;
            rc.max_in_flight = config.concurrency;
            b.embedder = std::make_shared<embed::RemoteBackend>(rc);
        }
    } else {
        throw ParseError("unknown embed backend kind: " + config.embed.backend);
    }
    const bool cache_only = offline && config.embed.backend == "remote";
    if (b.embedder && config.embed.cache && !cache_only) {
        b.embedder = std::make_shared<embed::CachingBackend>(
            b.embedder, embed::EmbeddingCache(config.cache_dir / "embeddings"));
    }
    b.model_cache = std::make_unique<ermodels::ResponseCache>(config.cache_dir / "models");

    for (const auto& [model_id, mc] : config.models) {
        if (mc.kind == "replay") {
            b.vlm[model_id] = std::make_shared<ermodels::ReplayVlmBackend>(model_id, mc.fixture);
        } else if (mc.kind == "mock") {
            b.vlm[model_id] =
                std::make_shared<ermodels::MockVlmBackend>(model_id, clock, mc.injected_delay_s);
        } else if (mc.kind == "remote") {
            if (offline) continue; // cache-only under --offline
            ermodels::RemoteVlmConfig rc;
            rc.model = model_id;
            rc.endpoint = mc.endpoint;
            b.vlm[model_id] = std::make_shared<ermodels::RemoteVlmBackend>(rc, clock);
        } else if (mc.kind == "stacked") {
            b.perception[model_id] =
                std::make_shared<ermodels::FixturePerception>(mc.perception_fixture);
        } else {
            throw ParseError("model " + model_id + ": unknown kind '" + mc.kind + "'");
        }
    }
    return b;
}

// Offline resolution for remote models: cache hits only.
class CacheOnlyBackend final : public ermodels::VlmBackend {
public:
    explicit CacheOnlyBackend(std::string id) : id_(std::move(id)) {}
    std::string id() const override { return id_; }
    ermodels::VlmResponse run(const ermodels::VlmRequest& request) override {
        throw TransportError("offline: no cached response for model '" + request.model_id +
                             "', episode '" + request.episode_id + "', prompt '" +
                             request.prompt_id + "'");
    }

private:
    std::string id_;
};

eval::OutputProvider make_provider(const cfg::RunConfig& config, Backends& backends, bool offline,
                                   Clock* clock, const std::string& prompt_id) {
    return [&config, &backends, offline, clock, prompt_id](
               const std::string& model_id,
               const corpus::EpisodeRecord& episode) -> ermodels::ModelOutput {
        auto mc = config.models.find(model_id);
        if (mc == config.models.end()) {
            throw LoadError("model '" + model_id + "' is not configured");
        }
        corpus::Corpus shim;
        shim.root = config.corpus_root;
        if (mc->second.kind == "stacked") {
            auto& perception = backends.perception.at(model_id);
            return ermodels::run_stacked_baseline(episode, *perception, *perception, model_id);
        }
        std::shared_ptr<ermodels::VlmBackend> backend;
        auto it = backends.vlm.find(model_id);
        if (it != backends.vlm.end()) {
            backend = it->second;
        } else if (offline && mc->second.kind == "remote") {
            backend = std::make_shared<CacheOnlyBackend>(model_id);
        } else {
            throw LoadError("no backend available for model '" + model_id + "'");
        }
        ermodels::ModelRunner runner(backend, clock, backends.model_cache.get());
        if (prompt_id == "vlm_classifier") {
            return runner.run_vlm_classifier(shim, episode);
        }
        return runner.run_generative(shim, episode, prompt_id);
    };
}

int run_validate(const std::string& config_path, bool strict_media) {
    cfg::RunConfig config;
    corpus::Corpus corpus;
    try {
        config = cfg::load_config(config_path);
        const auto config_problems = cfg::validate_config(config);
        if (!config_problems.empty()) {
            for (const auto& p : config_problems) std::cerr << "config: " << p << "\n";
            return kExitLoadFailure;
        }
        corpus::LoadOptions opts;
        opts.strict_media = strict_media;
        opts.max_annotations_per_episode = config.max_annotations_per_episode;
        corpus = corpus::load_corpus(config.corpus_root, opts);
    } catch (const Error& e) {
        std::cerr << "load failure: " << e.what() << "\n";
        return kExitLoadFailure;
    }
    for (const auto& w : corpus.warnings) std::cout << "warning: " << w << "\n";
    std::cout << "episodes: " << corpus.episodes.size()
              << ", annotations: " << corpus.annotations.size()
              << ", self-reports: " << corpus.self_reports.size()
              << ", questionnaires: " << corpus.questionnaires.size()
              << ", preferences: " << corpus.preferences.size() << "\n";
    const auto issues = corpus::validate_corpus(corpus, config.min_annotations);
    for (const auto& issue : issues) std::cout << "issue: " << issue.message << "\n";
    if (!issues.empty()) {
        std::cout << issues.size() << " issue(s)\n";
        return kExitIssues;
    }
    std::cout << "corpus ok\n";
    return kExitOk;
}

int run_eval(const std::string& config_path, bool study1, bool ablation, bool study2, bool offline,
             std::optional<std::uint64_t> seed_override, std::optional<std::string> mode_override,
             std::optional<std::string> out_override) {
    cfg::RunConfig config;
    try {
        config = cfg::load_config(config_path);
        if (seed_override) config.seed = *seed_override;
        if (mode_override) {
            config.aggregation_mode = embed::aggregation_mode_from_string(*mode_override);
        }
        if (out_override) config.output_dir = *out_override;
        const auto problems = cfg::validate_config(config);
        if (!problems.empty()) {
            for (const auto& p : problems) std::cerr << "config: " << p << "\n";
            return kExitLoadFailure;
        }
    } catch (const Error& e) {
        std::cerr << "load failure: " << e.what() << "\n";
        return kExitLoadFailure;
    }

    SystemClock clock;
    try {
        corpus::LoadOptions copts;
        copts.max_annotations_per_episode = config.max_annotations_per_episode;
        const auto corpus = corpus::load_corpus(config.corpus_root, copts);
        auto backends = make_backends(config, offline, &clock);
        sentiment::Analyzer analyzer(config.data_dir / "vader_lexicon.txt");

        eval::PipelineOptions options;
        options.norm = config.norm;
        options.mode = config.aggregation_mode;
        options.sentiment_on_normalized = config.sentiment_on_normalized;
        options.seed = config.seed;

        eval::RunMeta meta;
        meta.run_id = config.run_id();
        meta.seed = config.seed;
        meta.norm_hash = config.norm.config_hash();
        meta.embed_backend_id = backends.embedder->backend_id();
        meta.aggregation_mode = embed::to_string(config.aggregation_mode);
        meta.extra["config_hash"] = config.config_hash();
        meta.extra["corpus_root"] = config.corpus_root.string();

        const auto out_dir = config.output_dir / meta.run_id;
        const std::set<eval::ReportFormat> formats = {
            eval::ReportFormat::markdown, eval::ReportFormat::csv, eval::ReportFormat::json};

        if (study1) {
            auto provider = make_provider(config, backends, offline, &clock, "er_study1");
            if (offline) {
                std::vector<std::string> missing;
                for (const auto& model : config.study1_model_ids) {
                    for (const auto& episode : corpus.episodes) {
                        try {
                            provider(model, episode);
                        } catch (const TransportError& e) {
                            missing.push_back(model + "/" + episode.episode_id);
                        }
                    }
                }
                if (!missing.empty()) {
                    std::cerr << "offline cache misses:\n";
                    for (const auto& m : missing) std::cerr << "  " << m << "\n";
                    return kExitOfflineMiss;
                }
            }
            const auto result = eval::run_study1(corpus, config.study1_model_ids, provider,
                                                 *backends.embedder, analyzer, options);
            const auto files = eval::emit_study1(result, out_dir, formats, meta);
            for (const auto& f : files) std::cout << "wrote " << f.string() << "\n";
            std::cout << "study1: models=" << result.model_ids.size()
                      << " episodes=" << result.episode_ids.size()
                      << " anova_F=" << result.similarity.anova.statistic
                      << " p=" << result.similarity.anova.p_value << "\n";
        }

        if (ablation) {
            if (config.ablation_classifier_model.empty() ||
                config.ablation_baseline_model.empty()) {
                std::cerr << "config: ablation.classifier_model and ablation.baseline_model are "
                             "required for --ablation\n";
                return kExitLoadFailure;
            }
            auto classifier_provider =
                make_provider(config, backends, offline, &clock, "vlm_classifier");
            auto baseline_provider = make_provider(config, backends, offline, &clock, "er_study1");
            std::map<std::string, ermodels::ModelOutput> classifier_outputs, baseline_outputs;
            std::vector<std::string> missing;
            for (const auto& episode : corpus.episodes) {
                try {
                    classifier_outputs[episode.episode_id] =
                        classifier_provider(config.ablation_classifier_model, episode);
                } catch (const TransportError&) {
                    missing.push_back(config.ablation_classifier_model + "/" + episode.episode_id);
                }
                try {
                    baseline_outputs[episode.episode_id] =
                        baseline_provider(config.ablation_baseline_model, episode);
                } catch (const TransportError&) {
                    missing.push_back(config.ablation_baseline_model + "/" + episode.episode_id);
                }
            }
            if (!missing.empty() && offline) {
                std::cerr << "offline cache misses:\n";
                for (const auto& m : missing) std::cerr << "  " << m << "\n";
                return kExitOfflineMiss;
            }
            const auto result = eval::run_ablation(corpus, classifier_outputs, baseline_outputs,
                                                   *backends.embedder, options);
            const auto files = eval::emit_ablation(result, out_dir, formats, meta);
            for (const auto& f : files) std::cout << "wrote " << f.string() << "\n";
            std::cout << "ablation: episodes=" << result.episode_ids.size()
                      << " unparseable=" << result.unparseable_count << "\n";
        }

        if (study2) {
            const auto logs = session::load_session_logs(config.session_root);
            if (logs.empty()) {
                std::cerr << "no session logs under " << config.session_root.string()
                          << " (run 'ehk session --simulate' first)\n";
                return kExitLoadFailure;
            }
            const auto result = eval::run_study2(corpus, logs, *backends.embedder, options);
            const auto files = eval::emit_study2(result, out_dir, formats, meta);
            for (const auto& f : files) std::cout << "wrote " << f.string() << "\n";
            std::cout << "study2: sessions=" << result.sessions_total
                      << " scored=" << result.alignment.size()
                      << " pref_ea=" << result.preference_ea << "/"
                      << (result.preference_ea + result.preference_control)
                      << " binomial_p=" << result.preference_binomial_p << "\n";
        }
        return kExitOk;
    } catch (const StateError& e) {
        std::cerr << "state violation: " << e.what() << "\n";
        return kExitStateViolation;
    } catch (const TransportError& e) {
        if (offline) {
            std::cerr << "offline cache miss: " << e.what() << "\n";
            return kExitOfflineMiss;
        }
        std::cerr << "load failure: " << e.what() << "\n";
        return kExitLoadFailure;
    } catch (const Error& e) {
        std::cerr << "load failure: " << e.what() << "\n";
        return kExitLoadFailure;
    }
}

int run_session(const std::string& config_path, const std::string& condition_name,
                const std::string& participant, bool simulate,
                std::optional<std::uint64_t> seed_override, bool camera_failure) {
    cfg::RunConfig config;
    corpus::Condition condition;
    try {
        config = cfg::load_config(config_path);
        if (seed_override) config.seed = *seed_override;
        condition = corpus::condition_from_string(condition_name);
    } catch (const Error& e) {
        std::cerr << "load failure: " << e.what() << "\n";
        return kExitLoadFailure;
    }
    if (!simulate) {
        std::cerr << "only --simulate sessions are supported on this build (the device "
                     "interface has no hardware integration here)\n";
        return kExitLoadFailure;
    }
    try {
        ManualClock clock;
        auto backends = make_backends(config, /*offline=*/false, &clock);

        auto pick_runner = [&](const std::string& model_id)
            -> std::unique_ptr<ermodels::ModelRunner> {
            std::shared_ptr<ermodels::VlmBackend> backend;
            if (!model_id.empty() && backends.vlm.count(model_id)) {
                backend = backends.vlm.at(model_id);
            } else {
                backend = std::make_shared<ermodels::MockVlmBackend>("mock-vlm", &clock, 1.1);
            }
            return std::make_unique<ermodels::ModelRunner>(backend, &clock,
                                                           backends.model_cache.get());
        };
        auto er_runner = pick_runner(config.session_er_model);
        auto apology_runner = pick_runner(config.session_apology_model);

        session::SimOptions opts;
        opts.fps = config.session_fps;
        opts.clip_from_message_end = config.clip_from_message_end;
        opts.camera_failure = camera_failure;
        const auto log = session::run_simulated_session(condition, participant, er_runner.get(),
                                                        apology_runner.get(), clock, opts);
        session::write_session_log(log, config.session_root);
        std::cout << "session " << participant << "/" << corpus::to_string(condition)
                  << ": events=" << log.events.size()
                  << " model_calls=" << log.model_latencies.size()
                  << " apology=\"" << log.apology.generated_text << "\"\n";
        std::cout << "wrote "
                  << session::session_log_path(config.session_root, participant, condition).string()
                  << "\n";
        return kExitOk;
    } catch (const StateError& e) {
        std::cerr << "state violation: " << e.what() << "\n";
        return kExitStateViolation;
    } catch (const Error& e) {
        std::cerr << "load failure: " << e.what() << "\n";
        return kExitLoadFailure;
    }
}

struct CacheEntry {
    std::filesystem::path path;
    bool ok = false;
};

std::vector<CacheEntry> scan_cache(const cfg::RunConfig& config) {
    std::vector<CacheEntry> entries;
    for (const auto& sub : {"embeddings", "models"}) {
        const auto dir = config.cache_dir / sub;
        if (!std::filesystem::exists(dir)) continue;
        for (const auto& entry : std::filesystem::recursive_directory_iterator(dir)) {
            if (!entry.is_regular_file() || entry.path().extension() != ".json") continue;
            CacheEntry ce;
            ce.path = entry.path();
            try {
                const auto parsed = nlohmann::json::parse(read_file_bytes(entry.path()));
                if (std::string(sub) == "embeddings") {
                    ce.ok = parsed.contains("text_hash") && parsed.contains("dim") &&
                            parsed.contains("values");
                } else {
                    ce.ok = parsed.contains("prompt_hash") && parsed.contains("media_digest") &&
                            parsed.contains("raw_text") && parsed.contains("latency_s");
                }
            } catch (const std::exception&) {
                ce.ok = false;
            }
            entries.push_back(std::move(ce));
        }
    }
    std::sort(entries.begin(), entries.end(),
              [](const CacheEntry& a, const CacheEntry& b) { return a.path < b.path; });
    return entries;
}

int run_cache(const std::string& config_path, const std::string& action) {
    cfg::RunConfig config;
    try {
        config = cfg::load_config(config_path);
    } catch (const Error& e) {
        std::cerr << "load failure: " << e.what() << "\n";
        return kExitLoadFailure;
    }
    const auto entries = scan_cache(config);
    if (action == "ls") {
        for (const auto& e : entries) {
            std::cout << e.path.string() << " (" << std::filesystem::file_size(e.path)
                      << " bytes)\n";
        }
        std::cout << entries.size() << " entries\n";
        return kExitOk;
    }
    if (action == "verify") {
        int corrupt = 0;
        for (const auto& e : entries) {
            if (!e.ok) {
                ++corrupt;
                std::cout << "corrupt: " << e.path.string() << "\n";
            }
        }
        std::cout << entries.size() << " entries, " << corrupt << " corrupt\n";
        return corrupt == 0 ? kExitOk : kExitIssues;
    }
    if (action == "gc") {
        int removed = 0;
        for (const auto& e : entries) {
            if (!e.ok) {
                std::filesystem::remove(e.path);
                ++removed;
            }
        }
        std::cout << "removed " << removed << " corrupt entries\n";
        return kExitOk;
    }
    std::cerr << "unknown cache action: " << action << "\n";
    return kExitLoadFailure;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"emotion-recognition evaluation and interaction harness"};
    app.require_subcommand(1);

    std::string config_path;
    bool strict_media = false;
    auto* validate = app.add_subcommand("validate", "load and validate the corpus");
    validate->add_option("--config", config_path, "config file")->required();
    validate->add_flag("--strict-media", strict_media, "require video files to resolve");

    bool study1 = false, ablation = false, study2 = false, offline = false;
    std::optional<std::uint64_t> seed_override;
    std::optional<std::string> mode_override, out_override;
    auto* eval_cmd = app.add_subcommand("eval", "run an analysis pipeline and write reports");
    eval_cmd->add_option("--config", config_path, "config file")->required();
    eval_cmd->add_flag("--study1", study1, "semantic/sentiment alignment pipeline");
    eval_cmd->add_flag("--ablation", ablation, "label-format ablation pipeline");
    eval_cmd->add_flag("--study2", study2, "interaction study pipeline");
    eval_cmd->add_flag("--offline", offline, "forbid live backends (replay/cache only)");
    eval_cmd->add_option("--seed", seed_override, "override the config seed");
    eval_cmd->add_option("--mode", mode_override, "mean_similarity | mean_embedding");
    eval_cmd->add_option("--out", out_override, "override the output directory");

    std::string condition, participant = "P01";
    bool simulate = false, camera_failure = false;
    auto* session_cmd = app.add_subcommand("session", "run one interaction session");
    session_cmd->add_option("--config", config_path, "config file")->required();
    session_cmd->add_option("--condition", condition, "success | control | ea")->required();
    session_cmd->add_option("--participant", participant, "participant id");
    session_cmd->add_flag("--simulate", simulate, "simulated device");
    session_cmd->add_flag("--camera-failure", camera_failure, "simulate a failed clip recording");
    session_cmd->add_option("--seed", seed_override, "override the config seed");

    std::string cache_action;
    auto* cache_cmd = app.add_subcommand("cache", "inspect or clean the response caches");
    cache_cmd->add_option("--config", config_path, "config file")->required();
    cache_cmd->add_option("action", cache_action, "ls | verify | gc")->required();

    CLI11_PARSE(app, argc, argv);

    if (validate->parsed()) return run_validate(config_path, strict_media);
    if (eval_cmd->parsed()) {
        if (!study1 && !ablation && !study2) {
            std::cerr << "pick at least one of --study1 --ablation --study2\n";
            return kExitLoadFailure;
        }
        return run_eval(config_path, study1, ablation, study2, offline, seed_override,
                        mode_override, out_override);
    }
    if (session_cmd->parsed()) {
        return run_session(config_path, condition, participant, simulate, seed_override,
                           camera_failure);
    }
    if (cache_cmd->parsed()) return run_cache(config_path, cache_action);
    return kExitLoadFailure;
}
