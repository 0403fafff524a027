#include "ehk/config.hpp"

#include <json.hpp>

#include "ehk/errors.hpp"
#include "ehk/fsutil.hpp"
#include "ehk/hash.hpp"

namespace ehk::cfg {

namespace {

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
    std::filesystem::path path(p);
    if (path.is_absolute()) return path;
    return base / path;
}

} // namespace

RunConfig load_config(const std::filesystem::path& path) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(read_file_bytes(path));
    } catch (const nlohmann::json::exception& e) {
        throw ParseError("config " + path.string() + ": " + e.what());
    }

    const auto base = std::filesystem::absolute(path).parent_path();
    RunConfig cfg;
    cfg.config_path = path;
    try {
        cfg.corpus_root = resolve(base, j.at("corpus_root").get<std::string>());
        cfg.output_dir = resolve(base, j.at("output_dir").get<std::string>());
        cfg.cache_dir = resolve(base, j.value("cache_dir", std::string("cache")));
        cfg.session_root =
            resolve(base, j.value("session_root", j.at("output_dir").get<std::string>()));
        cfg.data_dir = resolve(base, j.value("data_dir", std::string("data")));
        if (!j.contains("seed")) {
            throw ParseError("config: a seed is required (no wall-clock seeding)");
        }
        cfg.seed = j.at("seed").get<std::uint64_t>();
        cfg.concurrency = j.value("concurrency", 4);
        cfg.aggregation_mode = embed::aggregation_mode_from_string(
            j.value("aggregation_mode", std::string("mean_similarity")));

        if (j.contains("normalization")) {
            const auto& n = j.at("normalization");
            cfg.norm.lowercase = n.value("lowercase", true);
            cfg.norm.strip_markdown = n.value("strip_markdown", true);
            cfg.norm.lemmatizer = n.value("lemmatizer", std::string("rule_en_v1"));
            if (n.contains("stoplist_path") && !n.at("stoplist_path").is_null()) {
                cfg.norm.stopwords =
                    textnorm::load_stoplist(resolve(base, n.at("stoplist_path").get<std::string>()));
            }
            cfg.sentiment_on_normalized = n.value("sentiment_on_normalized", false);
            cfg.max_annotations_per_episode = n.value("max_annotations_per_episode", 0);
        }

        if (j.contains("embed")) {
            const auto& e = j.at("embed");
            cfg.embed.backend = e.value("backend", std::string("mock"));
            cfg.embed.dim = e.value("dim", 64);
            cfg.embed.model = e.value("model", std::string("BAAI/bge-large-en-v1.5"));
            cfg.embed.endpoint = e.value("endpoint", std::string());
            cfg.embed.api_key_env = e.value("api_key_env", std::string("EHK_EMBED_API_KEY"));
            cfg.embed.cache = e.value("cache", true);
            cfg.embed.max_retries = e.value("max_retries", 3);
        }

        if (j.contains("models")) {
            for (const auto& [model_id, m] : j.at("models").items()) {
                ModelBackendConfig mc;
                mc.kind = m.at("kind").get<std::string>();
                if (m.contains("fixture")) {
                    mc.fixture = resolve(base, m.at("fixture").get<std::string>());
                }
                if (m.contains("perception_fixture")) {
                    mc.perception_fixture =
                        resolve(base, m.at("perception_fixture").get<std::string>());
                }
                mc.endpoint = m.value("endpoint", std::string());
                mc.injected_delay_s = m.value("injected_delay_s", 0.0);
                cfg.models[model_id] = std::move(mc);
            }
        }

        if (j.contains("study1")) {
            cfg.study1_model_ids =
                j.at("study1").value("model_ids", std::vector<std::string>{});
            cfg.min_annotations = j.at("study1").value("min_annotations", 3);
        }
        if (j.contains("ablation")) {
            cfg.ablation_classifier_model =
                j.at("ablation").value("classifier_model", std::string());
            cfg.ablation_baseline_model = j.at("ablation").value("baseline_model", std::string());
        }
        if (j.contains("session")) {
            const auto& s = j.at("session");
            cfg.session_er_model = s.value("er_model", std::string());
            cfg.session_apology_model = s.value("apology_model", std::string());
            cfg.session_fps = s.value("fps", 30.0);
            cfg.clip_from_message_end = s.value("clip_from_message_end", false);
        }
    } catch (const nlohmann::json::exception& e) {
        throw ParseError("config " + path.string() + ": " + e.what());
    }
    return cfg;
}

std::string RunConfig::echo_json() const {
    nlohmann::json j;
    j["corpus_root"] = corpus_root.string();
    j["output_dir"] = output_dir.string();
    j["cache_dir"] = cache_dir.string();
    j["session_root"] = session_root.string();
    j["data_dir"] = data_dir.string();
    j["seed"] = seed;
    j["concurrency"] = concurrency;
    j["aggregation_mode"] = embed::to_string(aggregation_mode);
    j["normalization"]["lowercase"] = norm.lowercase;
    j["normalization"]["strip_markdown"] = norm.strip_markdown;
    j["normalization"]["lemmatizer"] = norm.lemmatizer;
    j["normalization"]["hash"] = norm.config_hash();
    j["normalization"]["sentiment_on_normalized"] = sentiment_on_normalized;
    j["normalization"]["max_annotations_per_episode"] = max_annotations_per_episode;
    j["embed"]["backend"] = embed.backend;
    j["embed"]["dim"] = embed.dim;
    j["embed"]["model"] = embed.model;
    j["embed"]["endpoint"] = embed.endpoint;
    j["embed"]["cache"] = embed.cache;
    for (const auto& [model_id, m] : models) {
        j["models"][model_id]["kind"] = m.kind;
        if (!m.fixture.empty()) j["models"][model_id]["fixture"] = m.fixture.string();
        if (!m.perception_fixture.empty()) {
            j["models"][model_id]["perception_fixture"] = m.perception_fixture.string();
        }
        if (!m.endpoint.empty()) j["models"][model_id]["endpoint"] = m.endpoint;
        if (m.injected_delay_s > 0.0) {
            j["models"][model_id]["injected_delay_s"] = m.injected_delay_s;
        }
    }
    j["study1"]["model_ids"] = study1_model_ids;
    j["study1"]["min_annotations"] = min_annotations;
    j["ablation"]["classifier_model"] = ablation_classifier_model;
    j["ablation"]["baseline_model"] = ablation_baseline_model;
    j["session"]["er_model"] = session_er_model;
    j["session"]["apology_model"] = session_apology_model;
    j["session"]["fps"] = session_fps;
    j["session"]["clip_from_message_end"] = clip_from_message_end;
    return j.dump(2);
}

std::string RunConfig::config_hash() const { return sha256_hex(echo_json()); }

std::vector<std::string> validate_config(const RunConfig& config) {
    std::vector<std::string> problems;
    auto need_dir = [&](const std::filesystem::path& p, const std::string& what) {
        if (!std::filesystem::is_directory(p)) {
            problems.push_back(what + " does not exist: " + p.string());
        }
    };
    auto need_file = [&](const std::filesystem::path& p, const std::string& what) {
        if (!std::filesystem::is_regular_file(p)) {
            problems.push_back(what + " does not exist: " + p.string());
        }
    };
    need_dir(config.corpus_root, "corpus_root");
    need_dir(config.data_dir, "data_dir");
    if (std::filesystem::is_directory(config.data_dir)) {
        need_file(config.data_dir / "vader_lexicon.txt", "sentiment lexicon");
    }
    for (const auto& [model_id, m] : config.models) {
        if (m.kind == "replay") {
            need_file(m.fixture, "replay fixture for model " + model_id);
        } else if (m.kind == "stacked") {
            need_file(m.perception_fixture, "perception fixture for model " + model_id);
        } else if (m.kind == "remote") {
            if (m.endpoint.empty()) {
                problems.push_back("remote model " + model_id + " needs an endpoint");
            }
        } else if (m.kind != "mock") {
            problems.push_back("model " + model_id + " has unknown kind '" + m.kind + "'");
        }
    }
    for (const auto& model_id : config.study1_model_ids) {
        if (!config.models.count(model_id)) {
            problems.push_back("study1 model_ids references unconfigured model '" + model_id + "'");
        }
    }
    return problems;
}

} // namespace ehk::cfg
