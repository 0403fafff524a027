#include "ehk/evalrunner.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include <json.hpp>

#include "ehk/errors.hpp"
#include "ehk/fsutil.hpp"

namespace ehk::eval {

namespace {

double mean_in_order(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

double sample_sd(const std::vector<double>& v, double mean) {
    if (v.size() < 2) return 0.0;
    double ss = 0.0;
    for (double x : v) ss += (x - mean) * (x - mean);
    return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

std::string fmt6(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.6f", v);
    return buf;
}

std::string fmt3(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.3f", v);
    return buf;
}

std::string fmtp(double p) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.4g", p);
    return buf;
}

std::string df_string(const std::vector<int>& df) {
    std::string out;
    for (std::size_t i = 0; i < df.size(); ++i) {
        if (i) out += ", ";
        out += std::to_string(df[i]);
    }
    return out;
}

void header_lines(std::ostringstream& md, const std::string& title, const RunMeta& meta) {
    md << "# " << title << "\n\n";
    md << "- run_id: " << meta.run_id << "\n";
    md << "- seed: " << meta.seed << "\n";
    md << "- normalization_hash: " << meta.norm_hash << "\n";
    md << "- embed_backend: " << meta.embed_backend_id << "\n";
    md << "- aggregation_mode: " << meta.aggregation_mode << "\n";
    md << "- sentiment_sign_convention: model minus human (positive means the model reads "
          "more positive)\n";
    for (const auto& [k, v] : meta.extra) {
        md << "- " << k << ": " << v << "\n";
    }
    md << "\n";
}

void write_run_json(const std::filesystem::path& out_dir, const RunMeta& meta,
                    std::vector<std::filesystem::path>& written) {
    nlohmann::json j;
    j["run_id"] = meta.run_id;
    j["seed"] = meta.seed;
    j["normalization_hash"] = meta.norm_hash;
    j["embed_backend"] = meta.embed_backend_id;
    j["aggregation_mode"] = meta.aggregation_mode;
    for (const auto& [k, v] : meta.extra) j["config"][k] = v;
    const auto path = out_dir / "run.json";
    atomic_write_file(path, j.dump(2) + "\n");
    written.push_back(path);
}

void metric_block_markdown(std::ostringstream& md, const MetricBlock& block,
                           const std::vector<std::string>& model_ids) {
    for (const auto& model : model_ids) {
        md << "- " << model << ": M=" << fmt3(block.mean.at(model))
           << ", SD=" << fmt3(block.sd.at(model)) << "\n";
    }
    md << "\nOne-way ANOVA: F(" << df_string(block.anova.df) << ") = " << fmt3(block.anova.statistic)
       << ", p = " << fmtp(block.anova.p_value) << "\n\n";
    md << "| pair | mean diff | p_adj | reject |\n";
    md << "|---|---|---|---|\n";
    for (const auto& pair : block.tukey) {
        md << "| " << pair.group_a << " vs " << pair.group_b << " | " << fmt3(pair.mean_diff)
           << " | " << fmtp(pair.p_adj) << " | " << (pair.reject ? "yes" : "no") << " |\n";
    }
    md << "\n";
}

MetricBlock finish_metric_block(std::map<std::string, std::map<std::string, double>> table,
                                const std::vector<std::string>& model_ids,
                                const std::vector<std::string>& episode_ids, double alpha) {
    MetricBlock block;
    block.table = std::move(table);
    std::vector<stats::Group> groups;
    for (const auto& model : model_ids) {
        std::vector<double> values;
        values.reserve(episode_ids.size());
        for (const auto& eid : episode_ids) {
            values.push_back(block.table.at(model).at(eid));
        }
        const double m = mean_in_order(values);
        block.mean[model] = m;
        block.sd[model] = sample_sd(values, m);
        groups.push_back({model, std::move(values)});
    }
    block.anova = stats::one_way_anova(groups);
    block.tukey = stats::tukey_hsd(groups, alpha);
    return block;
}

} // namespace

Study1Result run_study1(const corpus::Corpus& corpus, const std::vector<std::string>& model_ids,
                        const OutputProvider& outputs, embed::EmbeddingBackend& backend,
                        const sentiment::Analyzer& analyzer, const PipelineOptions& options) {
    if (model_ids.size() < 2) {
        throw DomainError("run_study1: need at least 2 models for the comparison");
    }
    if (corpus.episodes.empty()) {
        throw DomainError("run_study1: corpus has no episodes");
    }

    // every model must have an output for every episode
    std::map<std::string, std::map<std::string, ermodels::ModelOutput>> all_outputs;
    std::vector<std::string> missing;
    for (const auto& model : model_ids) {
        for (const auto& episode : corpus.episodes) {
            try {
                all_outputs[model][episode.episode_id] = outputs(model, episode);
            } catch (const Error& e) {
                missing.push_back(model + "/" + episode.episode_id + " (" + e.what() + ")");
            }
        }
    }
    if (!missing.empty()) {
        std::string msg = "run_study1: missing model outputs:";
        for (const auto& m : missing) msg += "\n  " + m;
        throw LoadError(msg);
    }

    Study1Result result;
    result.model_ids = model_ids;
    result.mode = options.mode;
    result.norm_hash = options.norm.config_hash();

    // normalized annotations per episode, in corpus order
    std::map<std::string, std::vector<textnorm::NormalizedText>> norm_annotations;
    std::map<std::string, std::vector<const corpus::AnnotationRecord*>> raw_annotations;
    for (const auto& episode : corpus.episodes) {
        auto anns = corpus.annotations_for(episode.episode_id);
        if (anns.empty()) {
            throw DomainError("run_study1: episode " + episode.episode_id + " has no annotations");
        }
        result.episode_ids.push_back(episode.episode_id);
        raw_annotations[episode.episode_id] = anns;
        auto& normed = norm_annotations[episode.episode_id];
        for (const auto* a : anns) {
            normed.push_back(textnorm::normalize(a->text, options.norm));
        }
    }

    std::map<std::string, std::map<std::string, double>> sim_table;
    std::map<std::string, std::map<std::string, double>> sent_table;
    for (const auto& model : model_ids) {
        for (const auto& episode : corpus.episodes) {
            const auto& output = all_outputs.at(model).at(episode.episode_id);
            const auto model_norm = textnorm::normalize(output.raw_text, options.norm);
            sim_table[model][episode.episode_id] = embed::episode_similarity(
                model_norm, norm_annotations.at(episode.episode_id), backend, options.mode);

            // per-episode mean of (model - human) compound differences
            const auto& anns = raw_annotations.at(episode.episode_id);
            double sum = 0.0;
            for (std::size_t i = 0; i < anns.size(); ++i) {
                if (options.sentiment_on_normalized) {
                    const auto& ann_norm = norm_annotations.at(episode.episode_id)[i];
                    sum += analyzer.compound(model_norm.joined) - analyzer.compound(ann_norm.joined);
                } else {
                    sum += analyzer.sentiment_difference(output.raw_text, anns[i]->text);
                }
            }
            sent_table[model][episode.episode_id] = sum / static_cast<double>(anns.size());
        }
    }

    result.similarity =
        finish_metric_block(std::move(sim_table), model_ids, result.episode_ids, 0.05);
    result.sentiment_diff =
        finish_metric_block(std::move(sent_table), model_ids, result.episode_ids, 0.05);
    return result;
}

AblationResult run_ablation(const corpus::Corpus& corpus,
                            const std::map<std::string, ermodels::ModelOutput>& classifier_outputs,
                            const std::map<std::string, ermodels::ModelOutput>& baseline_outputs,
                            embed::EmbeddingBackend& backend, const PipelineOptions& options) {
    AblationResult result;
    result.mode = options.mode;
    result.norm_hash = options.norm.config_hash();

    struct EpisodeTexts {
        std::string vlm_combined, vlm_emotion, vlm_objects;
        std::string cnn_combined, cnn_emotion, cnn_objects;
    };
    std::map<std::string, EpisodeTexts> texts;

    for (const auto& episode : corpus.episodes) {
        const auto& eid = episode.episode_id;
        auto cls = classifier_outputs.find(eid);
        auto base = baseline_outputs.find(eid);
        if (cls == classifier_outputs.end() || base == baseline_outputs.end()) {
            continue; // only episodes covered by both runs are compared
        }
        ermodels::ClassifierParse parse;
        try {
            parse = ermodels::parse_classifier_output(cls->second.raw_text);
        } catch (const ParseError&) {
            ++result.unparseable_count;
            result.unparseable_episodes.push_back(eid);
            continue;
        }
        EpisodeTexts t;
        t.vlm_combined = cls->second.raw_text;
        t.vlm_emotion = parse.emotion_label;
        for (std::size_t i = 0; i < parse.objects.size(); ++i) {
            t.vlm_objects += (i ? ", " : "") + parse.objects[i];
        }
        t.cnn_combined = base->second.raw_text;
        // baseline format is "<emotion> <obj1>, <obj2>"; split on the first space
        const auto space = t.cnn_combined.find(' ');
        t.cnn_emotion = t.cnn_combined.substr(0, space);
        t.cnn_objects = space == std::string::npos ? "" : t.cnn_combined.substr(space + 1);
        texts[eid] = std::move(t);
        result.episode_ids.push_back(eid);
    }

    if (result.episode_ids.empty()) {
        throw DomainError("run_ablation: no parseable classifier outputs");
    }

    std::map<std::string, std::vector<textnorm::NormalizedText>> norm_annotations;
    for (const auto& eid : result.episode_ids) {
        auto anns = corpus.annotations_for(eid);
        if (anns.empty()) {
            throw DomainError("run_ablation: episode " + eid + " has no annotations");
        }
        for (const auto* a : anns) {
            norm_annotations[eid].push_back(textnorm::normalize(a->text, options.norm));
        }
    }

    auto score_variant = [&](const std::string& name,
                             std::function<const std::string&(const EpisodeTexts&)> pick) {
        AblationVariant variant;
        variant.name = name;
        std::vector<double> values;
        for (const auto& eid : result.episode_ids) {
            const auto norm = textnorm::normalize(pick(texts.at(eid)), options.norm);
            const double score =
                embed::episode_similarity(norm, norm_annotations.at(eid), backend, options.mode);
            variant.scores[eid] = score;
            values.push_back(score);
        }
        variant.mean = mean_in_order(values);
        variant.sd = sample_sd(values, variant.mean);
        result.variants.push_back(std::move(variant));
    };

    score_variant("vlm_combined", [](const EpisodeTexts& t) -> const std::string& { return t.vlm_combined; });
    score_variant("vlm_emotion_only", [](const EpisodeTexts& t) -> const std::string& { return t.vlm_emotion; });
    score_variant("vlm_objects_only", [](const EpisodeTexts& t) -> const std::string& { return t.vlm_objects; });
    score_variant("cnn_combined", [](const EpisodeTexts& t) -> const std::string& { return t.cnn_combined; });
    score_variant("cnn_emotion_only", [](const EpisodeTexts& t) -> const std::string& { return t.cnn_emotion; });
    score_variant("cnn_objects_only", [](const EpisodeTexts& t) -> const std::string& { return t.cnn_objects; });

    auto variant_by_name = [&](const std::string& name) -> const AblationVariant& {
        for (const auto& v : result.variants) {
            if (v.name == name) return v;
        }
        throw DomainError("run_ablation: unknown variant " + name);
    };

    auto compare = [&](const std::string& a, const std::string& b) {
        AblationComparison cmp;
        cmp.label = a + " vs " + b;
        std::vector<double> va, vb;
        for (const auto& eid : result.episode_ids) {
            va.push_back(variant_by_name(a).scores.at(eid));
            vb.push_back(variant_by_name(b).scores.at(eid));
        }
        try {
            cmp.t = stats::paired_t(va, vb);
        } catch (const DomainError& e) {
            cmp.note = std::string("no variance: ") + e.what();
        }
        result.comparisons.push_back(std::move(cmp));
    };

    compare("vlm_combined", "cnn_combined");
    compare("vlm_emotion_only", "cnn_emotion_only");
    compare("vlm_objects_only", "cnn_objects_only");
    return result;
}

Study2Result run_study2(const corpus::Corpus& corpus,
                        const std::vector<session::SessionLog>& logs,
                        embed::EmbeddingBackend& backend, const PipelineOptions& options) {
    Study2Result result;
    result.norm_hash = options.norm.config_hash();

    // ER/self-report alignment over ea sessions. The self-report paired with
    // the clip is the one collected right after the failed delivery
    // (delivery_index 2).
    std::vector<const session::SessionLog*> ea_logs;
    for (const auto& log : logs) {
        if (log.condition == corpus::Condition::ea) ea_logs.push_back(&log);
    }
    result.sessions_total = static_cast<int>(ea_logs.size());
    for (const auto* log : ea_logs) {
        if (!log->clip.has_value()) {
            ++result.sessions_excluded;
            result.exclusions.push_back(log->participant_id + ": no recorded clip");
            continue;
        }
        if (!log->er_output.has_value()) {
            ++result.sessions_excluded;
            result.exclusions.push_back(log->participant_id + ": no emotion-recognition output");
            continue;
        }
        const auto* report =
            corpus.find_self_report(log->participant_id, corpus::Condition::ea, 2);
        if (!report) {
            ++result.sessions_excluded;
            result.exclusions.push_back(log->participant_id + ": no matching self-report");
            continue;
        }
        const auto er_norm = textnorm::normalize(*log->er_output, options.norm);
        const auto report_norm = textnorm::normalize(report->text, options.norm);
        const double score =
            embed::cosine(embed::embed(er_norm, backend), embed::embed(report_norm, backend));
        result.alignment[log->participant_id] = score;
    }
    {
        std::vector<double> values;
        for (const auto& [pid, v] : result.alignment) values.push_back(v);
        if (!values.empty()) {
            result.alignment_mean = mean_in_order(values);
            result.alignment_sd = sample_sd(values, result.alignment_mean);
        }
    }

    // preference binomial
    std::map<std::string, corpus::Condition> preference;
    for (const auto& p : corpus.preferences) {
        preference[p.participant_id] = p.choice;
        if (p.choice == corpus::Condition::ea) ++result.preference_ea;
        else ++result.preference_control;
    }
    const int n_pref = result.preference_ea + result.preference_control;
    if (n_pref > 0) {
        result.preference_binomial_p =
            stats::binomial_two_tailed(result.preference_ea, n_pref, 0.5);
    }

    // alignment by preference group
    {
        std::vector<double> ea_group, control_group;
        for (const auto& [pid, score] : result.alignment) {
            auto it = preference.find(pid);
            if (it == preference.end()) continue;
            if (it->second == corpus::Condition::ea) ea_group.push_back(score);
            else control_group.push_back(score);
        }
        if (!ea_group.empty() && !control_group.empty()) {
            result.preference_alignment_mwu = stats::mann_whitney_u(ea_group, control_group);
        } else {
            result.notes.push_back("alignment-by-preference comparison skipped: a group is empty");
        }
    }

    const std::vector<corpus::Phase> post_phases = {corpus::Phase::success, corpus::Phase::control,
                                                    corpus::Phase::ea};
    const std::vector<std::string> condition_names = {"success", "control", "ea"};

    // questionnaire lookup: instrument/subscale/phase/participant -> score
    auto find_score = [&](corpus::Instrument instrument, const std::string& subscale,
                          corpus::Phase phase,
                          const std::string& pid) -> std::optional<double> {
        for (const auto& q : corpus.questionnaires) {
            if (q.instrument == instrument && q.subscale == subscale && q.phase == phase &&
                q.participant_id == pid) {
                return q.score;
            }
        }
        return std::nullopt;
    };

    std::set<std::string> participants;
    for (const auto& q : corpus.questionnaires) participants.insert(q.participant_id);

    // HRC subscales: Friedman across the three conditions + normality
    for (const std::string subscale : {"fluency", "trust", "alliance"}) {
        std::vector<std::vector<double>> matrix;
        std::vector<double> pooled;
        for (const auto& pid : participants) {
            std::vector<double> row;
            for (auto phase : post_phases) {
                if (auto s = find_score(corpus::Instrument::hrc, subscale, phase, pid)) {
                    row.push_back(*s);
                }
            }
            if (row.size() == post_phases.size()) {
                matrix.push_back(row);
                pooled.insert(pooled.end(), row.begin(), row.end());
            } else if (!row.empty()) {
                result.notes.push_back("hrc/" + subscale + ": participant " + pid +
                                       " lacks a condition, excluded from Friedman");
            }
        }
        if (matrix.size() >= 2) {
            result.friedman_hrc[subscale] = stats::friedman(matrix);
        } else {
            result.notes.push_back("hrc/" + subscale + ": not enough complete participants");
        }
        if (pooled.size() >= 20) {
            result.normality["hrc/" + subscale] = stats::dagostino_pearson(pooled);
        }

        std::vector<stats::Group> conditions;
        for (std::size_t c = 0; c < post_phases.size(); ++c) {
            stats::Group g;
            g.name = condition_names[c];
            for (const auto& pid : participants) {
                if (auto s = find_score(corpus::Instrument::hrc, subscale, post_phases[c], pid)) {
                    g.values.push_back(*s);
                }
            }
            conditions.push_back(std::move(g));
        }
        if (std::all_of(conditions.begin(), conditions.end(),
                        [](const stats::Group& g) { return g.values.size() >= 2; })) {
            stats::BayesOptions bopt;
            bopt.seed = options.seed;
            result.bayes["hrc/" + subscale] = stats::bayes_contrasts(conditions, bopt);
        }
    }

    // Godspeed subscales: ANCOVA with the pre-study score as covariate
    for (const std::string subscale :
         {"anthropomorphism", "animacy", "likeability", "intelligence", "safety"}) {
        std::vector<double> post, covariate;
        std::vector<std::string> group;
        bool any_scores = false;
        for (const auto& pid : participants) {
            const auto pre = find_score(corpus::Instrument::godspeed, subscale, corpus::Phase::pre, pid);
            bool has_post = false;
            for (std::size_t c = 0; c < post_phases.size(); ++c) {
                if (auto s = find_score(corpus::Instrument::godspeed, subscale, post_phases[c], pid)) {
                    has_post = true;
                    any_scores = true;
                    if (pre) {
                        post.push_back(*s);
                        covariate.push_back(*pre);
                        group.push_back(condition_names[c]);
                    }
                }
            }
            if (has_post && !pre) {
                result.notes.push_back("godspeed/" + subscale + ": participant " + pid +
                                       " lacks a pre-study score, excluded from ANCOVA");
            }
        }
        if (!any_scores) continue;
        if (post.size() >= 8) {
            try {
                result.ancova_godspeed[subscale] = stats::ancova(post, group, covariate);
            } catch (const DomainError& e) {
                result.notes.push_back("godspeed/" + subscale + ": ANCOVA skipped: " + e.what());
            }
        } else {
            result.notes.push_back("godspeed/" + subscale + ": too few rows for ANCOVA");
        }

        std::vector<stats::Group> conditions;
        for (std::size_t c = 0; c < post_phases.size(); ++c) {
            stats::Group g;
            g.name = condition_names[c];
            for (const auto& pid : participants) {
                if (auto s = find_score(corpus::Instrument::godspeed, subscale, post_phases[c], pid)) {
                    g.values.push_back(*s);
                }
            }
            conditions.push_back(std::move(g));
        }
        if (std::all_of(conditions.begin(), conditions.end(),
                        [](const stats::Group& g) { return g.values.size() >= 2; })) {
            stats::BayesOptions bopt;
            bopt.seed = options.seed;
            result.bayes["godspeed/" + subscale] = stats::bayes_contrasts(conditions, bopt);
        }
    }

    return result;
}

std::set<ReportFormat> report_formats_from_strings(const std::vector<std::string>& names) {
    std::set<ReportFormat> out;
    for (const auto& name : names) {
        if (name == "markdown") out.insert(ReportFormat::markdown);
        else if (name == "csv") out.insert(ReportFormat::csv);
        else if (name == "json") out.insert(ReportFormat::json);
        else throw ParseError("unknown report format: " + name);
    }
    return out;
}

namespace {

void emit_common(const std::filesystem::path& out_dir, const std::set<ReportFormat>& formats,
                 const RunMeta& meta, const std::string& name, const std::string& markdown,
                 const std::string& csv, std::vector<std::filesystem::path>& written) {
    std::filesystem::create_directories(out_dir);
    if (formats.count(ReportFormat::markdown)) {
        const auto path = out_dir / (name + ".md");
        atomic_write_file(path, markdown);
        written.push_back(path);
    }
    if (formats.count(ReportFormat::csv)) {
        const auto path = out_dir / (name + ".csv");
        atomic_write_file(path, csv);
        written.push_back(path);
    }
    if (formats.count(ReportFormat::json)) {
        write_run_json(out_dir, meta, written);
    }
}

} // namespace

std::vector<std::filesystem::path> emit_study1(const Study1Result& result,
                                               const std::filesystem::path& out_dir,
                                               const std::set<ReportFormat>& formats,
                                               const RunMeta& meta) {
    std::ostringstream md;
    header_lines(md, "Study 1: semantic and sentiment alignment", meta);
    md << "Episodes: " << result.episode_ids.size() << ", models: " << result.model_ids.size()
       << "\n\n";
    md << "## Semantic similarity (" << embed::to_string(result.mode) << ")\n\n";
    metric_block_markdown(md, result.similarity, result.model_ids);
    md << "## Compound sentiment difference (model minus human)\n\n";
    metric_block_markdown(md, result.sentiment_diff, result.model_ids);

    std::ostringstream csv;
    csv << "metric,model_id,episode_id,value\n";
    for (const auto& [metric, block] :
         {std::pair<std::string, const MetricBlock*>{"similarity", &result.similarity},
          {"sentiment_diff", &result.sentiment_diff}}) {
        for (const auto& model : result.model_ids) {
            for (const auto& eid : result.episode_ids) {
                csv << metric << "," << model << "," << eid << ","
                    << fmt6(block->table.at(model).at(eid)) << "\n";
            }
            csv << metric << "_mean," << model << ",," << fmt6(block->mean.at(model)) << "\n";
            csv << metric << "_sd," << model << ",," << fmt6(block->sd.at(model)) << "\n";
        }
        csv << metric << "_anova_F,,," << fmt6(block->anova.statistic) << "\n";
        csv << metric << "_anova_p,,," << fmt6(block->anova.p_value) << "\n";
    }

    std::vector<std::filesystem::path> written;
    emit_common(out_dir, formats, meta, "study1", md.str(), csv.str(), written);
    return written;
}

std::vector<std::filesystem::path> emit_ablation(const AblationResult& result,
                                                 const std::filesystem::path& out_dir,
                                                 const std::set<ReportFormat>& formats,
                                                 const RunMeta& meta) {
    std::ostringstream md;
    header_lines(md, "Ablation: label-format model variants", meta);
    md << "Episodes scored: " << result.episode_ids.size() << ", unparseable classifier outputs: "
       << result.unparseable_count << "\n\n";
    md << "| variant | M | SD |\n|---|---|---|\n";
    for (const auto& v : result.variants) {
        md << "| " << v.name << " | " << fmt3(v.mean) << " | " << fmt3(v.sd) << " |\n";
    }
    md << "\n## Paired comparisons\n\n";
    for (const auto& cmp : result.comparisons) {
        md << "- " << cmp.label << ": ";
        if (cmp.t) {
            md << "t(" << df_string(cmp.t->df) << ") = " << fmt3(cmp.t->statistic)
               << ", p = " << fmtp(cmp.t->p_value);
        } else {
            md << cmp.note;
        }
        md << "\n";
    }
    if (!result.unparseable_episodes.empty()) {
        md << "\nExcluded episodes (unparseable classifier output):";
        for (const auto& eid : result.unparseable_episodes) md << " " << eid;
        md << "\n";
    }

    std::ostringstream csv;
    csv << "variant,episode_id,value\n";
    for (const auto& v : result.variants) {
        for (const auto& eid : result.episode_ids) {
            csv << v.name << "," << eid << "," << fmt6(v.scores.at(eid)) << "\n";
        }
        csv << v.name << "_mean,," << fmt6(v.mean) << "\n";
        csv << v.name << "_sd,," << fmt6(v.sd) << "\n";
    }

    std::vector<std::filesystem::path> written;
    emit_common(out_dir, formats, meta, "ablation", md.str(), csv.str(), written);
    return written;
}

std::vector<std::filesystem::path> emit_study2(const Study2Result& result,
                                               const std::filesystem::path& out_dir,
                                               const std::set<ReportFormat>& formats,
                                               const RunMeta& meta) {
    std::ostringstream md;
    header_lines(md, "Study 2: emotion-adaptive delivery", meta);

    md << "## Preference\n\n";
    md << "- ea: " << result.preference_ea << ", control: " << result.preference_control
       << ", exact binomial two-tailed p = " << fmtp(result.preference_binomial_p) << "\n\n";

    md << "## ER / self-report alignment\n\n";
    md << "- sessions: " << result.sessions_total << ", excluded: " << result.sessions_excluded
       << ", scored: " << result.alignment.size() << "\n";
    md << "- alignment: M=" << fmt3(result.alignment_mean) << ", SD=" << fmt3(result.alignment_sd)
       << "\n";
    if (result.preference_alignment_mwu) {
        const auto& mwu = *result.preference_alignment_mwu;
        md << "- alignment by preference group (Mann-Whitney): U = " << fmt3(mwu.statistic)
           << ", p = " << fmtp(mwu.p_value) << "\n";
    }
    md << "\n## HRC subscales (Friedman)\n\n";
    for (const auto& [subscale, r] : result.friedman_hrc) {
        md << "- " << subscale << ": chi2(" << df_string(r.df) << ") = " << fmt3(r.statistic)
           << ", p = " << fmtp(r.p_value) << "\n";
    }
    md << "\n## Godspeed subscales (ANCOVA, pre-study covariate)\n\n";
    for (const auto& [subscale, r] : result.ancova_godspeed) {
        md << "- " << subscale << ": F(" << df_string(r.df) << ") = " << fmt3(r.statistic)
           << ", p = " << fmtp(r.p_value) << "\n";
    }
    if (!result.normality.empty()) {
        md << "\n## Normality checks (D'Agostino-Pearson)\n\n";
        for (const auto& [key, r] : result.normality) {
            md << "- " << key << ": K2 = " << fmt3(r.statistic) << ", p = " << fmtp(r.p_value)
               << "\n";
        }
    }
    md << "\n## Bayesian contrasts (" << fmt3(0.95) << " HDI)\n\n";
    md << "| subscale | contrast | mean | HDI low | HDI high | P(>0) |\n";
    md << "|---|---|---|---|---|---|\n";
    // the three canonical directions: control-success, ea-success, ea-control
    const std::vector<std::string> canonical = {"control - success", "ea - success",
                                                "ea - control"};
    for (const auto& [subscale, contrasts] : result.bayes) {
        for (const auto& label : canonical) {
            for (const auto& c : contrasts) {
                if (c.label == label) {
                    md << "| " << subscale << " | " << c.label << " | " << fmt3(c.mean) << " | "
                       << fmt3(c.hdi_low) << " | " << fmt3(c.hdi_high) << " | "
                       << fmt3(c.prob_gt_zero) << " |\n";
                }
            }
        }
    }
    if (!result.notes.empty()) {
        md << "\n## Notes\n\n";
        for (const auto& note : result.notes) md << "- " << note << "\n";
    }
    if (!result.exclusions.empty()) {
        md << "\n## Exclusions\n\n";
        for (const auto& e : result.exclusions) md << "- " << e << "\n";
    }

    std::ostringstream csv;
    csv << "table,key,value\n";
    csv << "preference,ea," << result.preference_ea << "\n";
    csv << "preference,control," << result.preference_control << "\n";
    csv << "preference,binomial_p," << fmt6(result.preference_binomial_p) << "\n";
    for (const auto& [pid, score] : result.alignment) {
        csv << "alignment," << pid << "," << fmt6(score) << "\n";
    }
    csv << "alignment,mean," << fmt6(result.alignment_mean) << "\n";
    csv << "alignment,sd," << fmt6(result.alignment_sd) << "\n";
    for (const auto& [subscale, r] : result.friedman_hrc) {
        csv << "friedman_chi2," << subscale << "," << fmt6(r.statistic) << "\n";
        csv << "friedman_p," << subscale << "," << fmt6(r.p_value) << "\n";
    }
    for (const auto& [subscale, r] : result.ancova_godspeed) {
        csv << "ancova_F," << subscale << "," << fmt6(r.statistic) << "\n";
        csv << "ancova_p," << subscale << "," << fmt6(r.p_value) << "\n";
    }
    for (const auto& [subscale, contrasts] : result.bayes) {
        for (const auto& c : contrasts) {
            csv << "bayes_mean," << subscale << "/" << c.label << "," << fmt6(c.mean) << "\n";
            csv << "bayes_hdi_low," << subscale << "/" << c.label << "," << fmt6(c.hdi_low) << "\n";
            csv << "bayes_hdi_high," << subscale << "/" << c.label << "," << fmt6(c.hdi_high)
                << "\n";
            csv << "bayes_p_gt_zero," << subscale << "/" << c.label << "," << fmt6(c.prob_gt_zero)
                << "\n";
        }
    }

    std::vector<std::filesystem::path> written;
    emit_common(out_dir, formats, meta, "study2", md.str(), csv.str(), written);
    return written;
}

} // namespace ehk::eval
