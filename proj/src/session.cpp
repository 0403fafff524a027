#include "ehk/session.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "ehk/errors.hpp"
#include "ehk/fsutil.hpp"
#include "ehk/hash.hpp"
#include "ehk/rng.hpp"

namespace ehk::session {

namespace {

const std::map<std::string, EventKind>& event_kinds() {
    static const std::map<std::string, EventKind> kinds = {
        {"set_delivered", EventKind::set_delivered},
        {"message_started", EventKind::message_started},
        {"message_finished", EventKind::message_finished},
        {"failure_detected", EventKind::failure_detected},
        {"clip_ready", EventKind::clip_ready},
        {"er_done", EventKind::er_done},
        {"apology_ready", EventKind::apology_ready},
        {"redelivered", EventKind::redelivered},
    };
    return kinds;
}

} // namespace

EventKind event_kind_from_string(const std::string& s) {
    auto it = event_kinds().find(s);
    if (it == event_kinds().end()) {
        throw ParseError("unknown session event kind: " + s);
    }
    return it->second;
}

std::string to_string(EventKind k) {
    for (const auto& [name, kind] : event_kinds()) {
        if (kind == k) return name;
    }
    return "?";
}

std::string to_string(Phase p) {
    switch (p) {
        case Phase::idle: return "idle";
        case Phase::delivering: return "delivering";
        case Phase::message_playing: return "message_playing";
        case Phase::observing: return "observing";
        case Phase::inferring: return "inferring";
        case Phase::apologizing: return "apologizing";
        case Phase::redelivering: return "redelivering";
        case Phase::done: return "done";
    }
    return "?";
}

ClipSpec compute_clip_window(double message_start_ts, double message_end_ts,
                             const std::string& source) {
    if (message_end_ts < message_start_ts) {
        throw DomainError("compute_clip_window: message end precedes message start");
    }
    ClipSpec clip;
    clip.start_ts = message_start_ts;
    clip.end_ts = message_end_ts + 5.0;
    clip.source = source;
    return clip;
}

Session::Session(Condition condition, std::string participant_id, double wall_epoch_s)
    : condition_(condition) {
    log_.participant_id = std::move(participant_id);
    log_.condition = condition;
    log_.wall_epoch_s = wall_epoch_s;
}

void Session::illegal(const Event& event) const {
    std::ostringstream msg;
    msg << "illegal session event '" << to_string(event.kind) << "' in state '"
        << to_string(phase_);
    if (phase_ == Phase::delivering || phase_ == Phase::message_playing) {
        msg << "(" << set_ << ")";
    }
    msg << "' (condition " << corpus::to_string(condition_) << ")";
    throw StateError(msg.str());
}

void Session::advance(const Event& event) {
    if (!(event.ts > last_ts_)) {
        throw StateError("session event timestamps must strictly increase (got " +
                         std::to_string(event.ts) + " after " + std::to_string(last_ts_) + ")");
    }

    switch (event.kind) {
        case EventKind::set_delivered: {
            const int set = event.payload.value("set", 0);
            if (phase_ == Phase::idle && set == 1) {
                phase_ = Phase::delivering;
                set_ = 1;
            } else if (phase_ == Phase::delivering && set_ == 2 && set == 2) {
                // arrival of set 2; for control/ea this is the too-far stop
            } else {
                illegal(event);
            }
            break;
        }
        case EventKind::message_started: {
            if (phase_ != Phase::delivering) illegal(event);
            phase_ = Phase::message_playing;
            log_.message_start_ts = event.ts;
            break;
        }
        case EventKind::message_finished: {
            if (phase_ != Phase::message_playing) illegal(event);
            log_.message_end_ts = event.ts;
            if (set_ == 1) {
                phase_ = Phase::delivering;
                set_ = 2;
            } else if (condition_ == Condition::success) {
                phase_ = Phase::done;
            } else {
                // control/ea hold in message_playing until the pre-designed
                // failure is injected
                message2_finished_ = true;
            }
            break;
        }
        case EventKind::failure_detected: {
            if (condition_ == Condition::success || phase_ != Phase::message_playing ||
                set_ != 2 || !message2_finished_) {
                illegal(event);
            }
            phase_ = Phase::observing;
            break;
        }
        case EventKind::clip_ready: {
            if (phase_ != Phase::observing) illegal(event);
            if (event.payload.value("camera_failed", false)) {
                log_.camera_failed = true;
            } else {
                ClipSpec clip;
                clip.start_ts = event.payload.at("start_ts").get<double>();
                clip.end_ts = event.payload.at("end_ts").get<double>();
                clip.source = event.payload.value("source", "");
                log_.clip = clip;
            }
            phase_ = (condition_ == Condition::ea) ? Phase::inferring : Phase::apologizing;
            break;
        }
        case EventKind::er_done: {
            if (phase_ != Phase::inferring || condition_ != Condition::ea) illegal(event);
            if (event.payload.value("fallback", false)) {
                // inference failed; the apology degrades to the base text
            } else {
                log_.er_output = event.payload.at("text").get<std::string>();
                log_.model_latencies.push_back(event.payload.value("latency_s", 0.0));
            }
            phase_ = Phase::apologizing;
            break;
        }
        case EventKind::apology_ready: {
            if (phase_ != Phase::apologizing) illegal(event);
            ApologyPlan plan;
            plan.generated_text = event.payload.at("text").get<std::string>();
            plan.er_context = event.payload.value("er_context", "");
            plan.fallback = event.payload.value("fallback", false);
            if (condition_ == Condition::control && plan.generated_text != plan.base_text) {
                throw StateError("control apology must equal the base text byte for byte");
            }
            if (condition_ == Condition::ea && !plan.fallback && plan.er_context.empty()) {
                throw StateError("ea apology requires a nonempty emotion context");
            }
            if (event.payload.contains("latency_s")) {
                log_.model_latencies.push_back(event.payload.at("latency_s").get<double>());
            }
            log_.apology = std::move(plan);
            phase_ = Phase::redelivering;
            break;
        }
        case EventKind::redelivered: {
            if (phase_ != Phase::redelivering) illegal(event);
            phase_ = Phase::done;
            break;
        }
    }

    last_ts_ = event.ts;
    log_.events.push_back(event);
}

SessionLog Session::finalize() && {
    if (phase_ != Phase::done) {
        throw StateError("finalize before done (state '" + to_string(phase_) + "')");
    }
    for (std::size_t i = 1; i < log_.events.size(); ++i) {
        if (!(log_.events[i].ts > log_.events[i - 1].ts)) {
            throw StateError("finalize: event timestamps are not strictly increasing");
        }
    }
    const std::size_t calls = log_.model_latencies.size();
    switch (condition_) {
        case Condition::success:
            if (calls != 0 || log_.clip.has_value() || log_.er_output.has_value()) {
                throw StateError("success session must have no model calls and no clip");
            }
            break;
        case Condition::control:
            if (calls != 0) {
                throw StateError("control session must make no model calls");
            }
            if (log_.apology.generated_text != log_.apology.base_text) {
                throw StateError("control apology must equal the base text");
            }
            break;
        case Condition::ea:
            if (!log_.apology.fallback && calls != 2) {
                throw StateError("ea session must log exactly 2 model calls, got " +
                                 std::to_string(calls));
            }
            break;
    }
    if (log_.clip) {
        const double expect = (log_.message_end_ts - log_.message_start_ts) + 5.0;
        const double got = log_.clip->end_ts - log_.clip->start_ts;
        // clip_from_message_end shortens the window by the message duration
        const double alt = 5.0;
        if (std::fabs(got - expect) > 1e-9 && std::fabs(got - alt) > 1e-9) {
            throw StateError("clip window does not match the message timestamps");
        }
    }
    return std::move(log_);
}

std::string to_jsonl(const SessionLog& log) {
    std::ostringstream out;
    for (const auto& e : log.events) {
        nlohmann::json line;
        line["ts"] = iso8601_utc(log.wall_epoch_s + e.ts);
        line["t"] = e.ts; // full-precision seconds for exact replay
        line["kind"] = to_string(e.kind);
        line["payload"] = e.payload.is_null() ? nlohmann::json::object() : e.payload;
        out << line.dump() << "\n";
    }
    nlohmann::json summary;
    summary["kind"] = "summary";
    summary["participant_id"] = log.participant_id;
    summary["condition"] = corpus::to_string(log.condition);
    summary["wall_epoch_s"] = log.wall_epoch_s;
    summary["camera_failed"] = log.camera_failed;
    if (log.clip) {
        summary["clip"] = {{"start_ts", log.clip->start_ts},
                           {"end_ts", log.clip->end_ts},
                           {"source", log.clip->source}};
    } else {
        summary["clip"] = nullptr;
    }
    if (log.er_output) summary["er_output"] = *log.er_output;
    else summary["er_output"] = nullptr;
    summary["apology"] = {{"base_text", log.apology.base_text},
                          {"er_context", log.apology.er_context},
                          {"generated_text", log.apology.generated_text},
                          {"fallback", log.apology.fallback}};
    summary["model_latencies"] = log.model_latencies;
    summary["message_start_ts"] = log.message_start_ts;
    summary["message_end_ts"] = log.message_end_ts;
    out << summary.dump() << "\n";
    return out.str();
}

SessionLog parse_jsonl(const std::string& text) {
    SessionLog log;
    std::istringstream in(text);
    std::string line;
    bool saw_summary = false;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        nlohmann::json parsed;
        try {
            parsed = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception& e) {
            throw ParseError(std::string("session log: bad JSONL line: ") + e.what());
        }
        const std::string kind = parsed.at("kind").get<std::string>();
        if (kind == "summary") {
            saw_summary = true;
            log.participant_id = parsed.at("participant_id").get<std::string>();
            log.condition = corpus::condition_from_string(parsed.at("condition").get<std::string>());
            log.wall_epoch_s = parsed.value("wall_epoch_s", 0.0);
            log.camera_failed = parsed.value("camera_failed", false);
            if (!parsed.at("clip").is_null()) {
                ClipSpec clip;
                clip.start_ts = parsed["clip"].at("start_ts").get<double>();
                clip.end_ts = parsed["clip"].at("end_ts").get<double>();
                clip.source = parsed["clip"].value("source", "");
                log.clip = clip;
            }
            if (!parsed.at("er_output").is_null()) {
                log.er_output = parsed.at("er_output").get<std::string>();
            }
            log.apology.base_text = parsed["apology"].at("base_text").get<std::string>();
            log.apology.er_context = parsed["apology"].value("er_context", "");
            log.apology.generated_text = parsed["apology"].at("generated_text").get<std::string>();
            log.apology.fallback = parsed["apology"].value("fallback", false);
            log.model_latencies = parsed.at("model_latencies").get<std::vector<double>>();
            log.message_start_ts = parsed.value("message_start_ts", 0.0);
            log.message_end_ts = parsed.value("message_end_ts", 0.0);
        } else {
            Event e;
            e.ts = parsed.at("t").get<double>();
            e.kind = event_kind_from_string(kind);
            e.payload = parsed.value("payload", nlohmann::json::object());
            log.events.push_back(std::move(e));
        }
    }
    if (!saw_summary) {
        throw ParseError("session log: missing summary line");
    }
    return log;
}

SessionLog replay(const SessionLog& log) {
    Session session(log.condition, log.participant_id, log.wall_epoch_s);
    for (const auto& e : log.events) {
        session.advance(e);
    }
    SessionLog replayed = std::move(session).finalize();
    const bool same_clip = (replayed.clip.has_value() == log.clip.has_value()) &&
                           (!replayed.clip ||
                            (std::fabs(replayed.clip->start_ts - log.clip->start_ts) < 1e-9 &&
                             std::fabs(replayed.clip->end_ts - log.clip->end_ts) < 1e-9));
    if (!same_clip || replayed.er_output != log.er_output ||
        replayed.apology.generated_text != log.apology.generated_text ||
        replayed.model_latencies != log.model_latencies) {
        throw StateError("replay diverged from the recorded session log");
    }
    return replayed;
}

std::filesystem::path session_log_path(const std::filesystem::path& session_root,
                                       const std::string& participant_id, Condition condition) {
    return session_root / "study2" / "sessions" / participant_id /
           (corpus::to_string(condition) + ".jsonl");
}

void write_session_log(const SessionLog& log, const std::filesystem::path& session_root) {
    atomic_write_file(session_log_path(session_root, log.participant_id, log.condition),
                      to_jsonl(log));
}

std::vector<SessionLog> load_session_logs(const std::filesystem::path& session_root) {
    const auto dir = session_root / "study2" / "sessions";
    std::vector<std::filesystem::path> files;
    if (std::filesystem::exists(dir)) {
        for (const auto& entry : std::filesystem::recursive_directory_iterator(dir)) {
            if (entry.is_regular_file() && entry.path().extension() == ".jsonl") {
                files.push_back(entry.path());
            }
        }
    }
    std::sort(files.begin(), files.end());
    std::vector<SessionLog> logs;
    for (const auto& f : files) {
        logs.push_back(parse_jsonl(read_file_bytes(f)));
    }
    return logs;
}

SessionLog run_simulated_session(Condition condition, const std::string& participant_id,
                                 ermodels::ModelRunner* er_runner,
                                 ermodels::ModelRunner* apology_runner, ManualClock& clock,
                                 const SimOptions& options) {
    Session session(condition, participant_id, clock.wall_epoch_s());
    auto emit = [&](EventKind kind, nlohmann::json payload = nlohmann::json::object()) {
        session.advance({clock.now_s(), kind, std::move(payload)});
    };

    // set 1
    clock.advance(1.0);
    emit(EventKind::set_delivered, {{"set", 1}});
    clock.advance(0.8);
    emit(EventKind::message_started);
    clock.advance(options.message_duration_s);
    emit(EventKind::message_finished);

    // set 2 (control/ea stop too far from the participant)
    clock.advance(3.0);
    emit(EventKind::set_delivered, {{"set", 2}, {"too_far", condition != Condition::success}});
    clock.advance(0.7);
    const double msg2_start = clock.now_s();
    emit(EventKind::message_started);
    clock.advance(options.message_duration_s);
    const double msg2_end = clock.now_s();
    emit(EventKind::message_finished);

    if (condition == Condition::success) {
        return std::move(session).finalize();
    }

    clock.advance(0.4);
    emit(EventKind::failure_detected, {{"reason", "stopped_too_far"}});

    const std::string source = "sim://" + participant_id + "/" + corpus::to_string(condition) + "/set2";
    ClipSpec clip = options.clip_from_message_end ? compute_clip_window(msg2_end, msg2_end, source)
                                                  : compute_clip_window(msg2_start, msg2_end, source);
    // recording runs to the end of the window, then the file closes on a
    // frame boundary
    const double raw_duration = clip.end_ts - clip.start_ts;
    const double frames = std::round(raw_duration * options.fps);
    const double clip_file_duration = frames / options.fps;
    if (clock.now_s() < clip.end_ts) {
        clock.advance(clip.end_ts - clock.now_s());
    }
    clock.advance(0.5);
    if (options.camera_failure) {
        emit(EventKind::clip_ready, {{"camera_failed", true}});
    } else {
        emit(EventKind::clip_ready, {{"start_ts", clip.start_ts},
                                     {"end_ts", clip.end_ts},
                                     {"source", clip.source},
                                     {"duration_file_s", clip_file_duration}});
    }

    std::string er_text;
    if (condition == Condition::ea) {
        const std::string clip_bytes = "clip:" + source; // synthetic media identity
        const std::string media_digest = sha256_hex(clip_bytes);
        bool er_ok = false;
        double er_latency = 0.0;
        if (er_runner) {
            try {
                const auto out = er_runner->run_prompt(participant_id + ":" +
                                                           corpus::to_string(condition),
                                                       "er_study2", {}, media_digest, {},
                                                       ermodels::OutputKind::generative);
                er_text = out.raw_text;
                er_latency = out.latency_s;
                er_ok = true;
            } catch (const Error&) {
                er_ok = false;
            }
        }
        clock.advance(std::max(er_latency, 0.05));
        if (er_ok) {
            emit(EventKind::er_done, {{"text", er_text}, {"latency_s", er_latency}});
        } else {
            emit(EventKind::er_done, {{"fallback", true}});
        }

        if (er_ok) {
            bool apology_ok = false;
            std::string apology_text;
            double apology_latency = 0.0;
            if (apology_runner) {
                try {
                    const auto out = apology_runner->run_prompt(
                        participant_id + ":" + corpus::to_string(condition), "apology_adapt",
                        {{"er_output", er_text}}, sha256_hex("text-only:" + er_text), {},
                        ermodels::OutputKind::generative);
                    apology_text = out.raw_text;
                    apology_latency = out.latency_s;
                    apology_ok = true;
                } catch (const Error&) {
                    apology_ok = false;
                }
            }
            clock.advance(std::max(apology_latency, 0.05));
            if (apology_ok) {
                emit(EventKind::apology_ready, {{"text", apology_text},
                                                {"latency_s", apology_latency},
                                                {"er_context", er_text}});
            } else {
                emit(EventKind::apology_ready,
                     {{"text", kBaseApology}, {"er_context", er_text}, {"fallback", true}});
            }
        } else {
            clock.advance(0.05);
            emit(EventKind::apology_ready, {{"text", kBaseApology}, {"fallback", true}});
        }
    } else {
        clock.advance(0.3);
        emit(EventKind::apology_ready, {{"text", kBaseApology}});
    }

    clock.advance(2.5);
    emit(EventKind::redelivered);
    return std::move(session).finalize();
}

std::vector<std::pair<std::string, std::vector<Condition>>> counterbalance(
    const std::vector<std::string>& participant_ids, std::uint64_t seed) {
    std::vector<std::string> ids = participant_ids;
    std::sort(ids.begin(), ids.end());
    Rng rng(seed);
    rng.shuffle(ids);
    std::vector<std::pair<std::string, std::vector<Condition>>> out;
    const std::size_t half = (ids.size() + 1) / 2;
    for (std::size_t i = 0; i < ids.size(); ++i) {
        if (i < half) {
            out.emplace_back(ids[i], std::vector<Condition>{Condition::success, Condition::control,
                                                            Condition::ea});
        } else {
            out.emplace_back(ids[i], std::vector<Condition>{Condition::success, Condition::ea,
                                                            Condition::control});
        }
    }
    std::sort(out.begin(), out.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
    return out;
}

} // namespace ehk::session
