#pragma once
// One interaction session: condition-aware state machine over timestamped
// events, clip windowing around the delivery message, the two-step
// emotion -> apology chain, and an event-sourced JSONL log.

#include <json.hpp>

#include <filesystem>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "ehk/clock.hpp"
#include "ehk/corpus.hpp"
#include "ehk/ermodels.hpp"

namespace ehk::session {

using corpus::Condition;

inline constexpr const char* kBaseApology = "Apologies for the delay; here are your items.";

enum class EventKind {
    set_delivered,
    message_started,
    message_finished,
    failure_detected,
    clip_ready,
    er_done,
    apology_ready,
    redelivered,
};

EventKind event_kind_from_string(const std::string& s);
std::string to_string(EventKind k);

struct Event {
    double ts = 0.0; // seconds on the session clock
    EventKind kind = EventKind::set_delivered;
    nlohmann::json payload; // kind-specific fields
};

enum class Phase {
    idle,
    delivering,       // carries the set number
    message_playing,  // carries the set number
    observing,
    inferring,
    apologizing,
    redelivering,
    done,
};

std::string to_string(Phase p);

struct ClipSpec {
    double start_ts = 0.0; // message start
    double end_ts = 0.0;   // message end + 5 s
    std::string source;
};

struct ApologyPlan {
    std::string base_text = kBaseApology;
    std::string er_context;     // empty for control
    std::string generated_text; // == base_text for control
    bool fallback = false;      // backend failed, degraded to the base text
};

// start..end of the clip window: the message playback plus the five seconds
// after it finishes.
ClipSpec compute_clip_window(double message_start_ts, double message_end_ts,
                             const std::string& source = {});

struct SessionLog {
    std::string participant_id;
    Condition condition = Condition::success;
    std::vector<Event> events;
    std::optional<ClipSpec> clip;
    bool camera_failed = false;
    std::optional<std::string> er_output;
    ApologyPlan apology;
    std::vector<double> model_latencies;
    double message_start_ts = 0.0;
    double message_end_ts = 0.0;
    double wall_epoch_s = 0.0; // maps session seconds to UTC in the log
};

// The condition-aware state machine. Events must arrive with strictly
// increasing timestamps; illegal transitions throw StateError naming the
// current state and the event.
class Session {
public:
    Session(Condition condition, std::string participant_id, double wall_epoch_s = 0.0);

    void advance(const Event& event);
    Phase phase() const { return phase_; }
    int current_set() const { return set_; }
    bool done() const { return phase_ == Phase::done; }

    // Requires phase done; runs the log invariants (call counts by
    // condition, apology wording, timestamp order) and returns the log.
    SessionLog finalize() &&;

private:
    [[noreturn]] void illegal(const Event& event) const;

    Condition condition_;
    SessionLog log_;
    Phase phase_ = Phase::idle;
    int set_ = 0;
    bool message2_finished_ = false;
    double last_ts_ = -std::numeric_limits<double>::infinity();
};

// JSONL: one event object per line, ISO-8601 timestamps, final summary line.
std::string to_jsonl(const SessionLog& log);
SessionLog parse_jsonl(const std::string& text);

// Drives a fresh Session with the parsed events and checks it reproduces the
// same final state; returns the replayed log.
SessionLog replay(const SessionLog& log);

// study2/sessions/<participant_id>/<condition>.jsonl under session_root.
std::filesystem::path session_log_path(const std::filesystem::path& session_root,
                                       const std::string& participant_id, Condition condition);
void write_session_log(const SessionLog& log, const std::filesystem::path& session_root);
std::vector<SessionLog> load_session_logs(const std::filesystem::path& session_root);

struct SimOptions {
    double fps = 30.0;
    bool clip_from_message_end = false; // alternative window start
    bool camera_failure = false;        // clip recording fails, ER still runs
    double message_duration_s = 2.4;
};

// Runs one scripted session end to end on a manual clock. er_runner and
// apology_runner are used only in the ea condition; a failing ER/apology
// backend degrades to the base apology with the fallback flag set.
SessionLog run_simulated_session(Condition condition, const std::string& participant_id,
                                 ermodels::ModelRunner* er_runner,
                                 ermodels::ModelRunner* apology_runner, ManualClock& clock,
                                 const SimOptions& options = {});

// Success first for everyone; half the participants then get control before
// ea, the other half the reverse. Seeded and deterministic.
std::vector<std::pair<std::string, std::vector<Condition>>> counterbalance(
    const std::vector<std::string>& participant_ids, std::uint64_t seed);

} // namespace ehk::session
