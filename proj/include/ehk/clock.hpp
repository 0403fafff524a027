#pragma once

#include <chrono>
#include <string>
#include <thread>

namespace ehk {

// Injectable time source. now_s() is seconds since the clock's epoch;
// wall_epoch_s() maps clock time onto UTC for log timestamps.
class Clock {
public:
    virtual ~Clock() = default;
    virtual double now_s() = 0;
    virtual void sleep_s(double seconds) = 0;
    virtual double wall_epoch_s() { return 0.0; }
};

class SystemClock final : public Clock {
public:
    SystemClock()
        : start_(std::chrono::steady_clock::now()),
          wall_start_s_(std::chrono::duration<double>(
                            std::chrono::system_clock::now().time_since_epoch())
                            .count()) {}

    double now_s() override {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    }

    void sleep_s(double seconds) override {
        if (seconds > 0) std::this_thread::sleep_for(std::chrono::duration<double>(seconds));
    }

    double wall_epoch_s() override { return wall_start_s_; }

private:
    std::chrono::steady_clock::time_point start_;
    double wall_start_s_;
};

// Manually advanced clock for tests and simulated sessions. sleep_s
// advances time instead of blocking.
class ManualClock final : public Clock {
public:
    explicit ManualClock(double start_s = 0.0, double wall_epoch_s = kDefaultEpoch)
        : t_(start_s), wall_epoch_(wall_epoch_s) {}

    double now_s() override { return t_; }
    void sleep_s(double seconds) override { t_ += seconds; }
    void advance(double seconds) { t_ += seconds; }
    double wall_epoch_s() override { return wall_epoch_; }

    // 2026-01-01T00:00:00Z
    static constexpr double kDefaultEpoch = 1767225600.0;

private:
    double t_;
    double wall_epoch_;
};

// "2026-01-01T00:00:01.250Z" (millisecond precision, always UTC).
std::string iso8601_utc(double unix_seconds);

} // namespace ehk
