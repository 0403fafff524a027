#include "ehk/clock.hpp"

#include <cmath>
#include <cstdio>
#include <ctime>

namespace ehk {

std::string iso8601_utc(double unix_seconds) {
    double whole = std::floor(unix_seconds);
    int millis = static_cast<int>(std::lround((unix_seconds - whole) * 1000.0));
    if (millis >= 1000) {
        millis -= 1000;
        whole += 1.0;
    }
    std::time_t t = static_cast<std::time_t>(whole);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%04d-%02d-%02dT%02d:%02d:%02d.%03dZ",
                  tm.tm_year + 1900, tm.tm_mon + 1, tm.tm_mday,
                  tm.tm_hour, tm.tm_min, tm.tm_sec, millis);
    return buf;
}

} // namespace ehk
