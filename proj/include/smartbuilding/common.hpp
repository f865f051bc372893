#ifndef SMARTBUILDING_COMMON_HPP
#define SMARTBUILDING_COMMON_HPP

#include <chrono>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace sb {

/// Logical simulation tick. One tick is 100 ms of simulated time unless a
/// world is configured otherwise.
using Tick = std::int64_t;

using Duration = std::chrono::milliseconds;
using Timestamp = std::chrono::sys_time<Duration>;

inline constexpr Duration kDefaultTickLength{100};

/// 2017-03-01T00:00:00Z, the default wall-clock origin of tick 0.
inline constexpr Timestamp kDefaultEpoch{Duration{1488326400000LL}};

/// Maps logical ticks onto UTC wall-clock time.
struct TickClock {
    Timestamp epoch = kDefaultEpoch;
    Duration tick_length = kDefaultTickLength;

    Timestamp to_time(Tick t) const { return epoch + tick_length * t; }
    /// Ticks covering `d`, rounded down.
    Tick ticks_in(Duration d) const { return d / tick_length; }
    double tick_seconds() const { return std::chrono::duration<double>(tick_length).count(); }
};

/// Half-open wall-clock interval [from, to).
struct TimeRange {
    Timestamp from;
    Timestamp to;

    bool contains(Timestamp t) const { return from <= t && t < to; }
    bool empty() const { return to <= from; }
};

/// `YYYY-MM-DDTHH:MM:SS.mmmZ`
std::string format_iso8601(Timestamp t);

/// Strict inverse of format_iso8601; nullopt on any deviation.
std::optional<Timestamp> parse_iso8601(std::string_view text);

std::int64_t to_millis(Timestamp t);
Timestamp from_millis(std::int64_t ms);

/// Six colon-separated hex octets, e.g. `c8:0f:10:aa:01:ff`.
bool is_valid_mac(std::string_view mac);

/// Exception carrying a module-specific error code. Each module defines its
/// own code enum plus a `to_string(Code)` found by ADL.
template <typename Code>
class Error : public std::runtime_error {
public:
    Error(Code code, const std::string& detail)
        : std::runtime_error(std::string(to_string(code)) + (detail.empty() ? "" : ": " + detail)),
          code_(code), detail_(detail) {}

    Code code() const noexcept { return code_; }
    const std::string& detail() const noexcept { return detail_; }

private:
    Code code_;
    std::string detail_;
};

}  // namespace sb

#endif  // SMARTBUILDING_COMMON_HPP
