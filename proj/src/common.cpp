#include "smartbuilding/common.hpp"
#include "smartbuilding/reading.hpp"

#include <array>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>

namespace sb {

namespace {

bool parse_fixed(std::string_view text, std::size_t pos, std::size_t len, int& out) {
    if (pos + len > text.size()) return false;
    int value = 0;
    for (std::size_t i = pos; i < pos + len; ++i) {
        const char c = text[i];
        if (c < '0' || c > '9') return false;
        value = value * 10 + (c - '0');
    }
    out = value;
    return true;
}

}  // namespace

std::int64_t to_millis(Timestamp t) { return t.time_since_epoch().count(); }

Timestamp from_millis(std::int64_t ms) { return Timestamp{Duration{ms}}; }

std::string format_iso8601(Timestamp t) {
    using namespace std::chrono;
    const auto day = floor<days>(t);
    const year_month_day ymd{day};
    const auto in_day = t - day;
    const auto h = duration_cast<hours>(in_day);
    const auto m = duration_cast<minutes>(in_day - h);
    const auto s = duration_cast<seconds>(in_day - h - m);
    const auto ms = duration_cast<milliseconds>(in_day - h - m - s);

    std::array<char, 40> buf{};
    std::snprintf(buf.data(), buf.size(), "%04d-%02u-%02uT%02d:%02d:%02d.%03dZ",
                  static_cast<int>(ymd.year()), static_cast<unsigned>(ymd.month()),
                  static_cast<unsigned>(ymd.day()), static_cast<int>(h.count()),
                  static_cast<int>(m.count()), static_cast<int>(s.count()),
                  static_cast<int>(ms.count()));
    return std::string(buf.data());
}

std::optional<Timestamp> parse_iso8601(std::string_view text) {
    using namespace std::chrono;
    // 2017-03-01T10:00:00.000Z
    if (text.size() != 24) return std::nullopt;
    if (text[4] != '-' || text[7] != '-' || text[10] != 'T' || text[13] != ':' ||
        text[16] != ':' || text[19] != '.' || text[23] != 'Z') {
        return std::nullopt;
    }
    int y = 0, mo = 0, d = 0, h = 0, mi = 0, s = 0, ms = 0;
    if (!parse_fixed(text, 0, 4, y) || !parse_fixed(text, 5, 2, mo) || !parse_fixed(text, 8, 2, d) ||
        !parse_fixed(text, 11, 2, h) || !parse_fixed(text, 14, 2, mi) ||
        !parse_fixed(text, 17, 2, s) || !parse_fixed(text, 20, 3, ms)) {
        return std::nullopt;
    }
    const year_month_day ymd{year{y}, month{static_cast<unsigned>(mo)}, day{static_cast<unsigned>(d)}};
    if (!ymd.ok() || h > 23 || mi > 59 || s > 59) return std::nullopt;
    return Timestamp{sys_days{ymd}} + hours{h} + minutes{mi} + seconds{s} + milliseconds{ms};
}

bool is_valid_mac(std::string_view mac) {
    if (mac.size() != 17) return false;
    for (std::size_t i = 0; i < mac.size(); ++i) {
        if (i % 3 == 2) {
            if (mac[i] != ':') return false;
        } else if (!std::isxdigit(static_cast<unsigned char>(mac[i]))) {
            return false;
        }
    }
    return true;
}

namespace {

constexpr std::array<std::string_view, 7> kKindNames = {
    "temperature", "humidity", "luminance", "door", "presence-beacon", "people-counter", "relay"};
constexpr std::array<std::string_view, 6> kUnitNames = {"celsius", "pct_rh", "lux", "bool", "count", "dbm"};

}  // namespace

std::string_view to_string(SensorKind kind) { return kKindNames[static_cast<std::size_t>(kind)]; }

std::string_view to_string(Unit unit) { return kUnitNames[static_cast<std::size_t>(unit)]; }

std::optional<SensorKind> parse_sensor_kind(std::string_view name) {
    for (std::size_t i = 0; i < kKindNames.size(); ++i) {
        if (kKindNames[i] == name) return static_cast<SensorKind>(i);
    }
    return std::nullopt;
}

std::optional<Unit> parse_unit(std::string_view name) {
    for (std::size_t i = 0; i < kUnitNames.size(); ++i) {
        if (kUnitNames[i] == name) return static_cast<Unit>(i);
    }
    return std::nullopt;
}

std::optional<Unit> unit_for(SensorKind kind) {
    switch (kind) {
        case SensorKind::Temperature: return Unit::Celsius;
        case SensorKind::Humidity: return Unit::PctRh;
        case SensorKind::Luminance: return Unit::Lux;
        case SensorKind::Door: return Unit::Bool;
        case SensorKind::PresenceBeacon: return Unit::Dbm;
        case SensorKind::PeopleCounter: return Unit::Count;
        case SensorKind::Relay: return std::nullopt;
    }
    return std::nullopt;
}

bool is_measuring(SensorKind kind) {
    return kind == SensorKind::Temperature || kind == SensorKind::Humidity ||
           kind == SensorKind::Luminance;
}

bool is_valid(const Reading& r) {
    const auto unit = unit_for(r.kind);
    return unit && *unit == r.unit && std::isfinite(r.value);
}

std::string_view to_string(ActuationSource source) {
    return source == ActuationSource::Auto ? "auto" : "manual";
}

}  // namespace sb
