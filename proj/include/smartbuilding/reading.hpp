#ifndef SMARTBUILDING_READING_HPP
#define SMARTBUILDING_READING_HPP

#include "smartbuilding/common.hpp"

#include <optional>
#include <string>
#include <string_view>

namespace sb {

using NodeId = std::string;
using RoomId = std::string;

enum class SensorKind {
    Temperature,
    Humidity,
    Luminance,
    Door,
    PresenceBeacon,
    PeopleCounter,
    Relay,
};

enum class Unit { Celsius, PctRh, Lux, Bool, Count, Dbm };

std::string_view to_string(SensorKind kind);
std::string_view to_string(Unit unit);
std::optional<SensorKind> parse_sensor_kind(std::string_view name);
std::optional<Unit> parse_unit(std::string_view name);

/// Unit carried by readings of `kind`; nullopt for relays, which actuate
/// rather than measure.
std::optional<Unit> unit_for(SensorKind kind);

/// Temperature, humidity and luminance: kinds sampled from room state.
bool is_measuring(SensorKind kind);

/// One timestamped sensor sample.
struct Reading {
    Timestamp at;
    NodeId node;
    SensorKind kind = SensorKind::Temperature;
    double value = 0.0;
    Unit unit = Unit::Celsius;
    /// Room the sample was taken in. Not part of the CSV surface.
    RoomId room;

    bool operator==(const Reading&) const = default;
};

/// Unit matches kind and the value is finite.
bool is_valid(const Reading& r);

enum class ActuationSource { Auto, Manual };
std::string_view to_string(ActuationSource source);

/// Relay/light state change and who asked for it.
struct ActuationCommand {
    Timestamp at;
    NodeId node;
    RoomId room;
    bool on = false;
    ActuationSource source = ActuationSource::Auto;

    bool operator==(const ActuationCommand&) const = default;
};

}  // namespace sb

#endif  // SMARTBUILDING_READING_HPP
