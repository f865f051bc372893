#ifndef SMARTBUILDING_WIRE_HPP
#define SMARTBUILDING_WIRE_HPP

#include "smartbuilding/apps.hpp"
#include "smartbuilding/bus.hpp"
#include "smartbuilding/common.hpp"
#include "smartbuilding/occupancy.hpp"
#include "smartbuilding/reading.hpp"

#include <optional>
#include <string>

/// Structured-value forms of domain records, shared by bus payloads and the
/// gateway. Instants are ISO-8601 strings on output; inputs also accept
/// integer milliseconds since the Unix epoch.
namespace sb::wire {

enum class WireErrc { BadValue };
std::string_view to_string(WireErrc code);
using WireError = Error<WireErrc>;

using bus::Value;

Value to_value(Timestamp t);
Timestamp time_from(const Value& v);

Value to_value(const Reading& r, const std::optional<std::string>& mac = std::nullopt);
Reading reading_from(const Value& v);

Value to_value(const ActuationCommand& c);
ActuationCommand command_from(const Value& v);

Value to_value(const occupancy::OccupancyEstimate& e);
Value to_value(const occupancy::AbsenceInterval& a);
Value to_value(const apps::Alert& a);
Value to_value(const apps::SavingsReport& r);
Value to_value(const apps::PreferenceEstimate& p);
Value to_value(const apps::ThermostatState& s);

/// Field accessors that throw WireError naming the field.
const Value& field(const Value& obj, const char* name);
std::string string_field(const Value& obj, const char* name);
std::optional<std::string> optional_string(const Value& obj, const char* name);

}  // namespace sb::wire

#endif  // SMARTBUILDING_WIRE_HPP
