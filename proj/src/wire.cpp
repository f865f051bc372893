#include "smartbuilding/wire.hpp"

namespace sb::wire {

std::string_view to_string(WireErrc) { return "BadValue"; }

namespace {

[[noreturn]] void bad(const std::string& what) { throw WireError(WireErrc::BadValue, what); }

Value optional_time(const std::optional<Timestamp>& t) { return t ? to_value(*t) : Value(nullptr); }

}  // namespace

Value to_value(Timestamp t) { return format_iso8601(t); }

Timestamp time_from(const Value& v) {
    if (v.is_number_integer()) return from_millis(v.get<std::int64_t>());
    if (v.is_string()) {
        if (auto t = parse_iso8601(v.get_ref<const std::string&>())) return *t;
        bad("malformed timestamp " + v.get<std::string>());
    }
    bad("timestamp must be a string or integer milliseconds");
}

const Value& field(const Value& obj, const char* name) {
    if (!obj.is_object()) bad("expected an object");
    auto it = obj.find(name);
    if (it == obj.end()) bad(std::string("missing field ") + name);
    return *it;
}

std::string string_field(const Value& obj, const char* name) {
    const auto& v = field(obj, name);
    if (!v.is_string()) bad(std::string(name) + " must be a string");
    return v.get<std::string>();
}

std::optional<std::string> optional_string(const Value& obj, const char* name) {
    if (!obj.is_object()) bad("expected an object");
    auto it = obj.find(name);
    if (it == obj.end() || it->is_null()) return std::nullopt;
    if (!it->is_string()) bad(std::string(name) + " must be a string");
    return it->get<std::string>();
}

Value to_value(const Reading& r, const std::optional<std::string>& mac) {
    Value v = {{"timestamp", to_value(r.at)},
               {"node", r.node},
               {"sensor", to_string(r.kind)},
               {"value", r.value},
               {"unit", to_string(r.unit)},
               {"room", r.room}};
    if (mac) v["mac"] = *mac;
    return v;
}

Reading reading_from(const Value& v) {
    Reading r;
    r.at = time_from(field(v, "timestamp"));
    r.node = string_field(v, "node");
    auto kind = parse_sensor_kind(string_field(v, "sensor"));
    if (!kind) bad("unknown sensor kind");
    r.kind = *kind;
    const auto& value = field(v, "value");
    if (!value.is_number()) bad("value must be a number");
    r.value = value.get<double>();
    auto unit = parse_unit(string_field(v, "unit"));
    if (!unit) bad("unknown unit");
    r.unit = *unit;
    r.room = optional_string(v, "room").value_or("");
    return r;
}

Value to_value(const ActuationCommand& c) {
    return {{"timestamp", to_value(c.at)},
            {"node", c.node},
            {"room", c.room},
            {"on", c.on},
            {"source", to_string(c.source)}};
}

ActuationCommand command_from(const Value& v) {
    ActuationCommand c;
    c.at = time_from(field(v, "timestamp"));
    c.node = string_field(v, "node");
    c.room = optional_string(v, "room").value_or("");
    const auto& on = field(v, "on");
    if (!on.is_boolean()) bad("on must be a boolean");
    c.on = on.get<bool>();
    const auto source = string_field(v, "source");
    if (source == "auto") c.source = ActuationSource::Auto;
    else if (source == "manual") c.source = ActuationSource::Manual;
    else bad("unknown source " + source);
    return c;
}

Value to_value(const occupancy::OccupancyEstimate& e) {
    return {{"room", e.room_id},
            {"timestamp", to_value(e.at)},
            {"count", e.count},
            {"macs", e.known_macs},
            {"confidence", occupancy::to_string(e.confidence)}};
}

Value to_value(const occupancy::AbsenceInterval& a) {
    return {{"room", a.room_id}, {"start", to_value(a.start)}, {"end", optional_time(a.end)}};
}

Value to_value(const apps::Alert& a) {
    return {{"timestamp", to_value(a.at)},
            {"room", a.room_id},
            {"rule", apps::to_string(a.rule)},
            {"severity", apps::to_string(a.severity)},
            {"detail", a.detail}};
}

Value to_value(const apps::SavingsReport& r) {
    return {{"room", r.room_id},
            {"from", to_value(r.range.from)},
            {"to", to_value(r.range.to)},
            {"baseline_kwh", r.baseline_kwh},
            {"actual_kwh", r.actual_kwh},
            {"saved_kwh", r.saved_kwh},
            {"setback_hours", r.setback_hours}};
}

Value to_value(const apps::PreferenceEstimate& p) {
    return {{"method", apps::to_string(p.method)},
            {"t_pref", p.t_pref ? Value(*p.t_pref) : Value(nullptr)},
            {"slope", p.slope ? Value(*p.slope) : Value(nullptr)},
            {"votes", p.votes}};
}

Value to_value(const apps::ThermostatState& s) {
    return {{"room", s.room_id},
            {"relay", s.relay},
            {"setpoint_c", s.setpoint_c},
            {"hysteresis_c", s.hysteresis_c},
            {"heater_on", s.heater_on},
            {"mode", apps::to_string(s.mode)}};
}

}  // namespace sb::wire
