#include "smartbuilding/building.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <fstream>
#include <sstream>

namespace sb::building {

std::string_view to_string(BuildingErrc code) {
    static constexpr std::array<std::string_view, 6> names = {
        "ParseError", "ValidationError", "NodeUnknown", "RoomUnknown", "NotARelay", "NotMeasuring"};
    return names[static_cast<std::size_t>(code)];
}

double NodeSpec::sigma(SensorKind k) const {
    auto it = noise_sigma.find(k);
    return it == noise_sigma.end() ? 0.0 : it->second;
}

// ---------------------------------------------------------------------------
// Scenario parsing

namespace {

class LineParser {
public:
    LineParser(std::string_view line, int line_no) : line_no_(line_no) {
        std::istringstream words{std::string(line)};
        std::string w;
        while (words >> w) tokens_.push_back(std::move(w));
    }

    bool empty() const { return tokens_.empty(); }
    std::size_t size() const { return tokens_.size(); }
    const std::string& at(std::size_t i) const { return tokens_.at(i); }

    [[noreturn]] void fail(const std::string& why) const {
        throw BuildingError(BuildingErrc::ParseError, "line " + std::to_string(line_no_) + ": " + why);
    }

    double number(std::string_view text) const {
        double v = 0.0;
        auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
        if (ec != std::errc{} || ptr != text.data() + text.size()) fail("bad number '" + std::string(text) + "'");
        return v;
    }

    Tick integer(std::string_view text) const {
        Tick v = 0;
        auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
        if (ec != std::errc{} || ptr != text.data() + text.size()) fail("bad integer '" + std::string(text) + "'");
        return v;
    }

    /// key=value options from token `first` on. Positional tokens are rejected.
    std::map<std::string, std::string> options(std::size_t first) const {
        std::map<std::string, std::string> out;
        for (std::size_t i = first; i < tokens_.size(); ++i) {
            const auto eq = tokens_[i].find('=');
            if (eq == std::string::npos || eq == 0) fail("expected key=value, got '" + tokens_[i] + "'");
            if (!out.emplace(tokens_[i].substr(0, eq), tokens_[i].substr(eq + 1)).second) {
                fail("duplicate option '" + tokens_[i].substr(0, eq) + "'");
            }
        }
        return out;
    }

    std::string take(std::map<std::string, std::string>& opts, const std::string& key) const {
        auto it = opts.find(key);
        if (it == opts.end()) fail("missing " + key + "=");
        auto v = it->second;
        opts.erase(it);
        return v;
    }

    std::optional<std::string> take_optional(std::map<std::string, std::string>& opts, const std::string& key) const {
        auto it = opts.find(key);
        if (it == opts.end()) return std::nullopt;
        auto v = it->second;
        opts.erase(it);
        return v;
    }

    void no_leftovers(const std::map<std::string, std::string>& opts) const {
        if (!opts.empty()) fail("unknown option '" + opts.begin()->first + "'");
    }

private:
    int line_no_;
    std::vector<std::string> tokens_;
};

std::vector<std::string> split_csv(std::string_view text) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (start <= text.size()) {
        auto comma = text.find(',', start);
        if (comma == std::string_view::npos) comma = text.size();
        out.emplace_back(text.substr(start, comma - start));
        start = comma + 1;
    }
    return out;
}

void parse_room(const LineParser& p, Scenario& sc) {
    if (p.size() < 2) p.fail("room needs an id");
    auto opts = p.options(2);
    RoomState room;
    room.room_id = p.at(1);
    room.temp_c = p.number(p.take(opts, "temp"));
    room.t_env_c = p.number(p.take(opts, "t_env"));
    room.tau_ticks = p.integer(p.take(opts, "tau"));
    room.c_j_per_k = p.number(p.take(opts, "c"));
    if (auto v = p.take_optional(opts, "heater_w")) room.heater_w = p.number(*v);
    if (auto v = p.take_optional(opts, "humidity")) room.humidity_pct = p.number(*v);
    if (auto v = p.take_optional(opts, "lux")) room.lux = p.number(*v);
    p.no_leftovers(opts);
    sc.rooms.push_back(room);
}

void parse_node(const LineParser& p, Scenario& sc) {
    if (p.size() < 2) p.fail("node needs an id");
    auto opts = p.options(2);
    NodeSpec node;
    node.node_id = p.at(1);
    node.room_id = p.take(opts, "room");
    for (const auto& name : split_csv(p.take(opts, "kinds"))) {
        auto kind = parse_sensor_kind(name);
        if (!kind) p.fail("unknown sensor kind '" + name + "'");
        node.kinds.insert(*kind);
    }
    node.mac = p.take_optional(opts, "mac");
    if (auto v = p.take_optional(opts, "sigma")) {
        const double sigma = p.number(*v);
        for (auto k : node.kinds) {
            if (is_measuring(k) || k == SensorKind::PresenceBeacon) node.noise_sigma[k] = sigma;
        }
    }
    if (auto v = p.take_optional(opts, "period")) node.period_ticks = p.integer(*v);
    if (auto v = p.take_optional(opts, "load")) {
        if (*v == "heater") node.load = RelayLoad::Heater;
        else if (*v == "lamp") node.load = RelayLoad::Lamp;
        else if (*v == "socket") node.load = RelayLoad::Socket;
        else p.fail("unknown relay load '" + *v + "'");
    }
    if (auto v = p.take_optional(opts, "lux")) node.lamp_lux = p.number(*v);
    p.no_leftovers(opts);
    sc.nodes.push_back(std::move(node));
}

void parse_event(const LineParser& p, Scenario& sc) {
    if (p.size() < 4) p.fail("event needs <tick> <room> enter|exit");
    OccupantEvent ev;
    ev.at = p.integer(p.at(1));
    ev.room_id = p.at(2);
    if (p.at(3) == "enter") ev.kind = OccupantEvent::Kind::Enter;
    else if (p.at(3) == "exit") ev.kind = OccupantEvent::Kind::Exit;
    else p.fail("event kind must be enter or exit");
    auto opts = p.options(4);
    ev.mac = p.take_optional(opts, "mac");
    if (auto v = p.take_optional(opts, "hold")) ev.door_hold = p.integer(*v);
    p.no_leftovers(opts);
    sc.events.push_back(std::move(ev));
}

void parse_profile(const LineParser& p, Scenario& sc) {
    if (p.size() < 4) p.fail("profile needs <room> humidity|lux <tick>=<value>...");
    auto& profile = sc.profiles[p.at(1)];
    std::map<Tick, double>* series = nullptr;
    if (p.at(2) == "humidity") series = &profile.humidity;
    else if (p.at(2) == "lux") series = &profile.lux;
    else p.fail("profile quantity must be humidity or lux");
    for (const auto& [tick, value] : p.options(3)) series->insert_or_assign(p.integer(tick), p.number(value));
}

void parse_feedback(const LineParser& p, Scenario& sc) {
    if (p.size() < 4) p.fail("feedback needs <tick> <room> <user>");
    FeedbackEvent fb;
    fb.at = p.integer(p.at(1));
    fb.room_id = p.at(2);
    fb.user = p.at(3);
    auto opts = p.options(4);
    fb.thermal_vote = static_cast<int>(p.integer(p.take(opts, "thermal")));
    fb.humidity_vote = static_cast<int>(p.integer(p.take(opts, "humidity")));
    fb.temp_c = p.number(p.take(opts, "temp"));
    p.no_leftovers(opts);
    sc.feedback.push_back(std::move(fb));
}

void parse_arm(const LineParser& p, Scenario& sc, bool armed) {
    if (p.size() != 3) p.fail("expected <tick> <room>");
    sc.arming.push_back(ArmEvent{p.integer(p.at(1)), p.at(2), armed});
}

[[noreturn]] void invalid(const std::string& why) { throw BuildingError(BuildingErrc::ValidationError, why); }

}  // namespace

Scenario Scenario::parse(std::istream& in) {
    Scenario sc;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        LineParser p(line, line_no);
        if (p.empty()) continue;
        const auto& keyword = p.at(0);
        if (keyword == "room") parse_room(p, sc);
        else if (keyword == "node") parse_node(p, sc);
        else if (keyword == "event") parse_event(p, sc);
        else if (keyword == "profile") parse_profile(p, sc);
        else if (keyword == "feedback") parse_feedback(p, sc);
        else if (keyword == "arm") parse_arm(p, sc, true);
        else if (keyword == "disarm") parse_arm(p, sc, false);
        else p.fail("unknown directive '" + keyword + "'");
    }
    sc.validate();
    return sc;
}

Scenario Scenario::parse(std::string_view text) {
    std::istringstream in{std::string(text)};
    return parse(in);
}

Scenario Scenario::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) invalid("cannot open scenario file " + path);
    return parse(in);
}

const RoomState* Scenario::find_room(std::string_view id) const {
    auto it = std::find_if(rooms.begin(), rooms.end(), [&](const auto& r) { return r.room_id == id; });
    return it == rooms.end() ? nullptr : &*it;
}

const NodeSpec* Scenario::find_node(std::string_view id) const {
    auto it = std::find_if(nodes.begin(), nodes.end(), [&](const auto& n) { return n.node_id == id; });
    return it == nodes.end() ? nullptr : &*it;
}

void Scenario::validate() const {
    std::set<std::string> ids;
    for (const auto& r : rooms) {
        if (!ids.insert(r.room_id).second) invalid("duplicate room " + r.room_id);
        if (r.tau_ticks <= 0) invalid("room " + r.room_id + ": tau must be positive");
        if (!(r.c_j_per_k > 0)) invalid("room " + r.room_id + ": c must be positive");
        if (r.heater_w < 0) invalid("room " + r.room_id + ": heater_w must be non-negative");
        if (r.humidity_pct < 0 || r.humidity_pct > 100) invalid("room " + r.room_id + ": humidity outside [0,100]");
        if (r.lux < 0) invalid("room " + r.room_id + ": negative lux");
    }

    ids.clear();
    std::set<std::string> macs;
    for (const auto& n : nodes) {
        if (!ids.insert(n.node_id).second) invalid("duplicate node " + n.node_id);
        if (!find_room(n.room_id)) invalid("node " + n.node_id + " references missing room " + n.room_id);
        if (n.kinds.empty()) invalid("node " + n.node_id + " has no kinds");
        if (n.period_ticks <= 0) invalid("node " + n.node_id + ": period must be positive");
        if (n.has(SensorKind::PresenceBeacon) && !n.mac) invalid("presence-beacon " + n.node_id + " needs mac=");
        if (n.mac) {
            if (!is_valid_mac(*n.mac)) invalid("node " + n.node_id + ": malformed mac " + *n.mac);
            if (!macs.insert(*n.mac).second) invalid("mac " + *n.mac + " declared twice");
        }
        if (n.load != RelayLoad::Socket && !n.has(SensorKind::Relay)) {
            invalid("node " + n.node_id + ": load= requires the relay kind");
        }
        for (const auto& [k, s] : n.noise_sigma) {
            if (!(s >= 0)) invalid("node " + n.node_id + ": negative sigma");
        }
    }

    std::map<RoomId, int> occupants;
    std::map<std::string, RoomId> inside;
    Tick last = 0;
    for (const auto& ev : events) {
        const auto where = "event at tick " + std::to_string(ev.at);
        if (!find_room(ev.room_id)) invalid(where + " references missing room " + ev.room_id);
        if (ev.at < 0) invalid(where + ": negative tick");
        if (ev.at < last) invalid(where + ": events out of tick order");
        if (ev.door_hold < 1) invalid(where + ": hold must be at least 1");
        last = ev.at;
        if (ev.mac && !is_valid_mac(*ev.mac)) invalid(where + ": malformed mac " + *ev.mac);
        if (ev.kind == OccupantEvent::Kind::Enter) {
            ++occupants[ev.room_id];
            if (ev.mac && !inside.emplace(*ev.mac, ev.room_id).second) {
                invalid(where + ": mac " + *ev.mac + " is already inside");
            }
        } else {
            if (occupants[ev.room_id] == 0) invalid(where + ": exit from empty room " + ev.room_id);
            --occupants[ev.room_id];
            if (ev.mac) {
                auto it = inside.find(*ev.mac);
                if (it == inside.end() || it->second != ev.room_id) {
                    invalid(where + ": mac " + *ev.mac + " exits without entering " + ev.room_id);
                }
                inside.erase(it);
            }
        }
    }

    for (const auto& [room, profile] : profiles) {
        if (!find_room(room)) invalid("profile references missing room " + room);
        for (const auto& [t, v] : profile.humidity) {
            if (v < 0 || v > 100) invalid("profile " + room + ": humidity outside [0,100]");
        }
        for (const auto& [t, v] : profile.lux) {
            if (v < 0) invalid("profile " + room + ": negative lux");
        }
    }
    for (std::size_t i = 1; i < feedback.size(); ++i) {
        if (feedback[i].at < feedback[i - 1].at) invalid("feedback lines must be ordered by tick");
    }
    for (std::size_t i = 1; i < arming.size(); ++i) {
        if (arming[i].at < arming[i - 1].at) invalid("arm/disarm lines must be ordered by tick");
    }
    for (const auto& fb : feedback) {
        if (!find_room(fb.room_id)) invalid("feedback references missing room " + fb.room_id);
        if (fb.thermal_vote < -2 || fb.thermal_vote > 2 || fb.humidity_vote < -2 || fb.humidity_vote > 2) {
            invalid("feedback at tick " + std::to_string(fb.at) + ": vote outside [-2,2]");
        }
    }
    for (const auto& a : arming) {
        if (!find_room(a.room_id)) invalid("arm/disarm references missing room " + a.room_id);
    }
}

// ---------------------------------------------------------------------------
// World

World::World(Scenario scenario, std::uint64_t seed, WorldOptions options)
    : scenario_(std::move(scenario)), options_(options), rng_(seed) {
    for (const auto& r : scenario_.rooms) {
        RoomRuntime rt;
        rt.state = r;
        rt.state.occupants = 0;
        rt.state.heater_on = false;
        rt.base_lux = r.lux;
        rooms_.emplace(r.room_id, std::move(rt));
    }
    for (const auto& n : scenario_.nodes) {
        nodes_.emplace(n.node_id, &n);
        if (n.has(SensorKind::Relay)) relays_.emplace(n.node_id, false);
    }
    apply_profiles();
}

World::RoomRuntime& World::runtime(std::string_view room) {
    auto it = rooms_.find(room);
    if (it == rooms_.end()) throw BuildingError(BuildingErrc::RoomUnknown, std::string(room));
    return it->second;
}

const RoomState& World::room(std::string_view id) const {
    auto it = rooms_.find(id);
    if (it == rooms_.end()) throw BuildingError(BuildingErrc::RoomUnknown, std::string(id));
    return it->second.state;
}

const NodeSpec& World::node(std::string_view id) const {
    auto it = nodes_.find(id);
    if (it == nodes_.end()) throw BuildingError(BuildingErrc::NodeUnknown, std::string(id));
    return *it->second;
}

bool World::relay_state(const NodeId& node_id) const {
    auto it = relays_.find(node_id);
    if (it == relays_.end()) throw BuildingError(BuildingErrc::NotARelay, node_id);
    return it->second;
}

std::set<std::string> World::macs_in(std::string_view room) const {
    auto it = rooms_.find(room);
    if (it == rooms_.end()) throw BuildingError(BuildingErrc::RoomUnknown, std::string(room));
    return it->second.macs;
}

double World::equilibrium_c(std::string_view id) const {
    const auto& r = room(id);
    const double watts = (r.heater_on ? r.heater_w : 0.0) + kOccupantWatts * r.occupants;
    return r.t_env_c + watts * static_cast<double>(r.tau_ticks) * options_.clock.tick_seconds() / r.c_j_per_k;
}

const NodeSpec* World::node_with(std::string_view room, SensorKind kind) const {
    for (const auto& n : scenario_.nodes) {
        if (n.room_id == room && n.has(kind)) return &n;
    }
    return nullptr;
}

const NodeSpec* World::beacon_for(const std::string& mac) const {
    for (const auto& n : scenario_.nodes) {
        if (n.has(SensorKind::PresenceBeacon) && n.mac == mac) return &n;
    }
    return nullptr;
}

Reading World::make_reading(const NodeSpec& n, SensorKind kind, double value, const RoomId& room) const {
    return Reading{time(), n.node_id, kind, value, *unit_for(kind), room};
}

void World::integrate_one_tick() {
    const double dt_s = options_.clock.tick_seconds();
    for (auto& [id, rt] : rooms_) {
        auto& s = rt.state;
        const double watts = (s.heater_on ? s.heater_w : 0.0) + kOccupantWatts * s.occupants;
        s.temp_c += (s.t_env_c - s.temp_c) / static_cast<double>(s.tau_ticks) + watts * dt_s / s.c_j_per_k;
    }
}

void World::refresh_lux(RoomRuntime& rt) {
    double lux = rt.base_lux;
    for (const auto& [node_id, on] : relays_) {
        const auto& n = *nodes_.at(node_id);
        if (on && n.load == RelayLoad::Lamp && n.room_id == rt.state.room_id) lux += n.lamp_lux;
    }
    rt.state.lux = std::max(0.0, lux);
}

void World::apply_profiles() {
    for (const auto& [room, profile] : scenario_.profiles) {
        auto& rt = rooms_.at(room);
        if (auto it = profile.humidity.upper_bound(now_); it != profile.humidity.begin()) {
            rt.state.humidity_pct = std::prev(it)->second;
        }
        if (auto it = profile.lux.upper_bound(now_); it != profile.lux.begin()) {
            const double base = std::prev(it)->second;
            if (base != rt.base_lux) {
                rt.base_lux = base;
                refresh_lux(rt);
            }
        }
    }
}

std::vector<Reading> World::fire_event(const OccupantEvent& ev, bool schedule_close) {
    auto& rt = runtime(ev.room_id);
    std::vector<Reading> out;
    const Timestamp at = options_.clock.to_time(ev.at);

    if (const auto* door = node_with(ev.room_id, SensorKind::Door)) {
        const bool open = rt.door_open_until >= 0;
        if (open) {
            rt.door_open_until = std::max(rt.door_open_until, ev.at + ev.door_hold);
        } else if (ev.at - rt.last_door_open >= kDoorDebounceTicks) {
            out.push_back(Reading{at, door->node_id, SensorKind::Door, 1.0, Unit::Bool, ev.room_id});
            rt.last_door_open = ev.at;
            if (schedule_close) {
                rt.door_open_until = ev.at + ev.door_hold;
            } else {
                out.push_back(Reading{options_.clock.to_time(ev.at + ev.door_hold), door->node_id,
                                      SensorKind::Door, 0.0, Unit::Bool, ev.room_id});
            }
        }
    }

    const bool enter = ev.kind == OccupantEvent::Kind::Enter;
    if (const auto* counter = node_with(ev.room_id, SensorKind::PeopleCounter)) {
        out.push_back(Reading{at, counter->node_id, SensorKind::PeopleCounter, enter ? 1.0 : -1.0, Unit::Count,
                              ev.room_id});
    }
    if (enter) {
        ++rt.state.occupants;
        if (ev.mac) rt.macs.insert(*ev.mac);
    } else {
        rt.state.occupants = std::max(0, rt.state.occupants - 1);
        if (ev.mac) rt.macs.erase(*ev.mac);
    }
    return out;
}

std::vector<Reading> World::apply_occupant_event(const OccupantEvent& ev) { return fire_event(ev, false); }

std::vector<Effect> World::step(Tick dt) {
    std::vector<Effect> effects;
    for (Tick i = 0; i < dt; ++i) {
        integrate_one_tick();
        ++now_;
        apply_profiles();

        const auto& events = scenario_.events;
        while (next_event_ < events.size() && events[next_event_].at <= now_) {
            const auto& ev = events[next_event_++];
            effects.emplace_back(ev);
            for (auto& r : fire_event(ev, true)) effects.emplace_back(std::move(r));
        }

        for (auto& [room, rt] : rooms_) {
            if (rt.door_open_until >= 0 && rt.door_open_until <= now_) {
                const auto* door = node_with(room, SensorKind::Door);
                effects.emplace_back(Reading{options_.clock.to_time(rt.door_open_until), door->node_id,
                                             SensorKind::Door, 0.0, Unit::Bool, room});
                rt.door_open_until = -1;
            }
        }

        if (options_.periodic_sampling) {
            for (const auto& [id, n] : nodes_) {
                if (now_ % n->period_ticks != 0) continue;
                for (auto k : n->kinds) {
                    if (is_measuring(k)) effects.emplace_back(sample_sensor(id, k));
                }
            }
        }

        for (const auto& [room, rt] : rooms_) {
            for (const auto& mac : rt.macs) {
                const auto* beacon = beacon_for(mac);
                const Tick period = beacon ? beacon->period_ticks : kDefaultSensorPeriod;
                if (now_ % period != 0) continue;
                const double sigma = beacon ? beacon->sigma(SensorKind::PresenceBeacon) : 0.0;
                const double rssi = std::min(0.0, kBeaconRssiDbm + sigma * rng_.gaussian());
                effects.emplace_back(
                    Reading{time(), beacon ? beacon->node_id : mac, SensorKind::PresenceBeacon, rssi, Unit::Dbm, room});
            }
        }
    }
    return effects;
}

ActuationCommand World::set_relay(const NodeId& node_id, bool on, ActuationSource source) {
    const auto& n = node(node_id);
    if (!n.has(SensorKind::Relay)) throw BuildingError(BuildingErrc::NotARelay, node_id);
    relays_[node_id] = on;
    auto& rt = runtime(n.room_id);
    if (n.load == RelayLoad::Heater) {
        bool any = false;
        for (const auto& [other, state] : relays_) {
            const auto& o = *nodes_.at(other);
            any = any || (state && o.load == RelayLoad::Heater && o.room_id == n.room_id);
        }
        rt.state.heater_on = any;
    } else if (n.load == RelayLoad::Lamp) {
        refresh_lux(rt);
    }
    return ActuationCommand{time(), node_id, n.room_id, on, source};
}

Reading World::sample_sensor(const NodeId& node_id, SensorKind kind) {
    const auto& n = node(node_id);
    if (!is_measuring(kind) || !n.has(kind)) {
        throw BuildingError(BuildingErrc::NotMeasuring, node_id + " does not measure " + std::string(to_string(kind)));
    }
    const auto& s = rooms_.at(n.room_id).state;
    const double noise = n.sigma(kind) * rng_.gaussian();
    double value = 0.0;
    switch (kind) {
        case SensorKind::Temperature: value = s.temp_c + noise; break;
        case SensorKind::Humidity: value = std::clamp(s.humidity_pct + noise, 0.0, 100.0); break;
        case SensorKind::Luminance: value = std::max(0.0, s.lux + noise); break;
        default: break;
    }
    return make_reading(n, kind, value, n.room_id);
}

Reading World::sample_sensor(const NodeId& node_id) {
    const auto& n = node(node_id);
    std::optional<SensorKind> only;
    for (auto k : n.kinds) {
        if (!is_measuring(k)) continue;
        if (only) throw BuildingError(BuildingErrc::NotMeasuring, node_id + " measures several kinds; name one");
        only = k;
    }
    if (!only) throw BuildingError(BuildingErrc::NotMeasuring, node_id);
    return sample_sensor(node_id, *only);
}

}  // namespace sb::building
