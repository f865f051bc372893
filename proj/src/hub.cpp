#include "smartbuilding/hub.hpp"

#include "smartbuilding/rng.hpp"
#include "smartbuilding/wire.hpp"

#include <algorithm>

namespace sb::hub {

using bus::Envelope;
using bus::Responder;
using bus::Value;

namespace {

transport::Bytes encode(const Reading& r, const std::optional<std::string>& mac = std::nullopt) {
    return Value::to_cbor(wire::to_value(r, mac));
}

bool has_measuring(const building::NodeSpec& n) {
    return std::any_of(n.kinds.begin(), n.kinds.end(), [](SensorKind k) { return is_measuring(k); });
}

bool on_zwave(const building::NodeSpec& n) {
    return n.has(SensorKind::Door) || n.has(SensorKind::PeopleCounter);
}

std::optional<Timestamp> optional_time(const Value& v, const char* name) {
    if (!v.is_object()) return std::nullopt;
    auto it = v.find(name);
    if (it == v.end() || it->is_null()) return std::nullopt;
    return wire::time_from(*it);
}

Value object_or_empty(const Value& v) { return v.is_object() ? v : Value::object(); }

}  // namespace

Hub::Hub(building::Scenario scenario, HubOptions options)
    : options_(std::move(options)),
      world_(std::move(scenario), derive_seed(options_.seed, 0), building::WorldOptions{options_.clock, false}),
      net_(derive_seed(options_.seed, 1)),
      engine_(options_.lease) {
    for (const auto& room : world_.scenario().rooms) {
        engine_.add_room(room.room_id);
        armed_[room.room_id] = false;
    }
    for (const auto& n : world_.scenario().nodes) {
        if (n.mac) node_mac_[n.node_id] = *n.mac;
    }

    wire_transport();
    register_drivers();
    register_store();
    register_occupancy();
    register_relay();
    if (options_.energy_app) register_energy();
    if (options_.security_app) register_security();
    if (options_.comfort_app) register_comfort();
}

Hub::~Hub() {
    // Drop bus hooks before the state they capture goes away.
    subscriptions_.clear();
    services_.clear();
}

TimeRange Hub::elapsed() const { return {world_.clock().epoch, world_.time()}; }

void Hub::wire_transport() {
    net_.add_link({kBleLink, transport::Flavor::Ble, options_.loss_prob, options_.latency_ticks});
    net_.add_link({kZwaveLink, transport::Flavor::Zwave, options_.loss_prob, options_.latency_ticks});
    for (const auto& n : world_.scenario().nodes) {
        const bool measuring = has_measuring(n);
        const bool zwave = on_zwave(n);
        if (!measuring && !zwave && !n.has(SensorKind::PresenceBeacon)) continue;
        net_.add_node(n.node_id);
        drivers_.insert(n.node_id);
        if (zwave) net_.register_zwave_node(kZwaveLink, n.node_id);
        if (!measuring) continue;
        auto conn = net_.connect_ble(kBleLink, n.node_id);
        ble_conns_[n.node_id] = conn;
        for (auto kind : n.kinds) {
            if (!is_measuring(kind)) continue;
            net_.subscribe_ble(conn, to_string(kind), n.period_ticks,
                               [this, id = n.node_id, kind](Tick) { return encode(world_.sample_sensor(id, kind)); });
        }
    }
}

void Hub::register_drivers() {
    auto driver = [this](const Envelope& env, Responder) {
        Value reading = Value::from_cbor(env.payload.get_binary());
        const auto topic = "readings." + reading.at("sensor").get<std::string>();
        bus_.publish(topic, std::move(reading), env.sender);
    };
    for (const auto& id : drivers_) {
        services_.push_back(bus_.register_service({"driver." + id, {"frame"}, 0}, driver));
    }
    // Advertisements from devices the scenario does not declare (bare MACs).
    services_.push_back(bus_.register_service({"driver.adv", {"frame"}, 0}, driver));
}

void Hub::register_store() {
    subscriptions_.push_back(bus_.subscribe("readings.*", [this](const Envelope& env) {
        try {
            store_.append(wire::reading_from(env.payload));
        } catch (const store::StoreError&) {
            ++rejected_;
        } catch (const wire::WireError&) {
            ++rejected_;
        }
    }));

    services_.push_back(bus_.register_service({"store", {"query"}, 0}, [this](const Envelope& env, Responder r) {
        const Value p = object_or_empty(env.payload);
        store::RangeQuery q;
        if (auto t = optional_time(p, "from")) q.from = *t;
        if (auto t = optional_time(p, "to")) q.to = *t;
        if (auto it = p.find("nodes"); it != p.end() && !it->is_null()) {
            q.nodes.emplace();
            for (const auto& n : *it) q.nodes->insert(n.get<std::string>());
        }
        if (auto it = p.find("kinds"); it != p.end() && !it->is_null()) {
            q.kinds.emplace();
            for (const auto& k : *it) {
                auto kind = parse_sensor_kind(k.get<std::string>());
                if (!kind) throw bus::HandlerFailure("unknown sensor kind " + k.get<std::string>());
                q.kinds->insert(*kind);
            }
        }
        if (q.to <= q.from) {
            r.reply(Value::array());
            return;
        }

        Value out = Value::array();
        if (auto it = p.find("window_ms"); it != p.end() && !it->is_null()) {
            const Duration window{it->get<std::int64_t>()};
            if (window <= Duration::zero()) throw bus::HandlerFailure("window_ms must be positive");
            auto agg = store::parse_aggregation(wire::optional_string(p, "agg").value_or("mean"));
            if (!agg) throw bus::HandlerFailure("unknown aggregation");
            for (const auto& key : store_.keys()) {
                if (q.nodes && !q.nodes->contains(key.node)) continue;
                if (q.kinds && !q.kinds->contains(key.kind)) continue;
                auto s = store::downsample(store_.series(key, q.from, q.to), window, *agg);
                if (s.points.empty()) continue;
                Value points = Value::array();
                for (const auto& pt : s.points) points.push_back({{"timestamp", wire::to_value(pt.at)}, {"value", pt.value}});
                out.push_back({{"node", key.node}, {"sensor", to_string(key.kind)}, {"points", std::move(points)}});
            }
        } else {
            for (const auto& reading : store_.query_range(q)) out.push_back(wire::to_value(reading));
        }
        r.reply(std::move(out));
    }));
}

void Hub::register_occupancy() {
    auto feed = [this](const Envelope& env) {
        const Reading reading = wire::reading_from(env.payload);
        if (!engine_.has_room(reading.room)) return;
        auto input = occupancy::to_input(reading, wire::optional_string(env.payload, "mac"));
        if (!input) return;
        auto est = engine_.update(*input);
        bus_.publish("occupancy." + reading.room, wire::to_value(est), "occupancy");
    };
    for (const char* topic : {"readings.door", "readings.people-counter", "readings.presence-beacon"}) {
        subscriptions_.push_back(bus_.subscribe(topic, feed));
    }

    services_.push_back(
        bus_.register_service({"occupancy", {"get", "absence"}, 0}, [this](const Envelope& env, Responder r) {
            const Value p = object_or_empty(env.payload);
            const auto room = wire::string_field(p, "room");
            if (!engine_.has_room(room)) throw bus::HandlerFailure("RoomUnknown: " + room);
            if (env.operation == "get") {
                const Timestamp at = optional_time(p, "timestamp").value_or(world_.time());
                r.reply(wire::to_value(engine_.current_estimate(room, at)));
                return;
            }
            const TimeRange range{optional_time(p, "from").value_or(world_.clock().epoch),
                                  optional_time(p, "to").value_or(world_.time())};
            Duration min_gap = occupancy::kDefaultMinGap;
            if (auto it = p.find("min_gap_ms"); it != p.end()) min_gap = Duration{it->get<std::int64_t>()};
            Value out = Value::array();
            for (const auto& a : engine_.absence_intervals(room, range, min_gap)) out.push_back(wire::to_value(a));
            r.reply(std::move(out));
        }));
}

Value Hub::apply_relay(const NodeId& node, bool on, ActuationSource source) {
    const auto cmd = world_.set_relay(node, on, source);
    actuations_.push_back(cmd);
    Value v = wire::to_value(cmd);
    bus_.publish("relay.state." + cmd.room, v, "relay");
    return v;
}

void Hub::register_relay() {
    services_.push_back(
        bus_.register_service({"relay", {"set", "state"}, 0}, [this](const Envelope& env, Responder r) {
            const Value p = object_or_empty(env.payload);
            const auto node = wire::string_field(p, "node");
            if (env.operation == "state") {
                r.reply({{"node", node}, {"on", world_.relay_state(node)}});
                return;
            }
            const auto& on = wire::field(p, "on");
            if (!on.is_boolean()) throw bus::HandlerFailure("on must be a boolean");
            Value cmd = apply_relay(node, on.get<bool>(), ActuationSource::Manual);
            const Timestamp until = world_.time() + options_.manual_hold;
            hold_until_[node] = until;
            r.reply({{"command", std::move(cmd)}, {"hold_until", wire::to_value(until)}});
        }));

    subscriptions_.push_back(bus_.subscribe("actuation.*", [this](const Envelope& env) {
        const auto cmd = wire::command_from(env.payload);
        if (auto it = hold_until_.find(cmd.node); it != hold_until_.end() && world_.time() < it->second) {
            ++suppressed_;
            return;
        }
        if (world_.relay_state(cmd.node) == cmd.on) return;
        apply_relay(cmd.node, cmd.on, cmd.source);
    }));
}

void Hub::register_energy() {
    for (const auto& room : heated_rooms(world_.scenario())) {
        auto relays = heater_relays(room);
        EnergyRoom er{apps::ThermostatState::initial(room, *relays.begin(), options_.thermostat), std::nullopt, {}};
        er.state.heater_on = world_.relay_state(er.state.relay);
        energy_.emplace(room, std::move(er));
    }

    subscriptions_.push_back(bus_.subscribe("readings.temperature", [this](const Envelope& env) {
        on_temperature(wire::reading_from(env.payload));
    }));
    subscriptions_.push_back(bus_.subscribe("relay.state.*", [this](const Envelope& env) {
        const auto cmd = wire::command_from(env.payload);
        auto it = energy_.find(cmd.room);
        if (it != energy_.end() && it->second.state.relay == cmd.node) it->second.state.heater_on = cmd.on;
    }));
    subscriptions_.push_back(bus_.subscribe("occupancy.*", [this](const Envelope& env) {
        auto it = energy_.find(wire::string_field(env.payload, "room"));
        if (it == energy_.end()) return;
        if (env.payload.at("count").get<int>() > 0) it->second.zero_since.reset();
        else if (!it->second.zero_since) it->second.zero_since = wire::time_from(env.payload.at("timestamp"));
    }));

    services_.push_back(
        bus_.register_service({"energy", {"state", "report"}, 0}, [this](const Envelope& env, Responder r) {
            const Value p = object_or_empty(env.payload);
            const auto room = wire::string_field(p, "room");
            if (env.operation == "report") {
                TimeRange range{optional_time(p, "from").value_or(world_.clock().epoch),
                                optional_time(p, "to").value_or(world_.time())};
                try {
                    r.reply(wire::to_value(energy_report(*this, room, range)));
                } catch (const apps::AppError& e) {
                    r.fail(e.what());
                }
                return;
            }
            auto it = energy_.find(room);
            if (it == energy_.end()) throw bus::HandlerFailure("NoData: no thermostat in " + room);
            r.reply(wire::to_value(it->second.state));
        }));
}

void Hub::on_temperature(const Reading& reading) {
    auto it = energy_.find(reading.room);
    if (it == energy_.end()) return;
    auto& er = it->second;

    auto call = bus_.request("occupancy", "get", {{"room", reading.room}, {"timestamp", wire::to_value(reading.at)}},
                             options_.request_timeout, "energy");
    if (!call.ready() || !call.ok()) return;
    occupancy::OccupancyEstimate est;
    est.room_id = reading.room;
    est.at = reading.at;
    est.count = call.value().at("count").get<int>();
    if (est.count > 0) er.zero_since.reset();
    else if (!er.zero_since) er.zero_since = reading.at;

    if (options_.setback_enabled) {
        const Duration absent_for = er.zero_since ? reading.at - *er.zero_since : Duration::zero();
        auto next = apps::occupancy_setback(er.state, est, absent_for, options_.thermostat);
        if (next.mode != er.state.mode) er.mode_log.emplace_back(reading.at, next.mode == apps::Mode::Setback);
        er.state = next;
    }

    // The belief about the heater only changes through relay.state, so a
    // suppressed command is simply re-issued on the next sample.
    auto step = apps::thermostat_step(er.state, reading.value, reading.at);
    if (step.command) bus_.publish("actuation." + reading.room, wire::to_value(*step.command), "energy");
}

void Hub::check_door(const RoomId& room, Timestamp at) {
    auto& door = doors_[room];
    if (!door.open_since) return;
    auto call = bus_.request("occupancy", "get", {{"room", room}, {"timestamp", wire::to_value(at)}},
                             options_.request_timeout, "security");
    if (!call.ready() || !call.ok()) return;
    occupancy::OccupancyEstimate est;
    est.room_id = room;
    est.at = at;
    est.count = call.value().at("count").get<int>();
    if (auto alert = monitor_.evaluate(armed_[room], door.last, est, at - *door.open_since)) {
        alerts_.push_back(*alert);
        bus_.publish("alerts", wire::to_value(*alert), "security");
    }
}

void Hub::register_security() {
    subscriptions_.push_back(bus_.subscribe("readings.door", [this](const Envelope& env) {
        const auto reading = wire::reading_from(env.payload);
        if (!armed_.contains(reading.room)) return;
        auto& door = doors_[reading.room];
        door.last = reading;
        if (reading.value != 0.0) {
            if (!door.open_since) door.open_since = reading.at;
            check_door(reading.room, reading.at);
        } else {
            door.open_since.reset();
            monitor_.evaluate(armed_[reading.room], reading, {}, Duration::zero());
        }
    }));
    subscriptions_.push_back(bus_.subscribe("clock.tick", [this](const Envelope& env) {
        const auto at = wire::time_from(env.payload.at("timestamp"));
        for (auto& [room, door] : doors_) {
            if (door.open_since) check_door(room, at);
        }
    }));

    services_.push_back(bus_.register_service(
        {"security", {"arm", "disarm", "status"}, 0}, [this](const Envelope& env, Responder r) {
            const Value p = object_or_empty(env.payload);
            const auto room = wire::string_field(p, "room");
            auto it = armed_.find(room);
            if (it == armed_.end()) throw bus::HandlerFailure("RoomUnknown: " + room);
            if (env.operation != "status") it->second = env.operation == "arm";
            r.reply({{"room", room}, {"armed", it->second}});
        }));
}

void Hub::register_comfort() {
    subscriptions_.push_back(bus_.subscribe("readings.temperature", [this](const Envelope& env) {
        const auto reading = wire::reading_from(env.payload);
        latest_temp_[reading.room] = reading.value;
    }));

    services_.push_back(bus_.register_service(
        {"comfort", {"submit", "preference"}, 0}, [this](const Envelope& env, Responder r) {
            const Value p = object_or_empty(env.payload);
            auto preference_reply = [&](const std::vector<apps::ComfortFeedback>& votes) {
                const auto pref = apps::estimate_preference(votes);
                Value out = {{"preference", wire::to_value(pref)}, {"recommended_setpoint_c", nullptr}};
                if (pref.t_pref) {
                    out["recommended_setpoint_c"] = std::clamp(*pref.t_pref, options_.thermostat.min_setpoint_c,
                                                               options_.thermostat.max_setpoint_c);
                }
                return out;
            };

            if (env.operation == "preference") {
                if (auto user = wire::optional_string(p, "user")) {
                    r.reply(preference_reply(feedback_.for_user(*user)));
                } else {
                    r.reply(preference_reply(feedback_.for_room(wire::string_field(p, "room"))));
                }
                return;
            }

            apps::ComfortFeedback fb;
            fb.room_id = wire::string_field(p, "room");
            fb.user = wire::string_field(p, "user");
            fb.at = world_.time();
            if (!world_.scenario().find_room(fb.room_id)) throw bus::HandlerFailure("RoomUnknown: " + fb.room_id);
            const auto& thermal = wire::field(p, "thermal");
            if (!thermal.is_number_integer()) throw bus::HandlerFailure("thermal must be an integer");
            fb.thermal_vote = thermal.get<int>();
            if (auto it = p.find("humidity"); it != p.end() && !it->is_null()) {
                if (!it->is_number_integer()) throw bus::HandlerFailure("humidity must be an integer");
                fb.humidity_vote = it->get<int>();
            }
            if (auto it = p.find("temp"); it != p.end() && !it->is_null()) {
                if (!it->is_number()) throw bus::HandlerFailure("temp must be a number");
                fb.temp_at_vote_c = it->get<double>();
            } else if (auto t = latest_temp_.find(fb.room_id); t != latest_temp_.end()) {
                fb.temp_at_vote_c = t->second;
            } else {
                throw bus::HandlerFailure("NoData: no temperature known for " + fb.room_id);
            }
            std::size_t count = 0;
            try {
                count = feedback_.record(fb);
            } catch (const apps::AppError& e) {
                throw bus::HandlerFailure(e.what());
            }
            Value out = preference_reply(feedback_.for_room(fb.room_id));
            out["count"] = count;
            r.reply(std::move(out));
        }));
}

void Hub::route(const building::Effect& effect) {
    const auto* reading = std::get_if<Reading>(&effect);
    if (!reading) return;
    switch (reading->kind) {
        case SensorKind::Door:
        case SensorKind::PeopleCounter:
            net_.emit_zwave_event(kZwaveLink, reading->node, encode(*reading));
            break;
        case SensorKind::PresenceBeacon: {
            if (!net_.has_node(reading->node)) net_.add_node(reading->node);
            auto it = node_mac_.find(reading->node);
            const std::string mac = it != node_mac_.end() ? it->second : reading->node;
            net_.send(kBleLink, reading->node, encode(*reading, mac));
            break;
        }
        default:
            break;
    }
}

void Hub::dispatch(const std::vector<transport::Arrival>& arrivals) {
    for (const auto& a : arrivals) {
        const auto service = drivers_.contains(a.frame.src) ? "driver." + a.frame.src : std::string("driver.adv");
        bus_.notify(service, "frame", Value::binary(a.frame.payload), a.frame.src);
    }
}

void Hub::fire_scheduled() {
    const auto& sc = world_.scenario();
    while (next_feedback_ < sc.feedback.size() && sc.feedback[next_feedback_].at <= now()) {
        const auto& fb = sc.feedback[next_feedback_++];
        bus_.request("comfort", "submit",
                     {{"room", fb.room_id},
                      {"user", fb.user},
                      {"thermal", fb.thermal_vote},
                      {"humidity", fb.humidity_vote},
                      {"temp", fb.temp_c}},
                     options_.request_timeout, "scenario");
    }
    while (next_arm_ < sc.arming.size() && sc.arming[next_arm_].at <= now()) {
        const auto& ev = sc.arming[next_arm_++];
        bus_.request("security", ev.armed ? "arm" : "disarm", {{"room", ev.room_id}}, options_.request_timeout,
                     "scenario");
    }
}

void Hub::run(Tick n) {
    for (Tick i = 0; i < n; ++i) {
        std::lock_guard lock(mutex_);
        bus_.advance(1);
        const auto effects = world_.step(1);
        dispatch(net_.advance(1));
        for (const auto& e : effects) route(e);
        dispatch(net_.deliver_pending());
        fire_scheduled();
        if (now() % kClockTopicEvery == 0) bus_.publish("clock.tick", {{"timestamp", wire::to_value(time())}}, "hub");
    }
}

std::vector<std::pair<Timestamp, bool>> Hub::setback_changes(const RoomId& room) const {
    auto it = energy_.find(room);
    return it == energy_.end() ? std::vector<std::pair<Timestamp, bool>>{} : it->second.mode_log;
}

std::optional<apps::ThermostatState> Hub::thermostat(const RoomId& room) const {
    auto it = energy_.find(room);
    if (it == energy_.end()) return std::nullopt;
    return it->second.state;
}

std::set<NodeId> Hub::heater_relays(const RoomId& room) const {
    std::set<NodeId> out;
    for (const auto& n : world_.scenario().nodes) {
        if (n.room_id == room && n.has(SensorKind::Relay) && n.load == building::RelayLoad::Heater) out.insert(n.node_id);
    }
    return out;
}

std::vector<RoomId> heated_rooms(const building::Scenario& scenario) {
    std::set<RoomId> rooms;
    for (const auto& n : scenario.nodes) {
        if (n.has(SensorKind::Relay) && n.load == building::RelayLoad::Heater) rooms.insert(n.room_id);
    }
    return {rooms.begin(), rooms.end()};
}

std::vector<apps::SavingsReport> energy_reports(const Hub& hub, const std::vector<RoomId>& rooms, TimeRange range) {
    range.to = std::min(range.to, hub.time());
    for (const auto& room : rooms) {
        if (!hub.scenario().find_room(room)) throw apps::AppError(apps::AppErrc::NoData, "unknown room " + room);
        if (hub.heater_relays(room).empty()) throw apps::AppError(apps::AppErrc::NoData, "no heater in " + room);
    }

    HubOptions opts = hub.options();
    opts.setback_enabled = false;
    opts.security_app = false;
    opts.comfort_app = false;
    Hub baseline(hub.scenario(), opts);
    const auto& clock = hub.world().clock();
    const Duration span = range.to - clock.epoch;
    baseline.run(std::max<Tick>(0, (span + clock.tick_length - Duration{1}) / clock.tick_length));

    std::vector<apps::SavingsReport> out;
    for (const auto& room : rooms) {
        const auto relays = hub.heater_relays(room);
        const auto changes = hub.setback_changes(room);
        out.push_back(apps::make_savings_report(room, range, hub.scenario().find_room(room)->heater_w,
                                                apps::heater_on_time(hub.actuations(), relays, range),
                                                apps::heater_on_time(baseline.actuations(), relays, range),
                                                apps::time_flagged(changes, range)));
    }
    return out;
}

apps::SavingsReport energy_report(const Hub& hub, const RoomId& room, TimeRange range) {
    return energy_reports(hub, {room}, range).front();
}

}  // namespace sb::hub
