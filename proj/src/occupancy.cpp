#include "smartbuilding/occupancy.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>

namespace sb::occupancy {

std::string_view to_string(OccupancyErrc code) {
    return code == OccupancyErrc::RoomUnknown ? "RoomUnknown" : "InvalidInput";
}

std::string_view to_string(Confidence c) { return c == Confidence::High ? "High" : "Low"; }

std::optional<Input> to_input(const Reading& r, const std::optional<std::string>& mac) {
    switch (r.kind) {
        case SensorKind::PeopleCounter:
            return CounterStep{r.room, r.at, static_cast<int>(std::lround(r.value))};
        case SensorKind::Door:
            return DoorChange{r.room, r.at, r.value != 0.0};
        case SensorKind::PresenceBeacon: {
            const auto& id = mac ? *mac : r.node;
            if (!is_valid_mac(id)) return std::nullopt;
            return PresenceSighting{id, r.room, r.at, r.value};
        }
        default:
            return std::nullopt;
    }
}

Engine::Engine(Duration lease) : lease_(lease) {
    if (lease < Duration::zero()) throw OccupancyError(OccupancyErrc::InvalidInput, "negative lease");
}

void Engine::add_room(const RoomId& room) {
    std::unique_lock lock(rooms_mutex_);
    rooms_.try_emplace(room, std::make_unique<RoomLog>());
}

bool Engine::has_room(const RoomId& room) const {
    std::shared_lock lock(rooms_mutex_);
    return rooms_.contains(room);
}

std::vector<RoomId> Engine::rooms() const {
    std::shared_lock lock(rooms_mutex_);
    std::vector<RoomId> out;
    for (const auto& [id, _] : rooms_) out.push_back(id);
    return out;
}

Engine::RoomLog& Engine::log(const RoomId& room) const {
    std::shared_lock lock(rooms_mutex_);
    auto it = rooms_.find(room);
    if (it == rooms_.end()) throw OccupancyError(OccupancyErrc::RoomUnknown, room);
    return *it->second;
}

std::set<std::string> Engine::macs_locked(const RoomLog& log, Timestamp at) const {
    std::set<std::string> live;
    for (const auto& [mac, times] : log.sightings) {
        auto it = std::upper_bound(times.begin(), times.end(), at);
        if (it == times.begin()) continue;
        if (at - *std::prev(it) <= lease_) live.insert(mac);
    }
    return live;
}

OccupancyEstimate Engine::estimate_locked(const RoomId& room, const RoomLog& log, Timestamp at) const {
    OccupancyEstimate est;
    est.room_id = room;
    est.at = at;
    est.known_macs = macs_locked(log, at);

    int counter = 0;
    bool clamped = false;
    auto it = std::upper_bound(log.steps.begin(), log.steps.end(), at,
                               [](Timestamp t, const Step& s) { return t < s.at; });
    if (it != log.steps.begin()) {
        counter = std::prev(it)->cumulative;
        clamped = std::prev(it)->clamped;
    }
    const int macs = static_cast<int>(est.known_macs.size());
    est.count = std::max(counter, macs);
    est.confidence = (!clamped && std::abs(counter - macs) <= 1) ? Confidence::High : Confidence::Low;
    return est;
}

OccupancyEstimate Engine::update(const Input& input) {
    return std::visit(
        [&](const auto& in) -> OccupancyEstimate {
            auto& l = log(in.room_id);
            std::lock_guard lock(l.mutex);
            using T = std::decay_t<decltype(in)>;
            if constexpr (std::is_same_v<T, CounterStep>) {
                // Stable insertion by time; later steps are re-clamped.
                auto pos = std::upper_bound(l.steps.begin(), l.steps.end(), in.at,
                                            [](Timestamp t, const Step& s) { return t < s.at; });
                auto idx = static_cast<std::size_t>(pos - l.steps.begin());
                l.steps.insert(pos, Step{in.at, in.delta, 0, false});
                int running = idx == 0 ? 0 : l.steps[idx - 1].cumulative;
                for (auto i = idx; i < l.steps.size(); ++i) {
                    const int raw = running + l.steps[i].delta;
                    l.steps[i].clamped = raw < 0;
                    l.steps[i].cumulative = std::max(0, raw);
                    running = l.steps[i].cumulative;
                }
            } else if constexpr (std::is_same_v<T, PresenceSighting>) {
                if (!is_valid_mac(in.mac)) throw OccupancyError(OccupancyErrc::InvalidInput, "malformed mac " + in.mac);
                if (in.rssi_dbm > 0) throw OccupancyError(OccupancyErrc::InvalidInput, "positive rssi");
                auto& times = l.sightings[in.mac];
                times.insert(std::upper_bound(times.begin(), times.end(), in.at), in.at);
            } else {
                if (!l.door || l.door->at <= in.at) l.door = in;
            }
            return estimate_locked(in.room_id, l, in.at);
        },
        input);
}

OccupancyEstimate Engine::current_estimate(const RoomId& room, Timestamp at) const {
    auto& l = log(room);
    std::lock_guard lock(l.mutex);
    return estimate_locked(room, l, at);
}

std::set<std::string> Engine::present_macs(const RoomId& room, Timestamp at) const {
    auto& l = log(room);
    std::lock_guard lock(l.mutex);
    return macs_locked(l, at);
}

std::optional<DoorChange> Engine::last_door(const RoomId& room) const {
    auto& l = log(room);
    std::lock_guard lock(l.mutex);
    return l.door;
}

std::vector<AbsenceInterval> Engine::absence_intervals(const RoomId& room, TimeRange range, Duration min_gap) const {
    if (min_gap <= Duration::zero()) throw OccupancyError(OccupancyErrc::InvalidInput, "min_gap must be positive");
    auto& l = log(room);
    std::lock_guard lock(l.mutex);
    std::vector<AbsenceInterval> out;
    if (range.empty()) return out;

    // The fused count is piecewise constant between these instants.
    std::vector<Timestamp> cuts{range.from};
    auto add_cut = [&](Timestamp t) {
        if (t > range.from && t < range.to) cuts.push_back(t);
    };
    for (const auto& s : l.steps) add_cut(s.at);
    for (const auto& [mac, times] : l.sightings) {
        for (auto t : times) {
            add_cut(t);
            add_cut(t + lease_ + Duration{1});
        }
    }
    std::sort(cuts.begin(), cuts.end());
    cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());

    std::optional<Timestamp> zero_since;
    auto close_run = [&](Timestamp end, bool open) {
        if (zero_since && end - *zero_since >= min_gap) {
            out.push_back(AbsenceInterval{room, *zero_since, open ? std::nullopt : std::optional{end}});
        }
        zero_since.reset();
    };
    for (auto t : cuts) {
        const bool empty = estimate_locked(room, l, t).count == 0;
        if (empty && !zero_since) zero_since = t;
        if (!empty && zero_since) close_run(t, false);
    }
    close_run(range.to, true);
    return out;
}

}  // namespace sb::occupancy
