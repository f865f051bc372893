#include "smartbuilding/apps.hpp"

#include <algorithm>
#include <array>
#include <cmath>

namespace sb::apps {

std::string_view to_string(AppErrc code) {
    static constexpr std::array<std::string_view, 3> names = {"VoteOutOfRange", "InvalidInput", "NoData"};
    return names[static_cast<std::size_t>(code)];
}

std::string_view to_string(Mode m) { return m == Mode::Comfort ? "Comfort" : "Setback"; }

// ---------------------------------------------------------------------------
// Thermostat

ThermostatState ThermostatState::initial(RoomId room, NodeId relay, const ThermostatConfig& cfg) {
    return ThermostatState{std::move(room), std::move(relay),
                           std::clamp(cfg.comfort_c, cfg.min_setpoint_c, cfg.max_setpoint_c), cfg.hysteresis_c,
                           false, Mode::Comfort};
}

ThermostatStep thermostat_step(const ThermostatState& st, double temp_c, Timestamp at) {
    if (!std::isfinite(temp_c)) throw AppError(AppErrc::InvalidInput, "temperature is not finite");
    ThermostatStep out{st, std::nullopt};
    bool want = st.heater_on;
    if (temp_c < st.setpoint_c - st.hysteresis_c) want = true;
    else if (temp_c > st.setpoint_c + st.hysteresis_c) want = false;
    if (want != st.heater_on) {
        out.state.heater_on = want;
        out.command = ActuationCommand{at, st.relay, st.room_id, want, ActuationSource::Auto};
    }
    return out;
}

ThermostatState occupancy_setback(const ThermostatState& st, const occupancy::OccupancyEstimate& est,
                                  Duration absent_for, const ThermostatConfig& cfg) {
    ThermostatState out = st;
    if (est.count > 0) {
        out.mode = Mode::Comfort;
        out.setpoint_c = std::clamp(cfg.comfort_c, cfg.min_setpoint_c, cfg.max_setpoint_c);
    } else if (absent_for >= cfg.setback_delay) {
        out.mode = Mode::Setback;
        out.setpoint_c = std::clamp(cfg.setback_c, cfg.min_setpoint_c, cfg.max_setpoint_c);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Energy accounting

Duration heater_on_time(std::span<const ActuationCommand> log, const std::set<NodeId>& relays, TimeRange range) {
    if (range.empty()) return Duration::zero();
    std::map<NodeId, bool> state;
    std::size_t on_count = 0;
    Duration total{0};
    Timestamp cursor = range.from;
    for (const auto& cmd : log) {
        if (!relays.contains(cmd.node)) continue;
        const Timestamp t = std::clamp(cmd.at, range.from, range.to);
        if (on_count > 0) total += t - cursor;
        cursor = std::max(cursor, t);
        bool& s = state[cmd.node];
        if (s != cmd.on) {
            on_count += cmd.on ? 1 : std::size_t(-1);
            s = cmd.on;
        }
    }
    if (on_count > 0) total += range.to - cursor;
    return total;
}

Duration time_flagged(std::span<const std::pair<Timestamp, bool>> changes, TimeRange range) {
    if (range.empty()) return Duration::zero();
    bool flag = false;
    Duration total{0};
    Timestamp cursor = range.from;
    for (const auto& [at, value] : changes) {
        const Timestamp t = std::clamp(at, range.from, range.to);
        if (flag) total += t - cursor;
        cursor = std::max(cursor, t);
        flag = value;
    }
    if (flag) total += range.to - cursor;
    return total;
}

double to_kwh(Duration on, double watts) {
    return std::chrono::duration<double>(on).count() * watts / 3.6e6;
}

SavingsReport make_savings_report(const RoomId& room, TimeRange range, double heater_w, Duration actual_on,
                                  Duration baseline_on, Duration setback_time) {
    SavingsReport r;
    r.room_id = room;
    r.range = range;
    r.actual_kwh = to_kwh(actual_on, heater_w);
    r.baseline_kwh = to_kwh(baseline_on, heater_w);
    r.saved_kwh = r.baseline_kwh - r.actual_kwh;
    r.setback_hours = std::chrono::duration<double, std::ratio<3600>>(setback_time).count();
    return r;
}

// ---------------------------------------------------------------------------
// Security

std::string_view to_string(AlertRule r) { return r == AlertRule::DoorWhileEmpty ? "DoorWhileEmpty" : "DoorLeftOpen"; }

std::string_view to_string(Severity s) { return s == Severity::High ? "High" : "Medium"; }

Severity severity_of(AlertRule r) { return r == AlertRule::DoorWhileEmpty ? Severity::High : Severity::Medium; }

std::vector<AlertRule> triggered_rules(bool armed, const Reading& door, const occupancy::OccupancyEstimate& est,
                                       Duration open_duration) {
    std::vector<AlertRule> out;
    const bool open = door.kind == SensorKind::Door && door.value != 0.0;
    if (!open) return out;
    if (armed && est.count == 0) out.push_back(AlertRule::DoorWhileEmpty);
    if (open_duration >= kDoorLeftOpenAfter) out.push_back(AlertRule::DoorLeftOpen);
    return out;
}

std::optional<Alert> SecurityMonitor::evaluate(bool armed, const Reading& door,
                                               const occupancy::OccupancyEstimate& est, Duration open_duration) {
    if (door.kind != SensorKind::Door) throw AppError(AppErrc::InvalidInput, "not a door reading");
    const RoomId& room = door.room.empty() ? est.room_id : door.room;
    auto& ep = episodes_[room];
    if (door.value == 0.0) {
        ep = Episode{};
        return std::nullopt;
    }
    if (!ep.open) ep = Episode{true, {}};

    for (auto rule : triggered_rules(armed, door, est, open_duration)) {
        if (!ep.raised.insert(rule).second) continue;
        std::string detail = rule == AlertRule::DoorWhileEmpty
                                 ? "door " + door.node + " opened while armed and empty"
                                 : "door " + door.node + " open for " +
                                       std::to_string(std::chrono::duration_cast<std::chrono::seconds>(open_duration).count()) +
                                       " s";
        return Alert{rule, severity_of(rule), room, est.at, std::move(detail)};
    }
    return std::nullopt;
}

// ---------------------------------------------------------------------------
// Comfort

std::string_view to_string(PreferenceEstimate::Method m) {
    switch (m) {
        case PreferenceEstimate::Method::LeastSquares: return "least-squares";
        case PreferenceEstimate::Method::ZeroVoteMedian: return "neutral-median";
        case PreferenceEstimate::Method::Insufficient: return "insufficient";
    }
    return "?";
}

PreferenceEstimate estimate_preference(std::span<const ComfortFeedback> votes) {
    PreferenceEstimate out;
    out.votes = votes.size();

    std::set<double> distinct;
    for (const auto& v : votes) distinct.insert(v.temp_at_vote_c);

    if (votes.size() >= 5 && distinct.size() >= 2) {
        const double n = static_cast<double>(votes.size());
        double mean_t = 0.0, mean_v = 0.0;
        for (const auto& v : votes) {
            mean_t += v.temp_at_vote_c;
            mean_v += v.thermal_vote;
        }
        mean_t /= n;
        mean_v /= n;
        double var_t = 0.0, cov = 0.0;
        for (const auto& v : votes) {
            const double dt = v.temp_at_vote_c - mean_t;
            var_t += dt * dt;
            cov += dt * (v.thermal_vote - mean_v);
        }
        const double slope = cov / var_t;
        if (slope > 0.0) {
            out.method = PreferenceEstimate::Method::LeastSquares;
            out.slope = slope;
            out.t_pref = mean_t - mean_v / slope;
            return out;
        }
    }

    std::vector<double> neutral;
    for (const auto& v : votes) {
        if (v.thermal_vote == 0) neutral.push_back(v.temp_at_vote_c);
    }
    if (!neutral.empty()) {
        std::sort(neutral.begin(), neutral.end());
        const auto mid = neutral.size() / 2;
        out.method = PreferenceEstimate::Method::ZeroVoteMedian;
        out.t_pref = neutral.size() % 2 ? neutral[mid] : 0.5 * (neutral[mid - 1] + neutral[mid]);
    }
    return out;
}

std::size_t FeedbackLog::record(const ComfortFeedback& fb) {
    if (fb.thermal_vote < -2 || fb.thermal_vote > 2 || fb.humidity_vote < -2 || fb.humidity_vote > 2) {
        throw AppError(AppErrc::VoteOutOfRange, "votes must lie in [-2, 2]");
    }
    if (!std::isfinite(fb.temp_at_vote_c)) throw AppError(AppErrc::InvalidInput, "temperature is not finite");
    if (fb.user.empty() || fb.room_id.empty()) throw AppError(AppErrc::InvalidInput, "user and room are required");
    std::lock_guard lock(mutex_);
    log_.push_back(fb);
    return ++counts_[{fb.room_id, fb.user}];
}

std::size_t FeedbackLog::count(const RoomId& room, const std::string& user) const {
    std::lock_guard lock(mutex_);
    auto it = counts_.find({room, user});
    return it == counts_.end() ? 0 : it->second;
}

std::vector<ComfortFeedback> FeedbackLog::for_room(const RoomId& room) const {
    std::lock_guard lock(mutex_);
    std::vector<ComfortFeedback> out;
    std::copy_if(log_.begin(), log_.end(), std::back_inserter(out), [&](const auto& f) { return f.room_id == room; });
    return out;
}

std::vector<ComfortFeedback> FeedbackLog::for_user(const std::string& user) const {
    std::lock_guard lock(mutex_);
    std::vector<ComfortFeedback> out;
    std::copy_if(log_.begin(), log_.end(), std::back_inserter(out), [&](const auto& f) { return f.user == user; });
    return out;
}

std::vector<ComfortFeedback> FeedbackLog::all() const {
    std::lock_guard lock(mutex_);
    return log_;
}

}  // namespace sb::apps
