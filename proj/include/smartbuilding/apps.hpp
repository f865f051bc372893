#ifndef SMARTBUILDING_APPS_HPP
#define SMARTBUILDING_APPS_HPP

#include "smartbuilding/common.hpp"
#include "smartbuilding/occupancy.hpp"
#include "smartbuilding/reading.hpp"

#include <chrono>
#include <cstddef>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

/// Application logic for the three concurrent building apps: energy
/// management, security and comfort. Pure functions plus small stateful
/// helpers; bus wiring lives in the hub.
namespace sb::apps {

enum class AppErrc { VoteOutOfRange, InvalidInput, NoData };
std::string_view to_string(AppErrc code);
using AppError = Error<AppErrc>;

// ---------------------------------------------------------------------------
// Energy management

struct ThermostatConfig {
    double comfort_c = 22.0;
    double setback_c = 17.0;
    double hysteresis_c = 0.5;
    Duration setback_delay = std::chrono::minutes{10};
    double min_setpoint_c = 5.0;
    double max_setpoint_c = 30.0;
};

enum class Mode { Comfort, Setback };
std::string_view to_string(Mode m);

struct ThermostatState {
    RoomId room_id;
    NodeId relay;
    double setpoint_c = 22.0;
    double hysteresis_c = 0.5;
    bool heater_on = false;
    Mode mode = Mode::Comfort;

    static ThermostatState initial(RoomId room, NodeId relay, const ThermostatConfig& cfg = {});
    bool operator==(const ThermostatState&) const = default;
};

struct ThermostatStep {
    ThermostatState state;
    std::optional<ActuationCommand> command;
};

/// Bang-bang control with a dead band: on below setpoint - hysteresis, off
/// above setpoint + hysteresis. A command is emitted only on transitions.
ThermostatStep thermostat_step(const ThermostatState& st, double temp_c, Timestamp at);

/// Setback after `setback_delay` of continuous absence; comfort as soon as
/// anyone is counted.
ThermostatState occupancy_setback(const ThermostatState& st, const occupancy::OccupancyEstimate& est,
                                  Duration absent_for, const ThermostatConfig& cfg = {});

struct SavingsReport {
    RoomId room_id;
    TimeRange range;
    double baseline_kwh = 0.0;
    double actual_kwh = 0.0;
    double saved_kwh = 0.0;
    double setback_hours = 0.0;
};

/// Time inside `range` during which at least one of `relays` was on,
/// replaying an ordered command log. Relays start off.
Duration heater_on_time(std::span<const ActuationCommand> log, const std::set<NodeId>& relays, TimeRange range);

/// Time inside `range` spent in the state last set by an ordered list of
/// (instant, flag) changes. The flag starts false.
Duration time_flagged(std::span<const std::pair<Timestamp, bool>> changes, TimeRange range);

double to_kwh(Duration on, double watts);

SavingsReport make_savings_report(const RoomId& room, TimeRange range, double heater_w, Duration actual_on,
                                  Duration baseline_on, Duration setback_time);

// ---------------------------------------------------------------------------
// Security

inline constexpr Duration kDoorLeftOpenAfter = std::chrono::minutes{5};

enum class AlertRule { DoorWhileEmpty, DoorLeftOpen };
enum class Severity { High, Medium };
std::string_view to_string(AlertRule r);
std::string_view to_string(Severity s);
Severity severity_of(AlertRule r);

struct Alert {
    AlertRule rule = AlertRule::DoorWhileEmpty;
    Severity severity = Severity::High;
    RoomId room_id;
    Timestamp at;
    std::string detail;

    bool operator==(const Alert&) const = default;
};

/// Rules whose conditions hold right now, most severe first, without
/// episode bookkeeping.
std::vector<AlertRule> triggered_rules(bool armed, const Reading& door, const occupancy::OccupancyEstimate& est,
                                       Duration open_duration);

/// Adds per-room episode deduplication: one door-open episode yields at
/// most one alert per rule. A close reading ends the episode.
class SecurityMonitor {
public:
    std::optional<Alert> evaluate(bool armed, const Reading& door, const occupancy::OccupancyEstimate& est,
                                  Duration open_duration);

private:
    struct Episode {
        bool open = false;
        std::set<AlertRule> raised;
    };
    std::map<RoomId, Episode> episodes_;
};

// ---------------------------------------------------------------------------
// Comfort / hospitality

struct ComfortFeedback {
    std::string user;
    RoomId room_id;
    Timestamp at;
    int thermal_vote = 0;
    int humidity_vote = 0;
    double temp_at_vote_c = 0.0;
};

struct PreferenceEstimate {
    enum class Method { LeastSquares, ZeroVoteMedian, Insufficient };
    Method method = Method::Insufficient;
    std::optional<double> t_pref;
    /// Fitted votes-per-degree when method is LeastSquares.
    std::optional<double> slope;
    std::size_t votes = 0;
};
std::string_view to_string(PreferenceEstimate::Method m);

/// Least-squares fit of vote = a * (temp - T_pref) with a > 0. Needs at
/// least five votes over two or more distinct temperatures; otherwise the
/// median temperature among neutral votes, otherwise Insufficient.
PreferenceEstimate estimate_preference(std::span<const ComfortFeedback> votes);

/// Feedback kept apart from the sensor store, keyed by user.
class FeedbackLog {
public:
    /// Returns how many votes (room, user) now has.
    std::size_t record(const ComfortFeedback& fb);

    std::size_t count(const RoomId& room, const std::string& user) const;
    std::vector<ComfortFeedback> for_room(const RoomId& room) const;
    std::vector<ComfortFeedback> for_user(const std::string& user) const;
    std::vector<ComfortFeedback> all() const;

private:
    mutable std::mutex mutex_;
    std::vector<ComfortFeedback> log_;
    std::map<std::pair<RoomId, std::string>, std::size_t> counts_;
};

}  // namespace sb::apps

#endif  // SMARTBUILDING_APPS_HPP
