#ifndef SMARTBUILDING_HUB_HPP
#define SMARTBUILDING_HUB_HPP

#include "smartbuilding/apps.hpp"
#include "smartbuilding/building.hpp"
#include "smartbuilding/bus.hpp"
#include "smartbuilding/occupancy.hpp"
#include "smartbuilding/store.hpp"
#include "smartbuilding/transport.hpp"

#include <chrono>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <vector>

/// One building hub: a simulated world and its radios, the service bus, and
/// every service registered on it (sensor drivers, store, occupancy, relay
/// arbiter and the three apps), all driven from one logical clock.
///
/// Topics: `readings.<kind>`, `occupancy.<room>`, `actuation.<room>`,
/// `relay.state.<room>`, `alerts`, `clock.tick`.
/// Services: `driver.<node>`, `driver.adv`, `store`, `occupancy`, `relay`,
/// `energy`, `security`, `comfort`.
namespace sb::hub {

inline constexpr Duration kDefaultManualHold = std::chrono::minutes{15};
inline constexpr Tick kDefaultRequestTimeout = 50;
inline constexpr Tick kClockTopicEvery = 10;

inline constexpr const char* kBleLink = "ble";
inline constexpr const char* kZwaveLink = "zwave";

struct HubOptions {
    std::uint64_t seed = 1;
    TickClock clock;
    /// False pins every thermostat in Comfort mode (the savings baseline).
    bool setback_enabled = true;
    bool energy_app = true;
    bool security_app = true;
    bool comfort_app = true;
    apps::ThermostatConfig thermostat;
    Duration manual_hold = kDefaultManualHold;
    Duration lease = occupancy::kDefaultLease;
    double loss_prob = 0.0;
    Tick latency_ticks = 0;
    Tick request_timeout = kDefaultRequestTimeout;
};

/// Single-threaded core; callers on other threads take mutex() first.
class Hub {
public:
    explicit Hub(building::Scenario scenario, HubOptions options = {});
    ~Hub();
    Hub(const Hub&) = delete;
    Hub& operator=(const Hub&) = delete;

    /// Advances n ticks. Per tick: bus clock, world step, radio delivery,
    /// service dispatch, scheduled scenario feedback and arming.
    void run(Tick n);

    Tick now() const { return world_.now(); }
    Timestamp time() const { return world_.time(); }
    /// [epoch, now)
    TimeRange elapsed() const;

    const HubOptions& options() const { return options_; }
    const building::Scenario& scenario() const { return world_.scenario(); }
    building::World& world() { return world_; }
    const building::World& world() const { return world_; }
    transport::Network& network() { return net_; }
    bus::Bus& bus() { return bus_; }
    store::Store& store() { return store_; }
    const store::Store& store() const { return store_; }
    occupancy::Engine& occupancy() { return engine_; }
    const occupancy::Engine& occupancy() const { return engine_; }
    const apps::FeedbackLog& feedback() const { return feedback_; }

    /// Relay commands that reached the world, in order.
    const std::vector<ActuationCommand>& actuations() const { return actuations_; }
    const std::vector<apps::Alert>& alerts() const { return alerts_; }
    /// (instant, entered Setback) changes of a room's thermostat mode.
    std::vector<std::pair<Timestamp, bool>> setback_changes(const RoomId& room) const;
    std::optional<apps::ThermostatState> thermostat(const RoomId& room) const;
    std::uint64_t suppressed_auto_commands() const { return suppressed_; }
    std::uint64_t rejected_readings() const { return rejected_; }

    /// Heater relays of a room, sorted by id.
    std::set<NodeId> heater_relays(const RoomId& room) const;

    std::recursive_mutex& mutex() { return mutex_; }

private:
    struct EnergyRoom {
        apps::ThermostatState state;
        std::optional<Timestamp> zero_since;
        std::vector<std::pair<Timestamp, bool>> mode_log;
    };
    struct DoorTrack {
        Reading last;
        std::optional<Timestamp> open_since;
    };

    void wire_transport();
    void register_drivers();
    void register_store();
    void register_occupancy();
    void register_relay();
    void register_energy();
    void register_security();
    void register_comfort();

    void route(const building::Effect& effect);
    void dispatch(const std::vector<transport::Arrival>& arrivals);
    void fire_scheduled();
    bus::Value apply_relay(const NodeId& node, bool on, ActuationSource source);
    void on_temperature(const Reading& r);
    void check_door(const RoomId& room, Timestamp at);

    HubOptions options_;
    building::World world_;
    transport::Network net_;
    bus::Bus bus_;
    store::Store store_;
    occupancy::Engine engine_;
    apps::FeedbackLog feedback_;
    std::recursive_mutex mutex_;

    std::map<NodeId, std::string> node_mac_;  // beacon node -> mac
    std::set<NodeId> drivers_;
    std::map<NodeId, transport::ConnectionHandle> ble_conns_;

    std::vector<ActuationCommand> actuations_;
    std::vector<apps::Alert> alerts_;
    std::map<NodeId, Timestamp> hold_until_;
    std::uint64_t suppressed_ = 0;
    std::uint64_t rejected_ = 0;

    std::map<RoomId, EnergyRoom> energy_;
    std::map<RoomId, bool> armed_;
    std::map<RoomId, DoorTrack> doors_;
    apps::SecurityMonitor monitor_;
    std::map<RoomId, double> latest_temp_;

    std::size_t next_feedback_ = 0;
    std::size_t next_arm_ = 0;

    std::vector<bus::Registration> services_;
    std::vector<bus::Subscription> subscriptions_;
};

/// Savings per room over `range`: actual heater on-time from the hub's
/// command log, baseline from one re-simulation of the same scenario and
/// seed with setback disabled (manual commands are not replayed). Throws
/// AppError NoData for rooms without a heater relay.
std::vector<apps::SavingsReport> energy_reports(const Hub& hub, const std::vector<RoomId>& rooms, TimeRange range);
apps::SavingsReport energy_report(const Hub& hub, const RoomId& room, TimeRange range);

/// Rooms that carry at least one heater relay.
std::vector<RoomId> heated_rooms(const building::Scenario& scenario);

}  // namespace sb::hub

#endif  // SMARTBUILDING_HUB_HPP
