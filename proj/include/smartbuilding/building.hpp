#ifndef SMARTBUILDING_BUILDING_HPP
#define SMARTBUILDING_BUILDING_HPP

#include "smartbuilding/common.hpp"
#include "smartbuilding/reading.hpp"
#include "smartbuilding/rng.hpp"

#include <iosfwd>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

/// Physical world model: rooms with first-order thermal dynamics, noisy
/// sensor nodes, occupant schedules and relay actuators.
namespace sb::building {

/// Metabolic heat gain per occupant, watts.
inline constexpr double kOccupantWatts = 90.0;
inline constexpr Tick kDefaultSensorPeriod = 10;
inline constexpr Tick kDoorDebounceTicks = 5;
inline constexpr double kBeaconRssiDbm = -60.0;
inline constexpr double kDefaultHumidityPct = 45.0;
inline constexpr double kDefaultLampLux = 300.0;

enum class BuildingErrc {
    ParseError,
    ValidationError,
    NodeUnknown,
    RoomUnknown,
    NotARelay,
    NotMeasuring,
};
std::string_view to_string(BuildingErrc code);
using BuildingError = Error<BuildingErrc>;

struct RoomState {
    RoomId room_id;
    double temp_c = 20.0;
    double humidity_pct = kDefaultHumidityPct;
    double lux = 0.0;
    double t_env_c = 20.0;
    Tick tau_ticks = 1;
    double heater_w = 0.0;
    double c_j_per_k = 1.0;
    int occupants = 0;
    bool heater_on = false;
};

/// What a relay node switches.
enum class RelayLoad { Socket, Heater, Lamp };

struct NodeSpec {
    NodeId node_id;
    RoomId room_id;
    std::set<SensorKind> kinds;
    std::optional<std::string> mac;
    /// Per-kind noise standard deviation; absent kinds are noise-free.
    std::map<SensorKind, double> noise_sigma;
    Tick period_ticks = kDefaultSensorPeriod;
    RelayLoad load = RelayLoad::Socket;
    double lamp_lux = kDefaultLampLux;

    bool has(SensorKind k) const { return kinds.contains(k); }
    double sigma(SensorKind k) const;
};

struct OccupantEvent {
    enum class Kind { Enter, Exit };

    Tick at = 0;
    RoomId room_id;
    Kind kind = Kind::Enter;
    std::optional<std::string> mac;
    /// Ticks the door stays open for this passage.
    Tick door_hold = 1;

    bool operator==(const OccupantEvent&) const = default;
};

/// Piecewise-constant humidity/lux schedule: value from the latest tick <= now.
struct Profile {
    std::map<Tick, double> humidity;
    std::map<Tick, double> lux;
};

/// Comfort vote scheduled by a scenario (stand-in for a messenger bot).
struct FeedbackEvent {
    Tick at = 0;
    RoomId room_id;
    std::string user;
    int thermal_vote = 0;
    int humidity_vote = 0;
    double temp_c = 0.0;
};

struct ArmEvent {
    Tick at = 0;
    RoomId room_id;
    bool armed = true;
};

/// Parsed and validated scenario file.
///
/// Line grammar (`#` starts a comment):
///   room <id> temp=<f> t_env=<f> tau=<int> [heater_w=<f>] c=<f> [humidity=<f>] [lux=<f>]
///   node <id> room=<id> kinds=<csv> [mac=<hex>] [sigma=<f>] [period=<int>] [load=heater|lamp|socket] [lux=<f>]
///   event <tick> <room> enter|exit [mac=<hex>] [hold=<int>]
///   profile <room> humidity|lux <tick>=<f> ...
///   feedback <tick> <room> <user> thermal=<int> humidity=<int> temp=<f>
///   arm <tick> <room> / disarm <tick> <room>
struct Scenario {
    std::vector<RoomState> rooms;
    std::vector<NodeSpec> nodes;
    std::vector<OccupantEvent> events;
    std::map<RoomId, Profile> profiles;
    std::vector<FeedbackEvent> feedback;
    std::vector<ArmEvent> arming;

    static Scenario parse(std::istream& in);
    static Scenario parse(std::string_view text);
    static Scenario load(const std::string& path);

    /// Throws ValidationError; parse() calls this.
    void validate() const;

    const RoomState* find_room(std::string_view id) const;
    const NodeSpec* find_node(std::string_view id) const;
};

/// Effect produced while stepping the world.
using Effect = std::variant<Reading, OccupantEvent>;

struct WorldOptions {
    TickClock clock;
    /// When false, step() does not sample measuring nodes; an external
    /// driver (e.g. BLE subscriptions) calls sample_sensor() instead.
    bool periodic_sampling = true;
};

/// Single-owner simulated building.
class World {
public:
    World(Scenario scenario, std::uint64_t seed, WorldOptions options = {});
    World(const World&) = delete;
    World& operator=(const World&) = delete;

    /// Advances dt ticks. Per tick: integrate temperature (explicit Euler),
    /// apply profiles, fire due occupant events, emit due readings.
    std::vector<Effect> step(Tick dt);

    /// Door open/close pair, people-counter delta, and presence bookkeeping.
    std::vector<Reading> apply_occupant_event(const OccupantEvent& ev);

    ActuationCommand set_relay(const NodeId& node, bool on, ActuationSource source);

    /// One noisy sample of a measuring kind. The single-argument form needs
    /// the node to carry exactly one measuring kind.
    Reading sample_sensor(const NodeId& node, SensorKind kind);
    Reading sample_sensor(const NodeId& node);

    Tick now() const { return now_; }
    Timestamp time() const { return options_.clock.to_time(now_); }
    const TickClock& clock() const { return options_.clock; }
    const Scenario& scenario() const { return scenario_; }

    const RoomState& room(std::string_view id) const;
    const NodeSpec& node(std::string_view id) const;
    bool relay_state(const NodeId& node) const;
    /// Equilibrium temperature with the current heater and occupancy.
    double equilibrium_c(std::string_view room) const;
    std::set<std::string> macs_in(std::string_view room) const;

private:
    struct RoomRuntime {
        RoomState state;
        double base_lux = 0.0;
        std::set<std::string> macs;
        Tick door_open_until = -1;  // tick of the pending close, -1 when shut
        Tick last_door_open = -1'000'000;
    };

    RoomRuntime& runtime(std::string_view room);
    std::vector<Reading> fire_event(const OccupantEvent& ev, bool schedule_close);
    void integrate_one_tick();
    void apply_profiles();
    void refresh_lux(RoomRuntime& rt);
    Reading make_reading(const NodeSpec& n, SensorKind kind, double value, const RoomId& room) const;
    const NodeSpec* node_with(std::string_view room, SensorKind kind) const;
    const NodeSpec* beacon_for(const std::string& mac) const;

    Scenario scenario_;
    WorldOptions options_;
    Rng rng_;
    Tick now_ = 0;
    std::map<RoomId, RoomRuntime, std::less<>> rooms_;
    std::map<NodeId, const NodeSpec*, std::less<>> nodes_;
    std::map<NodeId, bool> relays_;
    std::size_t next_event_ = 0;
};

}  // namespace sb::building

#endif  // SMARTBUILDING_BUILDING_HPP
