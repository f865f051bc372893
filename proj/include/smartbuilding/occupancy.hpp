#ifndef SMARTBUILDING_OCCUPANCY_HPP
#define SMARTBUILDING_OCCUPANCY_HPP

#include "smartbuilding/common.hpp"
#include "smartbuilding/reading.hpp"

#include <chrono>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <shared_mutex>
#include <string>
#include <utility>
#include <variant>
#include <vector>

/// Fuses directional people-counter steps, door activity and MAC presence
/// sightings into a per-room occupancy estimate and derives absence spans.
namespace sb::occupancy {

inline constexpr Duration kDefaultLease = std::chrono::minutes{5};
inline constexpr Duration kDefaultMinGap = std::chrono::minutes{10};

enum class OccupancyErrc { RoomUnknown, InvalidInput };
std::string_view to_string(OccupancyErrc code);
using OccupancyError = Error<OccupancyErrc>;

struct PresenceSighting {
    std::string mac;
    RoomId room_id;
    Timestamp at;
    double rssi_dbm = 0.0;
};

struct CounterStep {
    RoomId room_id;
    Timestamp at;
    int delta = 0;
};

struct DoorChange {
    RoomId room_id;
    Timestamp at;
    bool open = false;
};

using Input = std::variant<CounterStep, DoorChange, PresenceSighting>;

/// Counter/door/beacon reading as an occupancy input. `mac` names the
/// beacon for presence readings. nullopt for kinds occupancy ignores.
std::optional<Input> to_input(const Reading& r, const std::optional<std::string>& mac = std::nullopt);

enum class Confidence { High, Low };
std::string_view to_string(Confidence c);

struct OccupancyEstimate {
    RoomId room_id;
    Timestamp at;
    int count = 0;
    std::set<std::string> known_macs;
    Confidence confidence = Confidence::High;

    bool operator==(const OccupancyEstimate&) const = default;
};

struct AbsenceInterval {
    RoomId room_id;
    Timestamp start;
    /// nullopt when the absence runs to the end of the queried range.
    std::optional<Timestamp> end;

    bool operator==(const AbsenceInterval&) const = default;
};

/// Fusion rule: count = max(clamped counter cumsum, live MAC count).
/// Confidence is High when the two sources differ by at most one and the
/// latest counter step did not hit the zero clamp.
class Engine {
public:
    explicit Engine(Duration lease = kDefaultLease);

    void add_room(const RoomId& room);
    bool has_room(const RoomId& room) const;
    std::vector<RoomId> rooms() const;
    Duration lease() const { return lease_; }

    /// Folds one input in and returns the estimate at the input's timestamp.
    OccupancyEstimate update(const Input& input);

    OccupancyEstimate current_estimate(const RoomId& room, Timestamp at) const;
    std::set<std::string> present_macs(const RoomId& room, Timestamp at) const;

    /// Maximal spans inside `range` where the fused count stays zero for at
    /// least `min_gap`, bounded by the zero-crossing timestamps.
    std::vector<AbsenceInterval> absence_intervals(const RoomId& room, TimeRange range,
                                                   Duration min_gap = kDefaultMinGap) const;

    /// Last door state change seen for the room, if any.
    std::optional<DoorChange> last_door(const RoomId& room) const;

private:
    struct Step {
        Timestamp at;
        int delta = 0;
        int cumulative = 0;  // clamped running total after this step
        bool clamped = false;
    };
    struct RoomLog {
        mutable std::mutex mutex;
        std::vector<Step> steps;
        std::map<std::string, std::vector<Timestamp>> sightings;
        std::optional<DoorChange> door;
    };

    RoomLog& log(const RoomId& room) const;
    OccupancyEstimate estimate_locked(const RoomId& room, const RoomLog& log, Timestamp at) const;
    std::set<std::string> macs_locked(const RoomLog& log, Timestamp at) const;

    Duration lease_;
    mutable std::shared_mutex rooms_mutex_;
    std::map<RoomId, std::unique_ptr<RoomLog>> rooms_;
};

}  // namespace sb::occupancy

#endif  // SMARTBUILDING_OCCUPANCY_HPP
