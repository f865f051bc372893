#include "oracles.hpp"

#include "smartbuilding/occupancy.hpp"

#include <gtest/gtest.h>

#include <thread>

using namespace sb;
using namespace sb::occupancy;
using namespace std::chrono_literals;

namespace {

constexpr const char* kMacA = "c8:0f:10:aa:01:ff";
constexpr const char* kMacB = "c8:0f:10:aa:02:ff";

Timestamp t0 = kDefaultEpoch;

}  // namespace

TEST(Update, CounterEnterIsHighConfidence) {
    Engine e;
    e.add_room("lab");
    const auto est = e.update(CounterStep{"lab", t0, +1});
    EXPECT_EQ(est.count, 1);
    EXPECT_EQ(est.confidence, Confidence::High);
}

TEST(Update, ClampAtZeroIsLowConfidence) {
    Engine e;
    e.add_room("lab");
    const auto est = e.update(CounterStep{"lab", t0, -1});
    EXPECT_EQ(est.count, 0);
    EXPECT_EQ(est.confidence, Confidence::Low);
    // The next unclamped step restores High.
    EXPECT_EQ(e.update(CounterStep{"lab", t0 + 1s, +1}).confidence, Confidence::High);
}

TEST(Update, TwoMacsNoCounter) {
    Engine e;
    e.add_room("lab");
    e.update(PresenceSighting{kMacA, "lab", t0, -60});
    const auto est = e.update(PresenceSighting{kMacB, "lab", t0, -61});
    EXPECT_EQ(est.count, 2);
    EXPECT_EQ(est.known_macs.size(), 2u);
    EXPECT_EQ(est.confidence, Confidence::Low);
}

TEST(Update, DoorDoesNotChangeCount) {
    Engine e;
    e.add_room("lab");
    e.update(CounterStep{"lab", t0, +1});
    const auto est = e.update(DoorChange{"lab", t0 + 1s, true});
    EXPECT_EQ(est.count, 1);
    ASSERT_TRUE(e.last_door("lab"));
    EXPECT_TRUE(e.last_door("lab")->open);
}

TEST(Update, UnknownRoomAndBadInput) {
    Engine e;
    e.add_room("lab");
    try {
        e.update(CounterStep{"attic", t0, 1});
        FAIL();
    } catch (const OccupancyError& err) {
        EXPECT_EQ(err.code(), OccupancyErrc::RoomUnknown);
    }
    EXPECT_THROW(e.update(PresenceSighting{"nope", "lab", t0, -60}), OccupancyError);
    EXPECT_THROW(e.update(PresenceSighting{kMacA, "lab", t0, 3}), OccupancyError);
    EXPECT_THROW(e.current_estimate("attic", t0), OccupancyError);
}

TEST(Update, PlusThenMinusRestoresCount) {
    Engine e;
    e.add_room("lab");
    e.update(CounterStep{"lab", t0, +1});
    e.update(CounterStep{"lab", t0, +1});
    e.update(CounterStep{"lab", t0 + 1s, +1});
    EXPECT_EQ(e.update(CounterStep{"lab", t0 + 1s, -1}).count, 2);
}

TEST(Lease, ExpiresOneMillisecondAfterWindow) {
    Engine e;
    e.add_room("lab");
    e.update(PresenceSighting{kMacA, "lab", t0, -60});
    EXPECT_EQ(e.current_estimate("lab", t0 + kDefaultLease).count, 1);
    EXPECT_EQ(e.current_estimate("lab", t0 + kDefaultLease + 1ms).count, 0);
}

TEST(Lease, StillCountedBetweenSightings) {
    Engine e;
    e.add_room("lab");
    e.update(PresenceSighting{kMacA, "lab", t0, -60});
    e.update(PresenceSighting{kMacA, "lab", t0 + 4min, -60});
    EXPECT_EQ(e.current_estimate("lab", t0 + 2min).count, 1);
    EXPECT_EQ(e.current_estimate("lab", t0 + 8min).count, 1);
    EXPECT_EQ(e.current_estimate("lab", t0 - 1s).count, 0);
}

TEST(PresentMacs, Cases) {
    Engine e;
    e.add_room("lab");
    EXPECT_TRUE(e.present_macs("lab", t0).empty());
    e.update(PresenceSighting{kMacA, "lab", t0, -60});
    EXPECT_EQ(e.present_macs("lab", t0 + 1min), (std::set<std::string>{kMacA}));
    e.update(PresenceSighting{kMacB, "lab", t0 + 4min, -60});
    EXPECT_EQ(e.present_macs("lab", t0 + 6min), (std::set<std::string>{kMacB}));
}

TEST(Lease, ArrivalOrderOfTiesIsIrrelevant) {
    Engine a, b;
    a.add_room("lab");
    b.add_room("lab");
    a.update(PresenceSighting{kMacA, "lab", t0, -60});
    a.update(PresenceSighting{kMacB, "lab", t0, -70});
    b.update(PresenceSighting{kMacB, "lab", t0, -70});
    b.update(PresenceSighting{kMacA, "lab", t0, -60});
    for (auto at : {t0, t0 + 3min, t0 + 6min}) EXPECT_EQ(a.current_estimate("lab", at), b.current_estimate("lab", at));
}

TEST(Absence, AlwaysOccupied) {
    Engine e;
    e.add_room("lab");
    e.update(CounterStep{"lab", t0, +1});
    EXPECT_TRUE(e.absence_intervals("lab", {t0, t0 + 24h}).empty());
}

TEST(Absence, ExitThenEntry) {
    Engine e;
    e.add_room("lab");
    e.update(CounterStep{"lab", t0, +1});
    const auto t1 = t0 + 1h, t2 = t0 + 3h;
    e.update(CounterStep{"lab", t1, -1});
    e.update(CounterStep{"lab", t2, +1});
    const auto got = e.absence_intervals("lab", {t0, t0 + 24h});
    ASSERT_EQ(got.size(), 1u);
    EXPECT_EQ(got[0].start, t1);
    EXPECT_EQ(got[0].end, t2);
}

TEST(Absence, ShortGapIgnored) {
    Engine e;
    e.add_room("lab");
    e.update(CounterStep{"lab", t0, +1});
    e.update(CounterStep{"lab", t0 + 1h, -1});
    e.update(CounterStep{"lab", t0 + 1h + 9min, +1});
    EXPECT_TRUE(e.absence_intervals("lab", {t0, t0 + 24h}).empty());
    EXPECT_EQ(e.absence_intervals("lab", {t0, t0 + 24h}, 9min).size(), 1u);
}

TEST(Absence, OpenEndedAndLeaseBoundaries) {
    Engine e;
    e.add_room("lab");
    e.update(PresenceSighting{kMacA, "lab", t0 + 1h, -60});
    const auto got = e.absence_intervals("lab", {t0, t0 + 3h});
    ASSERT_EQ(got.size(), 2u);
    EXPECT_EQ(got[0].start, t0);
    EXPECT_EQ(got[0].end, t0 + 1h);
    EXPECT_EQ(got[1].start, t0 + 1h + kDefaultLease + 1ms);
    EXPECT_FALSE(got[1].end);
    EXPECT_THROW(e.absence_intervals("lab", {t0, t0 + 1h}, 0ms), OccupancyError);
    EXPECT_TRUE(e.absence_intervals("lab", {t0, t0}).empty());
}

TEST(Inputs, FromReadings) {
    Reading pc{t0, "pc", SensorKind::PeopleCounter, -1, Unit::Count, "lab"};
    auto in = to_input(pc);
    ASSERT_TRUE(in);
    EXPECT_EQ(std::get<CounterStep>(*in).delta, -1);
    Reading beacon{t0, "band", SensorKind::PresenceBeacon, -61, Unit::Dbm, "lab"};
    EXPECT_FALSE(to_input(beacon));  // node id is not a MAC and no MAC given
    EXPECT_EQ(std::get<PresenceSighting>(*to_input(beacon, std::string(kMacA))).mac, kMacA);
    Reading t{t0, "tag", SensorKind::Temperature, 20, Unit::Celsius, "lab"};
    EXPECT_FALSE(to_input(t));
}

// Incremental estimates against a full re-scan of the trace.
TEST(Property, IncrementalEqualsReplay) {
    Rng gen(606);
    for (int trial = 0; trial < 60; ++trial) {
        Engine e;
        e.add_room("lab");
        oracle::OccupancyTrace trace;
        const auto inputs = oracle::random_inputs(gen, 1 + static_cast<int>(gen.uniform() * 400), "lab", t0);
        for (const auto& in : inputs) {
            oracle::record(trace, in);
            const auto got = e.update(in);
            ASSERT_EQ(got, oracle::replay(trace, "lab", oracle::time_of(in), kDefaultLease));
            const Timestamp probe = t0 + Duration{static_cast<std::int64_t>(gen.uniform() * 3.6e6 * 5)};
            ASSERT_EQ(e.current_estimate("lab", probe), oracle::replay(trace, "lab", probe, kDefaultLease));
        }
        const TimeRange range{t0 - 1h, t0 + 6h};
        for (auto gap : {1min, 10min, 30min}) {
            const auto why =
                oracle::duality_violation(e.absence_intervals("lab", range, gap), trace, "lab", kDefaultLease, range, gap);
            ASSERT_EQ(why, "") << "trial " << trial;
        }
    }
}

TEST(Property, RoomsUpdateIndependentlyAcrossThreads) {
    Engine e;
    for (int r = 0; r < 4; ++r) e.add_room("room" + std::to_string(r));
    std::vector<std::thread> threads;
    for (int r = 0; r < 4; ++r) {
        threads.emplace_back([&, r] {
            const auto room = "room" + std::to_string(r);
            for (int i = 0; i < 2000; ++i) e.update(CounterStep{room, t0 + std::chrono::seconds{i}, i % 3 == 2 ? -1 : 1});
        });
    }
    for (auto& t : threads) t.join();
    for (int r = 0; r < 4; ++r) {
        // Pattern +1 +1 -1 never clamps: net +1 per three steps.
        EXPECT_EQ(e.current_estimate("room" + std::to_string(r), t0 + 1h).count, 668);
    }
}
