#include "smartbuilding/hub.hpp"

#include <gtest/gtest.h>

using namespace sb;
using namespace sb::hub;
using namespace std::chrono_literals;

namespace {

constexpr Tick kHour = 36000;

building::Scenario demo() { return building::Scenario::load(std::string(SB_SCENARIO_DIR) + "/demo.scn"); }

// One cold room, occupied from tick 10 on.
building::Scenario cold_office(const std::string& extra = "") {
    return building::Scenario::parse(
        "room office temp=15 t_env=10 tau=72000 heater_w=1000 c=360000\n"
        "node tag    room=office kinds=temperature sigma=0 period=10\n"
        "node pc     room=office kinds=people-counter\n"
        "node door   room=office kinds=door\n"
        "node heater room=office kinds=relay load=heater\n"
        "event 10 office enter\n" +
        extra);
}

std::vector<ActuationCommand> for_node(const std::vector<ActuationCommand>& log, const NodeId& node) {
    std::vector<ActuationCommand> out;
    for (const auto& c : log) {
        if (c.node == node) out.push_back(c);
    }
    return out;
}

}  // namespace

TEST(Hub, RunsDemoDeterministically) {
    HubOptions opts;
    opts.seed = 7;
    Hub a(demo(), opts), b(demo(), opts);
    a.run(2 * kHour);
    b.run(2 * kHour);
    EXPECT_EQ(a.actuations(), b.actuations());
    EXPECT_EQ(a.alerts(), b.alerts());
    EXPECT_EQ(a.store().size(), b.store().size());
    EXPECT_GT(a.store().size(), 0u);
    EXPECT_EQ(a.now(), 2 * kHour);
}

TEST(Hub, DisablingOneAppLeavesOthersUntouched) {
    HubOptions all;
    Hub full(demo(), all);
    full.run(24 * kHour);
    ASSERT_FALSE(full.alerts().empty());
    ASSERT_FALSE(full.actuations().empty());

    HubOptions no_security = all;
    no_security.security_app = false;
    Hub a(demo(), no_security);
    a.run(24 * kHour);
    EXPECT_EQ(a.actuations(), full.actuations());
    EXPECT_TRUE(a.alerts().empty());

    HubOptions no_energy = all;
    no_energy.energy_app = false;
    Hub b(demo(), no_energy);
    b.run(24 * kHour);
    EXPECT_EQ(b.alerts(), full.alerts());
    EXPECT_TRUE(b.actuations().empty());

    HubOptions no_comfort = all;
    no_comfort.comfort_app = false;
    Hub c(demo(), no_comfort);
    c.run(24 * kHour);
    EXPECT_EQ(c.alerts(), full.alerts());
    EXPECT_EQ(c.actuations(), full.actuations());
    EXPECT_TRUE(c.feedback().all().empty());
    EXPECT_FALSE(full.feedback().all().empty());
}

TEST(Hub, ManualCommandHoldsFifteenMinutes) {
    Hub hub(cold_office());
    hub.run(100);
    ASSERT_TRUE(hub.world().relay_state("heater"));

    auto call = hub.bus().request("relay", "set", {{"node", "heater"}, {"on", false}}, 5, "test");
    ASSERT_TRUE(call.ok()) << call.fault().detail;
    const Timestamp manual_at = hub.time();
    const Timestamp hold_until = manual_at + kDefaultManualHold;

    hub.run(kHour / 2);
    const auto cmds = for_node(hub.actuations(), "heater");
    std::optional<ActuationCommand> resumed;
    for (const auto& c : cmds) {
        if (c.at <= manual_at) continue;
        EXPECT_GE(c.at, hold_until) << "auto command inside the hold";
        if (!resumed) resumed = c;
    }
    ASSERT_TRUE(resumed);
    EXPECT_EQ(resumed->source, ActuationSource::Auto);
    EXPECT_TRUE(resumed->on);
    // Samples every second: auto resumes on the first sample after the hold.
    EXPECT_LE(resumed->at - hold_until, 1s);
    EXPECT_GT(hub.suppressed_auto_commands(), 0u);
}

TEST(Hub, ManualCommandOnUnknownRelayFaults) {
    Hub hub(cold_office());
    auto call = hub.bus().request("relay", "set", {{"node", "tag"}, {"on", true}}, 5);
    EXPECT_EQ(call.fault().code, bus::FaultCode::HandlerFault);
    auto bad = hub.bus().request("relay", "set", {{"node", "heater"}, {"on", "yes"}}, 5);
    EXPECT_EQ(bad.fault().code, bus::FaultCode::HandlerFault);
}

TEST(Hub, NeverAbsentSavesNothing) {
    Hub hub(cold_office());
    hub.run(6 * kHour);
    const auto r = energy_report(hub, "office", hub.elapsed());
    EXPECT_GT(r.actual_kwh, 0.0);
    EXPECT_EQ(r.saved_kwh, 0.0);
    EXPECT_EQ(r.setback_hours, 0.0);
}

TEST(Hub, AbsenceSavesEnergy) {
    Hub hub(cold_office("event 36000 office exit\nevent 144000 office enter\n"));
    hub.run(6 * kHour);
    const auto r = energy_report(hub, "office", hub.elapsed());
    EXPECT_GT(r.saved_kwh, 0.0);
    EXPECT_NEAR(r.setback_hours, 3.0 - 10.0 / 60.0, 5.0 / 3600.0);
    const auto changes = hub.setback_changes("office");
    ASSERT_EQ(changes.size(), 2u);
    EXPECT_TRUE(changes[0].second);
    EXPECT_FALSE(changes[1].second);
}

TEST(Hub, ReportsNeedAHeater) {
    Hub hub(demo());
    hub.run(10);
    EXPECT_EQ(heated_rooms(hub.scenario()), (std::vector<RoomId>{"dorm", "lab"}));
    EXPECT_THROW(energy_report(hub, "attic", hub.elapsed()), apps::AppError);
    EXPECT_EQ(hub.heater_relays("dorm"), (std::set<NodeId>{"heater-dorm"}));
}

TEST(Hub, OccupancyVisibleOverBus) {
    Hub hub(cold_office());
    hub.run(50);
    auto call = hub.bus().request("occupancy", "get", {{"room", "office"}}, 5);
    ASSERT_TRUE(call.ok());
    EXPECT_EQ(call.value().at("count"), 1);
    EXPECT_EQ(hub.bus().request("occupancy", "get", {{"room", "attic"}}, 5).fault().code,
              bus::FaultCode::HandlerFault);
}

TEST(Hub, StoreFedFromReadings) {
    Hub hub(cold_office());
    hub.run(1000);
    // Temperature every 10 ticks plus the counter step.
    store::RangeQuery q;
    q.kinds = std::set<SensorKind>{SensorKind::Temperature};
    EXPECT_EQ(hub.store().query_range(q).size(), 100u);
}
