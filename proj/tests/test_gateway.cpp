#include "smartbuilding/gateway.hpp"

#include <gtest/gtest.h>

#include <algorithm>

#include <arpa/inet.h>
#include <netinet/in.h>
#include <sys/socket.h>
#include <unistd.h>

using namespace sb;
using namespace sb::gateway;
using Value = bus::Value;

namespace {

building::Scenario office() {
    return building::Scenario::parse(
        "room office temp=18 t_env=10 tau=72000 heater_w=1000 c=360000\n"
        "node tag    room=office kinds=temperature,humidity sigma=0 period=10\n"
        "node pc     room=office kinds=people-counter\n"
        "node door   room=office kinds=door\n"
        "node heater room=office kinds=relay load=heater\n"
        "event 10 office enter\n"
        "arm 0 office\n");
}

std::size_t pick(Rng& rng, std::size_t n) { return static_cast<std::size_t>(rng.uniform() * static_cast<double>(n)); }

struct Fixture : ::testing::Test {
    hub::Hub hub{office()};
    Gateway gw{hub};
    std::vector<std::string> lines;
    std::unique_ptr<Session> session = gw.open_session([this](const std::string& l) { lines.push_back(l); });

    Value send(const std::string& line) {
        const auto before = lines.size();
        gw.handle_line(*session, line);
        EXPECT_EQ(lines.size(), before + 1) << line;
        EXPECT_EQ(lines.back().back(), '\n');
        return Value::parse(lines.back());
    }
};

}  // namespace

using Frames = Fixture;

TEST_F(Frames, NotJson) {
    const auto r = send("{not json");
    EXPECT_EQ(r["ok"], false);
    EXPECT_EQ(r["error"]["code"], "BadFrame");
    EXPECT_TRUE(r["id"].is_null());
}

TEST_F(Frames, MissingOp) {
    const auto r = send(R"({"id":"7"})");
    EXPECT_EQ(r["id"], "7");
    EXPECT_EQ(r["error"]["code"], "BadFrame");
}

TEST_F(Frames, UnknownOp) {
    const auto r = send(R"({"id":"8","op":"reboot"})");
    EXPECT_EQ(r["id"], "8");
    EXPECT_EQ(r["error"]["code"], "UnknownOp");
}

TEST_F(Frames, NonStringIdRejected) {
    EXPECT_EQ(send(R"({"id":5,"op":"occupancy.get"})")["error"]["code"], "BadFrame");
    EXPECT_EQ(send(R"([1,2])")["error"]["code"], "BadFrame");
    EXPECT_EQ(send(R"({"id":"x","op":"occupancy.get","params":[1]})")["error"]["code"], "BadFrame");
}

TEST_F(Frames, BlankLineIgnored) {
    gw.handle_line(*session, "   ");
    EXPECT_TRUE(lines.empty());
}

TEST_F(Frames, OccupancyGet) {
    hub.run(50);
    const auto r = send(R"({"id":"a","op":"occupancy.get","params":{"room":"office"}})");
    EXPECT_EQ(r["ok"], true);
    EXPECT_EQ(r["data"]["count"], 1);
    const auto bad = send(R"({"id":"b","op":"occupancy.get","params":{"room":"attic"}})");
    EXPECT_EQ(bad["error"]["code"], "HandlerFault");
    EXPECT_EQ(send(R"({"id":"c","op":"occupancy.get"})")["error"]["code"], "HandlerFault");
}

TEST_F(Frames, SeriesQuery) {
    hub.run(100);
    const auto r = send(R"({"id":"q","op":"series.query","params":{"nodes":["tag"],"kinds":["temperature"]}})");
    ASSERT_EQ(r["ok"], true) << r.dump();
    ASSERT_TRUE(r["data"].is_array());
    EXPECT_EQ(r["data"].size(), 10u);
    for (const auto& row : r["data"]) EXPECT_EQ(row["sensor"], "temperature");
}

TEST_F(Frames, RelaySetAndArm) {
    hub.run(20);
    const auto r = send(R"({"id":"r","op":"relay.set","params":{"node":"heater","on":false}})");
    ASSERT_EQ(r["ok"], true) << r.dump();
    EXPECT_FALSE(hub.world().relay_state("heater"));
    EXPECT_EQ(send(R"({"id":"s","op":"relay.set","params":{"node":"heater"}})")["error"]["code"], "BadFrame");
    const auto d = send(R"({"id":"d","op":"security.disarm","params":{"room":"office"}})");
    EXPECT_EQ(d["data"]["armed"], false);
    EXPECT_EQ(send(R"({"id":"e","op":"security.arm","params":{"room":"office"}})")["data"]["armed"], true);
}

TEST_F(Frames, FeedbackSubmit) {
    hub.run(20);
    const auto ok =
        send(R"({"id":"f","op":"feedback.submit","params":{"room":"office","user":"ana","thermal":1,"humidity":0}})");
    ASSERT_EQ(ok["ok"], true) << ok.dump();
    const auto bad =
        send(R"({"id":"g","op":"feedback.submit","params":{"room":"office","user":"ana","thermal":3,"humidity":0}})");
    EXPECT_EQ(bad["ok"], false);
    EXPECT_EQ(hub.feedback().all().size(), 1u);
}

TEST_F(Frames, EnergyReport) {
    hub.run(600);
    const auto r = send(R"({"id":"e","op":"report.energy","params":{"room":"office"}})");
    ASSERT_EQ(r["ok"], true) << r.dump();
    EXPECT_TRUE(r["data"].contains("saved_kwh"));
}

TEST_F(Frames, SeriesStreamDelivers) {
    const auto r = send(R"({"id":"s1","op":"series.stream","params":{"kinds":["humidity"]}})");
    ASSERT_EQ(r["ok"], true);
    EXPECT_EQ(session->open_streams(), 1u);
    lines.clear();
    hub.run(100);
    ASSERT_EQ(lines.size(), 10u);
    for (const auto& l : lines) {
        const auto f = Value::parse(l);
        EXPECT_EQ(f["id"], "s1");
        EXPECT_EQ(f["stream"], true);
        EXPECT_EQ(f["data"]["sensor"], "humidity");
    }
    EXPECT_EQ(send(R"({"id":"s2","op":"series.stream","params":{"kinds":["smell"]}})")["error"]["code"], "BadFrame");
}

TEST_F(Frames, AlertsStreamDelivers) {
    ASSERT_EQ(send(R"({"id":"al","op":"alerts.stream"})")["ok"], true);
    lines.clear();
    // The tick-10 entry opens the armed door before anyone is counted.
    hub.run(100);
    bool saw = false;
    for (const auto& l : lines) {
        const auto f = Value::parse(l);
        if (f["id"] == "al" && f["data"]["rule"] == "DoorWhileEmpty") saw = true;
    }
    EXPECT_TRUE(saw);
}

TEST_F(Frames, StreamsCloseWithSession) {
    send(R"({"id":"s","op":"series.stream"})");
    session.reset();
    hub.run(100);  // nothing writes into the dead sink
    SUCCEED();
}

// Every line, well-formed or not, gets exactly one reply carrying its id.
TEST_F(Frames, FuzzedExactlyOneReply) {
    Rng rng(99);
    const std::vector<std::string> ops = {"series.query", "occupancy.get", "relay.set",       "security.arm",
                                          "report.energy", "bogus",        "feedback.submit", ""};
    const std::vector<std::string> params = {"",
                                             R"(,"params":{})",
                                             R"(,"params":{"room":"office"})",
                                             R"(,"params":{"room":"attic"})",
                                             R"(,"params":{"node":"heater","on":true})",
                                             R"(,"params":{"node":"heater","on":"x"})",
                                             R"(,"params":null)",
                                             R"(,"params":"str")",
                                             R"(,"params":{"from":"garbage"})"};
    hub.run(20);
    for (int i = 0; i < 2000; ++i) {
        const std::string id = "id-" + std::to_string(i);
        std::string line = R"({"id":")" + id + R"(","op":")" + ops[pick(rng, ops.size())] + "\"" +
                           params[pick(rng, params.size())] + "}";
        bool mangled = false;
        if (rng.bernoulli(0.1)) {
            line.resize(pick(rng, line.size()));
            mangled = true;
        }
        if (line.find_first_not_of(" \t") == std::string::npos) continue;
        const auto reply = send(line);
        ASSERT_TRUE(reply.contains("ok"));
        if (!mangled) {
            ASSERT_EQ(reply["id"], id) << line;
        }
        if (reply["ok"] == false) {
            ASSERT_TRUE(reply["error"]["code"].is_string());
        }
    }
}

TEST(Server, RoundTripOverTcp) {
    hub::Hub hub(office());
    hub.run(50);
    Gateway gw(hub);
    Server server(gw, 0);
    server.start();
    ASSERT_NE(server.port(), 0);

    const int fd = ::socket(AF_INET, SOCK_STREAM, 0);
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_port = htons(server.port());
    ::inet_pton(AF_INET, "127.0.0.1", &addr.sin_addr);
    ASSERT_EQ(::connect(fd, reinterpret_cast<sockaddr*>(&addr), sizeof addr), 0);

    const std::string req = "{\"id\":\"t1\",\"op\":\"occupancy.get\",\"params\":{\"room\":\"office\"}}\n"
                            "{\"id\":\"t2\",\"op\":\"nope\"}\n";
    ASSERT_EQ(::send(fd, req.data(), req.size(), 0), static_cast<ssize_t>(req.size()));

    std::string got;
    char buf[4096];
    while (std::count(got.begin(), got.end(), '\n') < 2) {
        const auto n = ::recv(fd, buf, sizeof buf, 0);
        ASSERT_GT(n, 0);
        got.append(buf, static_cast<std::size_t>(n));
    }
    ::close(fd);
    server.stop();

    const auto nl = got.find('\n');
    const auto first = Value::parse(got.substr(0, nl));
    const auto second = Value::parse(got.substr(nl + 1));
    EXPECT_EQ(first["id"], "t1");
    EXPECT_EQ(first["data"]["count"], 1);
    EXPECT_EQ(second["id"], "t2");
    EXPECT_EQ(second["error"]["code"], "UnknownOp");
}
