// sbctl: run scenarios, export readings, print savings reports, serve the
// NDJSON gateway.
//
// Exit status: 0 ok, 1 bad input (scenario, arguments), 2 internal error.

#include "smartbuilding/building.hpp"
#include "smartbuilding/gateway.hpp"
#include "smartbuilding/hub.hpp"
#include "smartbuilding/report.hpp"
#include "smartbuilding/store.hpp"

#include <CLI11.hpp>

#include <atomic>
#include <chrono>
#include <csignal>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <thread>

namespace fs = std::filesystem;
using namespace sb;

namespace {

struct InputError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct SimArgs {
    std::string scenario;
    std::uint64_t seed = 1;
    double hours = 24.0;
    bool no_setback = false;
};

void add_sim_options(CLI::App* cmd, SimArgs& a, bool scenario_positional) {
    if (scenario_positional) cmd->add_option("scenario", a.scenario, "scenario file")->required();
    else cmd->add_option("--scenario", a.scenario, "scenario file");
    cmd->add_option("--seed", a.seed, "run seed (SB_SEED overrides)");
    cmd->add_option("--hours", a.hours, "simulated hours")->check(CLI::NonNegativeNumber);
    cmd->add_flag("--no-setback", a.no_setback, "pin thermostats in comfort mode");
}

std::uint64_t effective_seed(std::uint64_t seed) {
    if (const char* env = std::getenv("SB_SEED"); env && *env) {
        try {
            std::size_t used = 0;
            const auto v = std::stoull(env, &used);
            if (used != std::string(env).size()) throw std::invalid_argument(env);
            return v;
        } catch (const std::exception&) {
            throw InputError(std::string("SB_SEED is not an unsigned integer: ") + env);
        }
    }
    return seed;
}

Tick ticks_for(double hours, const TickClock& clock) {
    return static_cast<Tick>(std::llround(hours * 3600.0 / clock.tick_seconds()));
}

std::unique_ptr<hub::Hub> simulate(const SimArgs& a) {
    if (a.scenario.empty()) throw InputError("--scenario is required");
    hub::HubOptions opts;
    opts.seed = effective_seed(a.seed);
    opts.setback_enabled = !a.no_setback;
    auto h = std::make_unique<hub::Hub>(building::Scenario::load(a.scenario), opts);
    h->run(ticks_for(a.hours, opts.clock));
    return h;
}

/// ISO-8601 instant, or a number of hours after the clock epoch.
Timestamp parse_instant(const std::string& text, const TickClock& clock) {
    if (auto t = parse_iso8601(text)) return *t;
    try {
        std::size_t used = 0;
        const double h = std::stod(text, &used);
        if (used == text.size()) {
            return clock.epoch + std::chrono::duration_cast<Duration>(std::chrono::duration<double, std::ratio<3600>>(h));
        }
    } catch (const std::exception&) {
    }
    throw InputError("bad instant '" + text + "' (want YYYY-MM-DDTHH:MM:SS.mmmZ or hours)");
}

TimeRange range_from(const std::string& from, const std::string& to, TimeRange whole, const TickClock& clock) {
    TimeRange r = whole;
    if (!from.empty()) r.from = parse_instant(from, clock);
    if (!to.empty()) r.to = parse_instant(to, clock);
    if (r.to < r.from) throw InputError("--to precedes --from");
    return r;
}

std::ofstream open_out(const fs::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    return out;
}

void write_text(const fs::path& path, const std::string& text) {
    auto out = open_out(path);
    out << text;
}

int cmd_run(const SimArgs& a, const std::string& out_dir) {
    auto h = simulate(a);
    fs::create_directories(out_dir);
    const fs::path dir(out_dir);

    std::size_t rows = 0;
    {
        auto f = open_out(dir / "readings.csv");
        rows = h->store().export_csv(store::RangeQuery::everything(), f);
    }
    {
        auto f = open_out(dir / "actuations.csv");
        report::write_actuations_csv(f, h->actuations());
    }
    {
        auto f = open_out(dir / "alerts.csv");
        report::write_alerts_csv(f, h->alerts());
    }
    std::vector<RoomId> rooms;
    for (const auto& r : h->scenario().rooms) rooms.push_back(r.room_id);
    {
        auto f = open_out(dir / "preferences.csv");
        report::write_preferences_csv(f, h->feedback(), rooms);
    }
    const auto reports = report::build_reports(*h, hub::heated_rooms(h->scenario()), h->elapsed());
    write_text(dir / "energy_report.txt", report::render(reports, report::Format::Text));
    write_text(dir / "energy_report.csv", report::render(reports, report::Format::Csv));

    std::cout << "simulated " << h->now() << " ticks: " << rows << " readings, " << h->actuations().size()
              << " actuations, " << h->alerts().size() << " alerts -> " << out_dir << '\n';
    return 0;
}

struct ExportArgs {
    std::string in;
    std::string from, to;
    std::vector<std::string> nodes, kinds;
    std::string out = "-";
};

int cmd_export(const SimArgs& a, const ExportArgs& e) {
    store::Store local;
    std::unique_ptr<hub::Hub> h;
    const store::Store* source = &local;
    TickClock clock;
    if (!e.in.empty()) {
        std::ifstream in(e.in, std::ios::binary);
        if (!in) throw InputError("cannot open " + e.in);
        local.import_csv(in);
    } else {
        h = simulate(a);
        source = &h->store();
        clock = h->world().clock();
    }

    store::RangeQuery q;
    const auto r = range_from(e.from, e.to, {Timestamp::min(), Timestamp::max()}, clock);
    q.from = r.from;
    q.to = r.to;
    if (!e.nodes.empty()) q.nodes = std::set<NodeId>(e.nodes.begin(), e.nodes.end());
    if (!e.kinds.empty()) {
        q.kinds.emplace();
        for (const auto& k : e.kinds) {
            auto kind = parse_sensor_kind(k);
            if (!kind) throw InputError("unknown sensor kind " + k);
            q.kinds->insert(*kind);
        }
    }
    if (e.out == "-") {
        source->export_csv(q, std::cout);
    } else {
        auto f = open_out(e.out);
        source->export_csv(q, f);
    }
    return 0;
}

struct ReportArgs {
    std::string room;
    std::string from, to;
    std::string format = "text";
    std::string out = "-";
};

int cmd_report(const SimArgs& a, const ReportArgs& r) {
    const auto format = report::parse_format(r.format);
    if (!format) throw InputError("--format must be text or csv");
    auto h = simulate(a);
    const auto range = range_from(r.from, r.to, h->elapsed(), h->world().clock());
    const auto text = report::export_report(*h, r.room, range, *format);
    if (r.out == "-") std::cout << text;
    else write_text(r.out, text);
    return 0;
}

std::atomic<bool> g_stop{false};

extern "C" void on_signal(int) { g_stop = true; }

struct ServeArgs {
    std::uint16_t port = 7070;
    std::string bind = "127.0.0.1";
    double speed = 1.0;
};

int cmd_serve(const SimArgs& a, const ServeArgs& s) {
    if (a.scenario.empty()) throw InputError("--scenario is required");
    if (!(s.speed > 0)) throw InputError("--speed must be positive");
    hub::HubOptions opts;
    opts.seed = effective_seed(a.seed);
    opts.setback_enabled = !a.no_setback;
    hub::Hub h(building::Scenario::load(a.scenario), opts);
    gateway::Gateway gw(h);
    gateway::Server server(gw, s.port, s.bind);
    server.start();
    std::cout << "gateway listening on " << s.bind << ':' << server.port() << std::endl;

    std::signal(SIGINT, on_signal);
    std::signal(SIGTERM, on_signal);
    const Tick limit = a.hours > 0 ? ticks_for(a.hours, opts.clock) : -1;
    const auto tick_wall = std::chrono::duration<double>(opts.clock.tick_seconds() / s.speed);
    auto next = std::chrono::steady_clock::now();
    while (!g_stop && (limit < 0 || h.now() < limit)) {
        h.run(1);
        next += std::chrono::duration_cast<std::chrono::steady_clock::duration>(tick_wall);
        std::this_thread::sleep_until(next);
    }
    server.stop();
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Smart-building hub: simulate, export, report, serve"};
    app.require_subcommand(1);

    SimArgs sim;
    std::string out_dir = "out";
    ExportArgs ex;
    ReportArgs rep;
    ServeArgs srv;

    auto* run = app.add_subcommand("run", "simulate a scenario and write CSV exports plus an energy report");
    add_sim_options(run, sim, true);
    run->add_option("--out", out_dir, "output directory");

    auto* exp = app.add_subcommand("export", "write readings as CSV");
    add_sim_options(exp, sim, false);
    exp->add_option("--in", ex.in, "read a CSV export instead of simulating");
    exp->add_option("--from", ex.from, "range start (ISO-8601 or hours)");
    exp->add_option("--to", ex.to, "range end, exclusive");
    exp->add_option("--node", ex.nodes, "only these nodes");
    exp->add_option("--kind", ex.kinds, "only these sensor kinds");
    exp->add_option("--out", ex.out, "output file, - for stdout");

    auto* rpt = app.add_subcommand("report", "print the savings report for one room");
    add_sim_options(rpt, sim, false);
    rpt->add_option("--room", rep.room, "room id")->required();
    rpt->add_option("--from", rep.from, "range start (ISO-8601 or hours)");
    rpt->add_option("--to", rep.to, "range end, exclusive");
    rpt->add_option("--format", rep.format, "text or csv");
    rpt->add_option("--out", rep.out, "output file, - for stdout");

    auto* serve = app.add_subcommand("serve", "run a scenario live and serve the NDJSON gateway");
    add_sim_options(serve, sim, false);
    serve->add_option("--port", srv.port, "TCP port, 0 for any");
    serve->add_option("--bind", srv.bind, "bind address");
    serve->add_option("--speed", srv.speed, "simulated seconds per wall second");
    serve->get_option("--hours")->default_str("0");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 1;
    }

    try {
        if (*run) return cmd_run(sim, out_dir);
        if (*exp) return cmd_export(sim, ex);
        if (*rpt) return cmd_report(sim, rep);
        if (*serve) {
            if (serve->count("--hours") == 0) sim.hours = 0;
            return cmd_serve(sim, srv);
        }
    } catch (const building::BuildingError& e) {
        std::cerr << "sbctl: scenario error: " << e.what() << '\n';
        return 1;
    } catch (const store::StoreError& e) {
        std::cerr << "sbctl: " << e.what() << (e.line() ? " (line " + std::to_string(e.line()) + ")" : "") << '\n';
        return 1;
    } catch (const apps::AppError& e) {
        std::cerr << "sbctl: " << e.what() << '\n';
        return 1;
    } catch (const InputError& e) {
        std::cerr << "sbctl: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "sbctl: internal error: " << e.what() << '\n';
        return 2;
    }
    return 2;
}
