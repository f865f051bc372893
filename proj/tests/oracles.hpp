// Independent reference computations used by the unit suites and the
// acceptance runner. Each one recomputes a result from scratch by a different
// route than the production code (closed forms, brute force, full re-scans).
#pragma once

#include "smartbuilding/common.hpp"
#include "smartbuilding/occupancy.hpp"
#include "smartbuilding/rng.hpp"
#include "smartbuilding/store.hpp"
#include "smartbuilding/transport.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace oracle {

using namespace sb;

// --- thermal -----------------------------------------------------------------

/// Continuous-time solution of dT/dt = (T_eq - T)/tau after n ticks.
inline double first_order(double t0, double t_eq, double tau_ticks, double n) {
    return t_eq + (t0 - t_eq) * std::exp(-n / tau_ticks);
}

// --- mesh flooding -------------------------------------------------------------

struct Flood {
    bool delivered = false;
    int hops = 0;
    std::set<NodeId> receivers;
    std::size_t transmissions = 0;
};

/// Hop distances by repeated edge relaxation (Bellman-Ford style), where the
/// destination absorbs the frame and nothing travels beyond `ttl` hops.
/// Every transmission a relaying node makes is counted, duplicates included.
inline Flood flood(const transport::MeshTopology& topo, const NodeId& src, const NodeId& dst, int ttl) {
    Flood out;
    if (ttl <= 0) return out;
    const bool broadcast = dst == transport::kBroadcast;
    const auto nodes = topo.nodes();
    const auto edges = topo.edges();
    constexpr int kInf = std::numeric_limits<int>::max() / 2;
    std::map<NodeId, int> dist;
    for (const auto& n : nodes) dist[n] = kInf;
    dist[src] = 0;
    auto relays = [&](const NodeId& u) { return dist[u] < ttl && (broadcast || u != dst); };
    for (std::size_t round = 0; round < nodes.size(); ++round) {
        bool changed = false;
        for (const auto& [a, b] : edges) {
            for (auto [u, v] : {std::pair{a, b}, std::pair{b, a}}) {
                if (dist[u] < kInf && relays(u) && dist[u] + 1 < dist[v]) {
                    dist[v] = dist[u] + 1;
                    changed = true;
                }
            }
        }
        if (!changed) break;
    }
    for (const auto& n : nodes) {
        if (n != src && dist[n] <= ttl) out.receivers.insert(n);
        if (dist[n] < kInf && relays(n)) out.transmissions += topo.neighbors(n).size();
    }
    if (broadcast) {
        out.delivered = !out.receivers.empty();
    } else if (dist[dst] <= ttl) {
        out.delivered = true;
        out.hops = dist[dst];
    }
    return out;
}

/// Connectivity by union-find over the edge list.
inline bool connected(const transport::MeshTopology& topo) {
    const auto nodes = topo.nodes();
    if (nodes.empty()) return true;
    std::map<NodeId, NodeId> parent;
    for (const auto& n : nodes) parent[n] = n;
    auto find = [&](NodeId x) {
        while (parent[x] != x) x = parent[x] = parent[parent[x]];
        return x;
    };
    for (const auto& [a, b] : topo.edges()) parent[find(a)] = find(b);
    const auto root = find(nodes.front());
    return std::all_of(nodes.begin(), nodes.end(), [&](const NodeId& n) { return find(n) == root; });
}

/// Random connected graph: a random spanning tree plus extra random edges.
inline transport::MeshTopology random_connected(Rng& rng, int n, double extra_edge_prob, int ttl) {
    transport::MeshTopology topo(ttl);
    std::vector<NodeId> ids;
    for (int i = 0; i < n; ++i) {
        ids.push_back("n" + std::to_string(i));
        topo.add_node(ids.back());
    }
    for (int i = 1; i < n; ++i) {
        const int j = static_cast<int>(rng.uniform() * i);
        topo.add_edge(ids[i], ids[j]);
    }
    for (int i = 0; i < n; ++i) {
        for (int j = i + 1; j < n; ++j) {
            if (rng.bernoulli(extra_edge_prob)) topo.add_edge(ids[i], ids[j]);
        }
    }
    return topo;
}

// --- occupancy -----------------------------------------------------------------

/// Full trace of inputs for one room, in arrival order.
struct OccupancyTrace {
    std::vector<occupancy::CounterStep> steps;
    std::vector<occupancy::PresenceSighting> sightings;
};

/// Estimate at `at` by re-scanning the whole trace: counter steps in time
/// order (ties in arrival order) folded with a zero clamp, MACs whose latest
/// sighting not after `at` is within the lease.
inline occupancy::OccupancyEstimate replay(const OccupancyTrace& trace, const RoomId& room, Timestamp at,
                                           Duration lease) {
    std::vector<std::pair<Timestamp, std::size_t>> order;
    for (std::size_t i = 0; i < trace.steps.size(); ++i) order.emplace_back(trace.steps[i].at, i);
    std::stable_sort(order.begin(), order.end(),
                     [](const auto& a, const auto& b) { return a.first < b.first; });
    int running = 0;
    bool clamped = false;
    for (const auto& [t, i] : order) {
        if (t > at) break;
        const int raw = running + trace.steps[i].delta;
        clamped = raw < 0;
        running = raw < 0 ? 0 : raw;
    }
    std::map<std::string, Timestamp> latest;
    for (const auto& s : trace.sightings) {
        if (s.at > at) continue;
        auto [it, fresh] = latest.emplace(s.mac, s.at);
        if (!fresh && s.at > it->second) it->second = s.at;
    }
    occupancy::OccupancyEstimate est;
    est.room_id = room;
    est.at = at;
    for (const auto& [mac, t] : latest) {
        if (at - t <= lease) est.known_macs.insert(mac);
    }
    const int macs = static_cast<int>(est.known_macs.size());
    est.count = std::max(running, macs);
    est.confidence =
        (!clamped && std::abs(running - macs) <= 1) ? occupancy::Confidence::High : occupancy::Confidence::Low;
    return est;
}

/// Random arrival-ordered input stream: counter steps (some out of time
/// order, some driving the count below zero), beacon sightings for a few
/// MACs, and door changes. Timestamps share a coarse grid so ties are common.
inline std::vector<occupancy::Input> random_inputs(Rng& gen, int n_events, const RoomId& room, Timestamp start) {
    static const char* macs[] = {"c8:0f:10:aa:01:ff", "c8:0f:10:aa:02:ff", "de:ad:be:ef:00:01", "00:11:22:33:44:55"};
    std::vector<occupancy::Input> out;
    Timestamp t = start;
    for (int i = 0; i < n_events; ++i) {
        t += Duration{static_cast<std::int64_t>(gen.uniform() * 4) * 30'000};
        Timestamp at = t;
        if (gen.bernoulli(0.1)) at -= Duration{static_cast<std::int64_t>(gen.uniform() * 10) * 30'000};
        const double pick = gen.uniform();
        if (pick < 0.5) {
            out.push_back(occupancy::CounterStep{room, at, gen.bernoulli(0.55) ? 1 : -1});
        } else if (pick < 0.85) {
            const auto* mac = macs[static_cast<int>(gen.uniform() * 4)];
            out.push_back(occupancy::PresenceSighting{mac, room, at, -60.0 - gen.uniform() * 20});
        } else {
            out.push_back(occupancy::DoorChange{room, at, gen.bernoulli(0.5)});
        }
    }
    return out;
}

inline void record(OccupancyTrace& trace, const occupancy::Input& in) {
    if (auto* s = std::get_if<occupancy::CounterStep>(&in)) trace.steps.push_back(*s);
    if (auto* p = std::get_if<occupancy::PresenceSighting>(&in)) trace.sightings.push_back(*p);
}

inline Timestamp time_of(const occupancy::Input& in) {
    return std::visit([](const auto& v) { return v.at; }, in);
}

/// Instants where the replayed count can change.
inline std::vector<Timestamp> change_points(const OccupancyTrace& trace, Duration lease, TimeRange range) {
    std::set<Timestamp> pts{range.from};
    auto add = [&](Timestamp t) {
        if (range.contains(t)) pts.insert(t);
    };
    for (const auto& s : trace.steps) add(s.at);
    for (const auto& s : trace.sightings) {
        add(s.at);
        add(s.at + lease + Duration{1});
    }
    return {pts.begin(), pts.end()};
}

/// Zero-count spans (any length) as [start, end) pieces of `range`, from a
/// re-scan at every change point.
inline std::vector<std::pair<Timestamp, Timestamp>> zero_spans(const OccupancyTrace& trace, const RoomId& room,
                                                               Duration lease, TimeRange range) {
    const auto pts = change_points(trace, lease, range);
    std::vector<std::pair<Timestamp, Timestamp>> out;
    for (std::size_t i = 0; i < pts.size(); ++i) {
        const Timestamp end = i + 1 < pts.size() ? pts[i + 1] : range.to;
        if (replay(trace, room, pts[i], lease).count != 0) continue;
        if (!out.empty() && out.back().second == pts[i]) out.back().second = end;
        else out.emplace_back(pts[i], end);
    }
    return out;
}

/// Checks reported absence intervals against the re-scanned trace: every
/// piece of `range` is exactly one of absence interval, occupied span or a
/// zero span shorter than `min_gap`, and the pieces tile the range with no
/// gap or overlap. Returns a description of the first violation, or "".
inline std::string duality_violation(const std::vector<occupancy::AbsenceInterval>& reported,
                                     const OccupancyTrace& trace, const RoomId& room, Duration lease,
                                     TimeRange range, Duration min_gap) {
    const auto zeros = zero_spans(trace, room, lease, range);
    std::vector<std::pair<Timestamp, Timestamp>> expected;
    for (const auto& z : zeros) {
        if (z.second - z.first >= min_gap) expected.push_back(z);
    }
    if (reported.size() != expected.size()) {
        return "reported " + std::to_string(reported.size()) + " intervals, re-scan found " +
               std::to_string(expected.size());
    }
    for (std::size_t i = 0; i < reported.size(); ++i) {
        const auto end = reported[i].end.value_or(range.to);
        if (reported[i].start != expected[i].first || end != expected[i].second) {
            return "interval " + std::to_string(i) + " is " + format_iso8601(reported[i].start) + ".." +
                   format_iso8601(end) + ", re-scan has " + format_iso8601(expected[i].first) + ".." +
                   format_iso8601(expected[i].second);
        }
        if (reported[i].end.has_value() == (expected[i].second == range.to)) {
            return "interval " + std::to_string(i) + " open/closed mismatch";
        }
    }

    // Tile: absence intervals + short zero spans + occupied spans in between.
    enum Kind { Absent, ShortZero, Occupied };
    std::vector<std::tuple<Timestamp, Timestamp, Kind>> pieces;
    for (const auto& z : zeros) pieces.emplace_back(z.first, z.second, z.second - z.first >= min_gap ? Absent : ShortZero);
    std::sort(pieces.begin(), pieces.end());
    std::vector<std::tuple<Timestamp, Timestamp, Kind>> tiled;
    Timestamp cursor = range.from;
    for (const auto& p : pieces) {
        if (std::get<0>(p) > cursor) tiled.emplace_back(cursor, std::get<0>(p), Occupied);
        tiled.push_back(p);
        cursor = std::get<1>(p);
    }
    if (cursor < range.to) tiled.emplace_back(cursor, range.to, Occupied);
    Timestamp at = range.from;
    for (const auto& [s, e, kind] : tiled) {
        if (s != at || !(s < e)) return "pieces do not tile the range at " + format_iso8601(s);
        const int count = replay(trace, room, s, lease).count;
        if ((kind == Occupied) != (count > 0)) return "piece at " + format_iso8601(s) + " has the wrong sign";
        at = e;
    }
    if (at != range.to) return "pieces stop before the range end";
    return "";
}

// --- comfort -------------------------------------------------------------------

/// Ordinary least squares through the normal equations with raw sums;
/// T_pref is the zero crossing of the fitted line.
inline std::optional<double> ls_zero_crossing(const std::vector<std::pair<double, int>>& temp_vote) {
    const double n = static_cast<double>(temp_vote.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (const auto& [t, v] : temp_vote) {
        sx += t;
        sy += v;
        sxx += t * t;
        sxy += t * v;
    }
    const double den = n * sxx - sx * sx;
    if (den == 0) return std::nullopt;
    const double slope = (n * sxy - sx * sy) / den;
    if (!(slope > 0)) return std::nullopt;
    const double intercept = (sy - slope * sx) / n;
    return -intercept / slope;
}

// --- store ---------------------------------------------------------------------

/// Brute-force window grouping: scan every window between the first and last
/// point and collect its members by linear search.
inline store::Series naive_downsample(const store::Series& s, Duration window, store::Aggregation agg) {
    store::Series out{s.key, {}};
    if (s.points.empty()) return out;
    auto floor_to = [&](Timestamp t) {
        auto ms = to_millis(t);
        const auto w = window.count();
        auto q = ms / w;
        if (ms % w != 0 && ms < 0) --q;
        return from_millis(q * w);
    };
    for (Timestamp start = floor_to(s.points.front().at); start <= s.points.back().at; start += window) {
        std::vector<double> members;
        for (const auto& p : s.points) {
            if (p.at >= start && p.at < start + window) members.push_back(p.value);
        }
        if (members.empty()) continue;
        double v = 0;
        switch (agg) {
            case store::Aggregation::Mean: {
                long double sum = 0;
                for (double m : members) sum += m;
                v = static_cast<double>(sum / members.size());
                break;
            }
            case store::Aggregation::Min: v = *std::min_element(members.begin(), members.end()); break;
            case store::Aggregation::Max: v = *std::max_element(members.begin(), members.end()); break;
            case store::Aggregation::Last: v = members.back(); break;
        }
        out.points.push_back({start, v});
    }
    return out;
}

}  // namespace oracle
