#include "smartbuilding/transport.hpp"

#include <algorithm>
#include <array>
#include <istream>
#include <sstream>

namespace sb::transport {

std::string_view to_string(TransportErrc code) {
    static constexpr std::array<std::string_view, 12> names = {
        "NodeUnknown", "AlreadyConnected", "InvalidKind", "Disconnected",
        "SrcUnknown",  "LinkUnknown",      "DuplicateLink", "WrongFlavor",
        "InvalidLink", "InvalidFrame",     "InvalidTopology", "ParseError"};
    return names[static_cast<std::size_t>(code)];
}

std::string_view to_string(Flavor flavor) {
    switch (flavor) {
        case Flavor::Ble: return "ble";
        case Flavor::Zwave: return "zwave";
        case Flavor::ZigbeeMesh: return "zigbee-mesh";
    }
    return "?";
}

// ---------------------------------------------------------------------------
// MeshTopology

MeshTopology::MeshTopology(int ttl_default) : ttl_default_(ttl_default) {
    if (ttl_default <= 0) throw TransportError(TransportErrc::InvalidTopology, "ttl_default must be positive");
}

void MeshTopology::add_node(const NodeId& id) { adjacency_.try_emplace(id); }

void MeshTopology::add_edge(const NodeId& a, const NodeId& b) {
    if (a == b) throw TransportError(TransportErrc::InvalidTopology, "self-loop on " + a);
    auto ia = adjacency_.find(a);
    auto ib = adjacency_.find(b);
    if (ia == adjacency_.end() || ib == adjacency_.end()) {
        throw TransportError(TransportErrc::InvalidTopology,
                             "edge " + a + "-" + b + " references an undeclared node");
    }
    ia->second.insert(b);
    ib->second.insert(a);
}

void MeshTopology::remove_node(const NodeId& id) {
    auto it = adjacency_.find(id);
    if (it == adjacency_.end()) return;
    for (const auto& n : it->second) adjacency_[n].erase(id);
    adjacency_.erase(it);
}

std::vector<NodeId> MeshTopology::nodes() const {
    std::vector<NodeId> out;
    out.reserve(adjacency_.size());
    for (const auto& [id, _] : adjacency_) out.push_back(id);
    return out;
}

const std::set<NodeId>& MeshTopology::neighbors(const NodeId& id) const {
    auto it = adjacency_.find(id);
    if (it == adjacency_.end()) throw TransportError(TransportErrc::NodeUnknown, id);
    return it->second;
}

std::vector<std::pair<NodeId, NodeId>> MeshTopology::edges() const {
    std::vector<std::pair<NodeId, NodeId>> out;
    for (const auto& [a, ns] : adjacency_) {
        for (const auto& b : ns) {
            if (a < b) out.emplace_back(a, b);
        }
    }
    return out;
}

MeshTopology MeshTopology::parse(std::istream& in, int ttl_default) {
    MeshTopology topo(ttl_default);
    std::vector<std::pair<NodeId, NodeId>> edges;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        std::istringstream words(line);
        std::string keyword;
        if (!(words >> keyword)) continue;
        std::string a, b, extra;
        if (keyword == "node" && (words >> a) && !(words >> extra)) {
            topo.add_node(a);
        } else if (keyword == "edge" && (words >> a >> b) && !(words >> extra)) {
            edges.emplace_back(a, b);
        } else {
            throw TransportError(TransportErrc::ParseError, "line " + std::to_string(line_no));
        }
    }
    for (const auto& [a, b] : edges) topo.add_edge(a, b);
    return topo;
}

MeshTopology MeshTopology::parse(std::string_view text, int ttl_default) {
    std::istringstream in{std::string(text)};
    return parse(in, ttl_default);
}

// ---------------------------------------------------------------------------
// Network

Network::Network(std::uint64_t seed) : rng_(seed) {}

void Network::add_node(const NodeId& id) { nodes_.insert(id); }

void Network::add_link(const LinkSpec& spec) {
    if (!(spec.loss_prob >= 0.0 && spec.loss_prob <= 1.0)) {
        throw TransportError(TransportErrc::InvalidLink, spec.link_id + ": loss_prob outside [0,1]");
    }
    if (spec.latency_ticks < 0) {
        throw TransportError(TransportErrc::InvalidLink, spec.link_id + ": negative latency");
    }
    if (!links_.try_emplace(spec.link_id, Link{spec, {}, {}}).second) {
        throw TransportError(TransportErrc::DuplicateLink, spec.link_id);
    }
}

const LinkSpec& Network::link(const std::string& link_id) const { return find_link(link_id).spec; }

Network::Link& Network::find_link(const std::string& link_id) {
    auto it = links_.find(link_id);
    if (it == links_.end()) throw TransportError(TransportErrc::LinkUnknown, link_id);
    return it->second;
}

const Network::Link& Network::find_link(const std::string& link_id) const {
    auto it = links_.find(link_id);
    if (it == links_.end()) throw TransportError(TransportErrc::LinkUnknown, link_id);
    return it->second;
}

std::uint64_t Network::next_seq(const NodeId& src) { return seq_[src]++; }

void Network::register_zwave_node(const std::string& link_id, const NodeId& node) {
    auto& l = find_link(link_id);
    if (l.spec.flavor != Flavor::Zwave) throw TransportError(TransportErrc::WrongFlavor, link_id);
    if (!has_node(node)) throw TransportError(TransportErrc::NodeUnknown, node);
    l.members.insert(node);
}

ConnectionHandle Network::connect_ble(const std::string& link_id, const NodeId& node) {
    auto& l = find_link(link_id);
    if (l.spec.flavor != Flavor::Ble) throw TransportError(TransportErrc::WrongFlavor, link_id);
    if (!has_node(node)) throw TransportError(TransportErrc::NodeUnknown, node);
    if (!l.members.insert(node).second) {
        throw TransportError(TransportErrc::AlreadyConnected, node + " on " + link_id);
    }
    const ConnectionHandle handle{next_handle_++};
    connections_.emplace(handle, Connection{link_id, node});
    return handle;
}

void Network::disconnect(ConnectionHandle conn) {
    auto it = connections_.find(conn);
    if (it == connections_.end()) return;
    find_link(it->second.link_id).members.erase(it->second.node);
    std::erase_if(subscriptions_, [&](const auto& kv) { return kv.second.conn == conn; });
    connections_.erase(it);
}

SubscriptionId Network::subscribe_ble(ConnectionHandle conn, std::string_view kind, Tick period,
                                      PayloadSource source) {
    auto it = connections_.find(conn);
    if (it == connections_.end()) throw TransportError(TransportErrc::Disconnected, "stale connection handle");
    const auto parsed = parse_sensor_kind(kind);
    if (!parsed || !is_measuring(*parsed)) throw TransportError(TransportErrc::InvalidKind, std::string(kind));
    if (period <= 0) throw TransportError(TransportErrc::InvalidFrame, "notification period must be positive");

    const SubscriptionId id{next_handle_++};
    subscriptions_.emplace(id, Subscription{conn, *parsed, period, std::move(source)});
    schedule_.emplace(now_ + period, it->second.node, id);
    return id;
}

void Network::unsubscribe(SubscriptionId sub) { subscriptions_.erase(sub); }

void Network::emit_zwave_event(const std::string& link_id, const NodeId& node, Bytes event) {
    auto& l = find_link(link_id);
    if (l.spec.flavor != Flavor::Zwave) throw TransportError(TransportErrc::WrongFlavor, link_id);
    if (!l.members.contains(node)) throw TransportError(TransportErrc::NodeUnknown, node + " on " + link_id);
    enqueue(link_id, Frame{node, NodeId(kHub), next_seq(node), 1, std::move(event), now_});
}

std::uint64_t Network::send(const std::string& link_id, const NodeId& src, Bytes payload) {
    auto& l = find_link(link_id);
    if (l.spec.flavor == Flavor::ZigbeeMesh) throw TransportError(TransportErrc::WrongFlavor, link_id);
    if (!has_node(src)) throw TransportError(TransportErrc::NodeUnknown, src);
    const auto seq = next_seq(src);
    enqueue(link_id, Frame{src, NodeId(kHub), seq, 1, std::move(payload), now_});
    return seq;
}

Frame Network::make_frame(const NodeId& src, const NodeId& dst, Bytes payload, int ttl) {
    return Frame{src, dst, next_seq(src), ttl, std::move(payload), now_};
}

void Network::enqueue(const std::string& link_id, Frame frame) {
    const Tick due = frame.sent_at + find_link(link_id).spec.latency_ticks;
    QueueKey key{due, frame.src, frame.seq};
    queue_.emplace(std::move(key), Pending{link_id, std::move(frame)});
}

void Network::deliver_due(Tick through, std::vector<Arrival>& out) {
    while (!queue_.empty()) {
        auto it = queue_.begin();
        const Tick due = std::get<0>(it->first);
        if (due > through) break;
        auto node = queue_.extract(it);
        const bool lost = rng_.bernoulli(find_link(node.mapped().link_id).spec.loss_prob);
        if (!lost) out.push_back(Arrival{std::move(node.mapped().link_id), std::move(node.mapped().frame), due});
    }
}

void Network::generate_notifications(Tick t) {
    while (!schedule_.empty() && std::get<0>(*schedule_.begin()) == t) {
        auto [tick, node, id] = *schedule_.begin();
        schedule_.erase(schedule_.begin());
        auto it = subscriptions_.find(id);
        if (it == subscriptions_.end()) continue;
        const auto& sub = it->second;
        Bytes payload = sub.source ? sub.source(t) : Bytes(to_string(sub.kind).begin(), to_string(sub.kind).end());
        const auto& conn = connections_.at(sub.conn);
        enqueue(conn.link_id, Frame{node, NodeId(kHub), next_seq(node), 1, std::move(payload), t});
        schedule_.emplace(t + sub.period, node, id);
    }
}

std::vector<Arrival> Network::advance(Tick n_ticks) {
    std::vector<Arrival> out;
    for (Tick i = 0; i < n_ticks; ++i) {
        ++now_;
        generate_notifications(now_);
        deliver_due(now_, out);
    }
    return out;
}

std::vector<Arrival> Network::deliver_pending() {
    std::vector<Arrival> out;
    deliver_due(now_, out);
    return out;
}

Delivery Network::send_mesh(const std::string& link_id, const MeshTopology& topo, const Frame& frame) {
    auto& l = find_link(link_id);
    if (l.spec.flavor != Flavor::ZigbeeMesh) throw TransportError(TransportErrc::WrongFlavor, link_id);
    if (!topo.has_node(frame.src)) throw TransportError(TransportErrc::SrcUnknown, frame.src);
    const bool broadcast = frame.dst == kBroadcast;
    if (!broadcast && !topo.has_node(frame.dst)) throw TransportError(TransportErrc::NodeUnknown, frame.dst);
    if (frame.ttl < 0 || frame.ttl > topo.ttl_default()) {
        throw TransportError(TransportErrc::InvalidFrame, "ttl outside [0, ttl_default]");
    }

    Delivery result;
    if (frame.ttl == 0) return result;  // expired before the first hop

    auto cache_key = [&](const NodeId& node) { return std::tuple{node, frame.src, frame.seq}; };
    if (!l.seen.insert(cache_key(frame.src)).second) {
        ++result.duplicates_suppressed;
        return result;
    }

    std::map<NodeId, NodeId> parent;
    std::vector<NodeId> frontier{frame.src};
    for (int level = 0; level < frame.ttl && !frontier.empty(); ++level) {
        std::vector<NodeId> next;
        for (const auto& u : frontier) {
            if (!broadcast && u == frame.dst) continue;  // destination consumes, never relays
            for (const auto& v : topo.neighbors(u)) {
                ++result.transmissions;
                if (rng_.bernoulli(l.spec.loss_prob)) continue;
                if (!l.seen.insert(cache_key(v)).second) {
                    ++result.duplicates_suppressed;
                    continue;
                }
                parent[v] = u;
                result.receivers.push_back(v);
                next.push_back(v);
                if (v == frame.dst) {
                    result.delivered = true;
                    result.hops = level + 1;
                    result.delivered_at = frame.sent_at + result.hops * l.spec.latency_ticks;
                    for (NodeId at = v;; at = parent.at(at)) {
                        result.path.push_back(at);
                        if (at == frame.src) break;
                    }
                    std::reverse(result.path.begin(), result.path.end());
                }
                if (broadcast) {
                    result.hops = level + 1;
                    result.delivered_at = frame.sent_at + result.hops * l.spec.latency_ticks;
                }
            }
        }
        frontier = std::move(next);
    }
    if (broadcast) result.delivered = !result.receivers.empty();
    return result;
}

}  // namespace sb::transport
