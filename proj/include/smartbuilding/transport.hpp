#ifndef SMARTBUILDING_TRANSPORT_HPP
#define SMARTBUILDING_TRANSPORT_HPP

#include "smartbuilding/common.hpp"
#include "smartbuilding/reading.hpp"
#include "smartbuilding/rng.hpp"

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <tuple>
#include <utility>
#include <vector>

/// Simulated protocol-flavored links: a BLE-like connect/subscribe link, a
/// Z-Wave-like unsolicited event link and a ZigBee-like flooding mesh, all
/// sharing one logical clock and one seeded loss stream.
namespace sb::transport {

inline constexpr std::string_view kHub = "hub";
inline constexpr std::string_view kBroadcast = "*";
inline constexpr int kDefaultTtl = 8;
inline constexpr Tick kDefaultBlePeriod = 10;

enum class TransportErrc {
    NodeUnknown,
    AlreadyConnected,
    InvalidKind,
    Disconnected,
    SrcUnknown,
    LinkUnknown,
    DuplicateLink,
    WrongFlavor,
    InvalidLink,
    InvalidFrame,
    InvalidTopology,
    ParseError,
};
std::string_view to_string(TransportErrc code);
using TransportError = Error<TransportErrc>;

enum class Flavor { Ble, Zwave, ZigbeeMesh };
std::string_view to_string(Flavor flavor);

struct LinkSpec {
    std::string link_id;
    Flavor flavor = Flavor::Ble;
    double loss_prob = 0.0;
    Tick latency_ticks = 0;
};

using Bytes = std::vector<std::uint8_t>;

struct Frame {
    NodeId src;
    NodeId dst;
    std::uint64_t seq = 0;
    int ttl = kDefaultTtl;
    Bytes payload;
    Tick sent_at = 0;

    bool operator==(const Frame&) const = default;
};

/// A frame handed to the receiver by advance().
struct Arrival {
    std::string link_id;
    Frame frame;
    Tick at = 0;

    bool operator==(const Arrival&) const = default;
};

struct Delivery {
    bool delivered = false;
    /// src..dst along the first copy to arrive; empty if undelivered or broadcast.
    std::vector<NodeId> path;
    int hops = 0;
    Tick delivered_at = 0;
    /// Nodes that accepted the frame, in arrival order. Each appears once.
    std::vector<NodeId> receivers;
    /// Copies dropped by the (src, seq) duplicate cache.
    std::size_t duplicates_suppressed = 0;
    /// Transmissions made (each one consumed one loss draw).
    std::size_t transmissions = 0;
};

/// Undirected mesh graph. Edges are stored once per unordered pair.
class MeshTopology {
public:
    explicit MeshTopology(int ttl_default = kDefaultTtl);

    void add_node(const NodeId& id);
    void add_edge(const NodeId& a, const NodeId& b);
    void remove_node(const NodeId& id);

    bool has_node(const NodeId& id) const { return adjacency_.contains(id); }
    std::vector<NodeId> nodes() const;
    const std::set<NodeId>& neighbors(const NodeId& id) const;
    std::vector<std::pair<NodeId, NodeId>> edges() const;
    int ttl_default() const { return ttl_default_; }

    /// Lines `node <id>` / `edge <id> <id>`, `#` comments, any order.
    static MeshTopology parse(std::istream& in, int ttl_default = kDefaultTtl);
    static MeshTopology parse(std::string_view text, int ttl_default = kDefaultTtl);

private:
    int ttl_default_;
    std::map<NodeId, std::set<NodeId>> adjacency_;
};

struct ConnectionHandle {
    std::uint64_t id = 0;
    auto operator<=>(const ConnectionHandle&) const = default;
};

struct SubscriptionId {
    std::uint64_t id = 0;
    auto operator<=>(const SubscriptionId&) const = default;
};

/// Produces the payload for a BLE notification generated at the given tick.
using PayloadSource = std::function<Bytes(Tick)>;

/// One simulated radio world. Single owner; not internally synchronized.
class Network {
public:
    explicit Network(std::uint64_t seed);

    void add_node(const NodeId& id);
    bool has_node(const NodeId& id) const { return nodes_.contains(id); }

    void add_link(const LinkSpec& spec);
    const LinkSpec& link(const std::string& link_id) const;

    /// Registers a device on a Z-Wave link so it may emit events.
    void register_zwave_node(const std::string& link_id, const NodeId& node);

    ConnectionHandle connect_ble(const std::string& link_id, const NodeId& node);
    void disconnect(ConnectionHandle conn);

    /// Queues one notification every `period` ticks, first at now + period.
    SubscriptionId subscribe_ble(ConnectionHandle conn, std::string_view kind, Tick period,
                                 PayloadSource source = {});
    void unsubscribe(SubscriptionId sub);

    /// Unsolicited frame from `node` to the hub.
    void emit_zwave_event(const std::string& link_id, const NodeId& node, Bytes event);

    /// Connectionless single-hop frame on any non-mesh link (e.g. a BLE
    /// advertisement). Returns the frame's sequence number.
    std::uint64_t send(const std::string& link_id, const NodeId& src, Bytes payload);

    /// Frame with the next sequence number for `src` and the mesh default TTL.
    Frame make_frame(const NodeId& src, const NodeId& dst, Bytes payload, int ttl = kDefaultTtl);

    /// Controlled flooding over `topo` using the loss/latency of mesh link
    /// `link_id`. Resolved immediately; the duplicate cache persists per link.
    Delivery send_mesh(const std::string& link_id, const MeshTopology& topo, const Frame& frame);

    /// Moves the clock forward and returns every frame whose delivery tick
    /// falls in the window, ordered by (tick, src, seq).
    std::vector<Arrival> advance(Tick n_ticks);

    /// Frames queued at the current tick with zero latency, in (src, seq) order.
    std::vector<Arrival> deliver_pending();

    Tick now() const { return now_; }

private:
    struct Link {
        LinkSpec spec;
        std::set<NodeId> members;
        std::set<std::tuple<NodeId, NodeId, std::uint64_t>> seen;  // mesh cache: (node, src, seq)
    };
    struct Connection {
        std::string link_id;
        NodeId node;
    };
    struct Subscription {
        ConnectionHandle conn;
        SensorKind kind;
        Tick period;
        PayloadSource source;
    };
    using QueueKey = std::tuple<Tick, NodeId, std::uint64_t>;  // (due, src, seq)
    struct Pending {
        std::string link_id;
        Frame frame;
    };

    Link& find_link(const std::string& link_id);
    const Link& find_link(const std::string& link_id) const;
    std::uint64_t next_seq(const NodeId& src);
    void enqueue(const std::string& link_id, Frame frame);
    void deliver_due(Tick through, std::vector<Arrival>& out);
    void generate_notifications(Tick t);

    Rng rng_;
    Tick now_ = 0;
    std::set<NodeId> nodes_;
    std::map<std::string, Link> links_;
    std::map<NodeId, std::uint64_t> seq_;
    std::uint64_t next_handle_ = 1;
    std::map<ConnectionHandle, Connection> connections_;
    std::map<SubscriptionId, Subscription> subscriptions_;
    std::set<std::tuple<Tick, NodeId, SubscriptionId>> schedule_;
    std::map<QueueKey, Pending> queue_;
};

}  // namespace sb::transport

#endif  // SMARTBUILDING_TRANSPORT_HPP
