#ifndef SMARTBUILDING_BUS_HPP
#define SMARTBUILDING_BUS_HPP

#include "smartbuilding/common.hpp"

#include <json.hpp>

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <string_view>

/// In-process service runtime. Named services register operations; callers
/// use one-way notify, request-response with simulated-clock timeouts and
/// faults, and topic publish/subscribe.
///
/// Dispatch is synchronous on the caller's thread, which gives per-sender
/// FIFO for free. Invocations of one service are serialized by a per-service
/// recursive mutex, so a handler may call back into its own service.
namespace sb::bus {

/// Structured payload: scalars, sequences and string-keyed maps.
using Value = nlohmann::json;

enum class MessageKind { OneWay, Request, Response, Fault, Publish };
std::string_view to_string(MessageKind kind);

enum class FaultCode { ServiceNotFound, OperationNotFound, Timeout, HandlerFault };
std::string_view to_string(FaultCode code);

struct FaultInfo {
    FaultCode code = FaultCode::HandlerFault;
    std::string detail;
};

struct Envelope {
    std::uint64_t msg_id = 0;
    std::optional<std::uint64_t> correlation_id;
    MessageKind kind = MessageKind::OneWay;
    std::string operation;
    std::optional<std::string> topic;
    Value payload;
    Tick at = 0;
    std::string sender;
};

struct ServiceDescriptor {
    std::string name;
    std::set<std::string> operations;
    Tick registered_at = 0;
};

enum class BusErrc { DuplicateName, InvalidDescriptor, InvalidTimeout, NotReady, NotAFault, IsAFault };
std::string_view to_string(BusErrc code);
using BusError = Error<BusErrc>;

/// Thrown by handlers that want a HandlerFault with a specific detail; any
/// other exception is reported with its what() text.
class HandlerFailure : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

namespace detail {
struct CallState;
struct Core;
struct ServiceEntry;
struct SubscriptionEntry;
}  // namespace detail

/// Result slot of one request; filled exactly once with a Response or Fault.
class Call {
public:
    bool ready() const;
    bool ok() const;
    /// The Response or Fault envelope. Throws NotReady before completion.
    Envelope envelope() const;
    /// Response payload. Throws IsAFault when the call faulted.
    Value value() const;
    /// Throws NotAFault when the call succeeded.
    FaultInfo fault() const;
    std::uint64_t request_id() const;

private:
    friend class Bus;
    explicit Call(std::shared_ptr<detail::CallState> state) : state_(std::move(state)) {}
    std::shared_ptr<detail::CallState> state_;
};

/// Handed to a handler with each invocation. Copy it to answer later; the
/// first reply/fail wins and later ones return false. One-way messages get
/// a detached responder whose answers are discarded.
class Responder {
public:
    bool reply(Value payload);
    bool fail(std::string detail);
    bool answered() const;
    bool expects_reply() const { return state_ != nullptr; }

private:
    friend class Bus;
    Responder(std::shared_ptr<detail::CallState> state, std::weak_ptr<detail::Core> core)
        : state_(std::move(state)), core_(std::move(core)) {}
    std::shared_ptr<detail::CallState> state_;
    std::weak_ptr<detail::Core> core_;
};

using Handler = std::function<void(const Envelope&, Responder)>;
using TopicHandler = std::function<void(const Envelope&)>;

/// Live service registration; unregisters on destruction.
class Registration {
public:
    Registration() = default;
    Registration(Registration&&) noexcept = default;
    Registration& operator=(Registration&& other) noexcept;
    Registration(const Registration&) = delete;
    Registration& operator=(const Registration&) = delete;
    ~Registration();

    void reset();
    const std::string& name() const { return name_; }

private:
    friend class Bus;
    Registration(std::weak_ptr<detail::Core> core, std::string name, std::uint64_t id)
        : core_(std::move(core)), name_(std::move(name)), id_(id) {}
    std::weak_ptr<detail::Core> core_;
    std::string name_;
    std::uint64_t id_ = 0;
};

/// Live topic subscription; unsubscribes on destruction.
class Subscription {
public:
    Subscription() = default;
    Subscription(Subscription&&) noexcept = default;
    Subscription& operator=(Subscription&& other) noexcept;
    Subscription(const Subscription&) = delete;
    Subscription& operator=(const Subscription&) = delete;
    ~Subscription();

    void reset();

private:
    friend class Bus;
    Subscription(std::weak_ptr<detail::Core> core, std::uint64_t id) : core_(std::move(core)), id_(id) {}
    std::weak_ptr<detail::Core> core_;
    std::uint64_t id_ = 0;
};

struct BusMetrics {
    std::uint64_t requests = 0;
    std::uint64_t faults = 0;
    std::uint64_t timeouts = 0;
    std::uint64_t notifications = 0;
    std::uint64_t dropped_notifications = 0;
    std::uint64_t publishes = 0;
    std::uint64_t handler_errors = 0;
};

/// `readings.*` matches `readings.temperature`; `*` matches everything;
/// anything else matches exactly.
bool topic_matches(std::string_view pattern, std::string_view topic);

class Bus {
public:
    Bus();

    [[nodiscard]] Registration register_service(ServiceDescriptor desc, Handler handler);
    bool is_registered(std::string_view name) const;

    /// Exactly one Response or Fault per call. Faults never surface as
    /// exceptions; only a non-positive timeout throws.
    Call request(std::string_view service, std::string_view operation, Value payload, Tick timeout_ticks,
                 std::string_view sender = {});

    /// Fire-and-forget, at most once. Unknown targets bump
    /// dropped_notifications.
    void notify(std::string_view service, std::string_view operation, Value payload, std::string_view sender = {});

    /// Delivers one copy to each subscription matching at publish time and
    /// returns how many there were.
    std::size_t publish(std::string_view topic, Value payload, std::string_view sender = {});

    [[nodiscard]] Subscription subscribe(std::string pattern, TopicHandler handler);

    /// Moves the bus clock forward, faulting overdue requests with Timeout
    /// stamped at their deadline tick.
    void advance(Tick n_ticks);
    Tick now() const;

    BusMetrics metrics() const;

private:
    std::shared_ptr<detail::Core> core_;
};

}  // namespace sb::bus

#endif  // SMARTBUILDING_BUS_HPP
