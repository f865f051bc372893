#include "smartbuilding/bus.hpp"

#include <array>
#include <atomic>
#include <map>
#include <mutex>
#include <vector>

namespace sb::bus {

std::string_view to_string(MessageKind kind) {
    static constexpr std::array<std::string_view, 5> names = {"OneWay", "Request", "Response", "Fault", "Publish"};
    return names[static_cast<std::size_t>(kind)];
}

std::string_view to_string(FaultCode code) {
    static constexpr std::array<std::string_view, 4> names = {"ServiceNotFound", "OperationNotFound", "Timeout",
                                                              "HandlerFault"};
    return names[static_cast<std::size_t>(code)];
}

std::string_view to_string(BusErrc code) {
    static constexpr std::array<std::string_view, 6> names = {"DuplicateName", "InvalidDescriptor", "InvalidTimeout",
                                                              "NotReady",      "NotAFault",         "IsAFault"};
    return names[static_cast<std::size_t>(code)];
}

bool topic_matches(std::string_view pattern, std::string_view topic) {
    if (pattern == "*") return true;
    if (pattern.size() >= 2 && pattern.ends_with(".*")) {
        const auto prefix = pattern.substr(0, pattern.size() - 1);  // keeps the dot
        return topic.size() > prefix.size() && topic.starts_with(prefix);
    }
    return pattern == topic;
}

namespace detail {

struct CallState {
    std::mutex mutex;
    std::uint64_t request_id = 0;
    std::optional<Envelope> outcome;
};

struct ServiceEntry {
    ServiceDescriptor desc;
    Handler handler;
    std::uint64_t id = 0;
    std::recursive_mutex invoke;
    bool alive = true;  // guarded by invoke
};

struct SubscriptionEntry {
    std::string pattern;
    TopicHandler handler;
    std::atomic<bool> alive{true};
};

struct Core {
    mutable std::mutex mutex;
    Tick now = 0;
    std::uint64_t next_id = 1;
    std::map<std::string, std::shared_ptr<ServiceEntry>, std::less<>> services;
    std::map<std::uint64_t, std::shared_ptr<SubscriptionEntry>> subscriptions;
    std::multimap<Tick, std::weak_ptr<CallState>> deadlines;
    BusMetrics metrics;

    std::uint64_t next_msg_id() {
        std::lock_guard lock(mutex);
        return next_id++;
    }

    Tick clock() const {
        std::lock_guard lock(mutex);
        return now;
    }

    /// Fills the call slot if still empty. Returns false when already answered.
    bool complete(CallState& state, MessageKind kind, Value payload, Tick at) {
        Envelope env;
        env.kind = kind;
        env.correlation_id = state.request_id;
        env.payload = std::move(payload);
        env.at = at;
        {
            std::lock_guard lock(state.mutex);
            if (state.outcome) return false;
            env.msg_id = next_msg_id();
            state.outcome = std::move(env);
        }
        if (kind == MessageKind::Fault) {
            std::lock_guard lock(mutex);
            ++metrics.faults;
        }
        return true;
    }

    bool fault(CallState& state, FaultCode code, std::string detail, Tick at) {
        return complete(state, MessageKind::Fault, Value{{"code", to_string(code)}, {"detail", std::move(detail)}},
                        at);
    }
};

}  // namespace detail

// ---------------------------------------------------------------------------
// Call / Responder

bool Call::ready() const {
    std::lock_guard lock(state_->mutex);
    return state_->outcome.has_value();
}

bool Call::ok() const { return envelope().kind == MessageKind::Response; }

Envelope Call::envelope() const {
    std::lock_guard lock(state_->mutex);
    if (!state_->outcome) throw BusError(BusErrc::NotReady, "request " + std::to_string(state_->request_id));
    return *state_->outcome;
}

Value Call::value() const {
    auto env = envelope();
    if (env.kind != MessageKind::Response) throw BusError(BusErrc::IsAFault, env.payload.dump());
    return std::move(env.payload);
}

FaultInfo Call::fault() const {
    const auto env = envelope();
    if (env.kind != MessageKind::Fault) throw BusError(BusErrc::NotAFault, "");
    const auto name = env.payload.at("code").get<std::string>();
    FaultInfo info{FaultCode::HandlerFault, env.payload.at("detail").get<std::string>()};
    for (auto c : {FaultCode::ServiceNotFound, FaultCode::OperationNotFound, FaultCode::Timeout}) {
        if (to_string(c) == name) info.code = c;
    }
    return info;
}

std::uint64_t Call::request_id() const { return state_->request_id; }

bool Responder::reply(Value payload) {
    auto core = core_.lock();
    if (!state_ || !core) return false;
    return core->complete(*state_, MessageKind::Response, std::move(payload), core->clock());
}

bool Responder::fail(std::string detail) {
    auto core = core_.lock();
    if (!state_ || !core) return false;
    return core->fault(*state_, FaultCode::HandlerFault, std::move(detail), core->clock());
}

bool Responder::answered() const {
    if (!state_) return false;
    std::lock_guard lock(state_->mutex);
    return state_->outcome.has_value();
}

// ---------------------------------------------------------------------------
// Registration / Subscription handles

namespace {

void unregister(const std::weak_ptr<detail::Core>& weak, const std::string& name, std::uint64_t id) {
    auto core = weak.lock();
    if (!core) return;
    std::shared_ptr<detail::ServiceEntry> entry;
    {
        std::lock_guard lock(core->mutex);
        auto it = core->services.find(name);
        if (it == core->services.end() || it->second->id != id) return;
        entry = it->second;
        core->services.erase(it);
    }
    // Waits out an in-flight invocation on another thread.
    std::lock_guard invoke(entry->invoke);
    entry->alive = false;
}

void unsubscribe(const std::weak_ptr<detail::Core>& weak, std::uint64_t id) {
    auto core = weak.lock();
    if (!core) return;
    std::lock_guard lock(core->mutex);
    auto it = core->subscriptions.find(id);
    if (it == core->subscriptions.end()) return;
    it->second->alive = false;
    core->subscriptions.erase(it);
}

}  // namespace

Registration& Registration::operator=(Registration&& other) noexcept {
    if (this != &other) {
        reset();
        core_ = std::move(other.core_);
        name_ = std::move(other.name_);
        id_ = std::exchange(other.id_, 0);
    }
    return *this;
}

Registration::~Registration() { reset(); }

void Registration::reset() {
    if (id_ != 0) unregister(core_, name_, id_);
    id_ = 0;
    core_.reset();
}

Subscription& Subscription::operator=(Subscription&& other) noexcept {
    if (this != &other) {
        reset();
        core_ = std::move(other.core_);
        id_ = std::exchange(other.id_, 0);
    }
    return *this;
}

Subscription::~Subscription() { reset(); }

void Subscription::reset() {
    if (id_ != 0) unsubscribe(core_, id_);
    id_ = 0;
    core_.reset();
}

// ---------------------------------------------------------------------------
// Bus

Bus::Bus() : core_(std::make_shared<detail::Core>()) {}

Registration Bus::register_service(ServiceDescriptor desc, Handler handler) {
    if (desc.name.empty() || desc.operations.empty() || !handler) {
        throw BusError(BusErrc::InvalidDescriptor, desc.name);
    }
    auto entry = std::make_shared<detail::ServiceEntry>();
    std::lock_guard lock(core_->mutex);
    if (core_->services.contains(desc.name)) throw BusError(BusErrc::DuplicateName, desc.name);
    desc.registered_at = core_->now;
    entry->id = core_->next_id++;
    entry->desc = std::move(desc);
    entry->handler = std::move(handler);
    core_->services.emplace(entry->desc.name, entry);
    return Registration(core_, entry->desc.name, entry->id);
}

bool Bus::is_registered(std::string_view name) const {
    std::lock_guard lock(core_->mutex);
    return core_->services.find(name) != core_->services.end();
}

Call Bus::request(std::string_view service, std::string_view operation, Value payload, Tick timeout_ticks,
                  std::string_view sender) {
    if (timeout_ticks <= 0) throw BusError(BusErrc::InvalidTimeout, std::to_string(timeout_ticks));

    auto state = std::make_shared<detail::CallState>();
    Envelope req;
    req.kind = MessageKind::Request;
    req.operation = std::string(operation);
    req.payload = std::move(payload);
    req.sender = std::string(sender);

    std::shared_ptr<detail::ServiceEntry> entry;
    {
        std::lock_guard lock(core_->mutex);
        req.msg_id = core_->next_id++;
        req.at = core_->now;
        state->request_id = req.msg_id;
        ++core_->metrics.requests;
        core_->deadlines.emplace(req.at + timeout_ticks, state);
        if (auto it = core_->services.find(service); it != core_->services.end()) entry = it->second;
    }

    Call call(state);
    if (!entry) {
        core_->fault(*state, FaultCode::ServiceNotFound, std::string(service), req.at);
        return call;
    }

    std::lock_guard invoke(entry->invoke);
    if (!entry->alive) {
        core_->fault(*state, FaultCode::ServiceNotFound, std::string(service), req.at);
        return call;
    }
    if (!entry->desc.operations.contains(req.operation)) {
        core_->fault(*state, FaultCode::OperationNotFound, std::string(service) + "." + req.operation, req.at);
        return call;
    }
    try {
        entry->handler(req, Responder(state, core_));
    } catch (const std::exception& e) {
        if (core_->fault(*state, FaultCode::HandlerFault, e.what(), core_->clock())) {
            std::lock_guard lock(core_->mutex);
            ++core_->metrics.handler_errors;
        }
    }
    return call;
}

void Bus::notify(std::string_view service, std::string_view operation, Value payload, std::string_view sender) {
    Envelope msg;
    msg.kind = MessageKind::OneWay;
    msg.operation = std::string(operation);
    msg.payload = std::move(payload);
    msg.sender = std::string(sender);

    std::shared_ptr<detail::ServiceEntry> entry;
    {
        std::lock_guard lock(core_->mutex);
        msg.msg_id = core_->next_id++;
        msg.at = core_->now;
        ++core_->metrics.notifications;
        if (auto it = core_->services.find(service); it != core_->services.end()) entry = it->second;
        if (!entry || !entry->desc.operations.contains(msg.operation)) {
            ++core_->metrics.dropped_notifications;
            return;
        }
    }

    std::lock_guard invoke(entry->invoke);
    if (!entry->alive) {
        std::lock_guard lock(core_->mutex);
        ++core_->metrics.dropped_notifications;
        return;
    }
    try {
        entry->handler(msg, Responder({}, {}));
    } catch (const std::exception&) {
        std::lock_guard lock(core_->mutex);
        ++core_->metrics.handler_errors;
    }
}

std::size_t Bus::publish(std::string_view topic, Value payload, std::string_view sender) {
    Envelope msg;
    msg.kind = MessageKind::Publish;
    msg.topic = std::string(topic);
    msg.operation = "publish";
    msg.payload = std::move(payload);
    msg.sender = std::string(sender);

    std::vector<std::shared_ptr<detail::SubscriptionEntry>> targets;
    {
        std::lock_guard lock(core_->mutex);
        msg.msg_id = core_->next_id++;
        msg.at = core_->now;
        ++core_->metrics.publishes;
        for (const auto& [id, sub] : core_->subscriptions) {
            if (topic_matches(sub->pattern, topic)) targets.push_back(sub);
        }
    }
    for (const auto& sub : targets) {
        if (!sub->alive) continue;
        try {
            sub->handler(msg);
        } catch (const std::exception&) {
            std::lock_guard lock(core_->mutex);
            ++core_->metrics.handler_errors;
        }
    }
    return targets.size();
}

Subscription Bus::subscribe(std::string pattern, TopicHandler handler) {
    auto entry = std::make_shared<detail::SubscriptionEntry>();
    entry->pattern = std::move(pattern);
    entry->handler = std::move(handler);
    std::lock_guard lock(core_->mutex);
    const auto id = core_->next_id++;
    core_->subscriptions.emplace(id, std::move(entry));
    return Subscription(core_, id);
}

void Bus::advance(Tick n_ticks) {
    for (Tick i = 0; i < n_ticks; ++i) {
        std::vector<std::pair<Tick, std::shared_ptr<detail::CallState>>> due;
        {
            std::lock_guard lock(core_->mutex);
            ++core_->now;
            while (!core_->deadlines.empty() && core_->deadlines.begin()->first <= core_->now) {
                auto node = core_->deadlines.extract(core_->deadlines.begin());
                if (auto state = node.mapped().lock()) due.emplace_back(node.key(), std::move(state));
            }
        }
        for (auto& [deadline, state] : due) {
            if (core_->fault(*state, FaultCode::Timeout, "no reply within deadline", deadline)) {
                std::lock_guard lock(core_->mutex);
                ++core_->metrics.timeouts;
            }
        }
    }
}

Tick Bus::now() const { return core_->clock(); }

BusMetrics Bus::metrics() const {
    std::lock_guard lock(core_->mutex);
    return core_->metrics;
}

}  // namespace sb::bus
