#include "smartbuilding/gateway.hpp"

#include "smartbuilding/wire.hpp"

#include <arpa/inet.h>
#include <netinet/in.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <stdexcept>

namespace sb::gateway {

using bus::Value;

namespace {

Value error_reply(const Value& id, std::string_view code, const std::string& detail) {
    return {{"id", id}, {"ok", false}, {"error", {{"code", code}, {"detail", detail}}}};
}

Value ok_reply(const Value& id, Value data) { return {{"id", id}, {"ok", true}, {"data", std::move(data)}}; }

}  // namespace

// ---------------------------------------------------------------------------
// Session

Session::Session(hub::Hub& hub, Sink sink) : hub_(hub), sink_(std::move(sink)) {}

Session::~Session() {
    std::lock_guard lock(hub_.mutex());
    streams_.clear();
}

void Session::send(const Value& frame) {
    std::string line = frame.dump(-1, ' ', false, Value::error_handler_t::replace);
    line += '\n';
    std::lock_guard lock(write_mutex_);
    if (sink_) sink_(line);
}

// ---------------------------------------------------------------------------
// Gateway

Gateway::Gateway(hub::Hub& hub) : hub_(hub) {}

const std::vector<std::string>& Gateway::operations() {
    static const std::vector<std::string> ops = {"series.query",    "series.stream",   "occupancy.get",
                                                 "relay.set",       "security.arm",    "security.disarm",
                                                 "feedback.submit", "report.energy",   "alerts.stream"};
    return ops;
}

std::unique_ptr<Session> Gateway::open_session(Session::Sink sink) {
    return std::make_unique<Session>(hub_, std::move(sink));
}

void Gateway::handle_line(Session& session, std::string_view line) {
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.find_first_not_of(" \t") == std::string_view::npos) return;  // keep-alive blank line
    std::lock_guard lock(hub_.mutex());
    Value reply;
    Value frame = Value::parse(line.begin(), line.end(), nullptr, false);
    if (frame.is_discarded()) reply = error_reply(nullptr, "BadFrame", "not valid JSON");
    else reply = handle_frame(session, frame);
    session.send(reply);
}

Value Gateway::handle_frame(Session& session, const Value& frame) {
    std::lock_guard lock(hub_.mutex());
    if (!frame.is_object()) return error_reply(nullptr, "BadFrame", "frame must be an object");

    Value id = nullptr;
    if (auto it = frame.find("id"); it != frame.end()) id = *it;
    if (!id.is_string()) {
        if (!id.is_number()) id = nullptr;
        return error_reply(id, "BadFrame", "id must be a string");
    }
    auto op = frame.find("op");
    if (op == frame.end() || !op->is_string()) return error_reply(id, "BadFrame", "op must be a string");
    Value params = Value::object();
    if (auto it = frame.find("params"); it != frame.end() && !it->is_null()) {
        if (!it->is_object()) return error_reply(id, "BadFrame", "params must be an object");
        params = *it;
    }

    try {
        return dispatch(session, id, op->get<std::string>(), params);
    } catch (const wire::WireError& e) {
        return error_reply(id, "BadFrame", e.detail());
    } catch (const Value::exception& e) {
        return error_reply(id, "BadFrame", e.what());
    } catch (const std::exception& e) {
        return error_reply(id, "HandlerFault", e.what());
    }
}

Value Gateway::forward(const Value& id, std::string_view service, std::string_view operation, Value payload) {
    auto call = hub_.bus().request(service, operation, std::move(payload), hub_.options().request_timeout, "gateway");
    if (!call.ready()) return error_reply(id, "Timeout", "service did not answer inline");
    if (!call.ok()) {
        const auto fault = call.fault();
        return error_reply(id, bus::to_string(fault.code), fault.detail);
    }
    return ok_reply(id, call.value());
}

Value Gateway::dispatch(Session& session, const Value& id, const std::string& op, const Value& params) {
    if (op == "series.query") return forward(id, "store", "query", params);
    if (op == "occupancy.get") return forward(id, "occupancy", "get", params);
    if (op == "relay.set") {
        return forward(id, "relay", "set", {{"node", wire::string_field(params, "node")}, {"on", wire::field(params, "on")}});
    }
    if (op == "security.arm") return forward(id, "security", "arm", params);
    if (op == "security.disarm") return forward(id, "security", "disarm", params);
    if (op == "feedback.submit") return forward(id, "comfort", "submit", params);
    if (op == "report.energy") return forward(id, "energy", "report", params);

    if (op == "series.stream") {
        std::optional<std::set<NodeId>> nodes;
        std::optional<std::set<std::string>> kinds;
        if (auto it = params.find("nodes"); it != params.end() && !it->is_null()) {
            nodes = it->get<std::set<NodeId>>();
        }
        if (auto it = params.find("kinds"); it != params.end() && !it->is_null()) {
            kinds = it->get<std::set<std::string>>();
            for (const auto& k : *kinds) {
                if (!parse_sensor_kind(k)) throw wire::WireError(wire::WireErrc::BadValue, "unknown sensor kind " + k);
            }
        }
        session.streams_.push_back(hub_.bus().subscribe("readings.*", [&session, id, nodes, kinds](const bus::Envelope& env) {
            if (nodes && !nodes->contains(env.payload.value("node", ""))) return;
            if (kinds && !kinds->contains(env.payload.value("sensor", ""))) return;
            Value data = env.payload;
            data.erase("mac");
            session.send({{"id", id}, {"stream", true}, {"data", std::move(data)}});
        }));
        return ok_reply(id, {{"stream", "readings"}});
    }
    if (op == "alerts.stream") {
        session.streams_.push_back(hub_.bus().subscribe("alerts", [&session, id](const bus::Envelope& env) {
            session.send({{"id", id}, {"stream", true}, {"data", env.payload}});
        }));
        return ok_reply(id, {{"stream", "alerts"}});
    }
    return error_reply(id, "UnknownOp", op);
}

// ---------------------------------------------------------------------------
// Server

struct Server::Client {
    int fd = -1;
    std::thread thread;
    std::atomic<bool> done{false};
};

Server::Server(Gateway& gateway, std::uint16_t port, std::string bind_address)
    : gateway_(gateway), bind_address_(std::move(bind_address)), port_(port) {}

Server::~Server() { stop(); }

void Server::start() {
    listen_fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
    if (listen_fd_ < 0) throw std::runtime_error(std::string("socket: ") + std::strerror(errno));
    int yes = 1;
    ::setsockopt(listen_fd_, SOL_SOCKET, SO_REUSEADDR, &yes, sizeof yes);
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_port = htons(port_);
    if (::inet_pton(AF_INET, bind_address_.c_str(), &addr.sin_addr) != 1) {
        ::close(listen_fd_);
        throw std::runtime_error("bad bind address " + bind_address_);
    }
    if (::bind(listen_fd_, reinterpret_cast<sockaddr*>(&addr), sizeof addr) < 0 || ::listen(listen_fd_, 16) < 0) {
        const std::string msg = std::strerror(errno);
        ::close(listen_fd_);
        throw std::runtime_error("bind/listen: " + msg);
    }
    socklen_t len = sizeof addr;
    ::getsockname(listen_fd_, reinterpret_cast<sockaddr*>(&addr), &len);
    port_ = ntohs(addr.sin_port);
    running_ = true;
    acceptor_ = std::thread([this] { accept_loop(); });
}

void Server::stop() {
    if (!running_.exchange(false)) return;
    if (acceptor_.joinable()) acceptor_.join();
    ::close(listen_fd_);
    std::lock_guard lock(clients_mutex_);
    for (auto& c : clients_) {
        ::shutdown(c->fd, SHUT_RDWR);
        if (c->thread.joinable()) c->thread.join();
        ::close(c->fd);
    }
    clients_.clear();
}

void Server::accept_loop() {
    while (running_) {
        pollfd pfd{listen_fd_, POLLIN, 0};
        if (::poll(&pfd, 1, 100) <= 0) continue;
        const int fd = ::accept(listen_fd_, nullptr, nullptr);
        if (fd < 0) continue;
        std::lock_guard lock(clients_mutex_);
        // Reap finished clients.
        for (auto it = clients_.begin(); it != clients_.end();) {
            if ((*it)->done) {
                (*it)->thread.join();
                ::close((*it)->fd);
                it = clients_.erase(it);
            } else {
                ++it;
            }
        }
        auto client = std::make_unique<Client>();
        client->fd = fd;
        auto* raw = client.get();
        client->thread = std::thread([this, raw] { serve(*raw); });
        clients_.push_back(std::move(client));
    }
}

void Server::serve(Client& client) {
    const int fd = client.fd;
    auto session = gateway_.open_session([fd](const std::string& line) {
        std::size_t sent = 0;
        while (sent < line.size()) {
            const auto n = ::send(fd, line.data() + sent, line.size() - sent, MSG_NOSIGNAL);
            if (n <= 0) return;
            sent += static_cast<std::size_t>(n);
        }
    });
    std::string buffer;
    char chunk[4096];
    while (true) {
        const auto n = ::recv(fd, chunk, sizeof chunk, 0);
        if (n <= 0) break;
        buffer.append(chunk, static_cast<std::size_t>(n));
        std::size_t start = 0;
        for (auto nl = buffer.find('\n'); nl != std::string::npos; nl = buffer.find('\n', start)) {
            gateway_.handle_line(*session, std::string_view(buffer).substr(start, nl - start));
            start = nl + 1;
        }
        buffer.erase(0, start);
    }
    session.reset();
    client.done = true;
}

}  // namespace sb::gateway
