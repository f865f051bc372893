#ifndef SMARTBUILDING_GATEWAY_HPP
#define SMARTBUILDING_GATEWAY_HPP

#include "smartbuilding/bus.hpp"
#include "smartbuilding/hub.hpp"

#include <atomic>
#include <cstdint>
#include <functional>
#include <memory>
#include <mutex>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

/// Newline-delimited JSON control surface over a hub.
///
/// Request: {"id": "<string>", "op": "<name>", "params": {...}}
/// Reply:   {"id": ..., "ok": true, "data": ...}
///          {"id": ..., "ok": false, "error": {"code": ..., "detail": ...}}
/// Stream:  {"id": <id of the subscribe>, "stream": true, "data": ...}
///
/// Error codes are BadFrame, UnknownOp, or the bus fault code
/// (ServiceNotFound, OperationNotFound, Timeout, HandlerFault).
namespace sb::gateway {

/// One client connection: where frames go and which streams it holds.
class Session {
public:
    using Sink = std::function<void(const std::string& line)>;

    Session(hub::Hub& hub, Sink sink);
    /// Closes the session's streams under the hub lock.
    ~Session();
    Session(const Session&) = delete;
    Session& operator=(const Session&) = delete;

    /// Serializes one frame and hands it to the sink with a trailing LF.
    void send(const bus::Value& frame);
    std::size_t open_streams() const { return streams_.size(); }

private:
    friend class Gateway;
    hub::Hub& hub_;
    Sink sink_;
    std::mutex write_mutex_;
    std::vector<bus::Subscription> streams_;
};

class Gateway {
public:
    explicit Gateway(hub::Hub& hub);

    std::unique_ptr<Session> open_session(Session::Sink sink);

    /// Exactly one reply per line, written to the session before returning.
    void handle_line(Session& session, std::string_view line);

    /// Reply for one frame; opened streams write to `session` later.
    bus::Value handle_frame(Session& session, const bus::Value& frame);

    static const std::vector<std::string>& operations();

private:
    bus::Value dispatch(Session& session, const bus::Value& id, const std::string& op, const bus::Value& params);
    bus::Value forward(const bus::Value& id, std::string_view service, std::string_view operation,
                       bus::Value payload);

    hub::Hub& hub_;
};

/// Blocking TCP listener with one thread per client.
class Server {
public:
    /// Port 0 picks an ephemeral port; see port().
    Server(Gateway& gateway, std::uint16_t port, std::string bind_address = "127.0.0.1");
    ~Server();
    Server(const Server&) = delete;
    Server& operator=(const Server&) = delete;

    void start();
    void stop();
    std::uint16_t port() const { return port_; }

private:
    struct Client;
    void accept_loop();
    void serve(Client& client);

    Gateway& gateway_;
    std::string bind_address_;
    std::uint16_t port_;
    int listen_fd_ = -1;
    std::atomic<bool> running_{false};
    std::thread acceptor_;
    std::mutex clients_mutex_;
    std::vector<std::unique_ptr<Client>> clients_;
};

}  // namespace sb::gateway

#endif  // SMARTBUILDING_GATEWAY_HPP
