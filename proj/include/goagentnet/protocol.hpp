#pragma once

#include <array>
#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "goagentnet/knowledge.hpp"
#include "goagentnet/registry.hpp"

namespace goagentnet::protocol {

/// JSON-RPC error codes used on the wire.
namespace rpc_code {
inline constexpr int kMethodNotFound = -32601;
inline constexpr int kInvalidParams = -32602;
inline constexpr int kUnknownTarget = -32001;
inline constexpr int kCapabilityNotFound = -32002;
inline constexpr int kAgentFailure = -32003;
inline constexpr int kRegistryRejected = -32004;
}  // namespace rpc_code

struct RpcError {
    int code = 0;
    std::string message;

    bool operator==(const RpcError&) const = default;
};

/// One JSON-RPC 2.0 envelope: a request (id + method), a notification (method only) or a
/// response (id + result or error).
struct Message {
    std::optional<std::int64_t> id;
    std::string method;
    nlohmann::json params;
    bool is_response = false;
    nlohmann::json result;
    std::optional<RpcError> error;

    static Message request(std::int64_t id, std::string method, nlohmann::json params = nullptr);
    static Message notification(std::string method, nlohmann::json params = nullptr);
    static Message response(std::optional<std::int64_t> id, nlohmann::json result);
    static Message failure(std::optional<std::int64_t> id, RpcError error);

    bool is_request() const { return !is_response && id.has_value(); }
    bool is_notification() const { return !is_response && !id.has_value(); }

    bool operator==(const Message&) const = default;
};

inline constexpr std::uint64_t kMaxPayloadBytes = 0xFFFFFFFFull;

/// The JSON-RPC object in fixed key order, without the length prefix.
std::string serialize(const Message& msg);

/// Big-endian 4-byte prefix; throws OversizeMessage above kMaxPayloadBytes.
std::array<std::uint8_t, 4> length_prefix(std::uint64_t payload_bytes);

std::vector<std::uint8_t> encode_frame(const Message& msg);

enum class DecodeStatus { complete, need_more_bytes };

struct DecodeResult {
    DecodeStatus status = DecodeStatus::need_more_bytes;
    std::optional<Message> message;
    /// Bytes after the decoded frame; the whole input when more bytes are needed.
    std::span<const std::uint8_t> remaining;
};

/// Throws MalformedJson, UnknownMethod or LengthMismatch (the JSON value ends before the
/// declared payload length).
DecodeResult decode_frame(std::span<const std::uint8_t> bytes);

/// Parses a payload that has already been stripped of its prefix.
Message parse_payload(std::string_view payload);

/// Reassembles frames from arbitrarily chunked input.
class FrameDecoder {
public:
    void feed(std::span<const std::uint8_t> chunk);
    /// Next complete message, or nullopt if more bytes are needed.
    std::optional<Message> next();
    std::size_t buffered() const { return buffer_.size() - offset_; }

private:
    std::vector<std::uint8_t> buffer_;
    std::size_t offset_ = 0;
};

/// agent/invoke parameters. The payload itself is never materialized, only its reference and size.
struct InvokeParams {
    AgentId target;
    std::string capability;
    registry::DataType data_type;
    double size_bits = 0.0;
    std::string payload_ref;

    bool operator==(const InvokeParams&) const = default;
};

nlohmann::json to_json(const InvokeParams& p);
InvokeParams invoke_params_from_json(const nlohmann::json& j);

struct InvokeResult {
    std::string representation;
    double size_bits = 0.0;
    double latency_s = 0.0;
    double energy_j = 0.0;
    std::string payload_ref;

    bool operator==(const InvokeResult&) const = default;
};

nlohmann::json to_json(const InvokeResult& r);
InvokeResult invoke_result_from_json(const nlohmann::json& j);

/// Agent-side handler. Throwing RemoteFailure yields an error response with that code.
using AgentHandler = std::function<InvokeResult(const registry::AgentProfile& self, const InvokeParams& params)>;

struct RemoteFailure : std::runtime_error {
    RemoteFailure(int code, const std::string& message) : std::runtime_error(message), code(code) {}
    int code;
};

/// Handler that runs the profile's tool through the representation catalog.
AgentHandler simulated_agent(std::vector<knowledge::RepresentationSpec> catalog);

/// Live graph events for one subscriber, in seq order without gaps.
class Subscription {
public:
    std::optional<registry::GraphEvent> poll();
    std::optional<registry::GraphEvent> wait_for(std::chrono::milliseconds timeout);
    std::vector<registry::GraphEvent> drain();
    /// Every seq at or below this has been delivered or skipped by the subscription point.
    std::uint64_t last_seq() const;

private:
    friend class Bus;
    void push(registry::GraphEvent event);

    mutable std::mutex mutex_;
    std::condition_variable cv_;
    std::deque<registry::GraphEvent> queue_;
    std::uint64_t last_seq_ = 0;
};

/// In-process message bus in front of the registry. Every call goes through encode/decode so
/// the in-process and TCP paths exercise the same bytes. Dispatch is serialized.
class Bus {
public:
    static constexpr double kDefaultTimeoutS = 5.0;

    explicit Bus(registry::Registry& registry, double timeout_s = kDefaultTimeoutS);

    /// Attaches the handler serving invocations for `id`; replaces any previous one.
    void attach(AgentId id, AgentHandler handler);
    void detach(AgentId id);

    /// Full request/response cycle over the wire format. Errors surface as exceptions:
    /// UnknownTarget, CapabilityNotFound, RemoteError, Timeout (sim-time latency above the limit).
    InvokeResult invoke(AgentId target, std::string_view capability, const InvokeParams& params);

    registry::GraphEvent register_agent(const registry::AgentProfile& profile);
    registry::GraphEvent deregister(AgentId id);
    registry::GraphEvent update_state(AgentId id, const registry::ProfileDelta& delta);
    std::vector<AgentId> query(const registry::QueryFilter& filter);

    /// topic must be "graph". With replay_from, events with seq > replay_from are delivered
    /// first, then live ones; otherwise delivery starts after the current version.
    std::shared_ptr<Subscription> subscribe(std::string_view topic, std::optional<std::uint64_t> replay_from = {});
    void unsubscribe(const std::shared_ptr<Subscription>& sub);
    /// Delivers registry events committed outside the bus (e.g. edge loading) to subscribers.
    void flush();

    /// Decodes one request frame and returns the encoded response (empty for notifications).
    std::vector<std::uint8_t> handle_frame(std::span<const std::uint8_t> frame);
    /// Server-side dispatch of a decoded message.
    std::optional<Message> dispatch(const Message& msg);

    /// Methods of every request seen, in order, for run traces.
    std::vector<std::string> trace() const;
    void set_time(double t);
    double timeout_s() const { return timeout_s_; }
    registry::Registry& registry() { return registry_; }

private:
    Message roundtrip(const Message& request);
    nlohmann::json call(std::string method, nlohmann::json params);
    Message handle(const Message& msg);
    void publish_pending();

    registry::Registry& registry_;
    double timeout_s_;
    mutable std::recursive_mutex mutex_;
    std::map<AgentId, AgentHandler> handlers_;
    std::vector<std::shared_ptr<Subscription>> subscribers_;
    std::vector<std::string> trace_;
    std::int64_t next_id_ = 1;
};

/// Throws the Error matching an error response's code.
[[noreturn]] void raise(const RpcError& error);

/// Length-framed TCP listener serving a Bus. graph/subscribe keeps the connection open and
/// pushes agent/event notifications.
class TcpServer {
public:
    TcpServer(Bus& bus, const std::string& host, std::uint16_t port);
    ~TcpServer();
    TcpServer(const TcpServer&) = delete;
    TcpServer& operator=(const TcpServer&) = delete;

    std::uint16_t port() const { return port_; }
    void stop();

private:
    void accept_loop();
    void serve(int fd);

    Bus& bus_;
    int listen_fd_ = -1;
    std::uint16_t port_ = 0;
    std::atomic<bool> stopping_{false};
    std::thread acceptor_;
    std::mutex conn_mutex_;
    std::vector<std::thread> connections_;
    std::vector<int> conn_fds_;
};

class TcpClient {
public:
    TcpClient(const std::string& host, std::uint16_t port);
    ~TcpClient();
    TcpClient(const TcpClient&) = delete;
    TcpClient& operator=(const TcpClient&) = delete;

    /// Sends a request and waits for its response; notifications arriving meanwhile are queued.
    Message call(const std::string& method, nlohmann::json params = nullptr);
    void notify(const std::string& method, nlohmann::json params = nullptr);
    std::optional<Message> next_notification(std::chrono::milliseconds timeout);

private:
    void send(const Message& msg);
    std::optional<Message> receive(std::chrono::milliseconds timeout);

    int fd_ = -1;
    std::int64_t next_id_ = 1;
    FrameDecoder decoder_;
    std::deque<Message> pending_;
};

}  // namespace goagentnet::protocol
