#include "goagentnet/protocol.hpp"

#include <arpa/inet.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <cstring>
#include <sstream>

#include <spdlog/spdlog.h>

#include "goagentnet/error.hpp"

namespace goagentnet::protocol {

namespace {

constexpr std::int64_t kWireTimeoutMs = 5000;

bool only_whitespace(std::string_view s) {
    return std::all_of(s.begin(), s.end(), [](char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r'; });
}

std::optional<std::int64_t> parse_id(const nlohmann::json& j) {
    if (j.is_null()) return std::nullopt;
    if (j.is_number_integer()) {
        if (j.is_number_unsigned() && j.get<std::uint64_t>() > static_cast<std::uint64_t>(INT64_MAX)) {
            throw Error(Errc::MalformedJson, "id out of range");
        }
        return j.get<std::int64_t>();
    }
    throw Error(Errc::MalformedJson, "id must be an integer");
}

std::uint32_t read_be32(const std::uint8_t* p) {
    return (std::uint32_t{p[0]} << 24) | (std::uint32_t{p[1]} << 16) | (std::uint32_t{p[2]} << 8) | std::uint32_t{p[3]};
}

std::optional<Errc> errc_by_name(std::string_view name) {
    for (int i = 0; i <= static_cast<int>(Errc::ReferentialIntegrity); ++i) {
        auto code = static_cast<Errc>(i);
        if (to_string(code) == name) return code;
    }
    return std::nullopt;
}

RpcError to_rpc_error(const std::exception& e) {
    if (const auto* err = dynamic_cast<const Error*>(&e)) {
        if (err->code() == Errc::SchemaViolation) return {rpc_code::kInvalidParams, e.what()};
        return {rpc_code::kRegistryRejected, e.what()};
    }
    return {rpc_code::kInvalidParams, e.what()};
}

}  // namespace

// Message ---------------------------------------------------------------------

Message Message::request(std::int64_t id, std::string method, nlohmann::json params) {
    Message m;
    m.id = id;
    m.method = std::move(method);
    m.params = std::move(params);
    return m;
}

Message Message::notification(std::string method, nlohmann::json params) {
    Message m;
    m.method = std::move(method);
    m.params = std::move(params);
    return m;
}

Message Message::response(std::optional<std::int64_t> id, nlohmann::json result) {
    Message m;
    m.id = id;
    m.is_response = true;
    m.result = std::move(result);
    return m;
}

Message Message::failure(std::optional<std::int64_t> id, RpcError error) {
    Message m;
    m.id = id;
    m.is_response = true;
    m.error = std::move(error);
    return m;
}

std::string serialize(const Message& msg) {
    std::string out = R"({"jsonrpc":"2.0")";
    if (msg.is_response) {
        out += R"(,"id":)";
        out += msg.id ? std::to_string(*msg.id) : "null";
        if (msg.error) {
            out += R"(,"error":{"code":)";
            out += std::to_string(msg.error->code);
            out += R"(,"message":)";
            out += nlohmann::json(msg.error->message).dump();
            out += '}';
        } else {
            out += R"(,"result":)";
            out += msg.result.dump();
        }
    } else {
        if (msg.id) {
            out += R"(,"id":)";
            out += std::to_string(*msg.id);
        }
        out += R"(,"method":)";
        out += nlohmann::json(msg.method).dump();
        if (!msg.params.is_null()) {
            out += R"(,"params":)";
            out += msg.params.dump();
        }
    }
    out += '}';
    return out;
}

std::array<std::uint8_t, 4> length_prefix(std::uint64_t payload_bytes) {
    if (payload_bytes > kMaxPayloadBytes) {
        throw Error(Errc::OversizeMessage, std::to_string(payload_bytes) + " byte payload");
    }
    return {static_cast<std::uint8_t>(payload_bytes >> 24), static_cast<std::uint8_t>(payload_bytes >> 16),
            static_cast<std::uint8_t>(payload_bytes >> 8), static_cast<std::uint8_t>(payload_bytes)};
}

std::vector<std::uint8_t> encode_frame(const Message& msg) {
    const std::string payload = serialize(msg);
    const auto prefix = length_prefix(payload.size());
    std::vector<std::uint8_t> out(prefix.size() + payload.size());
    std::copy(prefix.begin(), prefix.end(), out.begin());
    std::memcpy(out.data() + prefix.size(), payload.data(), payload.size());
    return out;
}

Message parse_payload(std::string_view payload) {
    nlohmann::json j;
    std::istringstream in{std::string(payload)};
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw Error(Errc::MalformedJson, e.what());
    }
    std::string rest{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
    if (!j.is_object()) throw Error(Errc::MalformedJson, "payload is not an object");
    if (!only_whitespace(rest)) {
        throw Error(Errc::LengthMismatch, std::to_string(rest.size()) + " bytes after the JSON value");
    }
    auto version = j.find("jsonrpc");
    if (version == j.end() || *version != "2.0") throw Error(Errc::MalformedJson, "jsonrpc must be \"2.0\"");
    for (const auto& [key, _] : j.items()) {
        static constexpr std::string_view allowed[] = {"jsonrpc", "id", "method", "params", "result", "error"};
        if (std::find(std::begin(allowed), std::end(allowed), key) == std::end(allowed)) {
            throw Error(Errc::MalformedJson, "unexpected key " + key);
        }
    }

    Message m;
    const bool has_method = j.contains("method");
    const bool has_result = j.contains("result");
    const bool has_error = j.contains("error");
    if (has_method) {
        if (has_result || has_error) throw Error(Errc::MalformedJson, "request carries result or error");
        if (!j["method"].is_string()) throw Error(Errc::MalformedJson, "method must be a string");
        m.method = j["method"].get<std::string>();
        if (!knowledge::is_known_method(m.method)) throw Error(Errc::UnknownMethod, m.method);
        if (j.contains("id")) {
            m.id = parse_id(j["id"]);
            if (!m.id) throw Error(Errc::MalformedJson, "request id must not be null");
        }
        if (j.contains("params")) m.params = j["params"];
        return m;
    }
    if (has_result == has_error) throw Error(Errc::MalformedJson, "not a request, notification or response");
    if (!j.contains("id")) throw Error(Errc::MalformedJson, "response without id");
    if (j.contains("params")) throw Error(Errc::MalformedJson, "response carries params");
    m.is_response = true;
    m.id = parse_id(j["id"]);
    if (has_result) {
        m.result = j["result"];
    } else {
        const auto& e = j["error"];
        if (!e.is_object() || !e.contains("code") || !e["code"].is_number_integer() || !e.contains("message") ||
            !e["message"].is_string() || e.size() != 2) {
            throw Error(Errc::MalformedJson, "error must be {code, message}");
        }
        m.error = RpcError{e["code"].get<int>(), e["message"].get<std::string>()};
    }
    return m;
}

DecodeResult decode_frame(std::span<const std::uint8_t> bytes) {
    if (bytes.size() < 4) return {DecodeStatus::need_more_bytes, std::nullopt, bytes};
    const std::size_t len = read_be32(bytes.data());
    if (bytes.size() - 4 < len) return {DecodeStatus::need_more_bytes, std::nullopt, bytes};
    std::string_view payload(reinterpret_cast<const char*>(bytes.data() + 4), len);
    return {DecodeStatus::complete, parse_payload(payload), bytes.subspan(4 + len)};
}

void FrameDecoder::feed(std::span<const std::uint8_t> chunk) {
    if (offset_ > 0 && offset_ * 2 >= buffer_.size()) {
        buffer_.erase(buffer_.begin(), buffer_.begin() + static_cast<std::ptrdiff_t>(offset_));
        offset_ = 0;
    }
    buffer_.insert(buffer_.end(), chunk.begin(), chunk.end());
}

std::optional<Message> FrameDecoder::next() {
    const std::size_t avail = buffer_.size() - offset_;
    if (avail < 4) return std::nullopt;
    const std::size_t len = read_be32(buffer_.data() + offset_);
    if (avail - 4 < len) return std::nullopt;
    std::string_view payload(reinterpret_cast<const char*>(buffer_.data() + offset_ + 4), len);
    // Advance first so a bad frame is dropped rather than wedging the stream.
    offset_ += 4 + len;
    return parse_payload(payload);
}

// Invoke payloads -------------------------------------------------------------

nlohmann::json to_json(const InvokeParams& p) {
    return {{"target", p.target.value},
            {"capability", p.capability},
            {"data_type", registry::to_json(p.data_type)},
            {"size_bits", p.size_bits},
            {"payload_ref", p.payload_ref}};
}

InvokeParams invoke_params_from_json(const nlohmann::json& j) {
    InvokeParams p;
    p.target = AgentId{j.at("target").get<std::uint32_t>()};
    p.capability = j.at("capability").get<std::string>();
    p.data_type = registry::data_type_from_json(j.at("data_type"));
    p.size_bits = j.at("size_bits").get<double>();
    p.payload_ref = j.value("payload_ref", "");
    if (p.capability.empty()) throw Error(Errc::SchemaViolation, "capability must be non-empty");
    if (!(p.size_bits >= 0.0)) throw Error(Errc::SchemaViolation, "size_bits must be non-negative");
    return p;
}

nlohmann::json to_json(const InvokeResult& r) {
    return {{"representation", r.representation},
            {"size_bits", r.size_bits},
            {"latency_s", r.latency_s},
            {"energy_j", r.energy_j},
            {"payload_ref", r.payload_ref}};
}

InvokeResult invoke_result_from_json(const nlohmann::json& j) {
    return InvokeResult{j.at("representation").get<std::string>(), j.at("size_bits").get<double>(),
                        j.value("latency_s", 0.0), j.value("energy_j", 0.0), j.value("payload_ref", "")};
}

AgentHandler simulated_agent(std::vector<knowledge::RepresentationSpec> catalog) {
    return [catalog = std::move(catalog)](const registry::AgentProfile& self, const InvokeParams& params) {
        const auto* tool = self.tool(params.capability);
        if (!tool) throw RemoteFailure(rpc_code::kCapabilityNotFound, params.capability);
        // A source hop carries no input data yet; it reads its sensors.
        const bool is_source = params.data_type.kind.empty();
        auto fx = knowledge::apply_tool(catalog, *tool, params.data_type.kind, params.size_bits, is_source);
        if (!fx) {
            throw RemoteFailure(rpc_code::kInvalidParams,
                                params.capability + " does not accept " + params.data_type.kind);
        }
        return InvokeResult{fx->out_kind, fx->out_bits, fx->latency_s, fx->energy_j,
                            to_string(self.id) + "/" + params.capability};
    };
}

// Subscription ----------------------------------------------------------------

void Subscription::push(registry::GraphEvent event) {
    {
        std::lock_guard lock(mutex_);
        last_seq_ = event.seq;
        queue_.push_back(std::move(event));
    }
    cv_.notify_all();
}

std::optional<registry::GraphEvent> Subscription::poll() {
    std::lock_guard lock(mutex_);
    if (queue_.empty()) return std::nullopt;
    auto e = std::move(queue_.front());
    queue_.pop_front();
    return e;
}

std::optional<registry::GraphEvent> Subscription::wait_for(std::chrono::milliseconds timeout) {
    std::unique_lock lock(mutex_);
    if (!cv_.wait_for(lock, timeout, [&] { return !queue_.empty(); })) return std::nullopt;
    auto e = std::move(queue_.front());
    queue_.pop_front();
    return e;
}

std::vector<registry::GraphEvent> Subscription::drain() {
    std::lock_guard lock(mutex_);
    std::vector<registry::GraphEvent> out(std::make_move_iterator(queue_.begin()),
                                          std::make_move_iterator(queue_.end()));
    queue_.clear();
    return out;
}

std::uint64_t Subscription::last_seq() const {
    std::lock_guard lock(mutex_);
    return last_seq_;
}

// Bus -------------------------------------------------------------------------

[[noreturn]] void raise(const RpcError& error) {
    switch (error.code) {
        case rpc_code::kUnknownTarget:
            throw Error(Errc::UnknownTarget, error.message);
        case rpc_code::kCapabilityNotFound:
            throw Error(Errc::CapabilityNotFound, error.message);
        case rpc_code::kMethodNotFound:
            throw Error(Errc::UnknownMethod, error.message);
        case rpc_code::kRegistryRejected: {
            const auto colon = error.message.find(':');
            if (auto code = errc_by_name(error.message.substr(0, colon)); code && colon != std::string::npos) {
                throw Error(*code, error.message.substr(std::min(colon + 2, error.message.size())));
            }
            break;
        }
        default:
            break;
    }
    throw Error(Errc::RemoteError, std::to_string(error.code) + " " + error.message);
}

Bus::Bus(registry::Registry& registry, double timeout_s) : registry_(registry), timeout_s_(timeout_s) {}

void Bus::attach(AgentId id, AgentHandler handler) {
    std::lock_guard lock(mutex_);
    handlers_[id] = std::move(handler);
}

void Bus::detach(AgentId id) {
    std::lock_guard lock(mutex_);
    handlers_.erase(id);
}

void Bus::set_time(double t) { registry_.set_time(t); }

std::vector<std::string> Bus::trace() const {
    std::lock_guard lock(mutex_);
    return trace_;
}

Message Bus::roundtrip(const Message& request) {
    std::lock_guard lock(mutex_);
    const auto reply = handle_frame(encode_frame(request));
    auto decoded = decode_frame(reply);
    if (decoded.status != DecodeStatus::complete || !decoded.message) {
        throw Error(Errc::TransportError, "truncated response");
    }
    if (decoded.message->id != request.id || !decoded.message->is_response) {
        throw Error(Errc::RemoteError, "response does not match request id");
    }
    return std::move(*decoded.message);
}

nlohmann::json Bus::call(std::string method, nlohmann::json params) {
    std::lock_guard lock(mutex_);
    auto response = roundtrip(Message::request(next_id_++, std::move(method), std::move(params)));
    if (response.error) raise(*response.error);
    return std::move(response.result);
}

InvokeResult Bus::invoke(AgentId target, std::string_view capability, const InvokeParams& params) {
    InvokeParams p = params;
    p.target = target;
    p.capability = std::string(capability);
    auto result = invoke_result_from_json(call("agent/invoke", to_json(p)));
    if (result.latency_s > timeout_s_) {
        throw Error(Errc::Timeout, std::string(capability) + " on agent " + to_string(target));
    }
    return result;
}

registry::GraphEvent Bus::register_agent(const registry::AgentProfile& profile) {
    return registry::event_from_json(call("agent/register", {{"profile", registry::to_json(profile)}}).at("event"));
}

registry::GraphEvent Bus::deregister(AgentId id) {
    return registry::event_from_json(call("agent/deregister", {{"id", id.value}}).at("event"));
}

registry::GraphEvent Bus::update_state(AgentId id, const registry::ProfileDelta& delta) {
    return registry::event_from_json(
        call("agent/event", {{"id", id.value}, {"delta", registry::to_json(delta)}}).at("event"));
}

std::vector<AgentId> Bus::query(const registry::QueryFilter& filter) {
    nlohmann::json params = nlohmann::json::object();
    if (filter.agent_type) params["agent_type"] = to_string(*filter.agent_type);
    if (filter.capability_name) params["capability"] = *filter.capability_name;
    if (filter.output_kind) params["output_kind"] = *filter.output_kind;
    std::vector<AgentId> out;
    const auto result = call("graph/query", params);
    for (const auto& v : result.at("agents")) out.push_back(AgentId{v.get<std::uint32_t>()});
    return out;
}

std::shared_ptr<Subscription> Bus::subscribe(std::string_view topic, std::optional<std::uint64_t> replay_from) {
    std::lock_guard lock(mutex_);
    nlohmann::json params{{"topic", topic}};
    if (replay_from) params["replay_from"] = *replay_from;
    const auto version = call("graph/subscribe", params).at("version").get<std::uint64_t>();
    auto sub = std::make_shared<Subscription>();
    sub->last_seq_ = replay_from ? *replay_from : version;
    subscribers_.push_back(sub);
    publish_pending();
    return sub;
}

void Bus::unsubscribe(const std::shared_ptr<Subscription>& sub) {
    std::lock_guard lock(mutex_);
    std::erase(subscribers_, sub);
}

void Bus::flush() {
    std::lock_guard lock(mutex_);
    publish_pending();
}

void Bus::publish_pending() {
    if (subscribers_.empty()) return;
    std::uint64_t oldest = UINT64_MAX;
    for (const auto& s : subscribers_) oldest = std::min(oldest, s->last_seq());
    for (const auto& event : registry_.events_since(oldest)) {
        // Events travel as agent/event notifications, like they would to a remote subscriber.
        const auto frame = encode_frame(Message::notification("agent/event", registry::to_json(event)));
        const auto delivered = registry::event_from_json(decode_frame(frame).message->params);
        for (const auto& s : subscribers_) {
            if (delivered.seq == s->last_seq() + 1) s->push(delivered);
        }
    }
}

std::vector<std::uint8_t> Bus::handle_frame(std::span<const std::uint8_t> frame) {
    Message request;
    try {
        auto decoded = decode_frame(frame);
        if (decoded.status != DecodeStatus::complete) {
            return encode_frame(Message::failure(std::nullopt, {-32700, "incomplete frame"}));
        }
        request = std::move(*decoded.message);
    } catch (const Error& e) {
        const int code = e.code() == Errc::UnknownMethod ? rpc_code::kMethodNotFound : -32700;
        return encode_frame(Message::failure(std::nullopt, {code, e.what()}));
    }
    auto response = dispatch(request);
    return response ? encode_frame(*response) : std::vector<std::uint8_t>{};
}

std::optional<Message> Bus::dispatch(const Message& msg) {
    if (msg.is_response) return std::nullopt;
    std::lock_guard lock(mutex_);
    trace_.push_back(msg.method);
    Message response = handle(msg);
    if (msg.is_notification()) return std::nullopt;
    return response;
}

Message Bus::handle(const Message& msg) {
    const auto& method = msg.method;
    const auto& p = msg.params;
    try {
        if (method == "ping") return Message::response(msg.id, nlohmann::json::object());
        if (method == "agent/register") {
            auto event = registry_.register_agent(registry::profile_from_json(p.at("profile")));
            publish_pending();
            return Message::response(msg.id, {{"event", registry::to_json(event)}});
        }
        if (method == "agent/deregister") {
            const AgentId id{p.at("id").get<std::uint32_t>()};
            auto event = registry_.deregister(id);
            handlers_.erase(id);
            publish_pending();
            return Message::response(msg.id, {{"event", registry::to_json(event)}});
        }
        if (method == "agent/event") {
            const AgentId id{p.at("id").get<std::uint32_t>()};
            auto event = registry_.update_state(id, registry::delta_from_json(p.at("delta")));
            publish_pending();
            return Message::response(msg.id, {{"event", registry::to_json(event)}});
        }
        if (method == "graph/query") {
            registry::QueryFilter filter;
            if (p.contains("agent_type")) {
                filter.agent_type = parse_agent_type(p["agent_type"].get<std::string>());
                if (!filter.agent_type) return Message::failure(msg.id, {rpc_code::kInvalidParams, "agent_type"});
            }
            if (p.contains("capability")) filter.capability_name = p["capability"].get<std::string>();
            if (p.contains("output_kind")) filter.output_kind = p["output_kind"].get<std::string>();
            nlohmann::json ids = nlohmann::json::array();
            for (auto id : registry_.query(filter)) ids.push_back(id.value);
            return Message::response(msg.id, {{"agents", ids}});
        }
        if (method == "graph/subscribe") {
            if (p.value("topic", "") != "graph") {
                return Message::failure(msg.id, {rpc_code::kInvalidParams, "unknown topic"});
            }
            return Message::response(msg.id, {{"version", registry_.version()}});
        }
        if (method == "agent/invoke") {
            const auto params = invoke_params_from_json(p);
            const auto graph = registry_.snapshot();
            const auto* profile = graph.node(params.target);
            if (!profile) return Message::failure(msg.id, {rpc_code::kUnknownTarget, "agent " + to_string(params.target)});
            if (!profile->tool(params.capability)) {
                return Message::failure(msg.id, {rpc_code::kCapabilityNotFound,
                                                 params.capability + " on agent " + to_string(params.target)});
            }
            auto handler = handlers_.find(params.target);
            if (handler == handlers_.end()) {
                return Message::failure(msg.id, {rpc_code::kAgentFailure, "agent unreachable"});
            }
            try {
                return Message::response(msg.id, to_json(handler->second(*profile, params)));
            } catch (const RemoteFailure& f) {
                return Message::failure(msg.id, {f.code, f.what()});
            }
        }
    } catch (const std::exception& e) {
        return Message::failure(msg.id, to_rpc_error(e));
    }
    return Message::failure(msg.id, {rpc_code::kMethodNotFound, method});
}

// TCP -------------------------------------------------------------------------

namespace {

void send_all(int fd, const std::vector<std::uint8_t>& bytes) {
    std::size_t sent = 0;
    while (sent < bytes.size()) {
        const auto n = ::send(fd, bytes.data() + sent, bytes.size() - sent, MSG_NOSIGNAL);
        if (n < 0) {
            if (errno == EINTR) continue;
            throw Error(Errc::TransportError, std::strerror(errno));
        }
        sent += static_cast<std::size_t>(n);
    }
}

sockaddr_in make_address(const std::string& host, std::uint16_t port) {
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_port = htons(port);
    const std::string h = host == "localhost" ? "127.0.0.1" : host;
    if (::inet_pton(AF_INET, h.c_str(), &addr.sin_addr) != 1) {
        throw Error(Errc::TransportError, "invalid IPv4 address " + host);
    }
    return addr;
}

}  // namespace

TcpServer::TcpServer(Bus& bus, const std::string& host, std::uint16_t port) : bus_(bus) {
    const auto addr = make_address(host, port);
    listen_fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
    if (listen_fd_ < 0) throw Error(Errc::TransportError, std::strerror(errno));
    int one = 1;
    ::setsockopt(listen_fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
    if (::bind(listen_fd_, reinterpret_cast<const sockaddr*>(&addr), sizeof addr) != 0 ||
        ::listen(listen_fd_, 16) != 0) {
        const std::string why = std::strerror(errno);
        ::close(listen_fd_);
        throw Error(Errc::TransportError, "listen on " + host + ":" + std::to_string(port) + ": " + why);
    }
    sockaddr_in bound{};
    socklen_t len = sizeof bound;
    ::getsockname(listen_fd_, reinterpret_cast<sockaddr*>(&bound), &len);
    port_ = ntohs(bound.sin_port);
    acceptor_ = std::thread([this] { accept_loop(); });
    spdlog::info("listening on {}:{}", host, port_);
}

TcpServer::~TcpServer() { stop(); }

void TcpServer::stop() {
    if (stopping_.exchange(true)) return;
    if (acceptor_.joinable()) acceptor_.join();
    std::vector<std::thread> threads;
    {
        std::lock_guard lock(conn_mutex_);
        threads.swap(connections_);
    }
    for (auto& t : threads) t.join();
    ::close(listen_fd_);
}

void TcpServer::accept_loop() {
    while (!stopping_) {
        pollfd pfd{listen_fd_, POLLIN, 0};
        if (::poll(&pfd, 1, 50) <= 0) continue;
        const int fd = ::accept(listen_fd_, nullptr, nullptr);
        if (fd < 0) continue;
        int one = 1;
        ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
        std::lock_guard lock(conn_mutex_);
        connections_.emplace_back([this, fd] { serve(fd); });
    }
}

void TcpServer::serve(int fd) {
    FrameDecoder decoder;
    std::shared_ptr<Subscription> sub;
    std::uint8_t buf[4096];
    try {
        while (!stopping_) {
            pollfd pfd{fd, POLLIN, 0};
            const int ready = ::poll(&pfd, 1, 20);
            if (ready > 0) {
                const auto n = ::recv(fd, buf, sizeof buf, 0);
                if (n <= 0) break;
                decoder.feed(std::span<const std::uint8_t>(buf, static_cast<std::size_t>(n)));
                while (true) {
                    std::optional<Message> msg;
                    try {
                        msg = decoder.next();
                    } catch (const Error& e) {
                        const int code = e.code() == Errc::UnknownMethod ? rpc_code::kMethodNotFound : -32700;
                        send_all(fd, encode_frame(Message::failure(std::nullopt, {code, e.what()})));
                        continue;
                    }
                    if (!msg) break;
                    if (msg->method == "graph/subscribe" && msg->is_request() && !sub) {
                        std::optional<std::uint64_t> replay;
                        if (msg->params.contains("replay_from")) replay = msg->params["replay_from"].get<std::uint64_t>();
                        try {
                            sub = bus_.subscribe(msg->params.value("topic", ""), replay);
                            send_all(fd, encode_frame(Message::response(msg->id, {{"version", bus_.registry().version()}})));
                        } catch (const Error& e) {
                            send_all(fd, encode_frame(Message::failure(msg->id, {rpc_code::kInvalidParams, e.what()})));
                        }
                        continue;
                    }
                    if (auto response = bus_.dispatch(*msg)) send_all(fd, encode_frame(*response));
                }
            }
            if (sub) {
                for (const auto& e : sub->drain()) {
                    send_all(fd, encode_frame(Message::notification("agent/event", registry::to_json(e))));
                }
            }
        }
    } catch (const std::exception& e) {
        spdlog::debug("connection closed: {}", e.what());
    }
    if (sub) bus_.unsubscribe(sub);
    ::close(fd);
}

TcpClient::TcpClient(const std::string& host, std::uint16_t port) {
    const auto addr = make_address(host, port);
    fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
    if (fd_ < 0) throw Error(Errc::TransportError, std::strerror(errno));
    if (::connect(fd_, reinterpret_cast<const sockaddr*>(&addr), sizeof addr) != 0) {
        const std::string why = std::strerror(errno);
        ::close(fd_);
        throw Error(Errc::TransportError, "connect " + host + ":" + std::to_string(port) + ": " + why);
    }
    int one = 1;
    ::setsockopt(fd_, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
}

TcpClient::~TcpClient() {
    if (fd_ >= 0) ::close(fd_);
}

void TcpClient::send(const Message& msg) { send_all(fd_, encode_frame(msg)); }

std::optional<Message> TcpClient::receive(std::chrono::milliseconds timeout) {
    const auto deadline = std::chrono::steady_clock::now() + timeout;
    std::uint8_t buf[4096];
    while (true) {
        if (auto msg = decoder_.next()) return msg;
        const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - std::chrono::steady_clock::now());
        if (left.count() <= 0) return std::nullopt;
        pollfd pfd{fd_, POLLIN, 0};
        if (::poll(&pfd, 1, static_cast<int>(left.count())) <= 0) continue;
        const auto n = ::recv(fd_, buf, sizeof buf, 0);
        if (n == 0) throw Error(Errc::TransportError, "connection closed");
        if (n < 0) {
            if (errno == EINTR) continue;
            throw Error(Errc::TransportError, std::strerror(errno));
        }
        decoder_.feed(std::span<const std::uint8_t>(buf, static_cast<std::size_t>(n)));
    }
}

Message TcpClient::call(const std::string& method, nlohmann::json params) {
    const auto id = next_id_++;
    send(Message::request(id, method, std::move(params)));
    while (true) {
        auto msg = receive(std::chrono::milliseconds(kWireTimeoutMs));
        if (!msg) throw Error(Errc::Timeout, method);
        if (msg->is_response && msg->id == id) return std::move(*msg);
        if (msg->is_response && !msg->id && msg->error) raise(*msg->error);
        if (msg->is_response) throw Error(Errc::RemoteError, "response for unknown id");
        pending_.push_back(std::move(*msg));
    }
}

void TcpClient::notify(const std::string& method, nlohmann::json params) {
    send(Message::notification(method, std::move(params)));
}

std::optional<Message> TcpClient::next_notification(std::chrono::milliseconds timeout) {
    if (!pending_.empty()) {
        auto msg = std::move(pending_.front());
        pending_.pop_front();
        return msg;
    }
    return receive(timeout);
}

}  // namespace goagentnet::protocol
