#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <random>
#include <string>

#include <json.hpp>

namespace goagentnet::netmodel {

struct Channel {
    std::string id;
    double bandwidth_hz = 1e6;
    double spectral_efficiency_bps_per_hz = 1.0;
    double tx_power_w = 1.0;
    double propagation_delay_s = 0.0;
    double loss_prob = 0.0;
    double congestion_level = 0.0;
};

/// Throws InvalidBandwidth / SchemaViolation for out-of-range fields.
void check_channel(const Channel& channel);

struct TxOutcome {
    double latency_s = 0.0;
    double energy_j = 0.0;
    bool delivered = true;
    std::uint32_t attempts = 1;
};

struct NetworkState {
    std::string channel_id;
    double timestamp = 0.0;
    double bandwidth_hz = 0.0;
    double achievable_rate_bps = 0.0;
    double congestion_level = 0.0;
    double link_reliability = 1.0;
    double recent_energy_j = 0.0;

    bool operator==(const NetworkState&) const = default;
};

double link_rate(const Channel& channel);

/// Cost of a single attempt: size/R + propagation delay, P_tx * size/R.
TxOutcome single_attempt(const Channel& channel, double size_bits);

/// Geometric retransmission when loss_prob > 0; attempts drawn from `rng`.
TxOutcome transmit(const Channel& channel, double size_bits, std::mt19937_64& rng);

/// Channel set owned by the simulation loop. Every state change is pushed to the feedback sink.
class NetworkModel {
public:
    using FeedbackSink = std::function<void(const NetworkState&)>;

    explicit NetworkModel(std::uint64_t seed = 0) : rng_(seed) {}

    void add_channel(Channel channel);
    const Channel& channel(std::string_view id) const;
    void set_feedback_sink(FeedbackSink sink) { sink_ = std::move(sink); }
    void set_time(double t) { now_ = t; }

    TxOutcome transmit(std::string_view channel_id, double size_bits);
    NetworkState set_bandwidth(std::string_view channel_id, double new_bandwidth_hz);
    NetworkState report_state(std::string_view channel_id) const;

private:
    struct Entry {
        Channel channel;
        double recent_energy_j = 0.0;
    };
    Entry& entry(std::string_view id);
    const Entry& entry(std::string_view id) const;
    void publish(const NetworkState& state) const;

    std::map<std::string, Entry, std::less<>> channels_;
    std::mt19937_64 rng_;
    FeedbackSink sink_;
    double now_ = 0.0;
};

nlohmann::json to_json(const NetworkState& s);
nlohmann::json to_json(const Channel& c);
Channel channel_from_json(const nlohmann::json& j);

}  // namespace goagentnet::netmodel
