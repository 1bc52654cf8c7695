#include "goagentnet/netmodel.hpp"

#include <cmath>

#include "goagentnet/error.hpp"

namespace goagentnet::netmodel {

void check_channel(const Channel& c) {
    if (!(c.bandwidth_hz > 0.0) || !std::isfinite(c.bandwidth_hz)) {
        throw Error(Errc::InvalidBandwidth, c.id + ": bandwidth must be > 0");
    }
    if (!(c.spectral_efficiency_bps_per_hz > 0.0)) throw Error(Errc::SchemaViolation, c.id + ": efficiency must be > 0");
    if (!(c.tx_power_w > 0.0)) throw Error(Errc::SchemaViolation, c.id + ": tx power must be > 0");
    if (!(c.propagation_delay_s >= 0.0)) throw Error(Errc::SchemaViolation, c.id + ": negative propagation delay");
    if (!(c.loss_prob >= 0.0 && c.loss_prob < 1.0)) throw Error(Errc::SchemaViolation, c.id + ": loss_prob not in [0,1)");
    if (!(c.congestion_level >= 0.0 && c.congestion_level <= 1.0)) {
        throw Error(Errc::SchemaViolation, c.id + ": congestion not in [0,1]");
    }
}

double link_rate(const Channel& channel) { return channel.bandwidth_hz * channel.spectral_efficiency_bps_per_hz; }

TxOutcome single_attempt(const Channel& channel, double size_bits) {
    const double airtime = size_bits / link_rate(channel);
    return TxOutcome{airtime + channel.propagation_delay_s, channel.tx_power_w * airtime, true, 1};
}

TxOutcome transmit(const Channel& channel, double size_bits, std::mt19937_64& rng) {
    TxOutcome once = single_attempt(channel, size_bits);
    std::uint32_t attempts = 1;
    if (channel.loss_prob > 0.0) {
        // Failures before the first success.
        std::geometric_distribution<std::uint32_t> failures(1.0 - channel.loss_prob);
        attempts += failures(rng);
    }
    return TxOutcome{attempts * once.latency_s, attempts * once.energy_j, true, attempts};
}

void NetworkModel::add_channel(Channel channel) {
    check_channel(channel);
    auto id = channel.id;
    channels_[id] = Entry{std::move(channel), 0.0};
    publish(report_state(id));
}

NetworkModel::Entry& NetworkModel::entry(std::string_view id) {
    auto it = channels_.find(id);
    if (it == channels_.end()) throw Error(Errc::UnknownChannel, std::string(id));
    return it->second;
}

const NetworkModel::Entry& NetworkModel::entry(std::string_view id) const {
    auto it = channels_.find(id);
    if (it == channels_.end()) throw Error(Errc::UnknownChannel, std::string(id));
    return it->second;
}

const Channel& NetworkModel::channel(std::string_view id) const { return entry(id).channel; }

TxOutcome NetworkModel::transmit(std::string_view channel_id, double size_bits) {
    auto& e = entry(channel_id);
    auto outcome = netmodel::transmit(e.channel, size_bits, rng_);
    e.recent_energy_j = outcome.energy_j;
    publish(report_state(channel_id));
    return outcome;
}

NetworkState NetworkModel::set_bandwidth(std::string_view channel_id, double new_bandwidth_hz) {
    if (!(new_bandwidth_hz > 0.0) || !std::isfinite(new_bandwidth_hz)) {
        throw Error(Errc::InvalidBandwidth, "bandwidth must be > 0");
    }
    entry(channel_id).channel.bandwidth_hz = new_bandwidth_hz;
    auto state = report_state(channel_id);
    publish(state);
    return state;
}

NetworkState NetworkModel::report_state(std::string_view channel_id) const {
    const auto& e = entry(channel_id);
    return NetworkState{e.channel.id,           now_,
                        e.channel.bandwidth_hz, link_rate(e.channel),
                        e.channel.congestion_level, 1.0 - e.channel.loss_prob,
                        e.recent_energy_j};
}

void NetworkModel::publish(const NetworkState& state) const {
    if (sink_) sink_(state);
}

nlohmann::json to_json(const NetworkState& s) {
    return {{"channel_id", s.channel_id},
            {"timestamp", s.timestamp},
            {"bandwidth_hz", s.bandwidth_hz},
            {"achievable_rate_bps", s.achievable_rate_bps},
            {"congestion_level", s.congestion_level},
            {"link_reliability", s.link_reliability},
            {"recent_energy_j", s.recent_energy_j}};
}

nlohmann::json to_json(const Channel& c) {
    return {{"id", c.id},
            {"bandwidth_hz", c.bandwidth_hz},
            {"spectral_efficiency_bps_per_hz", c.spectral_efficiency_bps_per_hz},
            {"tx_power_w", c.tx_power_w},
            {"propagation_delay_s", c.propagation_delay_s},
            {"loss_prob", c.loss_prob},
            {"congestion_level", c.congestion_level}};
}

Channel channel_from_json(const nlohmann::json& j) {
    Channel c;
    c.id = j.value("id", "uplink");
    c.bandwidth_hz = j.at("bandwidth_hz").get<double>();
    c.spectral_efficiency_bps_per_hz = j.value("spectral_efficiency_bps_per_hz", 1.0);
    c.tx_power_w = j.value("tx_power_w", 1.0);
    c.propagation_delay_s = j.value("propagation_delay_s", 0.0);
    c.loss_prob = j.value("loss_prob", 0.0);
    c.congestion_level = j.value("congestion_level", 0.0);
    check_channel(c);
    return c;
}

}  // namespace goagentnet::netmodel
