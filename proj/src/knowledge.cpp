#include "goagentnet/knowledge.hpp"

#include <algorithm>

#include "goagentnet/error.hpp"

namespace goagentnet::knowledge {

bool is_known_method(std::string_view method) noexcept {
    return std::find(std::begin(kMessageMethods), std::end(kMessageMethods), method) != std::end(kMessageMethods);
}

KnowledgeBase::KnowledgeBase(const KnowledgeBase& other) {
    std::shared_lock lock(other.mutex_);
    catalog_ = other.catalog_;
    rules_ = other.rules_;
    assets_ = other.assets_;
    log_ = other.log_;
}

KnowledgeBase& KnowledgeBase::operator=(const KnowledgeBase& other) {
    if (this == &other) return *this;
    std::scoped_lock lock(mutex_);
    std::shared_lock other_lock(other.mutex_);
    catalog_ = other.catalog_;
    rules_ = other.rules_;
    assets_ = other.assets_;
    log_ = other.log_;
    return *this;
}

void KnowledgeBase::add_representation(const std::string& task_type, RepresentationSpec spec) {
    if (!(spec.size_bits > 0.0)) throw Error(Errc::SchemaViolation, spec.name + ": size_bits must be > 0");
    if (!(spec.sufficiency >= 0.0 && spec.sufficiency <= 1.0)) {
        throw Error(Errc::SchemaViolation, spec.name + ": sufficiency not in [0,1]");
    }
    if (spec.extract_latency_s < 0.0 || spec.extract_energy_j < 0.0) {
        throw Error(Errc::SchemaViolation, spec.name + ": negative extraction cost");
    }
    std::unique_lock lock(mutex_);
    auto& entries = catalog_[task_type];
    if (std::any_of(entries.begin(), entries.end(), [&](const auto& r) { return r.name == spec.name; })) {
        throw Error(Errc::SchemaViolation, "duplicate representation " + spec.name);
    }
    entries.push_back(std::move(spec));
    std::stable_sort(entries.begin(), entries.end(),
                     [](const RepresentationSpec& a, const RepresentationSpec& b) { return a.size_bits < b.size_bits; });
}

void KnowledgeBase::add_rule(MappingRule rule) {
    if (!find_representation(rule.task_type, rule.representation)) {
        throw Error(Errc::ReferentialIntegrity,
                    "mapping rule references unknown representation '" + rule.representation + "'");
    }
    std::unique_lock lock(mutex_);
    rules_.push_back(std::move(rule));
}

std::vector<RepresentationSpec> KnowledgeBase::get_representations(std::string_view task_type) const {
    std::shared_lock lock(mutex_);
    auto it = catalog_.find(task_type);
    if (it == catalog_.end()) throw Error(Errc::UnknownTask, std::string(task_type));
    return it->second;
}

std::optional<RepresentationSpec> KnowledgeBase::find_representation(std::string_view task_type,
                                                                     std::string_view name) const {
    std::shared_lock lock(mutex_);
    auto it = catalog_.find(task_type);
    if (it == catalog_.end()) return std::nullopt;
    for (const auto& r : it->second) {
        if (r.name == name) return r;
    }
    return std::nullopt;
}

std::vector<MappingRule> KnowledgeBase::rules(std::string_view task_type) const {
    std::shared_lock lock(mutex_);
    std::vector<MappingRule> out;
    for (const auto& r : rules_) {
        if (r.task_type == task_type) out.push_back(r);
    }
    return out;
}

std::vector<std::string> KnowledgeBase::tasks() const {
    std::shared_lock lock(mutex_);
    std::vector<std::string> out;
    for (const auto& [task, _] : catalog_) out.push_back(task);
    return out;
}

void KnowledgeBase::record_state(const netmodel::NetworkState& state) {
    std::unique_lock lock(mutex_);
    for (auto it = log_.rbegin(); it != log_.rend(); ++it) {
        if (it->channel_id == state.channel_id) {
            if (state.timestamp < it->timestamp) {
                throw Error(Errc::TimestampRegression, state.channel_id);
            }
            break;
        }
    }
    log_.push_back(state);
}

netmodel::NetworkState KnowledgeBase::latest_state(std::string_view channel_id) const {
    std::shared_lock lock(mutex_);
    for (auto it = log_.rbegin(); it != log_.rend(); ++it) {
        if (it->channel_id == channel_id) return *it;
    }
    throw Error(Errc::NoStateYet, std::string(channel_id));
}

std::vector<netmodel::NetworkState> KnowledgeBase::state_log() const {
    std::shared_lock lock(mutex_);
    return log_;
}

void KnowledgeBase::register_asset(Asset asset) {
    std::unique_lock lock(mutex_);
    auto id = asset.id;
    if (!assets_.emplace(id, std::move(asset)).second) throw Error(Errc::DuplicateAsset, id);
}

Asset KnowledgeBase::fetch_asset(std::string_view id) const {
    std::shared_lock lock(mutex_);
    auto it = assets_.find(id);
    if (it == assets_.end()) throw Error(Errc::UnknownAsset, std::string(id));
    return it->second;
}

const RepresentationSpec* find_in(const std::vector<RepresentationSpec>& catalog, std::string_view name) {
    for (const auto& r : catalog) {
        if (r.name == name) return &r;
    }
    return nullptr;
}

std::optional<ToolEffect> apply_tool(const std::vector<RepresentationSpec>& catalog,
                                     const registry::Capability& tool, std::string_view in_kind, double in_bits,
                                     bool is_source) {
    constexpr std::string_view any = "*";
    if (is_source) {
        if (tool.output_schema.kind == any) return std::nullopt;
    } else if (tool.input_schema.kind != any && tool.input_schema.kind != in_kind) {
        return std::nullopt;
    }
    ToolEffect fx;
    fx.out_kind = tool.output_schema.kind == any ? std::string(in_kind) : tool.output_schema.kind;
    const auto* spec = find_in(catalog, fx.out_kind);
    const bool producer = spec && spec->producer_capability == tool.name;
    if (!is_source && fx.out_kind == in_kind && !producer) {
        fx.out_bits = in_bits;
    } else {
        fx.out_bits = spec ? spec->size_bits : 0.0;
    }
    if (producer) {
        fx.latency_s = spec->extract_latency_s;
        fx.energy_j = spec->extract_energy_j;
    } else {
        fx.latency_s = tool.cost_model.latency(in_bits);
        fx.energy_j = tool.cost_model.energy(in_bits);
    }
    fx.produced_catalog = spec != nullptr;
    return fx;
}

nlohmann::json to_json(const RepresentationSpec& r) {
    return {{"name", r.name},
            {"size_bits", r.size_bits},
            {"extract_latency_s", r.extract_latency_s},
            {"extract_energy_j", r.extract_energy_j},
            {"sufficiency", r.sufficiency},
            {"producer_capability", r.producer_capability}};
}

RepresentationSpec representation_from_json(const nlohmann::json& j) {
    return RepresentationSpec{j.at("name").get<std::string>(),        j.at("size_bits").get<double>(),
                              j.value("extract_latency_s", 0.0),      j.value("extract_energy_j", 0.0),
                              j.at("sufficiency").get<double>(),      j.value("producer_capability", "")};
}

MappingRule rule_from_json(const nlohmann::json& j) {
    return MappingRule{j.at("task_type").get<std::string>(), j.value("raw_modality", ""),
                       j.at("representation").get<std::string>(), j.value("consumes", ""),
                       j.value("produced_for", "")};
}

}  // namespace goagentnet::knowledge
