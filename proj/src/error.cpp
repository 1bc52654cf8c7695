#include "goagentnet/error.hpp"

namespace goagentnet {

std::string_view to_string(Errc code) noexcept {
    switch (code) {
        case Errc::UnrecognizedTemplate: return "UnrecognizedTemplate";
        case Errc::SchemaViolation: return "SchemaViolation";
        case Errc::CycleDetected: return "CycleDetected";
        case Errc::DuplicateDefinition: return "DuplicateDefinition";
        case Errc::MissingExogenous: return "MissingExogenous";
        case Errc::UnknownVariable: return "UnknownVariable";
        case Errc::Unsatisfiable: return "Unsatisfiable";
        case Errc::NonMonotonePath: return "NonMonotonePath";
        case Errc::DuplicateId: return "DuplicateId";
        case Errc::InvalidProfile: return "InvalidProfile";
        case Errc::UnknownAgent: return "UnknownAgent";
        case Errc::UnknownField: return "UnknownField";
        case Errc::DuplicateEdge: return "DuplicateEdge";
        case Errc::UnknownEdge: return "UnknownEdge";
        case Errc::GapInEvents: return "GapInEvents";
        case Errc::OversizeMessage: return "OversizeMessage";
        case Errc::MalformedJson: return "MalformedJson";
        case Errc::UnknownMethod: return "UnknownMethod";
        case Errc::LengthMismatch: return "LengthMismatch";
        case Errc::UnknownTarget: return "UnknownTarget";
        case Errc::CapabilityNotFound: return "CapabilityNotFound";
        case Errc::RemoteError: return "RemoteError";
        case Errc::Timeout: return "Timeout";
        case Errc::TransportError: return "TransportError";
        case Errc::InvalidBandwidth: return "InvalidBandwidth";
        case Errc::UnknownChannel: return "UnknownChannel";
        case Errc::UnknownTask: return "UnknownTask";
        case Errc::TimestampRegression: return "TimestampRegression";
        case Errc::NoStateYet: return "NoStateYet";
        case Errc::DuplicateAsset: return "DuplicateAsset";
        case Errc::UnknownAsset: return "UnknownAsset";
        case Errc::NoFeasiblePlan: return "NoFeasiblePlan";
        case Errc::GraphTooLarge: return "GraphTooLarge";
        case Errc::BaselineZeroEnergy: return "BaselineZeroEnergy";
        case Errc::ReferentialIntegrity: return "ReferentialIntegrity";
    }
    return "Unknown";
}

}  // namespace goagentnet
