#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace goagentnet {

enum class Errc {
    // intent
    UnrecognizedTemplate,
    SchemaViolation,
    // scm
    CycleDetected,
    DuplicateDefinition,
    MissingExogenous,
    UnknownVariable,
    Unsatisfiable,
    NonMonotonePath,
    // registry
    DuplicateId,
    InvalidProfile,
    UnknownAgent,
    UnknownField,
    DuplicateEdge,
    UnknownEdge,
    GapInEvents,
    // protocol
    OversizeMessage,
    MalformedJson,
    UnknownMethod,
    LengthMismatch,
    UnknownTarget,
    CapabilityNotFound,
    RemoteError,
    Timeout,
    TransportError,
    // netmodel
    InvalidBandwidth,
    UnknownChannel,
    // knowledge / orchestrator
    UnknownTask,
    TimestampRegression,
    NoStateYet,
    DuplicateAsset,
    UnknownAsset,
    NoFeasiblePlan,
    GraphTooLarge,
    // scenario
    BaselineZeroEnergy,
    ReferentialIntegrity,
};

std::string_view to_string(Errc code) noexcept;

/// Every failure surfaced by the library is an Error carrying a stable code.
class Error : public std::runtime_error {
public:
    Error(Errc code, const std::string& what)
        : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

    Errc code() const noexcept { return code_; }

private:
    Errc code_;
};

}  // namespace goagentnet
