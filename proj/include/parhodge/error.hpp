#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace parhodge {

enum class ErrorKind {
    NotSymmetric,
    NoConvergence,
    NotPositiveDefinite,
    DimensionMismatch,
    ConditionFailed,
    DegenerateInput,
    NonManifold,
    InconsistentOrientation,
    InvalidParameter,
    DegenerateMetric,
    NotOrthogonal,
    NotFlat,
    RelationViolated,
    NotUnit,
    NotClosed,
    SamplingFailed,
    InvalidAngles,
    SingularPoint,
    ParseError,
};

inline std::string_view to_string(ErrorKind kind)
{
    switch (kind) {
    case ErrorKind::NotSymmetric: return "NotSymmetric";
    case ErrorKind::NoConvergence: return "NoConvergence";
    case ErrorKind::NotPositiveDefinite: return "NotPositiveDefinite";
    case ErrorKind::DimensionMismatch: return "DimensionMismatch";
    case ErrorKind::ConditionFailed: return "ConditionFailed";
    case ErrorKind::DegenerateInput: return "DegenerateInput";
    case ErrorKind::NonManifold: return "NonManifold";
    case ErrorKind::InconsistentOrientation: return "InconsistentOrientation";
    case ErrorKind::InvalidParameter: return "InvalidParameter";
    case ErrorKind::DegenerateMetric: return "DegenerateMetric";
    case ErrorKind::NotOrthogonal: return "NotOrthogonal";
    case ErrorKind::NotFlat: return "NotFlat";
    case ErrorKind::RelationViolated: return "RelationViolated";
    case ErrorKind::NotUnit: return "NotUnit";
    case ErrorKind::NotClosed: return "NotClosed";
    case ErrorKind::SamplingFailed: return "SamplingFailed";
    case ErrorKind::InvalidAngles: return "InvalidAngles";
    case ErrorKind::SingularPoint: return "SingularPoint";
    case ErrorKind::ParseError: return "ParseError";
    }
    return "Unknown";
}

/// Every failure raised by the library. The kind is stable and is what the
/// CLI maps onto exit codes; the message names the violated invariant.
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& message)
        : std::runtime_error(std::string(to_string(kind)) + ": " + message)
        , kind_(kind)
    {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& message)
{
    throw Error(kind, message);
}

} // namespace parhodge
