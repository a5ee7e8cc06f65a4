#pragma once

#include <stdexcept>
#include <string>

namespace kplab {

enum class ErrorCode {
    InvalidArgument,
    NonFiniteSample,
    DegenerateFrame,
    NotClosed,
    AmbiguousAngle,
    CurvesTooClose,
    NonConvergent,
    EstimatorVariance,
    DegenerateTriangle,
    NotSpanning,
    TubeNotEmbedded,
    SeedFailed,
    SpanningLost,
    LineSearchStalled,
    NoFeasibleStep,
    ConfigError,
};

inline const char *to_string(ErrorCode code) {
    switch (code) {
        case ErrorCode::InvalidArgument:    return "InvalidArgument";
        case ErrorCode::NonFiniteSample:    return "NonFiniteSample";
        case ErrorCode::DegenerateFrame:    return "DegenerateFrame";
        case ErrorCode::NotClosed:          return "NotClosed";
        case ErrorCode::AmbiguousAngle:     return "AmbiguousAngle";
        case ErrorCode::CurvesTooClose:     return "CurvesTooClose";
        case ErrorCode::NonConvergent:      return "NonConvergent";
        case ErrorCode::EstimatorVariance:  return "EstimatorVariance";
        case ErrorCode::DegenerateTriangle: return "DegenerateTriangle";
        case ErrorCode::NotSpanning:        return "NotSpanning";
        case ErrorCode::TubeNotEmbedded:    return "TubeNotEmbedded";
        case ErrorCode::SeedFailed:         return "SeedFailed";
        case ErrorCode::SpanningLost:       return "SpanningLost";
        case ErrorCode::LineSearchStalled:  return "LineSearchStalled";
        case ErrorCode::NoFeasibleStep:     return "NoFeasibleStep";
        case ErrorCode::ConfigError:        return "ConfigError";
    }
    return "Unknown";
}

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string &message)
        : std::runtime_error(std::string(to_string(code)) + ": " + message), m_code(code), m_message(message) {}

    ErrorCode code() const { return m_code; }
    const std::string &message() const { return m_message; }

private:
    ErrorCode m_code;
    std::string m_message;
};

} // namespace kplab
