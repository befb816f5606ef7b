#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace variety {

enum class ErrorCode {
    EmptyTree,
    TooFewConcepts,
    UnknownLevel,
    CountMismatch,
    InconsistentHierarchy,
    ZeroVector,
    ProviderUnavailable,
    MissingPrecomputedVector,
    ZeroWeightSum,
    ShapeMismatch,
    BadK,
    ParseError,
    SchemaError,
    DuplicateInstance,
    IoError,
    InvalidArgument,
};

inline std::string_view to_string(ErrorCode code) {
    switch (code) {
    case ErrorCode::EmptyTree: return "EmptyTree";
    case ErrorCode::TooFewConcepts: return "TooFewConcepts";
    case ErrorCode::UnknownLevel: return "UnknownLevel";
    case ErrorCode::CountMismatch: return "CountMismatch";
    case ErrorCode::InconsistentHierarchy: return "InconsistentHierarchy";
    case ErrorCode::ZeroVector: return "ZeroVector";
    case ErrorCode::ProviderUnavailable: return "ProviderUnavailable";
    case ErrorCode::MissingPrecomputedVector: return "MissingPrecomputedVector";
    case ErrorCode::ZeroWeightSum: return "ZeroWeightSum";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::BadK: return "BadK";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::SchemaError: return "SchemaError";
    case ErrorCode::DuplicateInstance: return "DuplicateInstance";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    }
    return "Unknown";
}

/// Every failure raised by the library carries one of the codes above so
/// frontends (CLI exit codes, HTTP status) can map it without string matching.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

}  // namespace variety
