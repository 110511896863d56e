#pragma once

#include <chrono>
#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace raqeval {

enum class ErrorCode {
    InvalidArgument,
    EmptyKnowledge,
    NoPassages,
    EmptyCondition,
    BadHistory,
    TransportError,
    AuthError,
    RateLimited,
    ParseError,
    SchemaError,
    DuplicateId,
    IoError,
    LengthMismatch,
    ConstantInput,
    MissingLabel,
    EvenBallot,
    NoMajority,
    JoinEmpty,
    UnknownAnnotator,
    UnknownRun,
    UnknownTask,
    DuplicateLabel,
    UnassignedTask,
};

constexpr std::string_view to_string(ErrorCode code) {
    switch (code) {
        case ErrorCode::InvalidArgument: return "InvalidArgument";
        case ErrorCode::EmptyKnowledge: return "EmptyKnowledge";
        case ErrorCode::NoPassages: return "NoPassages";
        case ErrorCode::EmptyCondition: return "EmptyCondition";
        case ErrorCode::BadHistory: return "BadHistory";
        case ErrorCode::TransportError: return "TransportError";
        case ErrorCode::AuthError: return "AuthError";
        case ErrorCode::RateLimited: return "RateLimited";
        case ErrorCode::ParseError: return "ParseError";
        case ErrorCode::SchemaError: return "SchemaError";
        case ErrorCode::DuplicateId: return "DuplicateId";
        case ErrorCode::IoError: return "IoError";
        case ErrorCode::LengthMismatch: return "LengthMismatch";
        case ErrorCode::ConstantInput: return "ConstantInput";
        case ErrorCode::MissingLabel: return "MissingLabel";
        case ErrorCode::EvenBallot: return "EvenBallot";
        case ErrorCode::NoMajority: return "NoMajority";
        case ErrorCode::JoinEmpty: return "JoinEmpty";
        case ErrorCode::UnknownAnnotator: return "UnknownAnnotator";
        case ErrorCode::UnknownRun: return "UnknownRun";
        case ErrorCode::UnknownTask: return "UnknownTask";
        case ErrorCode::DuplicateLabel: return "DuplicateLabel";
        case ErrorCode::UnassignedTask: return "UnassignedTask";
    }
    return "Unknown";
}

/// Every failure raised by the library. The code is the stable, machine
/// readable part; the message is for humans.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

    /// 1-based input line for ParseError / SchemaError.
    std::optional<std::size_t> line;
    /// Offending field for SchemaError.
    std::string field;
    /// Server-provided wait hint for RateLimited.
    std::optional<std::chrono::milliseconds> retry_after;

private:
    ErrorCode code_;
};

inline Error line_error(ErrorCode code, std::size_t line, std::string field, const std::string& message) {
    Error e(code, "line " + std::to_string(line) + (field.empty() ? "" : " field '" + field + "'") + ": " + message);
    e.line = line;
    e.field = std::move(field);
    return e;
}

}  // namespace raqeval
