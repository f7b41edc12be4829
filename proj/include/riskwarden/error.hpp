#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace riskwarden {

enum class ErrorCode {
    DriverOutOfDomain,
    InsufficientHistory,
    DegenerateTime,
    BackwardForecast,
    KindMismatch,
    NonMonotoneTime,
    UnknownRisk,
    RiskNotActive,
    DuplicateId,
    DanglingDependency,
    InvalidArgument,
    InvalidHorizon,
    EmptyTaxonomy,
    PathExists,
    SchemaVersionMismatch,
    ParseError,
    MalformedTable,
    IoError,
    LockHeld,
    BindFailure,
};

// Coarse grouping used by the CLI exit codes and the HTTP status mapping.
enum class ErrorClass { Domain, Io };

std::string_view error_name(ErrorCode code);       // "DriverOutOfDomain"
std::string_view error_slug(ErrorCode code);       // "driver_out_of_domain"
ErrorClass error_class(ErrorCode code);

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message);

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

} // namespace riskwarden
