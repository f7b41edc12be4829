#include "riskwarden/error.hpp"

namespace riskwarden {

std::string_view error_name(ErrorCode code)
{
    switch (code) {
    case ErrorCode::DriverOutOfDomain: return "DriverOutOfDomain";
    case ErrorCode::InsufficientHistory: return "InsufficientHistory";
    case ErrorCode::DegenerateTime: return "DegenerateTime";
    case ErrorCode::BackwardForecast: return "BackwardForecast";
    case ErrorCode::KindMismatch: return "KindMismatch";
    case ErrorCode::NonMonotoneTime: return "NonMonotoneTime";
    case ErrorCode::UnknownRisk: return "UnknownRisk";
    case ErrorCode::RiskNotActive: return "RiskNotActive";
    case ErrorCode::DuplicateId: return "DuplicateId";
    case ErrorCode::DanglingDependency: return "DanglingDependency";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::InvalidHorizon: return "InvalidHorizon";
    case ErrorCode::EmptyTaxonomy: return "EmptyTaxonomy";
    case ErrorCode::PathExists: return "PathExists";
    case ErrorCode::SchemaVersionMismatch: return "SchemaVersionMismatch";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::MalformedTable: return "MalformedTable";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::LockHeld: return "LockHeld";
    case ErrorCode::BindFailure: return "BindFailure";
    }
    return "Unknown";
}

std::string_view error_slug(ErrorCode code)
{
    switch (code) {
    case ErrorCode::DriverOutOfDomain: return "driver_out_of_domain";
    case ErrorCode::InsufficientHistory: return "insufficient_history";
    case ErrorCode::DegenerateTime: return "degenerate_time";
    case ErrorCode::BackwardForecast: return "backward_forecast";
    case ErrorCode::KindMismatch: return "kind_mismatch";
    case ErrorCode::NonMonotoneTime: return "non_monotone_time";
    case ErrorCode::UnknownRisk: return "unknown_risk";
    case ErrorCode::RiskNotActive: return "risk_not_active";
    case ErrorCode::DuplicateId: return "duplicate_id";
    case ErrorCode::DanglingDependency: return "dangling_dependency";
    case ErrorCode::InvalidArgument: return "invalid_argument";
    case ErrorCode::InvalidHorizon: return "invalid_horizon";
    case ErrorCode::EmptyTaxonomy: return "empty_taxonomy";
    case ErrorCode::PathExists: return "path_exists";
    case ErrorCode::SchemaVersionMismatch: return "schema_version_mismatch";
    case ErrorCode::ParseError: return "parse_error";
    case ErrorCode::MalformedTable: return "malformed_table";
    case ErrorCode::IoError: return "io_error";
    case ErrorCode::LockHeld: return "lock_held";
    case ErrorCode::BindFailure: return "bind_failure";
    }
    return "unknown";
}

ErrorClass error_class(ErrorCode code)
{
    switch (code) {
    case ErrorCode::PathExists:
    case ErrorCode::SchemaVersionMismatch:
    case ErrorCode::ParseError:
    case ErrorCode::MalformedTable:
    case ErrorCode::IoError:
    case ErrorCode::LockHeld:
    case ErrorCode::BindFailure:
        return ErrorClass::Io;
    default:
        return ErrorClass::Domain;
    }
}

Error::Error(ErrorCode code, const std::string& message)
    : std::runtime_error(std::string(error_name(code)) + ": " + message), code_(code)
{
}

} // namespace riskwarden
