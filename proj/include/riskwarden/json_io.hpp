#pragma once

#include "riskwarden/assessment.hpp"
#include "riskwarden/core.hpp"
#include "riskwarden/dynamics.hpp"
#include "riskwarden/registry.hpp"

#include <json.hpp>

#include <string>

namespace riskwarden {

using json = nlohmann::json;

// Field layouts follow the register file, event log and report formats.
// Decoders throw ParseError naming the offending field path.

json to_json(const Observation& obs);
Observation observation_from_json(const json& j, const std::string& where = "observation");

json to_json(const RiskRecord& risk);
RiskRecord risk_from_json(const json& j, const std::string& where = "risk");

json to_json(const Register& reg);
Register register_from_json(const json& j);

json to_json(const RiskSnapshot& s);
RiskSnapshot snapshot_from_json(const json& j, const std::string& where);

json to_json(const TransitionEvent& e);
json to_json(const LogEntry& e);
LogEntry log_entry_from_json(const json& j, const std::string& where);

json to_json(const TrendFit& fit);
json to_json(const AssessmentReport& report);
json to_json(const CycleReport& report);
json to_json(const ImportResult& result);

WhatIfScenario scenario_from_json(const json& j);
MetadataPatch patch_from_json(const json& j);

} // namespace riskwarden
