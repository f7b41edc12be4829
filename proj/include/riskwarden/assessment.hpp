#pragma once

#include "riskwarden/core.hpp"
#include "riskwarden/dynamics.hpp"
#include "riskwarden/scoring.hpp"

#include <array>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace riskwarden {

struct AssessmentOptions {
    double horizon_periods = 12.0;
    // E_p at or above this level raises a high-vulnerability alert.
    double vulnerability_threshold = 0.8;
};

// R = R_v + R_c over significant, non-retired risks.
struct ClassSums {
    double probable = 0.0;  // R_v
    double existing = 0.0;  // R_c
    double total = 0.0;     // R
};

ClassSums class_sums(std::span<const RiskRecord> risks);

// Product of the scores of all significant, non-retired risks; 0 when there are none.
double integral_indicator(std::span<const RiskRecord> risks);

// 1: existing growing; 2: probable growing with medium/high probability;
// 3: probable growing, low; 4: existing declining; 5: probable declining.
int priority_class(const RiskRecord& risk);

std::vector<std::string> prioritize(std::span<const RiskRecord> risks);

enum class CrossingKind { CriticalValue, CatastrophicThreshold, DeEscalationSentinel };

std::string_view to_string(CrossingKind k);

struct Crossing {
    CrossingKind kind = CrossingKind::CriticalValue;
    double threshold = 0.0;
    double t = 0.0;
    bool downward = false;
};

enum class AlertKind {
    CriticalValueCrossing,
    CatastrophicCrossing,
    CatastropheImminent,
    DeEscalationForecast,
    HighVulnerability,
};

std::string_view to_string(AlertKind k);

struct Alert {
    AlertKind kind = AlertKind::HighVulnerability;
    std::string risk_id;  // empty for register-level alerts
    double threshold = 0.0;
    std::optional<double> t;
    std::string message;
};

struct RiskEntry {
    std::string id;
    std::string name;
    std::string sphere;
    Origin origin = Origin::External;
    Presence presence = Presence::Probable;
    Dynamics dynamics = Dynamics::Stable;
    std::string strategy;
    double critical_value = 0.0;
    Zone zone = Zone::Insignificant;
    ProbabilityBand band = ProbabilityBand::Low;
    AdmissibilityDegree admissibility = AdmissibilityDegree::Insignificant;
    RiskStatus status = RiskStatus::Active;
    double score = 0.0;
    int priority_class = 0;  // 0 when excluded from prioritisation
    std::optional<TrendFit> trend;
    std::vector<Crossing> crossings;
};

struct AssessmentReport {
    ClassSums sums;
    double integral = 0.0;  // E_p
    double vulnerability_threshold = 0.8;
    std::vector<RiskEntry> risks;
    std::vector<std::string> priorities;
    std::vector<Alert> alerts;
    std::vector<std::string> strategic_review;
};

AssessmentReport assess(std::span<const RiskRecord> risks, const AssessmentOptions& options = {});

struct Intervention {
    std::string risk_id;
    std::optional<double> driver;
    bool remove = false;
};

struct WhatIfScenario {
    std::string label;
    std::vector<Intervention> interventions;
};

// Applies the scenario to a copy of `risks` and assesses the copy.
std::vector<RiskRecord> apply_scenario(std::span<const RiskRecord> risks, const WhatIfScenario& scenario);

AssessmentReport what_if(std::span<const RiskRecord> risks, const WhatIfScenario& scenario,
                         const AssessmentOptions& options = {});

// Nine-stage assessment cycle.

struct CycleConfig {
    std::string stage;
    int periods = 0;
    std::vector<std::string> taxonomy;
    double vulnerability_threshold = 0.8;
    std::function<std::string()> clock;  // timestamps; defaults to UTC now
};

struct CycleStage {
    int index = 0;
    std::string name;
    bool complete = false;
    std::string completed_at;
    std::string error;
};

struct SphereGroup {
    std::string sphere;
    std::vector<std::string> risk_ids;
};

struct SphereTrend {
    std::string sphere;
    std::size_t risks = 0;
    std::size_t growing = 0;
    std::size_t declining = 0;
    std::size_t stable = 0;
    std::size_t with_trend = 0;
    double mean_slope = 0.0;  // over risks with a fitted trend
};

struct RiskVector {
    std::string id;
    double magnitude = 0.0;
    Dynamics direction = Dynamics::Stable;
    std::optional<double> slope;
};

struct AdmissibilityRow {
    std::string id;
    Origin origin = Origin::External;
    Presence presence = Presence::Probable;
    ProbabilityBand band = ProbabilityBand::Low;
    Driver driver;
    std::string strategy;
    double critical_value = 0.0;
    AdmissibilityDegree admissibility = AdmissibilityDegree::Insignificant;
};

struct QualitativeRating {
    std::string id;
    Dynamics dynamics = Dynamics::Stable;
    std::vector<std::string> depends_on;
    std::vector<std::string> dependents;
    std::string rating;
};

struct MonitoringItem {
    std::string id;
    std::vector<Crossing> crossings;
};

struct CycleReport {
    std::array<CycleStage, 9> stages;
    std::string horizon_stage;                            // 1
    int horizon_periods = 0;                              // 1
    std::vector<SphereGroup> spheres;                     // 2
    std::vector<std::string> identified;                  // 3
    std::vector<SphereTrend> sphere_trends;               // 4
    std::vector<RiskVector> risk_vectors;                 // 5
    std::vector<AdmissibilityRow> admissibility_table;    // 6
    std::vector<QualitativeRating> ratings;               // 7
    std::vector<std::string> mitigation_plan;             // 8
    std::vector<MonitoringItem> monitoring;               // 9

    bool complete() const;
};

CycleReport run_cycle(std::span<const RiskRecord> risks, const CycleConfig& config);

} // namespace riskwarden
