#pragma once

#include "riskwarden/core.hpp"

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace riskwarden {

struct TrendPoint {
    double t = 0.0;
    double x = 0.0;
};

// Least-squares line x = intercept + slope * t. x_last is the fitted level at
// t_last, so forecasts and crossings are taken on the line itself.
struct TrendFit {
    double slope = 0.0;
    double intercept = 0.0;
    std::size_t n = 0;
    double t_last = 0.0;
    double x_last = 0.0;
};

inline constexpr double kDefaultDeadband = 0.005;

struct DynamicsOptions {
    double deadband = kDefaultDeadband;  // score per period
};

TrendFit fit_trend(std::span<const TrendPoint> history);

Dynamics classify_dynamics(const TrendFit& fit, double epsilon = kDefaultDeadband);

// intercept + slope * t, clamped below at 0. Throws BackwardForecast for t < t_last.
double forecast_score(const TrendFit& fit, double t);

// First period at which the trend reaches `threshold` from below.
std::optional<double> forecast_crossing(const TrendFit& fit, double threshold);

// First period at which the trend falls to `threshold` from above.
std::optional<double> forecast_crossing_below(const TrendFit& fit, double threshold);

enum class TransitionKind {
    BandEscalation,
    ProbableToExisting,
    ExistingToCatastrophic,
    DeEscalationToProbable,
    BecameInsignificant,
};

std::string_view to_string(TransitionKind k);
TransitionKind parse_transition_kind(std::string_view s);

struct RiskSnapshot {
    Presence presence = Presence::Probable;
    ProbabilityBand band = ProbabilityBand::Low;
    AdmissibilityDegree admissibility = AdmissibilityDegree::Insignificant;
    double score = 0.0;

    friend bool operator==(const RiskSnapshot&, const RiskSnapshot&) = default;
};

RiskSnapshot snapshot_of(const RiskRecord& risk);

struct TransitionEvent {
    std::string risk_id;
    double t = 0.0;
    TransitionKind kind = TransitionKind::BandEscalation;
    RiskSnapshot before;
    RiskSnapshot after;

    friend bool operator==(const TransitionEvent&, const TransitionEvent&) = default;
};

struct ObservationOutcome {
    RiskRecord risk;
    std::vector<TransitionEvent> events;
};

// History entries since the last presence change: the trailing run whose kind
// matches the risk's current driver kind.
std::span<const Observation> current_segment(const RiskRecord& risk);

// Segment mapped through the increasing form of the driver (growing branch for
// probabilities, severity mapping otherwise). Dynamics are classified on this
// series so that the branch choice cannot feed back into its own trend.
std::vector<TrendPoint> intensity_series(const RiskRecord& risk);

// Segment scored under the risk's current (resolved) branch.
std::vector<TrendPoint> score_series(const RiskRecord& risk);

// Trend of score_series, when the segment holds at least two points.
std::optional<TrendFit> score_trend(const RiskRecord& risk);

// Recomputes x (and the admissibility degree) from the driver; catastrophic risks are held at or above 1.
void rescore(RiskRecord& risk);

// Validates a new risk and derives score, band, dynamics and admissibility.
RiskRecord initialize_risk(RiskRecord draft, const DynamicsOptions& options = {});

ObservationOutcome apply_observation(const RiskRecord& risk, const Observation& obs,
                                     const DynamicsOptions& options = {});

} // namespace riskwarden
