#pragma once

#include <array>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace riskwarden {

enum class Origin { External, Internal };
enum class Presence { Probable, Existing };

// Stable is internal to the engine: near-zero trends resolve to Growing for
// every strategy and threshold lookup.
enum class Dynamics { Growing, Declining, Stable };

enum class ProbabilityBand { Low, Medium, High };
enum class AdmissibilityDegree { Insignificant, Admissible, Critical, Catastrophic };
enum class RiskStatus { Active, Catastrophic, Retired };
enum class ObservationKind { Probability, Severity };

// Operator declarations carried by an observation.
enum class ObservationFlag { None, Materialized, CatastropheDeclared };

// Probable risks are identified on this closed probability range.
inline constexpr double kProbabilityFloor = 0.01;
inline constexpr double kProbabilityCeiling = 0.99;

// Scores at or above this level lie in the catastrophic zone [1, +inf).
inline constexpr double kCatastrophicThreshold = 1.0;

struct Interval {
    double lo = 0.0;
    double hi = 0.0;

    bool contains(double v) const { return v >= lo && v <= hi; }
    friend bool operator==(const Interval&, const Interval&) = default;
};

// One of the eight behaviour strategies. `zone` is the probability range
// (the constant 1 for existing risks); `score` is the quantitative range of x.
// The *_descending flags record the direction the table traverses each range.
struct StrategyRow {
    Origin origin;
    Presence presence;
    Dynamics dynamics;  // Growing or Declining only
    std::vector<ProbabilityBand> bands;
    Interval zone;
    bool zone_descending;
    Interval score;
    bool score_descending;
    double critical_value;

    friend bool operator==(const StrategyRow&, const StrategyRow&) = default;
};

struct Observation {
    double t = 0.0;
    ObservationKind kind = ObservationKind::Probability;
    double value = 0.0;
    std::optional<std::string> note;
    ObservationFlag flag = ObservationFlag::None;

    friend bool operator==(const Observation&, const Observation&) = default;
};

struct Driver {
    ObservationKind kind = ObservationKind::Probability;
    double value = 0.0;

    friend bool operator==(const Driver&, const Driver&) = default;
};

struct RiskRecord {
    std::string id;
    std::string name;
    std::string sphere;
    Origin origin = Origin::External;
    Presence presence = Presence::Probable;
    Dynamics dynamics = Dynamics::Stable;
    ProbabilityBand band = ProbabilityBand::Low;
    double score = 0.0;
    Driver driver;
    std::vector<Observation> history;
    std::vector<std::string> dependencies;
    AdmissibilityDegree admissibility = AdmissibilityDegree::Insignificant;
    RiskStatus status = RiskStatus::Active;

    bool is_active() const { return status != RiskStatus::Retired; }
    friend bool operator==(const RiskRecord&, const RiskRecord&) = default;
};

Dynamics resolve_dynamics(Dynamics d);

const std::array<StrategyRow, 8>& strategy_table();

// Total over all origin/presence/dynamics combinations; Stable is resolved first.
const StrategyRow& resolve_strategy(Origin origin, Presence presence, Dynamics dynamics);

ProbabilityBand classify_band(double probability);

bool is_significant(double score);

AdmissibilityDegree classify_admissibility(Presence presence, double score, double critical_value);

// Admissibility of a stored risk. The existing-declining critical value is a
// de-escalation sentinel below the existing band, so that row escalates only
// at the catastrophic threshold.
AdmissibilityDegree admissibility_of(const RiskRecord& risk);

ObservationKind driver_kind_for(Presence presence);

std::string_view to_string(Origin v);
std::string_view to_string(Presence v);
std::string_view to_string(Dynamics v);
std::string_view to_string(ProbabilityBand v);
std::string_view to_string(AdmissibilityDegree v);
std::string_view to_string(RiskStatus v);
std::string_view to_string(ObservationKind v);
std::string_view to_string(ObservationFlag v);

Origin parse_origin(std::string_view s);
Presence parse_presence(std::string_view s);
Dynamics parse_dynamics(std::string_view s);
ProbabilityBand parse_band(std::string_view s);
AdmissibilityDegree parse_admissibility(std::string_view s);
RiskStatus parse_status(std::string_view s);
ObservationKind parse_observation_kind(std::string_view s);
ObservationFlag parse_observation_flag(std::string_view s);

// "External/Probable/Growing"
std::string strategy_key(const StrategyRow& row);

} // namespace riskwarden
