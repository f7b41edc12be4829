#include "riskwarden/core.hpp"

#include "riskwarden/error.hpp"

#include <algorithm>
#include <cmath>
#include <utility>

namespace riskwarden {

namespace {

using enum Origin;
using enum Presence;
using enum ProbabilityBand;

constexpr Interval kProbableZone{kProbabilityFloor, kProbabilityCeiling};
constexpr Interval kExistingZone{1.0, 1.0};
constexpr Interval kDecliningScores{0.0, 0.49};
constexpr Interval kGrowingScores{0.5, 1.99};
constexpr Interval kExistingScores{0.5, 0.99};

const std::array<StrategyRow, 8> kTable{{
    {External, Probable, Dynamics::Declining, {Low}, kProbableZone, true, kDecliningScores, false, 0.4851},
    {External, Probable, Dynamics::Growing, {Medium, High}, kProbableZone, false, kGrowingScores, false, 1.99},
    {External, Existing, Dynamics::Declining, {Low}, kExistingZone, false, kExistingScores, true, 0.49},
    {External, Existing, Dynamics::Growing, {Medium, High}, kExistingZone, false, kExistingScores, false, 0.99},
    {Internal, Probable, Dynamics::Declining, {Low, Medium}, kProbableZone, true, kDecliningScores, false, 0.4851},
    {Internal, Probable, Dynamics::Growing, {Medium, High}, kProbableZone, false, kGrowingScores, false, 1.99},
    {Internal, Existing, Dynamics::Declining, {Low, Medium}, kExistingZone, false, kExistingScores, true, 0.49},
    {Internal, Existing, Dynamics::Growing, {Medium, High}, kExistingZone, false, kExistingScores, false, 0.98},
}};

template <class E, std::size_t N>
E parse_from(const std::array<std::pair<std::string_view, E>, N>& names, std::string_view s,
             std::string_view what)
{
    for (const auto& [name, value] : names) {
        if (name == s) {
            return value;
        }
    }
    throw Error(ErrorCode::InvalidArgument, "unknown " + std::string(what) + " '" + std::string(s) + "'");
}

template <class E, std::size_t N>
std::string_view name_of(const std::array<std::pair<std::string_view, E>, N>& names, E v)
{
    for (const auto& [name, value] : names) {
        if (value == v) {
            return name;
        }
    }
    return "?";
}

constexpr std::array<std::pair<std::string_view, Origin>, 2> kOrigins{{
    {"external", External}, {"internal", Internal}}};
constexpr std::array<std::pair<std::string_view, Presence>, 2> kPresences{{
    {"probable", Probable}, {"existing", Existing}}};
constexpr std::array<std::pair<std::string_view, Dynamics>, 3> kDynamics{{
    {"growing", Dynamics::Growing}, {"declining", Dynamics::Declining}, {"stable", Dynamics::Stable}}};
constexpr std::array<std::pair<std::string_view, ProbabilityBand>, 3> kBands{{
    {"low", Low}, {"medium", Medium}, {"high", High}}};
constexpr std::array<std::pair<std::string_view, AdmissibilityDegree>, 4> kDegrees{{
    {"insignificant", AdmissibilityDegree::Insignificant},
    {"admissible", AdmissibilityDegree::Admissible},
    {"critical", AdmissibilityDegree::Critical},
    {"catastrophic", AdmissibilityDegree::Catastrophic}}};
constexpr std::array<std::pair<std::string_view, RiskStatus>, 3> kStatuses{{
    {"active", RiskStatus::Active}, {"catastrophic", RiskStatus::Catastrophic}, {"retired", RiskStatus::Retired}}};
constexpr std::array<std::pair<std::string_view, ObservationKind>, 2> kKinds{{
    {"probability", ObservationKind::Probability}, {"severity", ObservationKind::Severity}}};
constexpr std::array<std::pair<std::string_view, ObservationFlag>, 3> kFlags{{
    {"none", ObservationFlag::None},
    {"materialized", ObservationFlag::Materialized},
    {"catastrophic", ObservationFlag::CatastropheDeclared}}};

} // namespace

Dynamics resolve_dynamics(Dynamics d)
{
    return d == Dynamics::Stable ? Dynamics::Growing : d;
}

const std::array<StrategyRow, 8>& strategy_table()
{
    return kTable;
}

const StrategyRow& resolve_strategy(Origin origin, Presence presence, Dynamics dynamics)
{
    const Dynamics resolved = resolve_dynamics(dynamics);
    // Rows are laid out origin-major, then presence, then Declining before Growing.
    const std::size_t index = (origin == Internal ? 4u : 0u) + (presence == Existing ? 2u : 0u) +
                              (resolved == Dynamics::Growing ? 1u : 0u);
    return kTable[index];
}

ProbabilityBand classify_band(double probability)
{
    if (!(probability >= kProbabilityFloor && probability <= kProbabilityCeiling)) {
        throw Error(ErrorCode::DriverOutOfDomain,
                    "probability " + std::to_string(probability) + " outside [0.01, 0.99]");
    }
    if (probability < 1.0 / 3.0) {
        return Low;
    }
    if (probability < 2.0 / 3.0) {
        return Medium;
    }
    return High;
}

bool is_significant(double score)
{
    return score > 0.0;
}

AdmissibilityDegree classify_admissibility(Presence presence, double score, double critical_value)
{
    if (!is_significant(score)) {
        return AdmissibilityDegree::Insignificant;
    }
    if (presence == Probable) {
        return score < kCatastrophicThreshold ? AdmissibilityDegree::Admissible : AdmissibilityDegree::Critical;
    }
    if (score >= kCatastrophicThreshold) {
        return AdmissibilityDegree::Catastrophic;
    }
    return score < critical_value ? AdmissibilityDegree::Admissible : AdmissibilityDegree::Critical;
}

AdmissibilityDegree admissibility_of(const RiskRecord& risk)
{
    if (risk.status == RiskStatus::Catastrophic) {
        return AdmissibilityDegree::Catastrophic;
    }
    const StrategyRow& row = resolve_strategy(risk.origin, risk.presence, risk.dynamics);
    double threshold = row.critical_value;
    if (row.presence == Existing && row.dynamics == Dynamics::Declining) {
        threshold = kCatastrophicThreshold;
    }
    return classify_admissibility(risk.presence, risk.score, threshold);
}

ObservationKind driver_kind_for(Presence presence)
{
    return presence == Probable ? ObservationKind::Probability : ObservationKind::Severity;
}

std::string_view to_string(Origin v) { return name_of(kOrigins, v); }
std::string_view to_string(Presence v) { return name_of(kPresences, v); }
std::string_view to_string(Dynamics v) { return name_of(kDynamics, v); }
std::string_view to_string(ProbabilityBand v) { return name_of(kBands, v); }
std::string_view to_string(AdmissibilityDegree v) { return name_of(kDegrees, v); }
std::string_view to_string(RiskStatus v) { return name_of(kStatuses, v); }
std::string_view to_string(ObservationKind v) { return name_of(kKinds, v); }
std::string_view to_string(ObservationFlag v) { return name_of(kFlags, v); }

Origin parse_origin(std::string_view s) { return parse_from(kOrigins, s, "origin"); }
Presence parse_presence(std::string_view s) { return parse_from(kPresences, s, "presence"); }
Dynamics parse_dynamics(std::string_view s) { return parse_from(kDynamics, s, "dynamics"); }
ProbabilityBand parse_band(std::string_view s) { return parse_from(kBands, s, "band"); }
AdmissibilityDegree parse_admissibility(std::string_view s) { return parse_from(kDegrees, s, "admissibility"); }
RiskStatus parse_status(std::string_view s) { return parse_from(kStatuses, s, "status"); }
ObservationKind parse_observation_kind(std::string_view s) { return parse_from(kKinds, s, "observation kind"); }
ObservationFlag parse_observation_flag(std::string_view s) { return parse_from(kFlags, s, "observation flag"); }

std::string strategy_key(const StrategyRow& row)
{
    auto cap = [](std::string_view s) {
        std::string out(s);
        if (!out.empty()) {
            out[0] = static_cast<char>(out[0] - 'a' + 'A');
        }
        return out;
    };
    return cap(to_string(row.origin)) + "/" + cap(to_string(row.presence)) + "/" + cap(to_string(row.dynamics));
}

} // namespace riskwarden
