#include "riskwarden/scoring.hpp"

#include "riskwarden/error.hpp"

#include <string>

namespace riskwarden {

namespace {

using C = ScoringConstants;

void require_probability(double y)
{
    if (!(y >= kProbabilityFloor && y <= kProbabilityCeiling)) {
        throw Error(ErrorCode::DriverOutOfDomain, "probability " + std::to_string(y) + " outside [0.01, 0.99]");
    }
}

} // namespace

std::string_view to_string(Zone z)
{
    switch (z) {
    case Zone::Insignificant: return "insignificant";
    case Zone::Probable: return "probable";
    case Zone::Existing: return "existing";
    case Zone::Catastrophic: return "catastrophic";
    }
    return "?";
}

double score_probable(double probability, Dynamics dynamics)
{
    require_probability(probability);
    if (resolve_dynamics(dynamics) == Dynamics::Declining) {
        return C::probable_declining_gain * (1.0 - probability);
    }
    return C::probable_growing_floor + C::probable_growing_gain * (probability - kProbabilityFloor);
}

Interval probable_image(Dynamics dynamics)
{
    if (resolve_dynamics(dynamics) == Dynamics::Declining) {
        return {C::probable_declining_gain * (1.0 - kProbabilityCeiling),
                C::probable_declining_gain * (1.0 - kProbabilityFloor)};
    }
    return {C::probable_growing_floor,
            C::probable_growing_floor + C::probable_growing_gain * (kProbabilityCeiling - kProbabilityFloor)};
}

double inverse_probable(double score, Dynamics dynamics)
{
    const Interval image = probable_image(dynamics);
    if (!image.contains(score)) {
        throw Error(ErrorCode::DriverOutOfDomain, "score " + std::to_string(score) + " outside the " +
                                                      std::string(to_string(resolve_dynamics(dynamics))) +
                                                      " branch image");
    }
    double y = 0.0;
    if (resolve_dynamics(dynamics) == Dynamics::Declining) {
        y = 1.0 - score / C::probable_declining_gain;
    } else {
        y = kProbabilityFloor + (score - C::probable_growing_floor) / C::probable_growing_gain;
    }
    // Keep round-off at the image endpoints inside the probability domain.
    if (y < kProbabilityFloor) {
        y = kProbabilityFloor;
    }
    if (y > kProbabilityCeiling) {
        y = kProbabilityCeiling;
    }
    return y;
}

double score_existing(double severity)
{
    if (!(severity >= 0.0 && severity <= 1.0)) {
        throw Error(ErrorCode::DriverOutOfDomain, "severity " + std::to_string(severity) + " outside [0, 1]");
    }
    return C::existing_floor + C::existing_gain * severity;
}

double critical_value(const StrategyRow& row)
{
    return row.critical_value;
}

Zone classify_zone(Presence presence, double score)
{
    if (score >= C::catastrophic_threshold) {
        return Zone::Catastrophic;
    }
    if (presence == Presence::Existing) {
        return Zone::Existing;
    }
    return is_significant(score) ? Zone::Probable : Zone::Insignificant;
}

double score_driver(Presence presence, Dynamics dynamics, const Driver& driver)
{
    if (driver.kind != driver_kind_for(presence)) {
        throw Error(ErrorCode::KindMismatch, std::string(to_string(presence)) + " risk cannot carry a " +
                                                 std::string(to_string(driver.kind)) + " driver");
    }
    if (presence == Presence::Existing) {
        return score_existing(driver.value);
    }
    if (driver.value >= 0.0 && driver.value < kProbabilityFloor) {
        return 0.0;
    }
    return score_probable(driver.value, dynamics);
}

} // namespace riskwarden
