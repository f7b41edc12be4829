#pragma once

#include "riskwarden/core.hpp"

namespace riskwarden {

// Piecewise-linear realisation of x = f(y). Each branch is pinned so that
// the table endpoints and critical values are reproduced exactly.
struct ScoringConstants {
    static constexpr double probable_declining_gain = 0.49;
    static constexpr double probable_growing_floor = 0.5;
    static constexpr double probable_growing_gain = 149.0 / 98.0;  // 1.49 / 0.98
    static constexpr double existing_floor = 0.5;
    static constexpr double existing_gain = 0.49;
    static constexpr double catastrophic_threshold = kCatastrophicThreshold;
    static constexpr double deescalation_sentinel = 0.49;
};

enum class Zone { Insignificant, Probable, Existing, Catastrophic };

std::string_view to_string(Zone z);

// Declining: x = 0.49 (1 - y). Growing: x = 0.5 + (149/98)(y - 0.01).
double score_probable(double probability, Dynamics dynamics);

// Exact inverse of score_probable on the branch image.
double inverse_probable(double score, Dynamics dynamics);

// Image of score_probable over [0.01, 0.99] for the given branch.
Interval probable_image(Dynamics dynamics);

// x = 0.5 + 0.49 s for severity s in [0, 1].
double score_existing(double severity);

double critical_value(const StrategyRow& row);

Zone classify_zone(Presence presence, double score);

// Score of a driver under the given presence and dynamics. Probabilities
// below the identification floor score 0 (the risk is insignificant).
double score_driver(Presence presence, Dynamics dynamics, const Driver& driver);

} // namespace riskwarden
