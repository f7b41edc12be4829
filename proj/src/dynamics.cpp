#include "riskwarden/dynamics.hpp"

#include "riskwarden/error.hpp"
#include "riskwarden/scoring.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <utility>

namespace riskwarden {

namespace {

constexpr std::array<std::pair<std::string_view, TransitionKind>, 5> kTransitionNames{{
    {"band_escalation", TransitionKind::BandEscalation},
    {"probable_to_existing", TransitionKind::ProbableToExisting},
    {"existing_to_catastrophic", TransitionKind::ExistingToCatastrophic},
    {"deescalation_to_probable", TransitionKind::DeEscalationToProbable},
    {"became_insignificant", TransitionKind::BecameInsignificant},
}};

std::string num(double v)
{
    return std::to_string(v);
}

void check_observation_value(ObservationKind kind, double value)
{
    // Probabilities outside the identified range are accepted up to [0, 1]:
    // below the floor the risk turns insignificant, at the ceiling it materialises.
    if (!(value >= 0.0 && value <= 1.0)) {
        throw Error(ErrorCode::DriverOutOfDomain,
                    std::string(to_string(kind)) + " value " + num(value) + " outside [0, 1]");
    }
}

void check_initial_driver(Presence presence, const Driver& driver)
{
    if (driver.kind != driver_kind_for(presence)) {
        throw Error(ErrorCode::KindMismatch, std::string(to_string(presence)) + " risk needs a " +
                                                 std::string(to_string(driver_kind_for(presence))) + " driver");
    }
    if (presence == Presence::Probable) {
        if (!(driver.value >= kProbabilityFloor && driver.value <= kProbabilityCeiling)) {
            throw Error(ErrorCode::DriverOutOfDomain, "probability " + num(driver.value) + " outside [0.01, 0.99]");
        }
    } else if (!(driver.value >= 0.0 && driver.value <= 1.0)) {
        throw Error(ErrorCode::DriverOutOfDomain, "severity " + num(driver.value) + " outside [0, 1]");
    }
}

double clamp_probability(double y)
{
    return std::clamp(y, kProbabilityFloor, kProbabilityCeiling);
}

void refresh_dynamics(RiskRecord& risk, const DynamicsOptions& options)
{
    const auto series = intensity_series(risk);
    if (series.size() >= 2) {
        risk.dynamics = classify_dynamics(fit_trend(series), options.deadband);
    }
}

ProbabilityBand probable_band(double y, double score)
{
    if (score >= kCatastrophicThreshold) {
        return ProbabilityBand::High;
    }
    return y < kProbabilityFloor ? ProbabilityBand::Low : classify_band(y);
}

// A decline is confirmed when the one-period-ahead forecasts after the last two
// observations both sit below the existing band floor. Returns the latest forecast.
std::optional<double> confirmed_decline(const RiskRecord& risk)
{
    if (risk.presence != Presence::Existing || risk.status != RiskStatus::Active ||
        resolve_dynamics(risk.dynamics) != Dynamics::Declining) {
        return std::nullopt;
    }
    const auto series = score_series(risk);
    if (series.size() < 3) {
        return std::nullopt;
    }
    const std::span<const TrendPoint> all(series);
    const TrendFit now = fit_trend(all);
    const TrendFit prev = fit_trend(all.first(all.size() - 1));
    const double f_now = forecast_score(now, now.t_last + 1.0);
    const double f_prev = forecast_score(prev, prev.t_last + 1.0);
    if (f_prev < ScoringConstants::existing_floor && f_now < ScoringConstants::existing_floor) {
        return f_now;
    }
    return std::nullopt;
}

} // namespace

TrendFit fit_trend(std::span<const TrendPoint> history)
{
    if (history.size() < 2) {
        throw Error(ErrorCode::InsufficientHistory, "trend needs at least two observations");
    }
    for (std::size_t i = 1; i < history.size(); ++i) {
        if (history[i].t == history[i - 1].t) {
            throw Error(ErrorCode::DegenerateTime, "repeated period " + num(history[i].t));
        }
        if (history[i].t < history[i - 1].t) {
            throw Error(ErrorCode::NonMonotoneTime, "periods must be strictly increasing");
        }
    }

    const double n = static_cast<double>(history.size());
    double t_mean = 0.0;
    double x_mean = 0.0;
    for (const auto& p : history) {
        t_mean += p.t;
        x_mean += p.x;
    }
    t_mean /= n;
    x_mean /= n;

    double sxx = 0.0;
    double sxy = 0.0;
    for (const auto& p : history) {
        const double dt = p.t - t_mean;
        sxx += dt * dt;
        sxy += dt * (p.x - x_mean);
    }

    TrendFit fit;
    fit.slope = sxy / sxx;
    fit.intercept = x_mean - fit.slope * t_mean;
    fit.n = history.size();
    fit.t_last = history.back().t;
    fit.x_last = fit.intercept + fit.slope * fit.t_last;
    return fit;
}

Dynamics classify_dynamics(const TrendFit& fit, double epsilon)
{
    if (fit.slope > epsilon) {
        return Dynamics::Growing;
    }
    if (fit.slope < -epsilon) {
        return Dynamics::Declining;
    }
    return Dynamics::Stable;
}

double forecast_score(const TrendFit& fit, double t)
{
    if (t < fit.t_last) {
        throw Error(ErrorCode::BackwardForecast, "forecast at " + num(t) + " precedes last period " + num(fit.t_last));
    }
    return std::max(0.0, fit.intercept + fit.slope * t);
}

std::optional<double> forecast_crossing(const TrendFit& fit, double threshold)
{
    if (fit.x_last >= threshold) {
        return fit.t_last;
    }
    if (fit.slope > 0.0) {
        return fit.t_last + (threshold - fit.x_last) / fit.slope;
    }
    return std::nullopt;
}

std::optional<double> forecast_crossing_below(const TrendFit& fit, double threshold)
{
    if (fit.x_last <= threshold) {
        return fit.t_last;
    }
    if (fit.slope < 0.0) {
        return fit.t_last + (threshold - fit.x_last) / fit.slope;
    }
    return std::nullopt;
}

std::string_view to_string(TransitionKind k)
{
    for (const auto& [name, value] : kTransitionNames) {
        if (value == k) {
            return name;
        }
    }
    return "?";
}

TransitionKind parse_transition_kind(std::string_view s)
{
    for (const auto& [name, value] : kTransitionNames) {
        if (name == s) {
            return value;
        }
    }
    throw Error(ErrorCode::InvalidArgument, "unknown transition kind '" + std::string(s) + "'");
}

RiskSnapshot snapshot_of(const RiskRecord& risk)
{
    return {risk.presence, risk.band, risk.admissibility, risk.score};
}

std::span<const Observation> current_segment(const RiskRecord& risk)
{
    const ObservationKind kind = driver_kind_for(risk.presence);
    std::size_t begin = risk.history.size();
    while (begin > 0 && risk.history[begin - 1].kind == kind) {
        --begin;
    }
    return std::span<const Observation>(risk.history).subspan(begin);
}

std::vector<TrendPoint> intensity_series(const RiskRecord& risk)
{
    std::vector<TrendPoint> out;
    for (const auto& obs : current_segment(risk)) {
        const double x = obs.kind == ObservationKind::Probability
                             ? score_probable(clamp_probability(obs.value), Dynamics::Growing)
                             : score_existing(obs.value);
        out.push_back({obs.t, x});
    }
    return out;
}

std::vector<TrendPoint> score_series(const RiskRecord& risk)
{
    std::vector<TrendPoint> out;
    for (const auto& obs : current_segment(risk)) {
        double x = 0.0;
        if (obs.kind == ObservationKind::Severity) {
            x = score_existing(obs.value);
        } else if (obs.value >= kProbabilityFloor) {
            x = score_probable(clamp_probability(obs.value), risk.dynamics);
        }
        out.push_back({obs.t, x});
    }
    return out;
}

std::optional<TrendFit> score_trend(const RiskRecord& risk)
{
    const auto series = score_series(risk);
    if (series.size() < 2) {
        return std::nullopt;
    }
    return fit_trend(series);
}

void rescore(RiskRecord& risk)
{
    double x = score_driver(risk.presence, risk.dynamics, risk.driver);
    if (risk.status == RiskStatus::Catastrophic) {
        x = std::max(x, kCatastrophicThreshold);
    }
    risk.score = x;
    risk.admissibility = admissibility_of(risk);
}

RiskRecord initialize_risk(RiskRecord draft, const DynamicsOptions& options)
{
    if (draft.id.empty()) {
        throw Error(ErrorCode::InvalidArgument, "risk id must not be empty");
    }
    if (std::ranges::find(draft.dependencies, draft.id) != draft.dependencies.end()) {
        throw Error(ErrorCode::DanglingDependency, "risk '" + draft.id + "' depends on itself");
    }
    check_initial_driver(draft.presence, draft.driver);
    for (std::size_t i = 0; i < draft.history.size(); ++i) {
        const Observation& obs = draft.history[i];
        if (obs.kind != driver_kind_for(draft.presence)) {
            throw Error(ErrorCode::KindMismatch, "history entry " + std::to_string(i) + " has the wrong kind");
        }
        check_observation_value(obs.kind, obs.value);
        if (i > 0 && !(obs.t > draft.history[i - 1].t)) {
            throw Error(ErrorCode::NonMonotoneTime, "history periods must be strictly increasing");
        }
    }

    draft.status = RiskStatus::Active;
    refresh_dynamics(draft, options);
    rescore(draft);
    if (draft.presence == Presence::Probable) {
        draft.band = classify_band(draft.driver.value);
    }
    draft.admissibility = admissibility_of(draft);
    return draft;
}

ObservationOutcome apply_observation(const RiskRecord& risk, const Observation& obs, const DynamicsOptions& options)
{
    if (!risk.is_active()) {
        throw Error(ErrorCode::RiskNotActive, "risk '" + risk.id + "' is retired");
    }
    if (obs.kind != driver_kind_for(risk.presence)) {
        throw Error(ErrorCode::KindMismatch, std::string(to_string(risk.presence)) + " risk '" + risk.id +
                                                 "' cannot take a " + std::string(to_string(obs.kind)) +
                                                 " observation");
    }
    if (!std::isfinite(obs.t)) {
        throw Error(ErrorCode::InvalidArgument, "observation period must be finite");
    }
    if (!risk.history.empty() && !(obs.t > risk.history.back().t)) {
        throw Error(ErrorCode::NonMonotoneTime, "period " + num(obs.t) + " does not follow " +
                                                    num(risk.history.back().t));
    }
    check_observation_value(obs.kind, obs.value);
    if (obs.flag == ObservationFlag::Materialized && risk.presence != Presence::Probable) {
        throw Error(ErrorCode::InvalidArgument, "only probable risks can materialise");
    }
    if (obs.flag == ObservationFlag::CatastropheDeclared && risk.presence != Presence::Existing) {
        throw Error(ErrorCode::InvalidArgument, "only existing risks can be declared catastrophic");
    }

    ObservationOutcome out{risk, {}};
    RiskRecord& r = out.risk;
    const RiskSnapshot before = snapshot_of(risk);
    std::vector<TransitionKind> kinds;
    r.history.push_back(obs);

    if (r.presence == Presence::Probable) {
        if (obs.value >= kProbabilityCeiling || obs.flag == ObservationFlag::Materialized) {
            // Enters the existing set at the top of its band.
            r.presence = Presence::Existing;
            r.driver = {ObservationKind::Severity, 1.0};
            r.band = ProbabilityBand::High;
            rescore(r);
            kinds.push_back(TransitionKind::ProbableToExisting);
        } else {
            r.driver = {ObservationKind::Probability, obs.value};
            refresh_dynamics(r, options);
            rescore(r);
            r.band = probable_band(obs.value, r.score);
            if (r.band == ProbabilityBand::High && before.band != ProbabilityBand::High) {
                kinds.push_back(TransitionKind::BandEscalation);
            }
        }
    } else {
        r.driver = {ObservationKind::Severity, obs.value};
        refresh_dynamics(r, options);
        if (obs.flag == ObservationFlag::CatastropheDeclared && r.status != RiskStatus::Catastrophic) {
            r.status = RiskStatus::Catastrophic;
            kinds.push_back(TransitionKind::ExistingToCatastrophic);
        }
        rescore(r);
        if (const auto forecast = confirmed_decline(r)) {
            const Interval image = probable_image(Dynamics::Declining);
            const double clamped = std::clamp(*forecast, image.lo, image.hi);
            const double y = inverse_probable(clamped, Dynamics::Declining);
            r.presence = Presence::Probable;
            r.dynamics = Dynamics::Declining;
            r.driver = {ObservationKind::Probability, y};
            rescore(r);
            r.band = classify_band(y);
            kinds.push_back(TransitionKind::DeEscalationToProbable);
        }
    }

    r.admissibility = admissibility_of(r);
    if (!is_significant(r.score) && is_significant(before.score)) {
        kinds.push_back(TransitionKind::BecameInsignificant);
    }

    const RiskSnapshot after = snapshot_of(r);
    for (TransitionKind kind : kinds) {
        out.events.push_back({r.id, obs.t, kind, before, after});
    }
    return out;
}

} // namespace riskwarden
