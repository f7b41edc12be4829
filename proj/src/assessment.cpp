#include "riskwarden/assessment.hpp"

#include "riskwarden/error.hpp"
#include "riskwarden/format.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <unordered_map>

namespace riskwarden {

namespace {

bool counts(const RiskRecord& r)
{
    return r.is_active() && is_significant(r.score);
}

const RiskRecord* find_risk(std::span<const RiskRecord> risks, const std::string& id)
{
    for (const auto& r : risks) {
        if (r.id == id) {
            return &r;
        }
    }
    return nullptr;
}

std::vector<Crossing> crossings_for(const RiskRecord& risk, const TrendFit& fit)
{
    std::vector<Crossing> out;
    const StrategyRow& row = resolve_strategy(risk.origin, risk.presence, risk.dynamics);
    if (row.dynamics == Dynamics::Declining) {
        if (row.presence == Presence::Existing) {
            if (auto t = forecast_crossing_below(fit, ScoringConstants::deescalation_sentinel)) {
                out.push_back({CrossingKind::DeEscalationSentinel, ScoringConstants::deescalation_sentinel, *t, true});
            }
        } else if (auto t = forecast_crossing(fit, row.critical_value)) {
            out.push_back({CrossingKind::CriticalValue, row.critical_value, *t, false});
        }
        return out;
    }
    if (auto t = forecast_crossing(fit, row.critical_value)) {
        out.push_back({CrossingKind::CriticalValue, row.critical_value, *t, false});
    }
    if (row.critical_value != kCatastrophicThreshold) {
        if (auto t = forecast_crossing(fit, kCatastrophicThreshold)) {
            out.push_back({CrossingKind::CatastrophicThreshold, kCatastrophicThreshold, *t, false});
        }
    }
    std::ranges::sort(out, {}, &Crossing::t);
    return out;
}

std::string describe(const Crossing& c, const std::string& id)
{
    std::string what;
    switch (c.kind) {
    case CrossingKind::CriticalValue: what = "critical value "; break;
    case CrossingKind::CatastrophicThreshold: what = "threshold "; break;
    case CrossingKind::DeEscalationSentinel: what = "de-escalation sentinel "; break;
    }
    return "risk '" + id + "' forecast to " + (c.downward ? "fall to " : "reach ") + what +
           format_sig12(c.threshold) + " at t = " + format_sig12(c.t);
}

std::vector<Alert> alerts_for(const RiskEntry& entry, const AssessmentOptions& options)
{
    std::vector<Alert> out;
    if (!entry.trend) {
        return out;
    }
    const double limit = entry.trend->t_last + options.horizon_periods;
    for (const Crossing& c : entry.crossings) {
        if (c.t > limit) {
            continue;
        }
        AlertKind kind = AlertKind::CriticalValueCrossing;
        if (c.kind == CrossingKind::CatastrophicThreshold) {
            kind = AlertKind::CatastrophicCrossing;
        } else if (c.kind == CrossingKind::DeEscalationSentinel) {
            kind = AlertKind::DeEscalationForecast;
        }
        out.push_back({kind, entry.id, c.threshold, c.t, describe(c, entry.id)});
        // Existing risks become catastrophic only on operator confirmation; an
        // imminent crossing is surfaced for that decision.
        if (c.kind == CrossingKind::CatastrophicThreshold && entry.presence == Presence::Existing &&
            c.t <= entry.trend->t_last + 1.0) {
            out.push_back({AlertKind::CatastropheImminent, entry.id, c.threshold, c.t,
                           "risk '" + entry.id + "' reaches the catastrophic zone within one period; confirm to escalate"});
        }
    }
    return out;
}

void check_domain(const RiskRecord& risk, double value)
{
    if (risk.presence == Presence::Probable) {
        if (!(value >= kProbabilityFloor && value <= kProbabilityCeiling)) {
            throw Error(ErrorCode::DriverOutOfDomain,
                        "probability " + format_sig12(value) + " for '" + risk.id + "' outside [0.01, 0.99]");
        }
    } else if (!(value >= 0.0 && value <= 1.0)) {
        throw Error(ErrorCode::DriverOutOfDomain,
                    "severity " + format_sig12(value) + " for '" + risk.id + "' outside [0, 1]");
    }
}

const char* kStageNames[9] = {
    "horizon_selection",        "sphere_grouping",     "risk_identification",
    "qualitative_base",         "risk_vectors",        "probability_admissibility",
    "dynamics_interdependency", "mitigation_plan",     "monitoring",
};

const std::vector<std::string> kRatingScale{"negligible", "low", "moderate", "elevated", "high", "catastrophic"};

std::size_t base_rating(const RiskRecord& r)
{
    switch (admissibility_of(r)) {
    case AdmissibilityDegree::Insignificant: return 0;
    case AdmissibilityDegree::Catastrophic: return 5;
    case AdmissibilityDegree::Critical: return 4;
    case AdmissibilityDegree::Admissible: break;
    }
    switch (priority_class(r)) {
    case 1: return 4;
    case 2: return 3;
    case 3:
    case 4: return 2;
    default: return 1;
    }
}

} // namespace

ClassSums class_sums(std::span<const RiskRecord> risks)
{
    ClassSums sums;
    for (const auto& r : risks) {
        if (!counts(r)) {
            continue;
        }
        if (r.presence == Presence::Probable) {
            sums.probable += r.score;
        } else {
            sums.existing += r.score;
        }
    }
    sums.total = sums.probable + sums.existing;
    return sums;
}

double integral_indicator(std::span<const RiskRecord> risks)
{
    double product = 1.0;
    bool any = false;
    for (const auto& r : risks) {
        if (counts(r)) {
            product *= r.score;
            any = true;
        }
    }
    // No significant risk means no exposure, not the empty product.
    return any ? product : 0.0;
}

int priority_class(const RiskRecord& risk)
{
    const bool growing = resolve_dynamics(risk.dynamics) == Dynamics::Growing;
    if (risk.presence == Presence::Existing) {
        return growing ? 1 : 4;
    }
    if (!growing) {
        return 5;
    }
    return risk.band == ProbabilityBand::Low ? 3 : 2;
}

std::vector<std::string> prioritize(std::span<const RiskRecord> risks)
{
    std::vector<const RiskRecord*> ranked;
    for (const auto& r : risks) {
        if (counts(r)) {
            ranked.push_back(&r);
        }
    }
    std::ranges::sort(ranked, [](const RiskRecord* a, const RiskRecord* b) {
        const int ca = priority_class(*a);
        const int cb = priority_class(*b);
        if (ca != cb) {
            return ca < cb;
        }
        if (a->score != b->score) {
            return a->score > b->score;
        }
        return a->id < b->id;
    });
    std::vector<std::string> out;
    out.reserve(ranked.size());
    for (const auto* r : ranked) {
        out.push_back(r->id);
    }
    return out;
}

std::string_view to_string(CrossingKind k)
{
    switch (k) {
    case CrossingKind::CriticalValue: return "critical_value";
    case CrossingKind::CatastrophicThreshold: return "catastrophic_threshold";
    case CrossingKind::DeEscalationSentinel: return "deescalation_sentinel";
    }
    return "?";
}

std::string_view to_string(AlertKind k)
{
    switch (k) {
    case AlertKind::CriticalValueCrossing: return "critical_value_crossing";
    case AlertKind::CatastrophicCrossing: return "catastrophic_crossing";
    case AlertKind::CatastropheImminent: return "catastrophe_imminent";
    case AlertKind::DeEscalationForecast: return "deescalation_forecast";
    case AlertKind::HighVulnerability: return "high_vulnerability";
    }
    return "?";
}

AssessmentReport assess(std::span<const RiskRecord> risks, const AssessmentOptions& options)
{
    AssessmentReport report;
    report.sums = class_sums(risks);
    report.integral = integral_indicator(risks);
    report.vulnerability_threshold = options.vulnerability_threshold;
    report.priorities = prioritize(risks);

    for (const auto& r : risks) {
        if (!r.is_active()) {
            continue;
        }
        const StrategyRow& row = resolve_strategy(r.origin, r.presence, r.dynamics);
        RiskEntry e;
        e.id = r.id;
        e.name = r.name;
        e.sphere = r.sphere;
        e.origin = r.origin;
        e.presence = r.presence;
        e.dynamics = r.dynamics;
        e.strategy = strategy_key(row);
        e.critical_value = critical_value(row);
        e.zone = classify_zone(r.presence, r.score);
        e.band = r.band;
        e.admissibility = admissibility_of(r);
        e.status = r.status;
        e.score = r.score;
        e.priority_class = is_significant(r.score) ? priority_class(r) : 0;
        e.trend = score_trend(r);
        if (e.trend && r.status == RiskStatus::Active && is_significant(r.score)) {
            e.crossings = crossings_for(r, *e.trend);
        }
        for (auto& alert : alerts_for(e, options)) {
            report.alerts.push_back(std::move(alert));
        }
        if (r.origin == Origin::External && (e.admissibility == AdmissibilityDegree::Critical ||
                                             e.admissibility == AdmissibilityDegree::Catastrophic)) {
            report.strategic_review.push_back(r.id);
        }
        report.risks.push_back(std::move(e));
    }

    if (report.integral > 0.0 && report.integral >= options.vulnerability_threshold) {
        report.alerts.push_back({AlertKind::HighVulnerability, "", options.vulnerability_threshold, std::nullopt,
                                 "integral indicator " + format_sig12(report.integral) + " at or above " +
                                     format_sig12(options.vulnerability_threshold)});
    }
    return report;
}

std::vector<RiskRecord> apply_scenario(std::span<const RiskRecord> risks, const WhatIfScenario& scenario)
{
    std::vector<RiskRecord> copy(risks.begin(), risks.end());
    for (const Intervention& iv : scenario.interventions) {
        auto it = std::ranges::find(copy, iv.risk_id, &RiskRecord::id);
        if (it == copy.end()) {
            // Removed earlier in the same scenario?
            if (find_risk(risks, iv.risk_id) == nullptr) {
                throw Error(ErrorCode::UnknownRisk, "no risk '" + iv.risk_id + "'");
            }
            continue;
        }
        if (iv.remove) {
            copy.erase(it);
            continue;
        }
        if (iv.driver) {
            check_domain(*it, *iv.driver);
            it->driver.value = *iv.driver;
            rescore(*it);
            if (it->presence == Presence::Probable) {
                it->band = it->score >= kCatastrophicThreshold ? ProbabilityBand::High : classify_band(*iv.driver);
            }
            it->admissibility = admissibility_of(*it);
        }
    }
    return copy;
}

AssessmentReport what_if(std::span<const RiskRecord> risks, const WhatIfScenario& scenario,
                         const AssessmentOptions& options)
{
    const auto hypothetical = apply_scenario(risks, scenario);
    return assess(hypothetical, options);
}

bool CycleReport::complete() const
{
    return std::ranges::all_of(stages, &CycleStage::complete);
}

CycleReport run_cycle(std::span<const RiskRecord> all_risks, const CycleConfig& config)
{
    if (config.taxonomy.empty()) {
        throw Error(ErrorCode::EmptyTaxonomy, "the sphere taxonomy is empty");
    }
    if (config.periods < 1) {
        throw Error(ErrorCode::InvalidHorizon, "horizon must span at least one period");
    }
    const auto now = config.clock ? config.clock : std::function<std::string()>(iso_now);

    CycleReport rep;
    for (int i = 0; i < 9; ++i) {
        rep.stages[i].index = i + 1;
        rep.stages[i].name = kStageNames[i];
    }
    auto finish = [&](int stage) {
        rep.stages[stage - 1].complete = true;
        rep.stages[stage - 1].completed_at = now();
    };
    auto fail = [&](int stage, const std::string& message) {
        rep.stages[stage - 1].error = message;
        return rep;
    };

    std::vector<RiskRecord> risks;
    for (const auto& r : all_risks) {
        if (r.is_active()) {
            risks.push_back(r);
        }
    }

    // 1. Horizon.
    rep.horizon_stage = config.stage;
    rep.horizon_periods = config.periods;
    finish(1);

    // 2. Group by sphere, in taxonomy order.
    for (const auto& sphere : config.taxonomy) {
        rep.spheres.push_back({sphere, {}});
    }
    for (const auto& r : risks) {
        auto it = std::ranges::find(rep.spheres, r.sphere, &SphereGroup::sphere);
        if (it == rep.spheres.end()) {
            return fail(2, "risk '" + r.id + "' has sphere '" + r.sphere + "' outside the taxonomy");
        }
        it->risk_ids.push_back(r.id);
    }
    finish(2);

    // 3. Identification.
    for (const auto& r : risks) {
        rep.identified.push_back(r.id);
    }
    finish(3);

    // 4. Per-sphere trend summary.
    std::unordered_map<std::string, std::optional<TrendFit>> fits;
    for (const auto& r : risks) {
        fits[r.id] = score_trend(r);
    }
    for (const auto& group : rep.spheres) {
        SphereTrend st;
        st.sphere = group.sphere;
        double slope_sum = 0.0;
        for (const auto& id : group.risk_ids) {
            const RiskRecord& r = *find_risk(risks, id);
            ++st.risks;
            switch (r.dynamics) {
            case Dynamics::Growing: ++st.growing; break;
            case Dynamics::Declining: ++st.declining; break;
            case Dynamics::Stable: ++st.stable; break;
            }
            if (const auto& fit = fits[id]) {
                ++st.with_trend;
                slope_sum += fit->slope;
            }
        }
        st.mean_slope = st.with_trend > 0 ? slope_sum / static_cast<double>(st.with_trend) : 0.0;
        rep.sphere_trends.push_back(st);
    }
    finish(4);

    // 5. Magnitude and vector of each risk.
    for (const auto& r : risks) {
        RiskVector v{r.id, r.score, r.dynamics, std::nullopt};
        if (const auto& fit = fits[r.id]) {
            v.slope = fit->slope;
        }
        rep.risk_vectors.push_back(v);
    }
    finish(5);

    // 6. Probability and admissibility.
    for (const auto& r : risks) {
        const StrategyRow& row = resolve_strategy(r.origin, r.presence, r.dynamics);
        rep.admissibility_table.push_back(
            {r.id, r.origin, r.presence, r.band, r.driver, strategy_key(row), critical_value(row), admissibility_of(r)});
    }
    finish(6);

    // 7. Dynamics, interdependency and qualitative rating. An upstream
    // critical or catastrophic risk raises its dependents one level.
    std::map<std::string, std::vector<std::string>> dependents;
    for (const auto& r : risks) {
        for (const auto& dep : r.dependencies) {
            if (find_risk(all_risks, dep) == nullptr) {
                return fail(7, "risk '" + r.id + "' depends on unknown risk '" + dep + "'");
            }
            dependents[dep].push_back(r.id);
        }
    }
    for (const auto& r : risks) {
        std::size_t level = base_rating(r);
        const bool exposed = std::ranges::any_of(r.dependencies, [&](const std::string& dep) {
            const RiskRecord* up = find_risk(risks, dep);
            if (up == nullptr) {
                return false;
            }
            const auto degree = admissibility_of(*up);
            return degree == AdmissibilityDegree::Critical || degree == AdmissibilityDegree::Catastrophic;
        });
        if (exposed && level > 0 && level < 4) {
            ++level;
        }
        rep.ratings.push_back({r.id, r.dynamics, r.dependencies, dependents[r.id], kRatingScale[level]});
    }
    finish(7);

    // 8. Mitigation targets existing growing risks.
    for (const auto& id : prioritize(risks)) {
        const RiskRecord& r = *find_risk(risks, id);
        if (r.presence == Presence::Existing && resolve_dynamics(r.dynamics) == Dynamics::Growing) {
            rep.mitigation_plan.push_back(id);
        }
    }
    finish(8);

    // 9. Monitoring: forecast crossings inside the horizon.
    AssessmentOptions opts;
    opts.horizon_periods = config.periods;
    opts.vulnerability_threshold = config.vulnerability_threshold;
    const AssessmentReport report = assess(risks, opts);
    for (const auto& e : report.risks) {
        if (!e.trend) {
            continue;
        }
        MonitoringItem item{e.id, {}};
        for (const auto& c : e.crossings) {
            if (c.t <= e.trend->t_last + opts.horizon_periods) {
                item.crossings.push_back(c);
            }
        }
        if (!item.crossings.empty()) {
            rep.monitoring.push_back(std::move(item));
        }
    }
    finish(9);
    return rep;
}

} // namespace riskwarden
