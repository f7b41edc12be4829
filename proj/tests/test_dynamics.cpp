#include "riskwarden/dynamics.hpp"
#include "riskwarden/error.hpp"
#include "riskwarden/scoring.hpp"

#include "support.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace riskwarden;
using rwtest::existing;
using rwtest::probable;

namespace {

// Normal equations on raw sums; independent of the centred implementation.
std::pair<double, double> ols_oracle(const std::vector<TrendPoint>& pts)
{
    long double n = pts.size(), st = 0, sx = 0, stt = 0, stx = 0;
    for (const auto& p : pts) {
        st += p.t;
        sx += p.x;
        stt += static_cast<long double>(p.t) * p.t;
        stx += static_cast<long double>(p.t) * p.x;
    }
    const long double b = (n * stx - st * sx) / (n * stt - st * st);
    const long double a = (sx - b * st) / n;
    return {static_cast<double>(a), static_cast<double>(b)};
}

TrendFit line(double intercept, double slope, double t_last)
{
    TrendFit f;
    f.intercept = intercept;
    f.slope = slope;
    f.n = 2;
    f.t_last = t_last;
    f.x_last = intercept + slope * t_last;
    return f;
}

ErrorCode code_of(auto&& f)
{
    try {
        f();
    } catch (const Error& e) {
        return e.code();
    }
    FAIL("expected an error");
    return ErrorCode::IoError;
}

Observation obs(double t, double value, ObservationKind kind = ObservationKind::Probability,
                ObservationFlag flag = ObservationFlag::None)
{
    Observation o;
    o.t = t;
    o.kind = kind;
    o.value = value;
    o.flag = flag;
    return o;
}

std::vector<TransitionKind> kinds(const ObservationOutcome& out)
{
    std::vector<TransitionKind> k;
    for (const auto& e : out.events) {
        k.push_back(e.kind);
    }
    return k;
}

} // namespace

TEST_CASE("least-squares fits")
{
    SUBCASE("two points")
    {
        const std::vector<TrendPoint> pts{{0, 0.5}, {1, 0.6}};
        const TrendFit f = fit_trend(pts);
        CHECK(std::abs(f.slope - 0.1) <= 1e-9);
        CHECK(std::abs(f.intercept - 0.5) <= 1e-9);
        CHECK(f.n == 2);
        CHECK(f.t_last == 1);
    }
    SUBCASE("constant series")
    {
        const std::vector<TrendPoint> pts{{0, 0.7}, {1, 0.7}, {2, 0.7}};
        const TrendFit f = fit_trend(pts);
        CHECK(std::abs(f.slope) <= 1e-9);
        CHECK(std::abs(f.intercept - 0.7) <= 1e-9);
    }
    SUBCASE("three collinear points")
    {
        const std::vector<TrendPoint> pts{{0, 0.5}, {1, 0.6}, {2, 0.7}};
        const TrendFit f = fit_trend(pts);
        CHECK(std::abs(f.slope - 0.1) <= 1e-9);
        CHECK(std::abs(f.intercept - 0.5) <= 1e-9);
    }
    SUBCASE("three scattered points against hand computation")
    {
        // t mean 1, x mean 0.6; Sxy = (-1)(-0.1) + 0 + (1)(0.05) = 0.15, Sxx = 2.
        const std::vector<TrendPoint> pts{{0, 0.5}, {1, 0.75}, {2, 0.55}};
        const TrendFit f = fit_trend(pts);
        CHECK(std::abs(f.slope - 0.025) <= 1e-9);
        CHECK(std::abs(f.intercept - 0.575) <= 1e-9);
    }
}

TEST_CASE("fit errors")
{
    const std::vector<TrendPoint> one{{0, 0.5}};
    CHECK(code_of([&] { fit_trend(one); }) == ErrorCode::InsufficientHistory);
    const std::vector<TrendPoint> same{{1, 0.5}, {1, 0.6}};
    CHECK(code_of([&] { fit_trend(same); }) == ErrorCode::DegenerateTime);
    const std::vector<TrendPoint> back{{2, 0.5}, {1, 0.6}};
    CHECK(code_of([&] { fit_trend(back); }) == ErrorCode::NonMonotoneTime);
}

TEST_CASE("fits agree with the normal-equation oracle and leave orthogonal residuals")
{
    std::mt19937_64 rng(77);
    std::uniform_real_distribution<double> x(0.0, 2.0);
    std::uniform_real_distribution<double> step(0.1, 3.0);
    std::uniform_int_distribution<int> count(2, 30);
    for (int trial = 0; trial < 500; ++trial) {
        std::vector<TrendPoint> pts;
        double t = step(rng) - 1.0;
        const int n = count(rng);
        for (int i = 0; i < n; ++i) {
            pts.push_back({t, x(rng)});
            t += step(rng);
        }
        const TrendFit f = fit_trend(pts);
        const auto [a, b] = ols_oracle(pts);
        CHECK(std::abs(f.slope - b) <= 1e-9);
        CHECK(std::abs(f.intercept - a) <= 1e-9);
        double r_sum = 0.0;
        double rt_sum = 0.0;
        for (const auto& p : pts) {
            const double r = p.x - (f.intercept + f.slope * p.t);
            r_sum += r;
            rt_sum += r * p.t;
        }
        CHECK(std::abs(r_sum) <= 1e-9);
        CHECK(std::abs(rt_sum) <= 1e-8);
        CHECK(std::abs(f.x_last - (f.intercept + f.slope * f.t_last)) <= 1e-12);
    }
}

TEST_CASE("dynamics classification")
{
    CHECK(classify_dynamics(line(0, 0.1, 1), 0.005) == Dynamics::Growing);
    CHECK(classify_dynamics(line(0, -0.1, 1), 0.005) == Dynamics::Declining);
    CHECK(classify_dynamics(line(0, 0.004, 1), 0.005) == Dynamics::Stable);
    CHECK(classify_dynamics(line(0, -0.005, 1), 0.005) == Dynamics::Stable);
    CHECK(classify_dynamics(line(0, 0.004, 1), 0.001) == Dynamics::Growing);
}

TEST_CASE("forecast evaluation")
{
    CHECK(forecast_score(line(0.5, 0.1, 2), 3) == doctest::Approx(0.8).epsilon(1e-12));
    CHECK(forecast_score(line(0.7, 0.0, 2), 10) == doctest::Approx(0.7).epsilon(1e-12));
    CHECK(forecast_score(line(0.5, -0.2, 2), 4) == 0.0);
    CHECK(code_of([] { forecast_score(line(0.5, 0.1, 2), 1.5); }) == ErrorCode::BackwardForecast);
}

TEST_CASE("forecast crossings")
{
    TrendFit f = line(0.7, 0.1, 2);  // x_last = 0.9
    CHECK(forecast_crossing(f, 0.99).value() == doctest::Approx(2.9).epsilon(1e-12));

    f = line(0.49, 0.1, 5);  // x_last = 0.99
    CHECK(forecast_crossing(f, 0.99).value() == doctest::Approx(5.0));

    f = line(0.8, -0.1, 2);  // x_last = 0.6
    CHECK_FALSE(forecast_crossing(f, 0.99).has_value());

    f = line(0.9, -0.1, 2);  // x_last = 0.7, falling
    CHECK(forecast_crossing_below(f, 0.49).value() == doctest::Approx(4.1).epsilon(1e-12));
    CHECK_FALSE(forecast_crossing_below(line(0.5, 0.1, 2), 0.49).has_value());
}

TEST_CASE("forecast at the crossing time equals the threshold")
{
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> x(0.0, 1.0);
    std::uniform_real_distribution<double> slope(0.001, 0.5);
    std::uniform_real_distribution<double> th(0.3, 2.0);
    for (int i = 0; i < 1000; ++i) {
        const double x_last = x(rng);
        const double b = slope(rng);
        const double t_last = 3.0;
        const TrendFit f = line(x_last - b * t_last, b, t_last);
        const double threshold = th(rng);
        const auto t = forecast_crossing(f, threshold);
        REQUIRE(t.has_value());
        if (x_last < threshold) {
            CHECK(std::abs(forecast_score(f, *t) - threshold) <= 1e-9);
        } else {
            CHECK(*t == t_last);
        }
    }
}

TEST_CASE("transition kind names")
{
    for (auto k : {TransitionKind::BandEscalation, TransitionKind::ProbableToExisting,
                   TransitionKind::ExistingToCatastrophic, TransitionKind::DeEscalationToProbable,
                   TransitionKind::BecameInsignificant}) {
        CHECK(parse_transition_kind(to_string(k)) == k);
    }
    CHECK(to_string(TransitionKind::BandEscalation) == "band_escalation");
}

TEST_CASE("risk initialisation")
{
    const RiskRecord r = probable("A", 0.40);
    CHECK(r.status == RiskStatus::Active);
    CHECK(r.band == ProbabilityBand::Medium);
    CHECK(r.score == doctest::Approx(score_probable(0.40, Dynamics::Growing)));
    CHECK(r.admissibility == AdmissibilityDegree::Critical);

    const RiskRecord e = existing("E", 0.5);
    CHECK(e.score == doctest::Approx(0.745));
    CHECK(e.band == ProbabilityBand::High);

    RiskRecord self = draft_risk("S", "s", "ops", Origin::External, Presence::Probable, 0.5);
    self.dependencies = {"S"};
    CHECK(code_of([&] { initialize_risk(self); }) == ErrorCode::DanglingDependency);
    CHECK(code_of([] { probable("P", 1.2); }) == ErrorCode::DriverOutOfDomain);
    CHECK(code_of([] { existing("X", -0.1); }) == ErrorCode::DriverOutOfDomain);
}

TEST_CASE("medium to high escalation")
{
    const RiskRecord r = probable("A", 0.40);
    const auto out = apply_observation(r, obs(1, 0.70));
    REQUIRE(out.events.size() == 1);
    const TransitionEvent& e = out.events[0];
    CHECK(e.kind == TransitionKind::BandEscalation);
    CHECK(e.before.band == ProbabilityBand::Medium);
    CHECK(e.after.band == ProbabilityBand::High);
    CHECK(e.t == 1);
    CHECK(out.risk.band == ProbabilityBand::High);
    CHECK(out.risk.history.size() == 1);
    // Untouched input.
    CHECK(r.history.empty());
}

TEST_CASE("score at or above one forces the high band")
{
    RiskRecord r = probable("A", 0.20);
    r.history.push_back(obs(0, 0.20));
    const auto out = apply_observation(r, obs(1, 0.40));
    CHECK(out.risk.score >= 1.0);
    CHECK(out.risk.band == ProbabilityBand::High);
    CHECK(out.risk.admissibility == AdmissibilityDegree::Critical);
    CHECK(kinds(out) == std::vector{TransitionKind::BandEscalation});
}

TEST_CASE("materialisation")
{
    SUBCASE("probability reaches the ceiling")
    {
        const auto out = apply_observation(probable("A", 0.5), obs(1, 0.99));
        CHECK(kinds(out) == std::vector{TransitionKind::ProbableToExisting});
        CHECK(out.risk.presence == Presence::Existing);
        CHECK(out.risk.driver.kind == ObservationKind::Severity);
        CHECK(out.risk.driver.value == 1.0);
        CHECK(out.risk.score == doctest::Approx(0.99).epsilon(1e-12));
    }
    SUBCASE("explicit flag")
    {
        const auto out =
            apply_observation(probable("A", 0.2), obs(1, 0.3, ObservationKind::Probability, ObservationFlag::Materialized));
        CHECK(kinds(out) == std::vector{TransitionKind::ProbableToExisting});
        CHECK(out.risk.presence == Presence::Existing);
    }
    SUBCASE("flag on an existing risk")
    {
        CHECK(code_of([] {
                  apply_observation(existing("E", 0.2),
                                    obs(1, 0.3, ObservationKind::Severity, ObservationFlag::Materialized));
              }) == ErrorCode::InvalidArgument);
    }
}

TEST_CASE("declared catastrophe")
{
    const auto out = apply_observation(existing("E", 0.5),
                                       obs(1, 0.6, ObservationKind::Severity, ObservationFlag::CatastropheDeclared));
    CHECK(kinds(out) == std::vector{TransitionKind::ExistingToCatastrophic});
    CHECK(out.risk.status == RiskStatus::Catastrophic);
    CHECK(out.risk.score >= 1.0);
    CHECK(out.risk.admissibility == AdmissibilityDegree::Catastrophic);

    // Sticky: later severities keep the risk catastrophic and emit nothing new.
    const auto later = apply_observation(out.risk, obs(2, 0.1, ObservationKind::Severity));
    CHECK(later.events.empty());
    CHECK(later.risk.status == RiskStatus::Catastrophic);
    CHECK(later.risk.score >= 1.0);

    CHECK(code_of([] {
              apply_observation(probable("P", 0.3),
                                obs(1, 0.3, ObservationKind::Probability, ObservationFlag::CatastropheDeclared));
          }) == ErrorCode::InvalidArgument);
}

TEST_CASE("decline confirmation de-escalates an existing risk")
{
    RiskRecord r = existing("E", 1.0, Dynamics::Growing);
    r = apply_observation(r, obs(0, 1.0, ObservationKind::Severity)).risk;
    r = apply_observation(r, obs(1, 0.4, ObservationKind::Severity)).risk;
    CHECK(r.presence == Presence::Existing);
    CHECK(r.dynamics == Dynamics::Declining);

    const auto out = apply_observation(r, obs(2, 0.1, ObservationKind::Severity));
    REQUIRE(kinds(out) == std::vector{TransitionKind::DeEscalationToProbable});

    // Oracle: fit the three existing scores, forecast one period ahead, invert
    // the declining branch at that score.
    const std::vector<TrendPoint> pts{{0, 0.99}, {1, 0.5 + 0.49 * 0.4}, {2, 0.5 + 0.49 * 0.1}};
    const auto [a, b] = ols_oracle(pts);
    const double forecast = a + b * 3.0;
    REQUIRE(forecast < 0.5);
    const double y = 1.0 - forecast / 0.49;
    CHECK(out.risk.presence == Presence::Probable);
    CHECK(out.risk.dynamics == Dynamics::Declining);
    CHECK(out.risk.driver.kind == ObservationKind::Probability);
    CHECK(out.risk.driver.value == doctest::Approx(y).epsilon(1e-9));
    CHECK(out.risk.score == doctest::Approx(forecast).epsilon(1e-9));
    CHECK(out.risk.band == classify_band(y));
    CHECK(out.risk.score < 0.5);
}

TEST_CASE("a single low reading does not de-escalate")
{
    RiskRecord r = existing("E", 0.6, Dynamics::Growing);
    r = apply_observation(r, obs(0, 0.6, ObservationKind::Severity)).risk;
    r = apply_observation(r, obs(1, 0.6, ObservationKind::Severity)).risk;
    const auto out = apply_observation(r, obs(2, 0.0, ObservationKind::Severity));
    CHECK(out.events.empty());
    CHECK(out.risk.presence == Presence::Existing);
}

TEST_CASE("constant severity series stays stable with no events")
{
    RiskRecord r = existing("E", 0.2);
    for (int t = 0; t < 3; ++t) {
        const auto out = apply_observation(r, obs(t, 0.2, ObservationKind::Severity));
        CHECK(out.events.empty());
        r = out.risk;
    }
    CHECK(r.dynamics == Dynamics::Stable);
}

TEST_CASE("probability below the floor turns the risk insignificant")
{
    const auto out = apply_observation(probable("A", 0.3), obs(1, 0.005));
    CHECK(kinds(out) == std::vector{TransitionKind::BecameInsignificant});
    CHECK(out.risk.score == 0.0);
    CHECK(out.risk.admissibility == AdmissibilityDegree::Insignificant);
}

TEST_CASE("observation errors")
{
    const RiskRecord p = probable("A", 0.3);
    CHECK(code_of([&] { apply_observation(p, obs(1, 0.4, ObservationKind::Severity)); }) == ErrorCode::KindMismatch);
    CHECK(code_of([&] { apply_observation(p, obs(1, 1.5)); }) == ErrorCode::DriverOutOfDomain);
    CHECK(code_of([&] { apply_observation(p, obs(1, -0.1)); }) == ErrorCode::DriverOutOfDomain);
    const RiskRecord q = apply_observation(p, obs(2, 0.4)).risk;
    CHECK(code_of([&] { apply_observation(q, obs(2, 0.5)); }) == ErrorCode::NonMonotoneTime);
    CHECK(code_of([&] { apply_observation(q, obs(1, 0.5)); }) == ErrorCode::NonMonotoneTime);
    RiskRecord retired = q;
    retired.status = RiskStatus::Retired;
    CHECK(code_of([&] { apply_observation(retired, obs(3, 0.5)); }) == ErrorCode::RiskNotActive);
}

TEST_CASE("observation outcome is deterministic and keeps scores consistent")
{
    std::mt19937_64 rng(99);
    std::uniform_real_distribution<double> y(0.0, 1.0);
    for (int trial = 0; trial < 200; ++trial) {
        RiskRecord r = probable("A", 0.3);
        for (int t = 0; t < 8 && r.is_active(); ++t) {
            const double v = y(rng);
            const Observation o = obs(t, v, driver_kind_for(r.presence));
            const auto a = apply_observation(r, o);
            const auto b = apply_observation(r, o);
            CHECK(a.risk == b.risk);
            CHECK(a.events == b.events);
            r = a.risk;
            CHECK(r.score == doctest::Approx(score_driver(r.presence, r.dynamics, r.driver)));
            CHECK(r.admissibility == admissibility_of(r));
        }
    }
}

TEST_CASE("trend series follow the current presence")
{
    RiskRecord r = probable("A", 0.4);
    r = apply_observation(r, obs(0, 0.4)).risk;
    r = apply_observation(r, obs(1, 0.5)).risk;
    CHECK(intensity_series(r).size() == 2);
    r = apply_observation(r, obs(2, 0.99)).risk;
    CHECK(r.presence == Presence::Existing);
    CHECK(current_segment(r).empty());
    CHECK_FALSE(score_trend(r).has_value());
    r = apply_observation(r, obs(3, 0.9, ObservationKind::Severity)).risk;
    r = apply_observation(r, obs(4, 0.95, ObservationKind::Severity)).risk;
    const auto fit = score_trend(r);
    REQUIRE(fit.has_value());
    CHECK(fit->n == 2);
    CHECK(fit->slope == doctest::Approx(0.49 * 0.05));
}
