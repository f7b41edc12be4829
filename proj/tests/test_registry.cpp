#include "riskwarden/error.hpp"
#include "riskwarden/json_io.hpp"
#include "riskwarden/registry.hpp"

#include "support.hpp"

#include <doctest.h>

#include <fstream>
#include <random>
#include <sstream>

using namespace riskwarden;
using rwtest::TempDir;
namespace fs = std::filesystem;

namespace {

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

std::string slurp(const fs::path& p)
{
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void spit(const fs::path& p, const std::string& text)
{
    std::ofstream(p, std::ios::binary) << text;
}

Horizon horizon(int periods = 12)
{
    return Horizon{"operation", periods, kDefaultPeriodDays};
}

RegisterStore fresh(const TempDir& dir, const std::string& name = "reg.json")
{
    return RegisterStore::create(dir / name, horizon(), {"macro", "firm"}, std::string("2026-01-01"));
}

Observation obs(double t, double v, ObservationKind k = ObservationKind::Probability)
{
    Observation o;
    o.t = t;
    o.kind = k;
    o.value = v;
    return o;
}

// Builds a register through the public mutation API with random choices.
void populate(RegisterStore& store, std::mt19937_64& rng)
{
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::uniform_int_distribution<int> count(0, 8);
    const int n = count(rng);
    for (int i = 0; i < n; ++i) {
        const std::string id = "R" + std::to_string(i);
        const Presence p = unit(rng) < 0.5 ? Presence::Probable : Presence::Existing;
        const double v = p == Presence::Probable ? 0.01 + 0.98 * unit(rng) : unit(rng);
        RiskRecord draft = draft_risk(id, "risk \"" + id + "\" \xD1\x80\xD0\xB8\xD1\x81\xD0\xBA",
                                      unit(rng) < 0.5 ? "macro" : "firm",
                                      unit(rng) < 0.5 ? Origin::External : Origin::Internal, p, v);
        if (i > 0 && unit(rng) < 0.3) {
            draft.dependencies.push_back("R" + std::to_string(static_cast<int>(unit(rng) * i)));
        }
        store.add_risk(std::move(draft), unit(rng) < 0.5 ? std::optional<double>(0.0) : std::nullopt);
        const int steps = count(rng);
        double t = 0.0;
        for (int s = 0; s < steps; ++s) {
            t += 0.25 + unit(rng);
            const RiskRecord& r = store.get_risk(id);
            Observation o = obs(t, unit(rng), driver_kind_for(r.presence));
            if (unit(rng) < 0.3) {
                o.note = "note " + std::to_string(s);
            }
            if (r.presence == Presence::Existing && unit(rng) < 0.05) {
                o.flag = ObservationFlag::CatastropheDeclared;
            }
            store.record_observation(id, o);
        }
        if (unit(rng) < 0.1) {
            store.retire_risk(id);
        }
    }
}

} // namespace

TEST_CASE("create a register")
{
    TempDir dir;
    const fs::path path = dir / "reg.json";
    const Register reg = create_register(path, horizon(), {"macro"});
    CHECK(reg.risks.empty());
    CHECK(reg.version == kSchemaVersion);
    CHECK(reg.period_epoch == reg.created_at.substr(0, 10));
    CHECK(fs::exists(path));
    const auto log = read_event_log(path);
    REQUIRE(log.size() == 1);
    CHECK(log[0].kind == "register_created");
    CHECK(log[0].seq == 1);
    CHECK(load_register(path) == reg);

    CHECK(code_of([&] { create_register(path, horizon(), {}); }) == ErrorCode::PathExists);
    CHECK(code_of([&] { create_register(dir / "zero.json", horizon(0), {}); }) == ErrorCode::InvalidHorizon);
    CHECK_FALSE(fs::exists(dir / "zero.json"));
    CHECK(code_of([&] { create_register(dir / "bad.json", horizon(), {}, std::string("soon")); }) ==
          ErrorCode::InvalidArgument);
}

TEST_CASE("load errors")
{
    TempDir dir;
    CHECK(code_of([&] { load_register(dir / "missing.json"); }) == ErrorCode::IoError);

    RegisterStore store = fresh(dir);
    store.add_risk(draft_risk("A", "a", "macro", Origin::External, Presence::Probable, 0.4));
    const std::string text = slurp(store.path());

    SUBCASE("unknown version")
    {
        json doc = json::parse(text);
        doc["version"] = 99;
        spit(store.path(), doc.dump());
        CHECK(code_of([&] { load_register(store.path()); }) == ErrorCode::SchemaVersionMismatch);
    }
    SUBCASE("truncated file reports a line")
    {
        spit(store.path(), text.substr(0, text.size() / 2));
        try {
            load_register(store.path());
            FAIL("expected ParseError");
        } catch (const Error& e) {
            CHECK(e.code() == ErrorCode::ParseError);
            CHECK(std::string(e.what()).find("line") != std::string::npos);
        }
    }
    SUBCASE("wrong field type names the field")
    {
        json doc = json::parse(text);
        doc["risks"][0]["score"] = "high";
        spit(store.path(), doc.dump());
        try {
            load_register(store.path());
            FAIL("expected ParseError");
        } catch (const Error& e) {
            CHECK(e.code() == ErrorCode::ParseError);
            CHECK(std::string(e.what()).find("risks[0].score") != std::string::npos);
        }
    }
    SUBCASE("score inconsistent with driver")
    {
        json doc = json::parse(text);
        doc["risks"][0]["score"] = 0.1;
        spit(store.path(), doc.dump());
        CHECK(code_of([&] { load_register(store.path()); }) == ErrorCode::ParseError);
    }
    SUBCASE("dangling dependency")
    {
        json doc = json::parse(text);
        doc["risks"][0]["dependencies"] = {"ghost"};
        spit(store.path(), doc.dump());
        CHECK(code_of([&] { load_register(store.path()); }) == ErrorCode::ParseError);
    }
}

TEST_CASE("risk lifecycle")
{
    TempDir dir;
    RegisterStore store = fresh(dir);
    store.add_risk(draft_risk("A", "a", "macro", Origin::External, Presence::Probable, 0.4), 0.0);
    CHECK(store.snapshot().risks.size() == 1);
    CHECK(store.get_risk("A").history.size() == 1);

    CHECK(code_of([&] { store.add_risk(draft_risk("A", "a", "macro", Origin::External, Presence::Probable, 0.4)); }) ==
          ErrorCode::DuplicateId);
    RiskRecord dangling = draft_risk("B", "b", "firm", Origin::Internal, Presence::Existing, 0.3);
    dangling.dependencies = {"Z"};
    CHECK(code_of([&] { store.add_risk(dangling); }) == ErrorCode::DanglingDependency);
    CHECK(store.snapshot().risks.size() == 1);

    dangling.dependencies = {"A"};
    store.add_risk(dangling);
    CHECK(store.snapshot().risks.size() == 2);

    MetadataPatch patch;
    patch.name = "renamed";
    patch.origin = Origin::Internal;
    CHECK(store.update_risk_metadata("A", patch).name == "renamed");
    CHECK(store.get_risk("A").origin == Origin::Internal);
    MetadataPatch bad;
    bad.dependencies = std::vector<std::string>{"A"};
    CHECK(code_of([&] { store.update_risk_metadata("A", bad); }) == ErrorCode::DanglingDependency);
    CHECK(code_of([&] { store.update_risk_metadata("Q", patch); }) == ErrorCode::UnknownRisk);

    store.retire_risk("A");
    CHECK(store.list_risks(true).size() == 1);
    CHECK(store.list_risks(true)[0].id == "B");
    CHECK(store.list_risks(false).size() == 2);
    CHECK(code_of([&] { store.retire_risk("A"); }) == ErrorCode::RiskNotActive);
    CHECK(code_of([&] { store.get_risk("nope"); }) == ErrorCode::UnknownRisk);

    const Register reloaded = load_register(store.path());
    CHECK(reloaded == store.snapshot());

    std::vector<std::string> kinds;
    for (const auto& e : store.events()) {
        kinds.push_back(e.kind);
    }
    CHECK(kinds == std::vector<std::string>{"register_created", "risk_added", "risk_added", "risk_updated",
                                            "risk_retired"});
}

TEST_CASE("retiring a catastrophic risk drops the floor and stays loadable")
{
    TempDir dir;
    RegisterStore store = fresh(dir);
    store.add_risk(draft_risk("A", "a", "firm", Origin::Internal, Presence::Existing, 0.2), 0.0);
    Observation o = obs(1, 0.1, ObservationKind::Severity);
    o.flag = ObservationFlag::CatastropheDeclared;
    store.record_observation("A", o);
    CHECK(store.get_risk("A").score >= 1.0);

    const RiskRecord& retired = store.retire_risk("A");
    CHECK(retired.score < 1.0);
    CHECK(retired.admissibility != AdmissibilityDegree::Catastrophic);
    CHECK(load_register(store.path()) == store.snapshot());
}

TEST_CASE("recording observations")
{
    TempDir dir;
    RegisterStore store = fresh(dir);
    store.add_risk(draft_risk("A", "a", "macro", Origin::External, Presence::Probable, 0.1), 0.0);
    const double before = store.get_risk("A").score;
    CHECK(store.record_observation("A", obs(1, 0.15)).empty());
    CHECK(store.get_risk("A").score != before);
    CHECK(load_register(store.path()).find("A")->score == store.get_risk("A").score);

    CHECK(code_of([&] { store.record_observation("A", obs(1, 0.6)); }) == ErrorCode::NonMonotoneTime);
    CHECK(code_of([&] { store.record_observation("Z", obs(2, 0.6)); }) == ErrorCode::UnknownRisk);

    const auto events = store.record_observation("A", obs(2, 0.99));
    REQUIRE(events.size() == 1);
    CHECK(events[0].kind == TransitionKind::ProbableToExisting);
    const auto log = read_event_log(store.path());
    CHECK(log.back().kind == "probable_to_existing");
    CHECK(log.back().risk_id == "A");
    CHECK(log.back().t == 2.0);
    REQUIRE(log.back().before.has_value());
    CHECK(log.back().before->presence == Presence::Probable);
    CHECK(log.back().after->presence == Presence::Existing);

    // Sequence numbers are dense and increasing.
    for (std::size_t i = 0; i < log.size(); ++i) {
        CHECK(log[i].seq == i + 1);
    }
    const auto since = read_event_log(store.path(), 2.0);
    CHECK(since.size() == 2);
}

TEST_CASE("observation import")
{
    TempDir dir;
    RegisterStore store = fresh(dir);
    store.add_risk(draft_risk("A", "a", "macro", Origin::External, Presence::Probable, 0.4));
    store.add_risk(draft_risk("B", "b", "firm", Origin::Internal, Presence::Existing, 0.2));

    SUBCASE("all valid")
    {
        const auto r = store.import_observations("risk_id,t,kind,value,note\n"
                                                 "B,2,severity,0.3,\n"
                                                 "A,1,probability,0.5,\"first, quoted\"\n"
                                                 "A,2,probability,0.6,\n");
        CHECK(r.accepted == 3);
        CHECK(r.rejected.empty());
        CHECK(store.get_risk("A").history.size() == 2);
        CHECK(store.get_risk("A").history[0].note == "first, quoted");
        CHECK(load_register(store.path()) == store.snapshot());
    }
    SUBCASE("rows are applied in (risk, period) order")
    {
        const auto r = store.import_observations("risk_id,t,kind,value\r\nA,2,probability,0.6\r\nA,1,probability,0.5\r\n");
        CHECK(r.accepted == 2);
        CHECK(store.get_risk("A").history[0].t == 1.0);
    }
    SUBCASE("one valid and one out of range")
    {
        const auto r = store.import_observations("risk_id,t,kind,value\nA,1,probability,0.5\nA,2,probability,1.5\n");
        CHECK(r.accepted == 1);
        REQUIRE(r.rejected.size() == 1);
        CHECK(r.rejected[0].row == 2);
        CHECK(r.rejected[0].code == ErrorCode::DriverOutOfDomain);
    }
    SUBCASE("unknown risk and unparsable rows")
    {
        const auto r = store.import_observations("risk_id,t,kind,value\nZ,1,probability,0.5\nA,x,probability,0.5\n"
                                                 "A,1,guess,0.5\nA,1,probability\n");
        CHECK(r.accepted == 0);
        REQUIRE(r.rejected.size() == 4);
        CHECK(r.rejected[0].code == ErrorCode::UnknownRisk);
        CHECK(r.rejected[2].code == ErrorCode::ParseError);
        CHECK(r.rejected[3].code == ErrorCode::ParseError);
    }
    SUBCASE("ISO dates and a byte-order mark")
    {
        const auto r = store.import_observations("\xEF\xBB\xBFrisk_id,t,kind,value\nA,2026-01-31,probability,0.5\n");
        CHECK(r.accepted == 1);
        CHECK(store.get_risk("A").history[0].t == doctest::Approx(1.0));
    }
    SUBCASE("structural errors")
    {
        CHECK(code_of([&] { store.import_observations(""); }) == ErrorCode::MalformedTable);
        CHECK(code_of([&] { store.import_observations("id,t,kind,value\n"); }) == ErrorCode::MalformedTable);
        CHECK(code_of([&] { store.import_observations("risk_id,t,kind,value\n\"A,1"); }) ==
              ErrorCode::MalformedTable);
    }
}

TEST_CASE("period mapping")
{
    Register reg;
    reg.period_epoch = "2026-01-01";
    CHECK(period_index(reg, "2026-01-31") == doctest::Approx(1.0));
    CHECK(period_index(reg, "2025-12-02") == doctest::Approx(-1.0));
    CHECK(resolve_period(reg, "2.5") == 2.5);
    CHECK(resolve_period(reg, "2026-03-02") == doctest::Approx(2.0));
    CHECK(code_of([&] { resolve_period(reg, "soon"); }) == ErrorCode::InvalidArgument);
    reg.horizon.period_days = 7;
    CHECK(period_index(reg, "2026-01-15") == doctest::Approx(2.0));
}

TEST_CASE("load after save is the identity on randomized registers")
{
    std::mt19937_64 rng(1234);
    for (int trial = 0; trial < 40; ++trial) {
        TempDir dir;
        RegisterStore store = fresh(dir);
        populate(store, rng);
        const Register& reg = store.snapshot();
        CHECK(load_register(store.path()) == reg);
        save_register(reg, dir / "copy.json");
        CHECK(load_register(dir / "copy.json") == reg);
    }
}

TEST_CASE("a crash between write and rename leaves the previous file intact")
{
    TempDir dir;
    RegisterStore store = fresh(dir);
    store.add_risk(draft_risk("A", "a", "macro", Origin::External, Presence::Probable, 0.4), 0.0);
    const std::string before = slurp(store.path());
    const Register reg_before = store.snapshot();
    const std::string log_before = slurp(event_log_path(store.path()));

    struct Crash {};
    set_persist_fault_hook([](const fs::path&) { throw Crash{}; });
    CHECK_THROWS_AS(store.record_observation("A", obs(1, 0.8)), Crash);
    CHECK_THROWS_AS(store.add_risk(draft_risk("B", "b", "macro", Origin::External, Presence::Probable, 0.4)), Crash);
    set_persist_fault_hook({});

    CHECK(slurp(store.path()) == before);
    CHECK(load_register(store.path()) == reg_before);
    CHECK(store.snapshot() == reg_before);
    CHECK(slurp(event_log_path(store.path())) == log_before);

    // The store stays usable afterwards.
    store.record_observation("A", obs(1, 0.8));
    CHECK(load_register(store.path()) == store.snapshot());
}

TEST_CASE("the event log only ever grows by appending")
{
    std::mt19937_64 rng(55);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    TempDir dir;
    RegisterStore store = fresh(dir);
    const fs::path log = event_log_path(store.path());
    std::string prev = slurp(log);
    double t = 0.0;
    for (int i = 0; i < 60; ++i) {
        const std::string id = "R" + std::to_string(i % 5);
        try {
            if (store.snapshot().find(id) == nullptr) {
                store.add_risk(draft_risk(id, id, "macro", Origin::External, Presence::Probable, 0.3), t);
            } else if (unit(rng) < 0.05) {
                store.retire_risk(id);
            } else {
                t += 0.5;
                store.record_observation(id, obs(t, unit(rng), driver_kind_for(store.get_risk(id).presence)));
            }
        } catch (const Error&) {
            // Rejected operations must leave the log alone too.
        }
        const std::string next = slurp(log);
        REQUIRE(next.size() >= prev.size());
        CHECK(next.compare(0, prev.size(), prev) == 0);
        prev = next;
    }
}

TEST_CASE("single-writer lock")
{
    TempDir dir;
    const fs::path path = dir / "reg.json";
    {
        RegisterLock first(path);
        CHECK(code_of([&] { RegisterLock second(path); }) == ErrorCode::LockHeld);
        RegisterLock moved(std::move(first));
        CHECK(code_of([&] { RegisterLock second(path); }) == ErrorCode::LockHeld);
    }
    RegisterLock again(path);
}

TEST_CASE("structured formats round-trip")
{
    Observation o = obs(1.5, 0.25);
    o.note = "n";
    o.flag = ObservationFlag::Materialized;
    CHECK(observation_from_json(to_json(o)) == o);
    CHECK_FALSE(to_json(obs(1, 0.2)).contains("flag"));

    LogEntry e;
    e.seq = 4;
    e.t = 2.0;
    e.wall_time = "2026-01-01T00:00:00Z";
    e.risk_id = "A";
    e.kind = "band_escalation";
    e.before = RiskSnapshot{Presence::Probable, ProbabilityBand::Medium, AdmissibilityDegree::Admissible, 0.9};
    e.after = RiskSnapshot{Presence::Probable, ProbabilityBand::High, AdmissibilityDegree::Critical, 1.2};
    CHECK(log_entry_from_json(to_json(e), "e") == e);

    const json scenario = json::parse(R"({"label":"x","interventions":[{"risk_id":"A","driver":0.3},{"risk_id":"B","remove":true}]})");
    const WhatIfScenario s = scenario_from_json(scenario);
    REQUIRE(s.interventions.size() == 2);
    CHECK(s.interventions[0].driver == 0.3);
    CHECK(s.interventions[1].remove);
    CHECK(code_of([] { scenario_from_json(json::parse(R"({"interventions":[{"driver":1}]})")); }) ==
          ErrorCode::ParseError);
}
