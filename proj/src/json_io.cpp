#include "riskwarden/json_io.hpp"

#include "riskwarden/error.hpp"
#include "riskwarden/format.hpp"

namespace riskwarden {

namespace {

[[noreturn]] void bad(const std::string& where, const std::string& what)
{
    throw Error(ErrorCode::ParseError, where + ": " + what);
}

const json& field(const json& j, const char* key, const std::string& where)
{
    if (!j.is_object()) {
        bad(where, "expected an object");
    }
    auto it = j.find(key);
    if (it == j.end()) {
        bad(where + "." + key, "missing field");
    }
    return *it;
}

const json* optional_field(const json& j, const char* key)
{
    auto it = j.find(key);
    if (it == j.end() || it->is_null()) {
        return nullptr;
    }
    return &*it;
}

double number(const json& j, const std::string& where)
{
    if (!j.is_number()) {
        bad(where, "expected a number");
    }
    return j.get<double>();
}

int integer(const json& j, const std::string& where)
{
    if (!j.is_number_integer()) {
        bad(where, "expected an integer");
    }
    return j.get<int>();
}

std::string text(const json& j, const std::string& where)
{
    if (!j.is_string()) {
        bad(where, "expected a string");
    }
    return j.get<std::string>();
}

std::vector<std::string> strings(const json& j, const std::string& where)
{
    if (!j.is_array()) {
        bad(where, "expected an array");
    }
    std::vector<std::string> out;
    for (std::size_t i = 0; i < j.size(); ++i) {
        out.push_back(text(j[i], where + "[" + std::to_string(i) + "]"));
    }
    return out;
}

template <class Parse>
auto enum_value(const json& j, const char* key, const std::string& where, Parse parse)
{
    const std::string path = where + "." + key;
    const std::string s = text(field(j, key, where), path);
    try {
        return parse(s);
    } catch (const Error& e) {
        bad(path, e.what());
    }
}

json optional_number(const std::optional<double>& v)
{
    return v ? json(*v) : json(nullptr);
}

json to_json(const Crossing& c)
{
    return {{"kind", to_string(c.kind)},
            {"threshold", c.threshold},
            {"t", c.t},
            {"direction", c.downward ? "down" : "up"}};
}

json to_json(const Driver& d)
{
    return {{"kind", to_string(d.kind)}, {"value", d.value}};
}

} // namespace

json to_json(const Observation& obs)
{
    json j{{"t", obs.t},
           {"kind", to_string(obs.kind)},
           {"value", obs.value},
           {"note", obs.note ? json(*obs.note) : json(nullptr)}};
    if (obs.flag != ObservationFlag::None) {
        j["flag"] = to_string(obs.flag);
    }
    return j;
}

Observation observation_from_json(const json& j, const std::string& where)
{
    Observation obs;
    obs.t = number(field(j, "t", where), where + ".t");
    obs.kind = enum_value(j, "kind", where, parse_observation_kind);
    obs.value = number(field(j, "value", where), where + ".value");
    if (const json* note = optional_field(j, "note")) {
        obs.note = text(*note, where + ".note");
    }
    if (optional_field(j, "flag") != nullptr) {
        obs.flag = enum_value(j, "flag", where, parse_observation_flag);
    }
    return obs;
}

json to_json(const RiskRecord& r)
{
    json history = json::array();
    for (const auto& obs : r.history) {
        history.push_back(to_json(obs));
    }
    return {{"id", r.id},
            {"name", r.name},
            {"sphere", r.sphere},
            {"origin", to_string(r.origin)},
            {"presence", to_string(r.presence)},
            {"dynamics", to_string(r.dynamics)},
            {"band", to_string(r.band)},
            {"score", r.score},
            {"driver", to_json(r.driver)},
            {"status", to_string(r.status)},
            {"dependencies", r.dependencies},
            {"history", history}};
}

RiskRecord risk_from_json(const json& j, const std::string& where)
{
    RiskRecord r;
    r.id = text(field(j, "id", where), where + ".id");
    r.name = text(field(j, "name", where), where + ".name");
    r.sphere = text(field(j, "sphere", where), where + ".sphere");
    r.origin = enum_value(j, "origin", where, parse_origin);
    r.presence = enum_value(j, "presence", where, parse_presence);
    r.dynamics = enum_value(j, "dynamics", where, parse_dynamics);
    r.band = enum_value(j, "band", where, parse_band);
    r.score = number(field(j, "score", where), where + ".score");
    const json& driver = field(j, "driver", where);
    r.driver.kind = enum_value(driver, "kind", where + ".driver", parse_observation_kind);
    r.driver.value = number(field(driver, "value", where + ".driver"), where + ".driver.value");
    r.status = enum_value(j, "status", where, parse_status);
    r.dependencies = strings(field(j, "dependencies", where), where + ".dependencies");
    const json& history = field(j, "history", where);
    if (!history.is_array()) {
        bad(where + ".history", "expected an array");
    }
    for (std::size_t i = 0; i < history.size(); ++i) {
        r.history.push_back(observation_from_json(history[i], where + ".history[" + std::to_string(i) + "]"));
    }
    r.admissibility = admissibility_of(r);
    return r;
}

json to_json(const Register& reg)
{
    json risks = json::array();
    for (const auto& r : reg.risks) {
        risks.push_back(to_json(r));
    }
    return {{"version", reg.version},
            {"created_at", reg.created_at},
            {"horizon",
             {{"stage", reg.horizon.stage},
              {"periods", reg.horizon.periods},
              {"period_days", reg.horizon.period_days}}},
            {"period_epoch", reg.period_epoch},
            {"taxonomy", reg.taxonomy},
            {"risks", risks}};
}

Register register_from_json(const json& j)
{
    const std::string where = "register";
    Register reg;
    reg.version = integer(field(j, "version", where), "register.version");
    if (reg.version != kSchemaVersion) {
        throw Error(ErrorCode::SchemaVersionMismatch, "register version " + std::to_string(reg.version) +
                                                          ", expected " + std::to_string(kSchemaVersion));
    }
    reg.created_at = text(field(j, "created_at", where), "register.created_at");
    const json& horizon = field(j, "horizon", where);
    reg.horizon.stage = text(field(horizon, "stage", "register.horizon"), "register.horizon.stage");
    reg.horizon.periods = integer(field(horizon, "periods", "register.horizon"), "register.horizon.periods");
    reg.horizon.period_days =
        number(field(horizon, "period_days", "register.horizon"), "register.horizon.period_days");
    reg.period_epoch = text(field(j, "period_epoch", where), "register.period_epoch");
    reg.taxonomy = strings(field(j, "taxonomy", where), "register.taxonomy");
    const json& risks = field(j, "risks", where);
    if (!risks.is_array()) {
        bad("register.risks", "expected an array");
    }
    for (std::size_t i = 0; i < risks.size(); ++i) {
        reg.risks.push_back(risk_from_json(risks[i], "register.risks[" + std::to_string(i) + "]"));
    }
    return reg;
}

json to_json(const RiskSnapshot& s)
{
    return {{"presence", to_string(s.presence)},
            {"band", to_string(s.band)},
            {"admissibility", to_string(s.admissibility)},
            {"score", s.score}};
}

RiskSnapshot snapshot_from_json(const json& j, const std::string& where)
{
    RiskSnapshot s;
    s.presence = enum_value(j, "presence", where, parse_presence);
    s.band = enum_value(j, "band", where, parse_band);
    s.admissibility = enum_value(j, "admissibility", where, parse_admissibility);
    s.score = number(field(j, "score", where), where + ".score");
    return s;
}

json to_json(const TransitionEvent& e)
{
    return {{"t", e.t},
            {"risk_id", e.risk_id},
            {"kind", to_string(e.kind)},
            {"before", to_json(e.before)},
            {"after", to_json(e.after)}};
}

json to_json(const LogEntry& e)
{
    return {{"seq", e.seq},
            {"t", optional_number(e.t)},
            {"wall_time", e.wall_time},
            {"risk_id", e.risk_id},
            {"kind", e.kind},
            {"before", e.before ? to_json(*e.before) : json(nullptr)},
            {"after", e.after ? to_json(*e.after) : json(nullptr)}};
}

LogEntry log_entry_from_json(const json& j, const std::string& where)
{
    LogEntry e;
    const json& seq = field(j, "seq", where);
    if (!seq.is_number_unsigned()) {
        bad(where + ".seq", "expected a non-negative integer");
    }
    e.seq = seq.get<std::size_t>();
    if (const json* t = optional_field(j, "t")) {
        e.t = number(*t, where + ".t");
    }
    e.wall_time = text(field(j, "wall_time", where), where + ".wall_time");
    e.risk_id = text(field(j, "risk_id", where), where + ".risk_id");
    e.kind = text(field(j, "kind", where), where + ".kind");
    if (const json* before = optional_field(j, "before")) {
        e.before = snapshot_from_json(*before, where + ".before");
    }
    if (const json* after = optional_field(j, "after")) {
        e.after = snapshot_from_json(*after, where + ".after");
    }
    return e;
}

json to_json(const TrendFit& fit)
{
    return {{"slope", fit.slope},
            {"intercept", fit.intercept},
            {"n", fit.n},
            {"t_last", fit.t_last},
            {"x_last", fit.x_last}};
}

json to_json(const AssessmentReport& report)
{
    json risks = json::array();
    for (const auto& e : report.risks) {
        json crossings = json::array();
        for (const auto& c : e.crossings) {
            crossings.push_back(to_json(c));
        }
        risks.push_back({{"id", e.id},
                         {"name", e.name},
                         {"sphere", e.sphere},
                         {"origin", to_string(e.origin)},
                         {"presence", to_string(e.presence)},
                         {"dynamics", to_string(e.dynamics)},
                         {"strategy", e.strategy},
                         {"critical_value", e.critical_value},
                         {"zone", to_string(e.zone)},
                         {"band", to_string(e.band)},
                         {"admissibility", to_string(e.admissibility)},
                         {"status", to_string(e.status)},
                         {"score", e.score},
                         {"score_display", format_sig12(e.score)},
                         {"priority_class", e.priority_class},
                         {"trend", e.trend ? to_json(*e.trend) : json(nullptr)},
                         {"crossings", crossings}});
    }
    json alerts = json::array();
    for (const auto& a : report.alerts) {
        alerts.push_back({{"kind", to_string(a.kind)},
                          {"risk_id", a.risk_id.empty() ? json(nullptr) : json(a.risk_id)},
                          {"threshold", a.threshold},
                          {"t", optional_number(a.t)},
                          {"message", a.message}});
    }
    return {{"R_v", report.sums.probable},
            {"R_c", report.sums.existing},
            {"R", report.sums.total},
            {"E_p", report.integral},
            {"display",
             {{"R_v", format_sig12(report.sums.probable)},
              {"R_c", format_sig12(report.sums.existing)},
              {"R", format_sig12(report.sums.total)},
              {"E_p", format_sig12(report.integral)}}},
            {"vulnerability_threshold", report.vulnerability_threshold},
            {"risks", risks},
            {"priorities", report.priorities},
            {"alerts", alerts},
            {"strategic_review", report.strategic_review}};
}

json to_json(const CycleReport& rep)
{
    json stages = json::array();
    for (const auto& s : rep.stages) {
        stages.push_back({{"index", s.index},
                          {"name", s.name},
                          {"complete", s.complete},
                          {"completed_at", s.complete ? json(s.completed_at) : json(nullptr)},
                          {"error", s.error.empty() ? json(nullptr) : json(s.error)}});
    }
    json spheres = json::array();
    for (const auto& g : rep.spheres) {
        spheres.push_back({{"sphere", g.sphere}, {"risk_ids", g.risk_ids}});
    }
    json trends = json::array();
    for (const auto& t : rep.sphere_trends) {
        trends.push_back({{"sphere", t.sphere},
                          {"risks", t.risks},
                          {"growing", t.growing},
                          {"declining", t.declining},
                          {"stable", t.stable},
                          {"with_trend", t.with_trend},
                          {"mean_slope", t.mean_slope}});
    }
    json vectors = json::array();
    for (const auto& v : rep.risk_vectors) {
        vectors.push_back({{"id", v.id},
                           {"magnitude", v.magnitude},
                           {"direction", to_string(v.direction)},
                           {"slope", optional_number(v.slope)}});
    }
    json table = json::array();
    for (const auto& row : rep.admissibility_table) {
        table.push_back({{"id", row.id},
                         {"origin", to_string(row.origin)},
                         {"presence", to_string(row.presence)},
                         {"band", to_string(row.band)},
                         {"driver", to_json(row.driver)},
                         {"strategy", row.strategy},
                         {"critical_value", row.critical_value},
                         {"admissibility", to_string(row.admissibility)}});
    }
    json ratings = json::array();
    for (const auto& r : rep.ratings) {
        ratings.push_back({{"id", r.id},
                           {"dynamics", to_string(r.dynamics)},
                           {"depends_on", r.depends_on},
                           {"dependents", r.dependents},
                           {"rating", r.rating}});
    }
    json monitoring = json::array();
    for (const auto& m : rep.monitoring) {
        json crossings = json::array();
        for (const auto& c : m.crossings) {
            crossings.push_back(to_json(c));
        }
        monitoring.push_back({{"id", m.id}, {"crossings", crossings}});
    }
    return {{"complete", rep.complete()},
            {"stages", stages},
            {"horizon", {{"stage", rep.horizon_stage}, {"periods", rep.horizon_periods}}},
            {"spheres", spheres},
            {"identified", rep.identified},
            {"sphere_trends", trends},
            {"risk_vectors", vectors},
            {"admissibility_table", table},
            {"ratings", ratings},
            {"mitigation_plan", rep.mitigation_plan},
            {"monitoring", monitoring}};
}

json to_json(const ImportResult& result)
{
    json rejected = json::array();
    for (const auto& r : result.rejected) {
        rejected.push_back({{"row", r.row},
                            {"code", error_slug(r.code)},
                            {"error", error_name(r.code)},
                            {"message", r.message}});
    }
    json events = json::array();
    for (const auto& e : result.events) {
        events.push_back(to_json(e));
    }
    return {{"accepted", result.accepted}, {"rejected", rejected}, {"events", events}};
}

WhatIfScenario scenario_from_json(const json& j)
{
    const std::string where = "scenario";
    WhatIfScenario s;
    if (!j.is_object()) {
        bad(where, "expected an object");
    }
    if (const json* label = optional_field(j, "label")) {
        s.label = text(*label, where + ".label");
    }
    if (const json* list = optional_field(j, "interventions")) {
        if (!list->is_array()) {
            bad(where + ".interventions", "expected an array");
        }
        for (std::size_t i = 0; i < list->size(); ++i) {
            const std::string at = where + ".interventions[" + std::to_string(i) + "]";
            const json& item = (*list)[i];
            Intervention iv;
            iv.risk_id = text(field(item, "risk_id", at), at + ".risk_id");
            if (const json* driver = optional_field(item, "driver")) {
                iv.driver = number(*driver, at + ".driver");
            }
            if (const json* remove = optional_field(item, "remove")) {
                if (!remove->is_boolean()) {
                    bad(at + ".remove", "expected a boolean");
                }
                iv.remove = remove->get<bool>();
            }
            s.interventions.push_back(iv);
        }
    }
    return s;
}

MetadataPatch patch_from_json(const json& j)
{
    const std::string where = "patch";
    if (!j.is_object()) {
        bad(where, "expected an object");
    }
    MetadataPatch p;
    if (const json* v = optional_field(j, "name")) {
        p.name = text(*v, where + ".name");
    }
    if (const json* v = optional_field(j, "sphere")) {
        p.sphere = text(*v, where + ".sphere");
    }
    if (optional_field(j, "origin") != nullptr) {
        p.origin = enum_value(j, "origin", where, parse_origin);
    }
    if (const json* v = optional_field(j, "dependencies")) {
        p.dependencies = strings(*v, where + ".dependencies");
    }
    return p;
}

} // namespace riskwarden
