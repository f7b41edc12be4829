#include "riskwarden/registry.hpp"

#include "riskwarden/format.hpp"
#include "riskwarden/json_io.hpp"
#include "riskwarden/scoring.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <mutex>
#include <set>
#include <sstream>

#include <fcntl.h>
#include <sys/file.h>
#include <unistd.h>

namespace riskwarden {

namespace fs = std::filesystem;

namespace {

std::mutex g_hook_mutex;
std::function<void(const fs::path&)> g_fault_hook;

constexpr double kScoreTolerance = 1e-9;

[[noreturn]] void invalid(const std::string& where, const std::string& what)
{
    throw Error(ErrorCode::ParseError, where + ": " + what);
}

std::string read_file(const fs::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error(ErrorCode::IoError, "cannot open " + path.string());
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::size_t line_of(const std::string& text, std::size_t byte)
{
    const auto end = text.begin() + static_cast<std::ptrdiff_t>(std::min(byte, text.size()));
    return 1 + static_cast<std::size_t>(std::count(text.begin(), end, '\n'));
}

void write_log_lines(const fs::path& path, const std::vector<LogEntry>& entries, bool truncate_first)
{
    std::ofstream out(path, truncate_first ? std::ios::trunc : std::ios::app);
    if (!out) {
        throw Error(ErrorCode::IoError, "cannot open event log " + path.string());
    }
    for (const auto& e : entries) {
        out << to_json(e).dump() << '\n';
    }
    out.flush();
    if (!out) {
        throw Error(ErrorCode::IoError, "cannot write event log " + path.string());
    }
}

std::optional<double> last_t(const RiskRecord& r)
{
    if (r.history.empty()) {
        return std::nullopt;
    }
    return r.history.back().t;
}

// An observation_recorded entry followed by any transitions it caused.
std::vector<LogEntry> observation_entries(const RiskRecord& before, const Observation& obs,
                                          const ObservationOutcome& outcome)
{
    std::vector<LogEntry> out;
    LogEntry rec;
    rec.t = obs.t;
    rec.risk_id = before.id;
    rec.kind = "observation_recorded";
    rec.before = snapshot_of(before);
    rec.after = snapshot_of(outcome.risk);
    out.push_back(std::move(rec));
    for (const auto& ev : outcome.events) {
        LogEntry e;
        e.t = ev.t;
        e.risk_id = ev.risk_id;
        e.kind = std::string(to_string(ev.kind));
        e.before = ev.before;
        e.after = ev.after;
        out.push_back(std::move(e));
    }
    return out;
}

} // namespace

const RiskRecord* Register::find(std::string_view id) const
{
    auto it = std::ranges::find(risks, id, &RiskRecord::id);
    return it == risks.end() ? nullptr : &*it;
}

RiskRecord* Register::find(std::string_view id)
{
    auto it = std::ranges::find(risks, id, &RiskRecord::id);
    return it == risks.end() ? nullptr : &*it;
}

void validate_register(const Register& reg)
{
    if (reg.version != kSchemaVersion) {
        throw Error(ErrorCode::SchemaVersionMismatch, "register version " + std::to_string(reg.version));
    }
    if (reg.horizon.periods < 1) {
        invalid("register.horizon.periods", "must be at least 1");
    }
    if (!(reg.horizon.period_days > 0.0)) {
        invalid("register.horizon.period_days", "must be positive");
    }
    if (!parse_iso_days(reg.period_epoch)) {
        invalid("register.period_epoch", "not an ISO-8601 date");
    }
    std::set<std::string> ids;
    for (std::size_t i = 0; i < reg.risks.size(); ++i) {
        const RiskRecord& r = reg.risks[i];
        const std::string at = "register.risks[" + std::to_string(i) + "]";
        if (r.id.empty()) {
            invalid(at + ".id", "empty id");
        }
        if (!ids.insert(r.id).second) {
            invalid(at + ".id", "duplicate id '" + r.id + "'");
        }
    }
    for (std::size_t i = 0; i < reg.risks.size(); ++i) {
        const RiskRecord& r = reg.risks[i];
        const std::string at = "register.risks[" + std::to_string(i) + "]";
        for (std::size_t d = 0; d < r.dependencies.size(); ++d) {
            const std::string& dep = r.dependencies[d];
            if (dep == r.id || ids.count(dep) == 0) {
                invalid(at + ".dependencies[" + std::to_string(d) + "]", "unresolved dependency '" + dep + "'");
            }
        }
        if (r.driver.kind != driver_kind_for(r.presence)) {
            invalid(at + ".driver.kind", "does not match presence");
        }
        for (std::size_t h = 1; h < r.history.size(); ++h) {
            if (!(r.history[h].t > r.history[h - 1].t)) {
                invalid(at + ".history[" + std::to_string(h) + "].t", "periods must be strictly increasing");
            }
        }
        if (r.status == RiskStatus::Catastrophic &&
            (r.presence != Presence::Existing || r.score < kCatastrophicThreshold)) {
            invalid(at + ".status", "catastrophic risks must be existing with score >= 1");
        }
        RiskRecord check = r;
        try {
            rescore(check);
        } catch (const Error& e) {
            invalid(at + ".driver.value", e.what());
        }
        if (std::abs(check.score - r.score) > kScoreTolerance) {
            invalid(at + ".score", "inconsistent with driver (expected " + format_sig12(check.score) + ")");
        }
    }
}

double period_index(const Register& reg, std::string_view iso_date)
{
    const auto epoch = parse_iso_days(reg.period_epoch);
    const auto date = parse_iso_days(iso_date);
    if (!epoch || !date) {
        throw Error(ErrorCode::InvalidArgument, "'" + std::string(iso_date) + "' is not an ISO-8601 date");
    }
    return static_cast<double>(*date - *epoch) / reg.horizon.period_days;
}

double resolve_period(const Register& reg, std::string_view text)
{
    if (const auto v = parse_number(text)) {
        return *v;
    }
    if (parse_iso_days(text)) {
        return period_index(reg, text);
    }
    throw Error(ErrorCode::InvalidArgument, "'" + std::string(text) + "' is neither a period nor an ISO-8601 date");
}

RiskRecord draft_risk(std::string id, std::string name, std::string sphere, Origin origin, Presence presence,
                      double driver_value)
{
    RiskRecord r;
    r.id = std::move(id);
    r.name = std::move(name);
    r.sphere = std::move(sphere);
    r.origin = origin;
    r.presence = presence;
    r.driver = {driver_kind_for(presence), driver_value};
    r.band = presence == Presence::Existing ? ProbabilityBand::High : ProbabilityBand::Low;
    return r;
}

AssessmentOptions assessment_options(const Register& reg)
{
    AssessmentOptions opts;
    opts.horizon_periods = reg.horizon.periods;
    return opts;
}

CycleConfig cycle_config(const Register& reg)
{
    CycleConfig cfg;
    cfg.stage = reg.horizon.stage;
    cfg.periods = reg.horizon.periods;
    cfg.taxonomy = reg.taxonomy;
    return cfg;
}

Register create_register(const fs::path& path, const Horizon& horizon, std::vector<std::string> taxonomy,
                         std::optional<std::string> period_epoch)
{
    if (fs::exists(path)) {
        throw Error(ErrorCode::PathExists, path.string() + " already exists");
    }
    if (horizon.periods < 1) {
        throw Error(ErrorCode::InvalidHorizon, "horizon must span at least one period");
    }
    if (!(horizon.period_days > 0.0)) {
        throw Error(ErrorCode::InvalidHorizon, "period length must be positive");
    }
    Register reg;
    reg.created_at = iso_now();
    reg.horizon = horizon;
    reg.period_epoch = period_epoch ? *period_epoch : reg.created_at.substr(0, 10);
    if (!parse_iso_days(reg.period_epoch)) {
        throw Error(ErrorCode::InvalidArgument, "period epoch '" + reg.period_epoch + "' is not an ISO-8601 date");
    }
    reg.taxonomy = std::move(taxonomy);
    save_register(reg, path);

    LogEntry created;
    created.seq = 1;
    created.wall_time = reg.created_at;
    created.kind = "register_created";
    write_log_lines(event_log_path(path), {created}, true);
    return reg;
}

void save_register(const Register& reg, const fs::path& path)
{
    const fs::path tmp = path.string() + ".tmp";
    const std::string body = to_json(reg).dump(2) + "\n";
    {
        FILE* f = std::fopen(tmp.c_str(), "wb");
        if (f == nullptr) {
            throw Error(ErrorCode::IoError, "cannot write " + tmp.string());
        }
        const bool ok = std::fwrite(body.data(), 1, body.size(), f) == body.size() && std::fflush(f) == 0 &&
                        ::fsync(::fileno(f)) == 0;
        std::fclose(f);
        if (!ok) {
            throw Error(ErrorCode::IoError, "short write to " + tmp.string());
        }
    }
    {
        std::function<void(const fs::path&)> hook;
        {
            std::lock_guard lock(g_hook_mutex);
            hook = g_fault_hook;
        }
        if (hook) {
            hook(tmp);
        }
    }
    std::error_code ec;
    fs::rename(tmp, path, ec);
    if (ec) {
        throw Error(ErrorCode::IoError, "cannot replace " + path.string() + ": " + ec.message());
    }
}

Register load_register(const fs::path& path)
{
    if (!fs::exists(path)) {
        throw Error(ErrorCode::IoError, path.string() + " does not exist");
    }
    const std::string text = read_file(path);
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw Error(ErrorCode::ParseError,
                    path.string() + " line " + std::to_string(line_of(text, e.byte)) + ": " + e.what());
    }
    Register reg = register_from_json(doc);
    validate_register(reg);
    return reg;
}

void set_persist_fault_hook(std::function<void(const fs::path&)> hook)
{
    std::lock_guard lock(g_hook_mutex);
    g_fault_hook = std::move(hook);
}

fs::path event_log_path(const fs::path& register_path)
{
    return register_path.string() + ".events.jsonl";
}

fs::path lock_path(const fs::path& register_path)
{
    return register_path.string() + ".lock";
}

std::vector<LogEntry> read_event_log(const fs::path& register_path, std::optional<double> since)
{
    std::vector<LogEntry> out;
    const fs::path path = event_log_path(register_path);
    if (!fs::exists(path)) {
        return out;
    }
    std::ifstream in(path);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) {
            continue;
        }
        const std::string where = "events line " + std::to_string(lineno);
        LogEntry e;
        try {
            e = log_entry_from_json(json::parse(line), where);
        } catch (const json::parse_error& err) {
            throw Error(ErrorCode::ParseError, where + ": " + err.what());
        }
        if (since && !(e.t && *e.t >= *since)) {
            continue;
        }
        out.push_back(std::move(e));
    }
    return out;
}

RegisterLock::RegisterLock(const fs::path& register_path)
{
    const fs::path path = lock_path(register_path);
    fd_ = ::open(path.c_str(), O_CREAT | O_RDWR | O_CLOEXEC, 0644);
    if (fd_ < 0) {
        throw Error(ErrorCode::IoError, "cannot open lock file " + path.string());
    }
    if (::flock(fd_, LOCK_EX | LOCK_NB) != 0) {
        ::close(fd_);
        fd_ = -1;
        throw Error(ErrorCode::LockHeld, "another writer holds " + path.string());
    }
}

RegisterLock::~RegisterLock()
{
    if (fd_ >= 0) {
        ::flock(fd_, LOCK_UN);
        ::close(fd_);
    }
}

RegisterLock::RegisterLock(RegisterLock&& other) noexcept : fd_(other.fd_)
{
    other.fd_ = -1;
}

RegisterStore::RegisterStore(fs::path path, Register reg) : path_(std::move(path)), reg_(std::move(reg))
{
    const auto entries = read_event_log(path_);
    next_seq_ = entries.empty() ? 1 : entries.back().seq + 1;
}

RegisterStore RegisterStore::create(const fs::path& path, const Horizon& horizon, std::vector<std::string> taxonomy,
                                    std::optional<std::string> period_epoch)
{
    Register reg = create_register(path, horizon, std::move(taxonomy), std::move(period_epoch));
    return RegisterStore(path, std::move(reg));
}

RegisterStore RegisterStore::open(const fs::path& path)
{
    return RegisterStore(path, load_register(path));
}

const RiskRecord& RegisterStore::get_risk(const std::string& id) const
{
    const RiskRecord* r = reg_.find(id);
    if (r == nullptr) {
        throw Error(ErrorCode::UnknownRisk, "no risk '" + id + "'");
    }
    return *r;
}

std::vector<RiskRecord> RegisterStore::list_risks(bool active_only) const
{
    std::vector<RiskRecord> out;
    for (const auto& r : reg_.risks) {
        if (!active_only || r.is_active()) {
            out.push_back(r);
        }
    }
    return out;
}

void RegisterStore::check_dependencies(const std::string& id, const std::vector<std::string>& deps) const
{
    for (const auto& dep : deps) {
        if (dep == id) {
            throw Error(ErrorCode::DanglingDependency, "risk '" + id + "' depends on itself");
        }
        if (reg_.find(dep) == nullptr) {
            throw Error(ErrorCode::DanglingDependency, "risk '" + id + "' depends on unknown risk '" + dep + "'");
        }
    }
}

const RiskRecord& RegisterStore::add_risk(RiskRecord draft, std::optional<double> initial_t)
{
    if (reg_.find(draft.id) != nullptr) {
        throw Error(ErrorCode::DuplicateId, "risk '" + draft.id + "' already exists");
    }
    check_dependencies(draft.id, draft.dependencies);
    if (initial_t) {
        if (!std::isfinite(*initial_t)) {
            throw Error(ErrorCode::InvalidArgument, "initial period must be finite");
        }
        draft.history.push_back({*initial_t, draft.driver.kind, draft.driver.value, std::nullopt,
                                 ObservationFlag::None});
    }
    Register next = reg_;
    next.risks.push_back(initialize_risk(std::move(draft)));
    save_register(next, path_);
    reg_ = std::move(next);

    const RiskRecord& added = reg_.risks.back();
    LogEntry e;
    e.t = last_t(added);
    e.risk_id = added.id;
    e.kind = "risk_added";
    e.after = snapshot_of(added);
    log({e});
    return added;
}

const RiskRecord& RegisterStore::update_risk_metadata(const std::string& id, const MetadataPatch& patch)
{
    const RiskRecord& current = get_risk(id);
    RiskRecord updated = current;
    if (patch.name) {
        updated.name = *patch.name;
    }
    if (patch.sphere) {
        updated.sphere = *patch.sphere;
    }
    if (patch.origin) {
        updated.origin = *patch.origin;
    }
    if (patch.dependencies) {
        check_dependencies(id, *patch.dependencies);
        updated.dependencies = *patch.dependencies;
    }
    updated.admissibility = admissibility_of(updated);

    Register next = reg_;
    *next.find(id) = updated;
    save_register(next, path_);
    reg_ = std::move(next);

    LogEntry e;
    e.t = last_t(updated);
    e.risk_id = id;
    e.kind = "risk_updated";
    e.before = snapshot_of(current);
    e.after = snapshot_of(updated);
    log({e});
    return get_risk(id);
}

const RiskRecord& RegisterStore::retire_risk(const std::string& id)
{
    const RiskRecord& current = get_risk(id);
    if (!current.is_active()) {
        throw Error(ErrorCode::RiskNotActive, "risk '" + id + "' is already retired");
    }
    Register next = reg_;
    RiskRecord* r = next.find(id);
    r->status = RiskStatus::Retired;
    // A retired risk no longer carries the catastrophic floor.
    rescore(*r);
    save_register(next, path_);
    reg_ = std::move(next);

    const RiskRecord& retired = get_risk(id);
    LogEntry e;
    e.t = last_t(retired);
    e.risk_id = id;
    e.kind = "risk_retired";
    e.before = snapshot_of(retired);
    e.after = snapshot_of(retired);
    log({e});
    return retired;
}

std::vector<TransitionEvent> RegisterStore::record_observation(const std::string& id, const Observation& obs)
{
    const RiskRecord& current = get_risk(id);
    ObservationOutcome outcome = apply_observation(current, obs);
    const auto entries = observation_entries(current, obs, outcome);
    Register next = reg_;
    *next.find(id) = outcome.risk;
    save_register(next, path_);
    reg_ = std::move(next);
    log(entries);
    return outcome.events;
}

ImportResult RegisterStore::import_observations(std::string_view csv)
{
    const auto rows = parse_csv(csv);
    if (rows.empty()) {
        throw Error(ErrorCode::MalformedTable, "missing header row");
    }
    std::vector<std::string> header = rows.front();
    for (auto& h : header) {
        while (!h.empty() && (h.back() == ' ' || h.back() == '\t')) {
            h.pop_back();
        }
        h.erase(0, h.find_first_not_of(" \t"));
    }
    if (!header.empty() && header[0].starts_with("\xEF\xBB\xBF")) {
        header[0].erase(0, 3);
    }
    const std::vector<std::string> base{"risk_id", "t", "kind", "value"};
    const bool with_note = header.size() == 5 && header[4] == "note";
    if (!std::equal(base.begin(), base.end(), header.begin(), header.end() - (with_note ? 1 : 0))) {
        throw Error(ErrorCode::MalformedTable, "header must be risk_id,t,kind,value[,note]");
    }

    struct Row {
        std::size_t index;
        std::string risk_id;
        Observation obs;
    };
    ImportResult result;
    std::vector<Row> parsed;
    for (std::size_t i = 1; i < rows.size(); ++i) {
        const auto& fields = rows[i];
        if (fields.size() == 1 && fields[0].empty()) {
            continue;
        }
        try {
            if (fields.size() != header.size()) {
                throw Error(ErrorCode::ParseError, "expected " + std::to_string(header.size()) + " fields, got " +
                                                       std::to_string(fields.size()));
            }
            Row row{i, fields[0], {}};
            row.obs.t = resolve_period(reg_, fields[1]);
            try {
                row.obs.kind = parse_observation_kind(fields[2]);
            } catch (const Error& e) {
                throw Error(ErrorCode::ParseError, e.what());
            }
            const auto value = parse_number(fields[3]);
            if (!value) {
                throw Error(ErrorCode::ParseError, "value '" + fields[3] + "' is not a number");
            }
            row.obs.value = *value;
            if (with_note && !fields[4].empty()) {
                row.obs.note = fields[4];
            }
            parsed.push_back(std::move(row));
        } catch (const Error& e) {
            result.rejected.push_back({i, e.code(), e.what()});
        }
    }
    std::ranges::stable_sort(parsed, [](const Row& a, const Row& b) {
        if (a.risk_id != b.risk_id) {
            return a.risk_id < b.risk_id;
        }
        return a.obs.t < b.obs.t;
    });

    Register next = reg_;
    std::vector<LogEntry> entries;
    for (const Row& row : parsed) {
        try {
            RiskRecord* r = next.find(row.risk_id);
            if (r == nullptr) {
                throw Error(ErrorCode::UnknownRisk, "no risk '" + row.risk_id + "'");
            }
            ObservationOutcome outcome = apply_observation(*r, row.obs);
            const auto logged = observation_entries(*r, row.obs, outcome);
            entries.insert(entries.end(), logged.begin(), logged.end());
            *r = std::move(outcome.risk);
            ++result.accepted;
            result.events.insert(result.events.end(), outcome.events.begin(), outcome.events.end());
        } catch (const Error& e) {
            result.rejected.push_back({row.index, e.code(), e.what()});
        }
    }
    std::ranges::sort(result.rejected, {}, &ImportReject::row);

    if (result.accepted > 0) {
        save_register(next, path_);
        reg_ = std::move(next);
        log(entries);
    }
    return result;
}

std::vector<LogEntry> RegisterStore::events(std::optional<double> since) const
{
    return read_event_log(path_, since);
}

void RegisterStore::log(const std::vector<LogEntry>& entries)
{
    std::vector<LogEntry> stamped = entries;
    const std::string now = iso_now();
    for (auto& e : stamped) {
        e.seq = next_seq_++;
        e.wall_time = now;
    }
    write_log_lines(event_log_path(path_), stamped, false);
}

std::vector<std::vector<std::string>> parse_csv(std::string_view text)
{
    std::vector<std::vector<std::string>> rows;
    std::vector<std::string> row;
    std::string field;
    bool quoted = false;
    bool any = false;
    for (std::size_t i = 0; i < text.size(); ++i) {
        const char c = text[i];
        any = true;
        if (quoted) {
            if (c == '"') {
                if (i + 1 < text.size() && text[i + 1] == '"') {
                    field.push_back('"');
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                field.push_back(c);
            }
            continue;
        }
        if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            row.push_back(std::move(field));
            field.clear();
        } else if (c == '\n' || c == '\r') {
            if (c == '\r' && i + 1 < text.size() && text[i + 1] == '\n') {
                ++i;
            }
            row.push_back(std::move(field));
            field.clear();
            rows.push_back(std::move(row));
            row.clear();
            any = false;
        } else {
            field.push_back(c);
        }
    }
    if (quoted) {
        throw Error(ErrorCode::MalformedTable, "unterminated quoted field");
    }
    if (any) {
        row.push_back(std::move(field));
        rows.push_back(std::move(row));
    }
    return rows;
}

} // namespace riskwarden
