#pragma once

#include "riskwarden/assessment.hpp"
#include "riskwarden/core.hpp"
#include "riskwarden/dynamics.hpp"
#include "riskwarden/error.hpp"

#include <cstddef>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace riskwarden {

inline constexpr int kSchemaVersion = 1;
inline constexpr double kDefaultPeriodDays = 30.0;

struct Horizon {
    std::string stage;
    int periods = 0;
    double period_days = kDefaultPeriodDays;

    friend bool operator==(const Horizon&, const Horizon&) = default;
};

struct Register {
    int version = kSchemaVersion;
    std::string created_at;
    Horizon horizon;
    std::string period_epoch;  // YYYY-MM-DD, anchors t = 0
    std::vector<std::string> taxonomy;
    std::vector<RiskRecord> risks;

    const RiskRecord* find(std::string_view id) const;
    RiskRecord* find(std::string_view id);

    friend bool operator==(const Register&, const Register&) = default;
};

// Structural checks applied on load: unique ids, resolvable dependencies,
// scores consistent with drivers, ordered histories.
void validate_register(const Register& reg);

// t = (date - period_epoch) in days / period_days.
double period_index(const Register& reg, std::string_view iso_date);

// Accepts a plain period number or an ISO-8601 date.
double resolve_period(const Register& reg, std::string_view text);

AssessmentOptions assessment_options(const Register& reg);
CycleConfig cycle_config(const Register& reg);

Register create_register(const std::filesystem::path& path, const Horizon& horizon,
                         std::vector<std::string> taxonomy, std::optional<std::string> period_epoch = {});

// Write-temp-then-rename.
void save_register(const Register& reg, const std::filesystem::path& path);
Register load_register(const std::filesystem::path& path);

// Test hook invoked after the temporary file is written and before it is
// renamed over the register. Pass an empty function to clear.
void set_persist_fault_hook(std::function<void(const std::filesystem::path& tmp)> hook);

std::filesystem::path event_log_path(const std::filesystem::path& register_path);
std::filesystem::path lock_path(const std::filesystem::path& register_path);

// One line of the append-only event log. Transition kinds use the dynamics
// names; other mutations use register_created, risk_added, risk_updated,
// risk_retired and observation_recorded.
struct LogEntry {
    std::size_t seq = 0;
    std::optional<double> t;
    std::string wall_time;
    std::string risk_id;
    std::string kind;
    std::optional<RiskSnapshot> before;
    std::optional<RiskSnapshot> after;

    friend bool operator==(const LogEntry&, const LogEntry&) = default;
};

// Entries with t >= since (entries without t are kept only when since is absent).
std::vector<LogEntry> read_event_log(const std::filesystem::path& register_path,
                                     std::optional<double> since = {});

// Advisory single-writer lock on <register>.lock.
class RegisterLock {
public:
    explicit RegisterLock(const std::filesystem::path& register_path);
    ~RegisterLock();
    RegisterLock(const RegisterLock&) = delete;
    RegisterLock& operator=(const RegisterLock&) = delete;
    RegisterLock(RegisterLock&& other) noexcept;
    RegisterLock& operator=(RegisterLock&&) = delete;

private:
    int fd_ = -1;
};

// Draft for add_risk: driver kind follows presence; existing risks default to
// the high band (occurrence probability 1).
RiskRecord draft_risk(std::string id, std::string name, std::string sphere, Origin origin, Presence presence,
                      double driver_value);

struct MetadataPatch {
    std::optional<std::string> name;
    std::optional<std::string> sphere;
    std::optional<Origin> origin;
    std::optional<std::vector<std::string>> dependencies;
};

struct ImportReject {
    std::size_t row = 0;  // 1-based data row
    ErrorCode code = ErrorCode::ParseError;
    std::string message;
};

struct ImportResult {
    std::size_t accepted = 0;
    std::vector<ImportReject> rejected;
    std::vector<TransitionEvent> events;
};

// Mutable shell around one register file. Every mutation persists the
// register atomically and appends to the event log. Callers serialise writers.
class RegisterStore {
public:
    static RegisterStore create(const std::filesystem::path& path, const Horizon& horizon,
                                std::vector<std::string> taxonomy, std::optional<std::string> period_epoch = {});
    static RegisterStore open(const std::filesystem::path& path);

    const Register& snapshot() const { return reg_; }
    const std::filesystem::path& path() const { return path_; }

    // `initial_t`, when given, records the driver as the first observation.
    const RiskRecord& add_risk(RiskRecord draft, std::optional<double> initial_t = {});
    const RiskRecord& update_risk_metadata(const std::string& id, const MetadataPatch& patch);
    const RiskRecord& retire_risk(const std::string& id);
    const RiskRecord& get_risk(const std::string& id) const;
    std::vector<RiskRecord> list_risks(bool active_only = false) const;

    std::vector<TransitionEvent> record_observation(const std::string& id, const Observation& obs);
    ImportResult import_observations(std::string_view csv);

    std::vector<LogEntry> events(std::optional<double> since = {}) const;

private:
    RegisterStore(std::filesystem::path path, Register reg);

    void check_dependencies(const std::string& id, const std::vector<std::string>& deps) const;
    void log(const std::vector<LogEntry>& entries);

    std::filesystem::path path_;
    Register reg_;
    std::size_t next_seq_ = 1;
};

// Minimal RFC 4180 reader: quoted fields, doubled quotes, CRLF.
std::vector<std::vector<std::string>> parse_csv(std::string_view text);

} // namespace riskwarden
