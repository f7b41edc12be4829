#include "riskwarden/cli.hpp"

#include "riskwarden/assessment.hpp"
#include "riskwarden/error.hpp"
#include "riskwarden/format.hpp"
#include "riskwarden/json_io.hpp"
#include "riskwarden/registry.hpp"
#include "riskwarden/service.hpp"

#include <CLI11.hpp>

#include <pthread.h>
#include <csignal>

#include <fstream>
#include <iomanip>
#include <sstream>
#include <thread>

namespace riskwarden {

namespace {

constexpr int kExitDomain = 1;
constexpr int kExitIo = 2;
constexpr int kExitUsage = 3;
constexpr std::size_t kNameWidth = 40;

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

std::vector<std::string> split_list(const std::string& text)
{
    std::vector<std::string> out;
    std::string item;
    std::istringstream in(text);
    while (std::getline(in, item, ',')) {
        if (!item.empty()) {
            out.push_back(item);
        }
    }
    return out;
}

double number_arg(const std::string& text, const char* flag)
{
    const auto v = parse_number(text);
    if (!v) {
        throw UsageError(std::string(flag) + ": not a number: " + text);
    }
    return *v;
}

std::string pad(std::string_view s, std::size_t width)
{
    std::string out(s);
    std::size_t cps = 0;
    for (unsigned char c : out) {
        cps += (c & 0xC0) != 0x80;
    }
    if (cps < width) {
        out.append(width - cps, ' ');
    }
    return out;
}

void print_report(const AssessmentReport& report, std::ostream& out)
{
    out << "R_v = " << format_sig12(report.sums.probable) << '\n';
    out << "R_c = " << format_sig12(report.sums.existing) << '\n';
    out << "R = " << format_sig12(report.sums.total) << '\n';
    out << "E_p = " << format_sig12(report.integral) << '\n';
    out << '\n';
    if (report.risks.empty()) {
        out << "(no risks)\n";
    } else {
        out << pad("id", 12) << ' ' << pad("name", kNameWidth) << ' ' << pad("strategy", 28) << ' '
            << pad("band", 6) << ' ' << pad("x", 16) << ' ' << pad("K", 16) << ' ' << pad("admissibility", 13)
            << " class\n";
        for (const auto& r : report.risks) {
            out << pad(r.id, 12) << ' ' << pad(truncate(r.name, kNameWidth), kNameWidth) << ' '
                << pad(r.strategy, 28) << ' ' << pad(to_string(r.band), 6) << ' '
                << pad(format_sig12(r.score), 16) << ' ' << pad(format_sig12(r.critical_value), 16) << ' '
                << pad(to_string(r.admissibility), 13) << ' '
                << (r.priority_class > 0 ? std::to_string(r.priority_class) : "-") << '\n';
        }
    }
    out << "\npriorities:";
    for (std::size_t i = 0; i < report.priorities.size(); ++i) {
        out << (i == 0 ? " " : ", ") << report.priorities[i];
    }
    out << "\n\nalerts:\n";
    if (report.alerts.empty()) {
        out << "  none\n";
    }
    for (const auto& a : report.alerts) {
        out << "  [" << to_string(a.kind) << "] " << a.message << '\n';
    }
    out << "\nstrategic review:";
    if (report.strategic_review.empty()) {
        out << " none";
    }
    for (std::size_t i = 0; i < report.strategic_review.size(); ++i) {
        out << (i == 0 ? " " : ", ") << report.strategic_review[i];
    }
    out << '\n';
}

void emit_report(const AssessmentReport& report, const std::string& format, std::ostream& out)
{
    if (format == "structured") {
        out << to_json(report).dump(2) << '\n';
    } else {
        print_report(report, out);
    }
}

WhatIfScenario scenario_from_flags(const std::vector<std::string>& sets, const std::vector<std::string>& removes)
{
    WhatIfScenario scenario;
    scenario.label = "cli";
    for (const auto& group : sets) {
        for (const auto& item : split_list(group)) {
            const auto eq = item.find('=');
            if (eq == std::string::npos || eq == 0) {
                throw UsageError("--set expects id=VALUE, got '" + item + "'");
            }
            scenario.interventions.push_back({item.substr(0, eq), number_arg(item.substr(eq + 1), "--set"), false});
        }
    }
    for (const auto& group : removes) {
        for (const auto& id : split_list(group)) {
            scenario.interventions.push_back({id, std::nullopt, true});
        }
    }
    return scenario;
}

int serve(const std::filesystem::path& register_path, const std::string& addr, const std::string& cors,
          std::ostream& err)
{
    const auto [host, port] = parse_bind_address(addr);

    // Signals are taken synchronously on a watcher thread; every other
    // thread (including the server pool) inherits the blocked mask.
    sigset_t set;
    sigemptyset(&set);
    sigaddset(&set, SIGINT);
    sigaddset(&set, SIGTERM);
    sigaddset(&set, SIGUSR1);
    sigset_t previous;
    pthread_sigmask(SIG_BLOCK, &set, &previous);

    int status = 0;
    try {
        Service service(ServiceConfig{register_path, cors});
        const int bound = service.bind(host, port);
        err << "riskwarden: serving " << register_path.string() << " on " << host << ':' << bound << std::endl;

        std::thread watcher([&service, set] {
            int sig = 0;
            sigwait(&set, &sig);
            service.stop();
        });
        service.listen();
        pthread_kill(watcher.native_handle(), SIGUSR1);
        watcher.join();
        err << "riskwarden: stopped" << std::endl;
    } catch (...) {
        pthread_sigmask(SIG_SETMASK, &previous, nullptr);
        throw;
    }
    pthread_sigmask(SIG_SETMASK, &previous, nullptr);
    return status;
}

std::string env_or(const char* name, std::string fallback)
{
    const char* v = std::getenv(name);
    return (v != nullptr && *v != '\0') ? std::string(v) : fallback;
}

} // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err)
{
    CLI::App app{"Proactive risk register: scoring, forecasting and integral vulnerability.", "riskwarden"};
    // Subcommands inherit this, so --register may follow the subcommand name.
    app.fallthrough();
    app.require_subcommand(1);

    std::string register_path = env_or("RISKWARDEN_REGISTER", "");
    app.add_option("--register", register_path, "register file (default: $RISKWARDEN_REGISTER)");

    const std::vector<std::string> origins{"external", "internal"};
    const std::vector<std::string> presences{"probable", "existing"};
    const std::vector<std::string> formats{"table", "structured"};

    auto* init = app.add_subcommand("init", "create an empty register");
    std::string stage;
    int periods = 0;
    double period_days = kDefaultPeriodDays;
    std::string taxonomy;
    std::string epoch;
    init->add_option("--stage", stage, "project stage label")->required();
    init->add_option("--periods", periods, "horizon length in periods")->required();
    init->add_option("--period-days", period_days, "days per period");
    init->add_option("--taxonomy", taxonomy, "comma-separated sphere labels");
    init->add_option("--epoch", epoch, "date of period 0 (YYYY-MM-DD, default today)");

    auto* add = app.add_subcommand("add", "add a risk (mutating)");
    std::string id, name, origin, presence, sphere, depends, driver, at, dynamics, band;
    add->add_option("--id", id)->required();
    add->add_option("--name", name)->required();
    add->add_option("--origin", origin)->required()->check(CLI::IsMember(origins));
    add->add_option("--presence", presence)->required()->check(CLI::IsMember(presences));
    add->add_option("--sphere", sphere)->required();
    add->add_option("--depends", depends, "comma-separated risk ids");
    add->add_option("--driver", driver, "probability (probable) or severity (existing)")->required();
    add->add_option("--t", at, "record the driver as an observation at this period or date");
    add->add_option("--dynamics", dynamics)->check(CLI::IsMember({"growing", "declining", "stable"}));
    add->add_option("--band", band, "existing risks only")->check(CLI::IsMember({"low", "medium", "high"}));

    auto* observe = app.add_subcommand("observe", "record one observation (mutating)");
    std::string kind, value, note, flag;
    observe->add_option("--id", id)->required();
    observe->add_option("--t", at, "period number or YYYY-MM-DD")->required();
    observe->add_option("--kind", kind)->required()->check(CLI::IsMember({"probability", "severity"}));
    observe->add_option("--value", value)->required();
    observe->add_option("--note", note);
    observe->add_option("--flag", flag)->check(CLI::IsMember({"materialized", "catastrophic"}));

    auto* import = app.add_subcommand("import", "import observations from CSV (mutating)");
    std::string csv_path;
    import->add_option("file", csv_path, "CSV with header risk_id,t,kind,value[,note]")->required();

    auto* assess_cmd = app.add_subcommand("assess", "assess the register");
    std::string format = "table";
    assess_cmd->add_option("--format", format)->check(CLI::IsMember(formats));

    auto* whatif = app.add_subcommand("whatif", "assess a hypothetical scenario; never persists");
    std::vector<std::string> sets, removes;
    whatif->add_option("--set", sets, "id=VALUE[,id=VALUE...]");
    whatif->add_option("--remove", removes, "id[,id...]");
    whatif->add_option("--format", format)->check(CLI::IsMember(formats));

    auto* cycle = app.add_subcommand("cycle", "run the nine-stage assessment cycle");

    auto* events = app.add_subcommand("events", "print the event log as JSON lines");
    std::string since;
    events->add_option("--since", since, "period number or YYYY-MM-DD");

    auto* serve_cmd = app.add_subcommand("serve", "run the HTTP service");
    std::string addr = env_or("RISKWARDEN_ADDR", "127.0.0.1:8080");
    std::string cors = env_or("RISKWARDEN_CORS_ORIGIN", "");
    serve_cmd->add_option("--addr", addr, "HOST:PORT (default: $RISKWARDEN_ADDR or 127.0.0.1:8080)");
    serve_cmd->add_option("--cors-origin", cors, "allowed dashboard origin (default: $RISKWARDEN_CORS_ORIGIN)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? 0 : kExitUsage;
    }

    try {
        if (register_path.empty()) {
            throw UsageError("--register is required (or set RISKWARDEN_REGISTER)");
        }
        const std::filesystem::path path(register_path);

        if (init->parsed()) {
            RegisterLock lock(path);
            const Register reg = create_register(path, Horizon{stage, periods, period_days}, split_list(taxonomy),
                                                 epoch.empty() ? std::nullopt : std::optional<std::string>(epoch));
            out << "created " << path.string() << " (stage " << reg.horizon.stage << ", " << reg.horizon.periods
                << " periods, epoch " << reg.period_epoch << ")\n";
            return 0;
        }
        if (add->parsed()) {
            RegisterLock lock(path);
            RegisterStore store = RegisterStore::open(path);
            RiskRecord draft = draft_risk(id, name, sphere, parse_origin(origin), parse_presence(presence),
                                          number_arg(driver, "--driver"));
            draft.dependencies = split_list(depends);
            if (!dynamics.empty()) {
                draft.dynamics = parse_dynamics(dynamics);
            }
            if (!band.empty() && draft.presence == Presence::Existing) {
                draft.band = parse_band(band);
            }
            std::optional<double> initial_t;
            if (!at.empty()) {
                initial_t = resolve_period(store.snapshot(), at);
            }
            out << to_json(store.add_risk(std::move(draft), initial_t)).dump(2) << '\n';
            return 0;
        }
        if (observe->parsed()) {
            RegisterLock lock(path);
            RegisterStore store = RegisterStore::open(path);
            Observation obs;
            obs.t = resolve_period(store.snapshot(), at);
            obs.kind = parse_observation_kind(kind);
            obs.value = number_arg(value, "--value");
            if (!note.empty()) {
                obs.note = note;
            }
            if (!flag.empty()) {
                obs.flag = parse_observation_flag(flag);
            }
            const auto emitted = store.record_observation(id, obs);
            json result{{"id", id}, {"score", store.get_risk(id).score},
                        {"score_display", format_sig12(store.get_risk(id).score)}, {"events", json::array()}};
            for (const auto& e : emitted) {
                result["events"].push_back(to_json(e));
            }
            out << result.dump(2) << '\n';
            return 0;
        }
        if (import->parsed()) {
            std::ifstream in(csv_path, std::ios::binary);
            if (!in) {
                throw Error(ErrorCode::IoError, "cannot read " + csv_path);
            }
            std::ostringstream text;
            text << in.rdbuf();
            RegisterLock lock(path);
            RegisterStore store = RegisterStore::open(path);
            const ImportResult result = store.import_observations(text.str());
            out << to_json(result).dump(2) << '\n';
            if (!result.rejected.empty()) {
                err << "riskwarden: " << result.rejected.size() << " row(s) rejected\n";
            }
            return 0;
        }
        if (assess_cmd->parsed()) {
            const Register reg = load_register(path);
            emit_report(assess(reg.risks, assessment_options(reg)), format, out);
            return 0;
        }
        if (whatif->parsed()) {
            const Register reg = load_register(path);
            const WhatIfScenario scenario = scenario_from_flags(sets, removes);
            emit_report(what_if(reg.risks, scenario, assessment_options(reg)), format, out);
            return 0;
        }
        if (cycle->parsed()) {
            const Register reg = load_register(path);
            const CycleReport report = run_cycle(reg.risks, cycle_config(reg));
            out << to_json(report).dump(2) << '\n';
            if (!report.complete()) {
                for (const auto& s : report.stages) {
                    if (!s.error.empty()) {
                        err << "riskwarden: stage " << s.index << " (" << s.name << "): " << s.error << '\n';
                    }
                }
                return kExitDomain;
            }
            return 0;
        }
        if (events->parsed()) {
            std::optional<double> from;
            if (!since.empty()) {
                from = resolve_period(load_register(path), since);
            }
            for (const auto& e : read_event_log(path, from)) {
                out << to_json(e).dump() << '\n';
            }
            return 0;
        }
        if (serve_cmd->parsed()) {
            return serve(path, addr, cors, err);
        }
    } catch (const UsageError& e) {
        err << "riskwarden: " << e.what() << '\n';
        return kExitUsage;
    } catch (const Error& e) {
        err << "riskwarden: " << e.what() << '\n';
        return error_class(e.code()) == ErrorClass::Io ? kExitIo : kExitDomain;
    } catch (const std::exception& e) {
        err << "riskwarden: " << e.what() << '\n';
        return kExitIo;
    }
    return kExitUsage;
}

} // namespace riskwarden
