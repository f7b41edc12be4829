#include "riskwarden/service.hpp"

#include "riskwarden/assessment.hpp"
#include "riskwarden/error.hpp"
#include "riskwarden/format.hpp"
#include "riskwarden/json_io.hpp"
#include "riskwarden/registry.hpp"

#include <httplib.h>

#include <mutex>
#include <optional>

#include <sys/socket.h>

namespace riskwarden {

namespace {

int http_status(ErrorCode code)
{
    switch (code) {
    case ErrorCode::UnknownRisk: return 404;
    case ErrorCode::DuplicateId:
    case ErrorCode::RiskNotActive:
    case ErrorCode::LockHeld: return 409;
    case ErrorCode::ParseError:
    case ErrorCode::MalformedTable:
    case ErrorCode::InvalidArgument: return 400;
    case ErrorCode::IoError:
    case ErrorCode::SchemaVersionMismatch:
    case ErrorCode::BindFailure: return 500;
    default: return 422;
    }
}

void send_json(httplib::Response& res, const json& body, int status = 200)
{
    res.status = status;
    res.set_content(body.dump(), "application/json");
}

void send_error(httplib::Response& res, int status, std::string_view code, std::string_view name,
                const std::string& message)
{
    send_json(res, {{"error", {{"code", code}, {"name", name}, {"message", message}}}}, status);
}

void send_error(httplib::Response& res, const Error& e)
{
    send_error(res, http_status(e.code()), error_slug(e.code()), error_name(e.code()), e.what());
}

json parse_body(const httplib::Request& req)
{
    try {
        return json::parse(req.body);
    } catch (const json::parse_error& e) {
        throw Error(ErrorCode::ParseError, std::string("request body: ") + e.what());
    }
}

template <class F>
httplib::Server::Handler guarded(F f)
{
    return [f](const httplib::Request& req, httplib::Response& res) {
        try {
            f(req, res);
        } catch (const Error& e) {
            send_error(res, e);
        } catch (const json::exception& e) {
            send_error(res, Error(ErrorCode::ParseError, e.what()));
        } catch (const std::exception& e) {
            send_error(res, 500, "internal", "Internal", e.what());
        }
    };
}

double period_from(const Register& reg, const json& v, const std::string& where)
{
    if (v.is_number()) {
        return v.get<double>();
    }
    if (v.is_string()) {
        return resolve_period(reg, v.get<std::string>());
    }
    throw Error(ErrorCode::ParseError, where + ": expected a period number or ISO-8601 date");
}

RiskRecord draft_from_json(const json& j, std::optional<double>& initial_t, const Register& reg)
{
    if (!j.is_object()) {
        throw Error(ErrorCode::ParseError, "risk: expected an object");
    }
    auto required = [&](const char* key) -> const json& {
        auto it = j.find(key);
        if (it == j.end()) {
            throw Error(ErrorCode::ParseError, std::string("risk.") + key + ": missing field");
        }
        return *it;
    };
    const std::string id = required("id").get<std::string>();
    const std::string name = j.value("name", id);
    const std::string sphere = required("sphere").get<std::string>();
    const Origin origin = parse_origin(required("origin").get<std::string>());
    const Presence presence = parse_presence(required("presence").get<std::string>());
    const json& driver = required("driver");
    const double value = driver.is_object() ? driver.at("value").get<double>() : driver.get<double>();

    RiskRecord draft = draft_risk(id, name, sphere, origin, presence, value);
    if (j.contains("dynamics")) {
        draft.dynamics = parse_dynamics(j.at("dynamics").get<std::string>());
    }
    if (j.contains("band") && presence == Presence::Existing) {
        draft.band = parse_band(j.at("band").get<std::string>());
    }
    if (j.contains("dependencies")) {
        draft.dependencies = j.at("dependencies").get<std::vector<std::string>>();
    }
    if (j.contains("t") && !j.at("t").is_null()) {
        initial_t = period_from(reg, j.at("t"), "risk.t");
    }
    return draft;
}

std::optional<std::size_t> size_param(const httplib::Request& req, const char* key)
{
    if (!req.has_param(key)) {
        return std::nullopt;
    }
    const auto v = parse_number(req.get_param_value(key));
    if (!v || *v < 0 || *v != static_cast<double>(static_cast<std::size_t>(*v))) {
        throw Error(ErrorCode::InvalidArgument, std::string(key) + " must be a non-negative integer");
    }
    return static_cast<std::size_t>(*v);
}

constexpr std::size_t kPageThreshold = 10000;

} // namespace

std::pair<std::string, int> parse_bind_address(std::string_view address)
{
    const auto colon = address.rfind(':');
    if (colon == std::string_view::npos || colon == 0) {
        throw Error(ErrorCode::InvalidArgument, "address must be HOST:PORT");
    }
    const auto port = parse_number(address.substr(colon + 1));
    if (!port || *port < 0 || *port > 65535 || *port != static_cast<int>(*port)) {
        throw Error(ErrorCode::InvalidArgument, "invalid port in '" + std::string(address) + "'");
    }
    return {std::string(address.substr(0, colon)), static_cast<int>(*port)};
}

struct Service::Impl {
    explicit Impl(ServiceConfig cfg)
        : config(std::move(cfg)),
          lock(config.register_path),
          store(RegisterStore::open(config.register_path)),
          current(std::make_shared<const Register>(store.snapshot()))
    {
        // Plain SO_REUSEADDR; port sharing would hide an occupied address.
        server.set_socket_options([](socket_t sock) {
            int yes = 1;
            ::setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, &yes, sizeof yes);
        });
        routes();
    }

    std::shared_ptr<const Register> snapshot() const
    {
        std::lock_guard guard(publish_mutex);
        return current;
    }

    // Runs a mutation under the writer lock, then publishes the new snapshot.
    template <class F>
    auto mutate(F f)
    {
        std::lock_guard writer(writer_mutex);
        auto publish = [&] {
            auto next = std::make_shared<const Register>(store.snapshot());
            std::lock_guard guard(publish_mutex);
            current = std::move(next);
        };
        if constexpr (std::is_void_v<decltype(f(store))>) {
            f(store);
            publish();
        } else {
            auto result = f(store);
            publish();
            return result;
        }
    }

    void routes();

    ServiceConfig config;
    RegisterLock lock;
    RegisterStore store;
    httplib::Server server;

    std::mutex writer_mutex;
    mutable std::mutex publish_mutex;
    std::shared_ptr<const Register> current;
};

void Service::Impl::routes()
{
    server.Get("/healthz", guarded([](const httplib::Request&, httplib::Response& res) {
        send_json(res, {{"status", "ok"}});
    }));

    server.Get("/risks", guarded([this](const httplib::Request& req, httplib::Response& res) {
        const auto reg = snapshot();
        const bool active_only = req.has_param("active") && req.get_param_value("active") == "true";
        std::vector<const RiskRecord*> selected;
        for (const auto& r : reg->risks) {
            if (!active_only || r.is_active()) {
                selected.push_back(&r);
            }
        }
        const std::size_t offset = std::min(size_param(req, "offset").value_or(0), selected.size());
        const auto limit_param = size_param(req, "limit");
        std::size_t limit = limit_param.value_or(selected.size() > kPageThreshold ? kPageThreshold : selected.size());
        limit = std::min(limit, selected.size() - offset);
        json risks = json::array();
        for (std::size_t i = offset; i < offset + limit; ++i) {
            risks.push_back(to_json(*selected[i]));
        }
        send_json(res, {{"total", selected.size()}, {"offset", offset}, {"limit", limit}, {"risks", risks}});
    }));

    server.Get(R"(/risks/([^/]+))", guarded([this](const httplib::Request& req, httplib::Response& res) {
        const auto reg = snapshot();
        const RiskRecord* r = reg->find(req.matches[1].str());
        if (r == nullptr) {
            throw Error(ErrorCode::UnknownRisk, "no risk '" + req.matches[1].str() + "'");
        }
        send_json(res, to_json(*r));
    }));

    server.Post("/risks", guarded([this](const httplib::Request& req, httplib::Response& res) {
        const json body = parse_body(req);
        const json added = mutate([&](RegisterStore& s) {
            std::optional<double> initial_t;
            RiskRecord draft = draft_from_json(body, initial_t, s.snapshot());
            return to_json(s.add_risk(std::move(draft), initial_t));
        });
        send_json(res, added, 201);
    }));

    server.Patch(R"(/risks/([^/]+))", guarded([this](const httplib::Request& req, httplib::Response& res) {
        const MetadataPatch patch = patch_from_json(parse_body(req));
        const std::string id = req.matches[1].str();
        send_json(res, mutate([&](RegisterStore& s) { return to_json(s.update_risk_metadata(id, patch)); }));
    }));

    server.Post(R"(/risks/([^/]+)/retire)", guarded([this](const httplib::Request& req, httplib::Response& res) {
        const std::string id = req.matches[1].str();
        send_json(res, mutate([&](RegisterStore& s) { return to_json(s.retire_risk(id)); }));
    }));

    server.Post(R"(/risks/([^/]+)/observations)",
                guarded([this](const httplib::Request& req, httplib::Response& res) {
                    const std::string id = req.matches[1].str();
                    json body = parse_body(req);
                    const json events = mutate([&](RegisterStore& s) {
                        if (body.is_object() && body.contains("t")) {
                            body["t"] = period_from(s.snapshot(), body["t"], "observation.t");
                        }
                        const Observation obs = observation_from_json(body);
                        json out = json::array();
                        for (const auto& e : s.record_observation(id, obs)) {
                            out.push_back(to_json(e));
                        }
                        return out;
                    });
                    send_json(res, {{"events", events}});
                }));

    server.Post("/observations/import", guarded([this](const httplib::Request& req, httplib::Response& res) {
        send_json(res, mutate([&](RegisterStore& s) { return to_json(s.import_observations(req.body)); }));
    }));

    server.Get("/assessment", guarded([this](const httplib::Request&, httplib::Response& res) {
        const auto reg = snapshot();
        send_json(res, to_json(assess(reg->risks, assessment_options(*reg))));
    }));

    server.Post("/whatif", guarded([this](const httplib::Request& req, httplib::Response& res) {
        const WhatIfScenario scenario = scenario_from_json(parse_body(req));
        const auto reg = snapshot();
        json report = to_json(what_if(reg->risks, scenario, assessment_options(*reg)));
        report["label"] = scenario.label;
        report["hypothetical"] = true;
        send_json(res, report);
    }));

    server.Post("/cycle", guarded([this](const httplib::Request& req, httplib::Response& res) {
        const auto reg = snapshot();
        CycleConfig cfg = cycle_config(*reg);
        if (!req.body.empty()) {
            const json body = parse_body(req);
            if (body.contains("stage")) {
                cfg.stage = body.at("stage").get<std::string>();
            }
            if (body.contains("periods")) {
                cfg.periods = body.at("periods").get<int>();
            }
            if (body.contains("taxonomy")) {
                cfg.taxonomy = body.at("taxonomy").get<std::vector<std::string>>();
            }
        }
        send_json(res, to_json(run_cycle(reg->risks, cfg)));
    }));

    server.Get("/events", guarded([this](const httplib::Request& req, httplib::Response& res) {
        std::optional<double> since;
        if (req.has_param("since")) {
            since = parse_number(req.get_param_value("since"));
            if (!since) {
                throw Error(ErrorCode::InvalidArgument, "since must be a period number");
            }
        }
        const auto after_seq = size_param(req, "after_seq");
        std::vector<LogEntry> entries;
        {
            std::lock_guard writer(writer_mutex);
            entries = store.events(since);
        }
        json out = json::array();
        for (const auto& e : entries) {
            if (!after_seq || e.seq > *after_seq) {
                out.push_back(to_json(e));
            }
        }
        send_json(res, {{"events", out}});
    }));

    server.set_error_handler([](const httplib::Request&, httplib::Response& res) {
        if (res.body.empty()) {
            if (res.status == 404) {
                send_error(res, 404, "not_found", "NotFound", "no such route");
            } else {
                send_error(res, res.status, "http_error", "HttpError", httplib::status_message(res.status));
            }
        }
    });

    if (!config.cors_origin.empty()) {
        const std::string origin = config.cors_origin;
        server.set_post_routing_handler([origin](const httplib::Request&, httplib::Response& res) {
            res.set_header("Access-Control-Allow-Origin", origin);
            res.set_header("Access-Control-Allow-Methods", "GET, POST, PATCH, OPTIONS");
            res.set_header("Access-Control-Allow-Headers", "Content-Type");
        });
        server.Options(R"(.*)", [](const httplib::Request&, httplib::Response& res) { res.status = 204; });
    }
}

Service::Service(ServiceConfig config) : impl_(std::make_unique<Impl>(std::move(config))) {}

Service::~Service()
{
    stop();
}

int Service::bind(const std::string& host, int port)
{
    if (port == 0) {
        const int bound = impl_->server.bind_to_any_port(host);
        if (bound < 0) {
            throw Error(ErrorCode::BindFailure, "cannot bind " + host);
        }
        return bound;
    }
    if (!impl_->server.bind_to_port(host, port)) {
        throw Error(ErrorCode::BindFailure, "cannot bind " + host + ":" + std::to_string(port));
    }
    return port;
}

void Service::listen()
{
    impl_->server.listen_after_bind();
}

void Service::stop()
{
    if (impl_ && impl_->server.is_running()) {
        impl_->server.stop();
    }
    // Mutations hold the writer lock until persisted; taking it drains them.
    if (impl_) {
        std::lock_guard writer(impl_->writer_mutex);
    }
}

void Service::wait_until_ready() const
{
    impl_->server.wait_until_ready();
}

} // namespace riskwarden
