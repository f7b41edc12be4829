#pragma once

#include "riskwarden/core.hpp"
#include "riskwarden/dynamics.hpp"
#include "riskwarden/registry.hpp"

#include <filesystem>
#include <random>
#include <string>
#include <vector>

namespace rwtest {

namespace fs = std::filesystem;
using namespace riskwarden;

// Scratch directory removed on scope exit.
class TempDir {
public:
    TempDir()
    {
        static std::mt19937_64 names(std::random_device{}());
        path_ = fs::temp_directory_path() / ("riskwarden-test-" + std::to_string(names()));
        fs::create_directories(path_);
    }
    ~TempDir()
    {
        std::error_code ec;
        fs::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const fs::path& path() const { return path_; }
    fs::path operator/(const std::string& name) const { return path_ / name; }

private:
    fs::path path_;
};

inline fs::path fixture(const std::string& name)
{
    return fs::path(RISKWARDEN_FIXTURES) / name;
}

// Copies a fixture register into `dir` and returns the copy's path.
inline fs::path copy_fixture(const TempDir& dir, const std::string& name)
{
    const fs::path dst = dir / name;
    fs::copy_file(fixture(name), dst);
    return dst;
}

// Hand-built record, bypassing initialize_risk: scores are taken as given.
inline RiskRecord record(std::string id, Presence presence, Dynamics dynamics, double score,
                         ProbabilityBand band = ProbabilityBand::Medium, Origin origin = Origin::Internal)
{
    RiskRecord r;
    r.id = std::move(id);
    r.name = r.id;
    r.sphere = "operations";
    r.origin = origin;
    r.presence = presence;
    r.dynamics = dynamics;
    r.band = band;
    r.score = score;
    r.driver = {driver_kind_for(presence), 0.5};
    r.status = RiskStatus::Active;
    r.admissibility = admissibility_of(r);
    return r;
}

inline RiskRecord probable(std::string id, double y, Dynamics d = Dynamics::Growing, Origin o = Origin::External)
{
    RiskRecord draft = draft_risk(std::move(id), "probable risk", "operations", o, Presence::Probable, y);
    draft.dynamics = d;
    return initialize_risk(std::move(draft));
}

inline RiskRecord existing(std::string id, double s, Dynamics d = Dynamics::Growing, Origin o = Origin::External)
{
    RiskRecord draft = draft_risk(std::move(id), "existing risk", "operations", o, Presence::Existing, s);
    draft.dynamics = d;
    return initialize_risk(std::move(draft));
}

// Random register of up to `max_risks` risks built from independent draws,
// mixing probable/existing, both dynamics, both origins, insignificant and
// retired entries. Scores are set directly so the pure aggregation
// operations can be checked against independent oracles.
inline std::vector<RiskRecord> random_records(std::mt19937_64& rng, std::size_t max_risks = 20)
{
    std::uniform_int_distribution<std::size_t> count(0, max_risks);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const std::size_t n = count(rng);
    std::vector<RiskRecord> out;
    for (std::size_t i = 0; i < n; ++i) {
        const Presence p = unit(rng) < 0.5 ? Presence::Probable : Presence::Existing;
        const double roll = unit(rng);
        const Dynamics d = roll < 0.4 ? Dynamics::Growing : roll < 0.8 ? Dynamics::Declining : Dynamics::Stable;
        const auto band = static_cast<ProbabilityBand>(static_cast<int>(unit(rng) * 3.0) % 3);
        const Origin o = unit(rng) < 0.5 ? Origin::External : Origin::Internal;
        double x = 0.0;
        const double kind = unit(rng);
        if (kind < 0.15) {
            x = 0.0;
        } else if (kind < 0.25) {
            x = -unit(rng);
        } else if (p == Presence::Existing) {
            x = 0.5 + 0.49 * unit(rng);
        } else {
            x = 1.99 * unit(rng);
        }
        RiskRecord r = record("R" + std::to_string(i), p, d, x, band, o);
        if (unit(rng) < 0.1) {
            r.status = RiskStatus::Retired;
        }
        out.push_back(std::move(r));
    }
    return out;
}

} // namespace rwtest
