#pragma once

#include <filesystem>
#include <memory>
#include <string>
#include <string_view>
#include <utility>

namespace riskwarden {

struct ServiceConfig {
    std::filesystem::path register_path;
    std::string cors_origin;  // empty disables CORS headers
};

// host:port -> (host, port). Throws InvalidArgument.
std::pair<std::string, int> parse_bind_address(std::string_view address);

// HTTP facade over one register. Reads run on immutable snapshots; mutations
// are serialised through a single writer and persisted before responding.
class Service {
public:
    // Loads the register and takes the writer lock; load errors surface here.
    explicit Service(ServiceConfig config);
    ~Service();
    Service(const Service&) = delete;
    Service& operator=(const Service&) = delete;

    // Port 0 binds an ephemeral port. Returns the bound port; throws BindFailure.
    int bind(const std::string& host, int port);

    // Blocks until stop().
    void listen();
    void stop();
    void wait_until_ready() const;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

} // namespace riskwarden
