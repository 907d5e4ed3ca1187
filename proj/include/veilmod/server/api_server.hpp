#pragma once

#include <memory>
#include <string>

#include "veilmod/error.hpp"
#include "veilmod/server/clock.hpp"
#include "veilmod/server/config.hpp"

namespace veilmod::server {

// HTTP status for a library error kind.
int http_status(ErrorKind kind);

// The moderation service. Construction loads the corpus and instruments,
// replays the experiment's event log and restores issued tokens; nothing is
// bound until bind()/start().
class ApiServer {
public:
    ApiServer(ServerConfig config, Clock& clock);
    ~ApiServer();
    ApiServer(const ApiServer&) = delete;
    ApiServer& operator=(const ApiServer&) = delete;

    // Binds config.host:config.port (0 picks a free port) and returns the port.
    int bind();
    // Serves until stop(); bind() first.
    void listen();
    // bind() plus listen() on a background thread; returns once accepting.
    int start();
    void stop();

    int port() const;
    const ServerConfig& config() const;

    // Same text GET /api/admin/report returns for this experiment.
    std::string live_report(const std::string& format) const;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

} // namespace veilmod::server
