#pragma once

#include "glucoguard/config.hpp"
#include "glucoguard/gateway.hpp"

#include <functional>

namespace httplib {
class Server;
}

namespace glucoguard::http {

using Clock = std::function<SimTime()>;

/// Seconds since the Unix epoch.
SimTime wall_clock();

/// Registers every endpoint of the gateway on `server`, backed by `system`.
void install_routes(httplib::Server& server, gateway::System& system, Clock clock = wall_clock);

/// Builds a System from the config, loads persisted state, and blocks serving
/// until the process is stopped. Returns a process exit code.
int serve(const config::ServerConfig& config);

}  // namespace glucoguard::http
