#pragma once

#include "glucoguard/gateway.hpp"

#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>

namespace glucoguard::config {

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ServerConfig {
    std::string host = "127.0.0.1";
    int port = 8080;
    std::optional<std::string> webhook_url;
    std::size_t approval_threshold = 0;  // 0 = majority of the patient's miners
    std::optional<std::filesystem::path> model_path;
    std::uint32_t block_threshold = 3;
    std::optional<std::filesystem::path> data_dir;
    std::optional<std::filesystem::path> notification_log;
    double reservoir_ml = 1.2;
    std::uint64_t seed = 1;

    gateway::SystemConfig system_config() const;
};

/// Flat `key = value` lines; `#` starts a comment; strings may be double-quoted.
/// Keys: listen ("host:port"), webhook_url, approval_threshold, model_path,
/// block_threshold, data_dir, notification_log, reservoir_ml, seed.
ServerConfig parse_config(std::istream& in);
ServerConfig load_config(const std::filesystem::path& path);

/// GLUCOGUARD_<KEY> (upper case) overrides the matching key.
using EnvLookup = std::function<std::optional<std::string>(const std::string&)>;
void apply_env(ServerConfig& config, const EnvLookup& env);
std::optional<std::string> process_env(const std::string& name);

}  // namespace glucoguard::config
