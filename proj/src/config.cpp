#include "glucoguard/config.hpp"

#include <array>
#include <cctype>
#include <charconv>
#include <cstdlib>
#include <fstream>
#include <istream>

namespace glucoguard::config {

namespace {

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

std::string unquote(const std::string& v) {
    if (v.size() >= 2 && v.front() == '"' && v.back() == '"') return v.substr(1, v.size() - 2);
    return v;
}

template <class T>
T parse_int(const std::string& key, const std::string& v) {
    T out{};
    auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc{} || p != v.data() + v.size()) throw ConfigError("bad integer for " + key + ": " + v);
    return out;
}

double parse_double(const std::string& key, const std::string& v) {
    try {
        std::size_t used = 0;
        const double d = std::stod(v, &used);
        if (used != v.size()) throw ConfigError("bad number for " + key);
        return d;
    } catch (const std::logic_error&) {
        throw ConfigError("bad number for " + key + ": " + v);
    }
}

void set_key(ServerConfig& c, const std::string& key, const std::string& raw) {
    const auto v = unquote(raw);
    if (key == "listen") {
        const auto colon = v.rfind(':');
        if (colon == std::string::npos) throw ConfigError("listen must be host:port");
        c.host = v.substr(0, colon);
        c.port = parse_int<int>(key, v.substr(colon + 1));
    } else if (key == "webhook_url") {
        c.webhook_url = v.empty() ? std::nullopt : std::optional(v);
    } else if (key == "approval_threshold") {
        c.approval_threshold = parse_int<std::size_t>(key, v);
    } else if (key == "model_path") {
        c.model_path = v;
    } else if (key == "block_threshold") {
        c.block_threshold = parse_int<std::uint32_t>(key, v);
        if (c.block_threshold == 0) throw ConfigError("block_threshold must be at least 1");
    } else if (key == "data_dir") {
        c.data_dir = v;
    } else if (key == "notification_log") {
        c.notification_log = v;
    } else if (key == "reservoir_ml") {
        c.reservoir_ml = parse_double(key, v);
        if (!(c.reservoir_ml >= 0)) throw ConfigError("reservoir_ml must be non-negative");
    } else if (key == "seed") {
        c.seed = parse_int<std::uint64_t>(key, v);
    } else {
        throw ConfigError("unknown config key: " + key);
    }
}

constexpr std::array<const char*, 9> kKeys{"listen",        "webhook_url", "approval_threshold",
                                           "model_path",    "block_threshold", "data_dir",
                                           "notification_log", "reservoir_ml", "seed"};

}  // namespace

gateway::SystemConfig ServerConfig::system_config() const {
    gateway::SystemConfig s;
    s.registry.seed = seed;
    s.registry.block_threshold = block_threshold;
    s.approvals.fixed = approval_threshold;
    s.reservoir_ul = dosing::ml_to_ul(reservoir_ml);
    s.data_dir = data_dir;
    s.notifications.log_path = notification_log;
    s.notifications.webhook_url = webhook_url;
    return s;
}

ServerConfig parse_config(std::istream& in) {
    ServerConfig c;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        const auto t = trim(line);
        if (t.empty() || t.front() == '[') continue;  // section headers are ignored
        const auto eq = t.find('=');
        if (eq == std::string::npos) throw ConfigError("line " + std::to_string(lineno) + ": expected key = value");
        set_key(c, trim(std::string_view(t).substr(0, eq)), trim(std::string_view(t).substr(eq + 1)));
    }
    return c;
}

ServerConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read config " + path.string());
    return parse_config(in);
}

void apply_env(ServerConfig& config, const EnvLookup& env) {
    for (const char* key : kKeys) {
        std::string name = "GLUCOGUARD_";
        for (const char* p = key; *p; ++p) name += static_cast<char>(std::toupper(static_cast<unsigned char>(*p)));
        if (auto v = env(name)) set_key(config, key, *v);
    }
}

std::optional<std::string> process_env(const std::string& name) {
    if (const char* v = std::getenv(name.c_str())) return std::string(v);
    return std::nullopt;
}

}  // namespace glucoguard::config
