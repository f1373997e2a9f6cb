#pragma once

#include "glucoguard/bytes.hpp"
#include "glucoguard/dosing.hpp"
#include "glucoguard/identity.hpp"

#include <json.hpp>

#include <condition_variable>
#include <deque>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

namespace glucoguard::notify {

struct Recipient {
    UserId user_id;
    identity::Role role;
};

struct VitalsSnapshot {
    double glucose = 0;
    double systolic_bp = 0;
    double heart_rate = 0;  // R-R interval, ms
    double sweating = 0;
    double shivering = 0;
};

struct NotificationEvent {
    UserId patient_id;
    std::vector<Recipient> recipients;
    dosing::AlertKind kind = dosing::AlertKind::HypoAlert;
    VitalsSnapshot vitals;
    dosing::Microliters pushed_ul = 0;
    dosing::Microliters remaining_ul = 0;
    SimTime t = 0;
};

nlohmann::json to_json(const NotificationEvent& e);

/// Sink for notifications. notify never throws and never waits on the network.
class Notifier {
public:
    struct Options {
        std::optional<std::filesystem::path> log_path;
        std::optional<std::string> webhook_url;  // http://host[:port]/path
        int webhook_timeout_s = 2;
    };

    Notifier();
    explicit Notifier(Options options);
    ~Notifier();
    Notifier(const Notifier&) = delete;
    Notifier& operator=(const Notifier&) = delete;

    void notify(const NotificationEvent& event);

    /// Every event delivered so far, in order.
    std::vector<NotificationEvent> history() const;
    /// Delivery-failure notes written by the webhook worker.
    std::vector<std::string> failures() const;
    /// Blocks until the webhook queue is drained.
    void flush();

private:
    void worker_loop(std::stop_token stop);
    void append_line_locked(const std::string& line);

    Options options_;
    mutable std::mutex mutex_;
    std::condition_variable_any cv_;
    std::ofstream log_;
    std::vector<NotificationEvent> history_;
    std::vector<std::string> failures_;
    std::deque<std::string> queue_;
    bool in_flight_ = false;
    std::jthread worker_;
};

}  // namespace glucoguard::notify
