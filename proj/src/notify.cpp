#include "glucoguard/notify.hpp"

#include <httplib.h>

namespace glucoguard::notify {

using nlohmann::json;

json to_json(const NotificationEvent& e) {
    json recipients = json::array();
    for (const auto& r : e.recipients)
        recipients.push_back({{"user_id", to_hex(r.user_id.span())}, {"role", identity::to_string(r.role)}});
    return {
        {"t", e.t},
        {"kind", dosing::to_string(e.kind)},
        {"patient_id", to_hex(e.patient_id.span())},
        {"recipients", recipients},
        {"recipient_roles", {"patient", "caregiver"}},
        {"vitals",
         {{"glucose", e.vitals.glucose},
          {"systolic_bp", e.vitals.systolic_bp},
          {"heart_rate", e.vitals.heart_rate},
          {"sweating", e.vitals.sweating},
          {"shivering", e.vitals.shivering}}},
        {"pushed_ml", dosing::ul_to_ml(e.pushed_ul)},
        {"remaining_ml", dosing::ul_to_ml(e.remaining_ul)},
    };
}

namespace {

struct WebhookTarget {
    std::string origin;  // scheme://host[:port]
    std::string path;
};

std::optional<WebhookTarget> parse_url(const std::string& url) {
    const auto scheme = url.find("://");
    if (scheme == std::string::npos) return std::nullopt;
    const auto slash = url.find('/', scheme + 3);
    if (slash == std::string::npos) return WebhookTarget{url, "/"};
    return WebhookTarget{url.substr(0, slash), url.substr(slash)};
}

}  // namespace

Notifier::Notifier() : Notifier(Options{}) {}

Notifier::Notifier(Options options) : options_(std::move(options)) {
    if (options_.log_path) {
        log_.open(*options_.log_path, std::ios::app);
        if (!log_) throw std::runtime_error("cannot open notification log " + options_.log_path->string());
    }
    if (options_.webhook_url) worker_ = std::jthread([this](std::stop_token st) { worker_loop(st); });
}

Notifier::~Notifier() {
    if (worker_.joinable()) {
        worker_.request_stop();
        cv_.notify_all();
    }
}

void Notifier::append_line_locked(const std::string& line) {
    if (!log_.is_open()) return;
    log_ << line << '\n';
    log_.flush();
}

void Notifier::notify(const NotificationEvent& event) {
    const auto line = to_json(event).dump();
    std::lock_guard lock(mutex_);
    history_.push_back(event);
    append_line_locked(line);
    if (options_.webhook_url) {
        queue_.push_back(line);
        cv_.notify_all();
    }
}

std::vector<NotificationEvent> Notifier::history() const {
    std::lock_guard lock(mutex_);
    return history_;
}

std::vector<std::string> Notifier::failures() const {
    std::lock_guard lock(mutex_);
    return failures_;
}

void Notifier::flush() {
    std::unique_lock lock(mutex_);
    cv_.wait(lock, [&] { return queue_.empty() && !in_flight_; });
}

void Notifier::worker_loop(std::stop_token stop) {
    const auto target = parse_url(*options_.webhook_url);
    for (;;) {
        std::string body;
        {
            std::unique_lock lock(mutex_);
            cv_.wait(lock, stop, [&] { return !queue_.empty(); });
            if (queue_.empty()) return;
            body = std::move(queue_.front());
            queue_.pop_front();
            in_flight_ = true;
        }
        std::string failure;
        if (!target) {
            failure = "invalid webhook url";
        } else {
            httplib::Client client(target->origin);
            client.set_connection_timeout(options_.webhook_timeout_s, 0);
            client.set_read_timeout(options_.webhook_timeout_s, 0);
            client.set_write_timeout(options_.webhook_timeout_s, 0);
            auto res = client.Post(target->path, body, "application/json");
            if (!res)
                failure = httplib::to_string(res.error());
            else if (res->status >= 300)
                failure = "http status " + std::to_string(res->status);
        }
        std::lock_guard lock(mutex_);
        if (!failure.empty()) {
            json note{{"delivery", "failed"}, {"reason", failure}, {"event", json::parse(body)}};
            failures_.push_back(failure);
            append_line_locked(note.dump());
        }
        in_flight_ = false;
        cv_.notify_all();
    }
}

}  // namespace glucoguard::notify
