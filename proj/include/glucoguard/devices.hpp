#pragma once

#include "glucoguard/fog.hpp"
#include "glucoguard/gateway.hpp"
#include "glucoguard/patient.hpp"
#include "glucoguard/rng.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <queue>
#include <stdexcept>
#include <string>
#include <vector>

namespace glucoguard::devices {

struct TimeReversal : std::invalid_argument {
    TimeReversal() : std::invalid_argument("cannot advance the clock backwards") {}
};
struct OutsideScenario : std::out_of_range {
    OutsideScenario() : std::out_of_range("time outside the scenario duration") {}
};
struct ScenarioError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

enum class EventKind : std::uint8_t { Tick, Recheck };

struct ClockEvent {
    SimTime due = 0;
    std::uint64_t seq = 0;  // insertion order; breaks ties at equal due times
    EventKind kind = EventKind::Tick;
};

class VirtualClock {
public:
    explicit VirtualClock(SimTime start = 0) : now_(start) {}

    SimTime now() const { return now_; }
    void schedule(SimTime due, EventKind kind);
    bool empty() const { return queue_.empty(); }
    std::optional<SimTime> next_due() const;

    /// Fires every event with due <= until, in (due, seq) order, and sets the
    /// clock to `until`.
    std::vector<ClockEvent> advance(SimTime until);
    /// Pops the earliest event if it is due by `until`, moving the clock to it.
    std::optional<ClockEvent> pop_next(SimTime until);

private:
    struct Later {
        bool operator()(const ClockEvent& a, const ClockEvent& b) const {
            return a.due != b.due ? a.due > b.due : a.seq > b.seq;
        }
    };
    SimTime now_;
    std::uint64_t next_seq_ = 0;
    std::priority_queue<ClockEvent, std::vector<ClockEvent>, Later> queue_;
};

struct ControlPoint {
    SimTime t;
    double mg_dl;
};

/// Symptom probabilities conditioned on the true glucose being below 70.
struct SymptomPolicy {
    double sweating_hypo = 0.20;
    double sweating_normal = 0.0434;
    double shivering_hypo = 0.25;
    double shivering_normal = 0.0543;
};

struct ScenarioScript {
    std::string name;
    AgeClass age_class = AgeClass::Adult;
    SimTime interval_s = 300;
    std::vector<ControlPoint> trajectory;
    SymptomPolicy symptoms{};
    SimTime duration_s = 3600;
    std::uint64_t seed = 7;
    double noise_sd = 2.0;         // CGM noise, mg/dl
    double kinetics_scale = 1.0;   // multiplies the per-dose glucose effect
    double reservoir_ml = 1.2;

    /// Throws ScenarioError.
    void validate() const;
};

ScenarioScript parse_scenario(const nlohmann::json& j);
ScenarioScript load_scenario(const std::filesystem::path& path);

/// Piecewise-linear, held flat before the first and after the last point.
double interpolate(const std::vector<ControlPoint>& trajectory, SimTime t);

/// Each dose adds `per_dose_mg_dl`, ramped linearly over `ramp_s`; doses add up.
class GlucoseKinetics {
public:
    GlucoseKinetics(double per_dose_mg_dl, SimTime ramp_s = 900) : per_dose_(per_dose_mg_dl), ramp_s_(ramp_s) {}
    static GlucoseKinetics for_profile(AgeClass age, double scale = 1.0);

    void add_dose(SimTime t) { doses_.push_back(t); }
    double effect(SimTime t) const;
    std::size_t doses() const { return doses_.size(); }

private:
    double per_dose_;
    SimTime ramp_s_;
    std::vector<SimTime> doses_;
};

/// All seven features for time `now`; heart rate in beats per minute.
std::vector<fog::RawReading> next_reading(const ScenarioScript& script, const GlucoseKinetics& kinetics, SimTime now,
                                          Rng& rng, const UserId& patient);

struct LogEvent {
    SimTime t;
    std::string type;
    nlohmann::json payload;
};

class EventLog {
public:
    void add(SimTime t, std::string type, nlohmann::json payload) {
        events_.push_back({t, std::move(type), std::move(payload)});
    }
    const std::vector<LogEvent>& events() const { return events_; }
    std::size_t count(std::string_view type) const;
    /// One JSON object per line: {"t", "type", "payload"}.
    std::string to_jsonl() const;
    void write(const std::filesystem::path& path) const;

private:
    std::vector<LogEvent> events_;
};

struct Participants {
    identity::Credentials patient;
    identity::Credentials doctor;
    identity::Credentials relative;
};

/// Registers a patient of the script's age class plus one linked doctor and
/// one linked relative, who together form the miner set.
Participants register_participants(gateway::System& system, const ScenarioScript& script);

/// SystemConfig suited to the script (its reservoir fill).
gateway::SystemConfig system_config_for(const ScenarioScript& script);

/// Drives the clock tick by tick through the gateway. Errors end the run with
/// a terminal "error" entry.
EventLog run_scenario(const ScenarioScript& script, gateway::System& system, const Participants& who);

}  // namespace glucoguard::devices
