#pragma once

#include "glucoguard/bytes.hpp"
#include "glucoguard/patient.hpp"

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string_view>
#include <variant>
#include <vector>

namespace glucoguard::dosing {

/// Volumes are tracked in whole microliters so reservoir accounting is exact.
using Microliters = std::int64_t;

inline constexpr double ul_to_ml(Microliters ul) { return static_cast<double>(ul) / 1000.0; }
Microliters ml_to_ul(double ml);

struct DosePreset {
    Microliters volume_ul;
    std::int64_t mass_ug;
};

/// Adult 0.2 ml / 1 mg, child 0.1 ml / 0.5 mg.
constexpr DosePreset preset_for(AgeClass age) {
    return age == AgeClass::Adult ? DosePreset{200, 1000} : DosePreset{100, 500};
}

struct PatientProfile {
    UserId patient_id;
    AgeClass age_class = AgeClass::Adult;

    DosePreset dose() const { return preset_for(age_class); }
};

struct PumpState {
    Microliters reservoir_ul = 0;
    Microliters dose_ul = 200;
    std::optional<SimTime> last_dispense;

    std::int64_t doses_remaining() const { return dose_ul > 0 ? reservoir_ul / dose_ul : 0; }
    double reservoir_ml() const { return ul_to_ml(reservoir_ul); }
};

struct InsufficientReservoir : std::runtime_error {
    InsufficientReservoir() : std::runtime_error("reservoir holds less than one dose") {}
};

/// Removes exactly `volume_ul` or throws InsufficientReservoir; never a partial dose.
PumpState dispense(const PumpState& pump, Microliters volume_ul, SimTime now);

namespace phase {
struct Idle {};
struct FirstDoseGiven {
    SimTime at;
};
struct AwaitingRecheck {
    SimTime due;
};
struct Resolved {};
struct ReservoirEmpty {};
}  // namespace phase

using Phase = std::variant<phase::Idle, phase::FirstDoseGiven, phase::AwaitingRecheck, phase::Resolved,
                           phase::ReservoirEmpty>;

std::string_view phase_name(const Phase& p);

struct DoseEvent {
    UserId patient_id;
    Microliters volume_ul = 0;
    std::uint8_t ordinal = 1;  // 1 for the first dose of an episode, 2 for the next, ...
    SimTime t = 0;
    Microliters reservoir_after_ul = 0;

    friend bool operator==(const DoseEvent&, const DoseEvent&) = default;
};

/// ordinal (1) || volume µl (4 BE) || reservoir after µl (4 BE)
Bytes encode_dose_payload(const DoseEvent& e);
DoseEvent decode_dose_payload(ByteSpan payload, const UserId& patient_id, SimTime t);

enum class AlertKind : std::uint8_t { HypoAlert, SecondDoseAlert, RefillAlert, ReservoirEmpty, Escalation };
std::string_view to_string(AlertKind k);

struct Alert {
    AlertKind kind;
    SimTime t;
    Microliters pushed_ul = 0;
    Microliters remaining_ul = 0;
};

enum class NoActionReason { AlreadyInCycle, NotAwaitingRecheck, ReservoirEmpty };
std::string_view to_string(NoActionReason r);

enum class OutcomeKind {
    Dosed,
    NoAction,
    Resolved,
    RecheckTooEarly,
    ReservoirEmpty,
    CycleCapReached,
};
std::string_view to_string(OutcomeKind k);

struct Outcome {
    OutcomeKind kind = OutcomeKind::NoAction;
    std::optional<DoseEvent> dose;
    std::optional<NoActionReason> reason;
    std::vector<Alert> alerts;
    /// Phases entered, in order, during this call.
    std::vector<std::string_view> transitions;
};

struct ProtocolConfig {
    SimTime recheck_interval_s = 15 * 60;
    double hypo_threshold_mg_dl = 70.0;  // recheck doses while glucose < threshold
    std::uint32_t max_doses_per_episode = 4;
    std::int64_t refill_alert_doses = 5;
};

/// Emits a RefillAlert once when doses_remaining first drops to the limit;
/// a refill above the limit re-arms it.
class RefillMonitor {
public:
    explicit RefillMonitor(std::int64_t limit = 5) : limit_(limit) {}
    std::optional<Alert> check(const PumpState& pump, SimTime now);

private:
    std::int64_t limit_;
    bool armed_ = true;
};

/// Per-patient rescue protocol: a dose on detection, a glucose recheck after
/// the recheck interval, and a further dose per interval while still low.
class RescueProtocol {
public:
    RescueProtocol(PatientProfile profile, Microliters reservoir_ul, ProtocolConfig config = {});

    Outcome on_detection(SimTime now);
    Outcome on_recheck(double glucose_mg_dl, SimTime now);
    /// Adds volume and leaves ReservoirEmpty when the pump can dose again.
    void refill(Microliters volume_ul, SimTime now);

    const Phase& phase() const { return phase_; }
    const PumpState& pump() const { return pump_; }
    const PatientProfile& profile() const { return profile_; }
    const ProtocolConfig& config() const { return config_; }
    std::optional<SimTime> recheck_due() const;
    Microliters total_dispensed_ul() const { return dispensed_ul_; }
    Microliters total_refilled_ul() const { return refilled_ul_; }
    Microliters initial_reservoir_ul() const { return initial_ul_; }

private:
    Outcome give_dose(SimTime now, AlertKind alert);
    void enter(Phase p, Outcome& out);

    PatientProfile profile_;
    ProtocolConfig config_;
    PumpState pump_;
    Phase phase_ = phase::Idle{};
    RefillMonitor refill_monitor_;
    std::uint32_t episode_doses_ = 0;
    bool escalated_ = false;
    Microliters initial_ul_ = 0;
    Microliters dispensed_ul_ = 0;
    Microliters refilled_ul_ = 0;
};

}  // namespace glucoguard::dosing
