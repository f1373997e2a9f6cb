#include "glucoguard/dosing.hpp"

#include <cmath>

namespace glucoguard::dosing {

Microliters ml_to_ul(double ml) {
    if (!std::isfinite(ml) || ml < 0) throw std::invalid_argument("volume must be a non-negative number of ml");
    return static_cast<Microliters>(std::llround(ml * 1000.0));
}

PumpState dispense(const PumpState& pump, Microliters volume_ul, SimTime now) {
    if (volume_ul <= 0) throw std::invalid_argument("dispense volume must be positive");
    if (pump.reservoir_ul < volume_ul) throw InsufficientReservoir();
    PumpState next = pump;
    next.reservoir_ul -= volume_ul;
    next.last_dispense = now;
    return next;
}

std::string_view phase_name(const Phase& p) {
    struct V {
        std::string_view operator()(const phase::Idle&) const { return "Idle"; }
        std::string_view operator()(const phase::FirstDoseGiven&) const { return "FirstDoseGiven"; }
        std::string_view operator()(const phase::AwaitingRecheck&) const { return "AwaitingRecheck"; }
        std::string_view operator()(const phase::Resolved&) const { return "Resolved"; }
        std::string_view operator()(const phase::ReservoirEmpty&) const { return "ReservoirEmpty"; }
    };
    return std::visit(V{}, p);
}

Bytes encode_dose_payload(const DoseEvent& e) {
    ByteWriter w;
    w.u8(e.ordinal);
    w.u32(static_cast<std::uint32_t>(e.volume_ul));
    w.u32(static_cast<std::uint32_t>(e.reservoir_after_ul));
    return std::move(w).take();
}

DoseEvent decode_dose_payload(ByteSpan payload, const UserId& patient_id, SimTime t) {
    ByteReader r(payload);
    DoseEvent e;
    e.patient_id = patient_id;
    e.t = t;
    e.ordinal = r.u8();
    e.volume_ul = r.u32();
    e.reservoir_after_ul = r.u32();
    if (!r.done()) throw DecodeError("trailing bytes in dose payload");
    return e;
}

std::string_view to_string(AlertKind k) {
    switch (k) {
        case AlertKind::HypoAlert: return "HypoAlert";
        case AlertKind::SecondDoseAlert: return "SecondDoseAlert";
        case AlertKind::RefillAlert: return "RefillAlert";
        case AlertKind::ReservoirEmpty: return "ReservoirEmpty";
        case AlertKind::Escalation: return "Escalation";
    }
    return "Unknown";
}

std::string_view to_string(NoActionReason r) {
    switch (r) {
        case NoActionReason::AlreadyInCycle: return "AlreadyInCycle";
        case NoActionReason::NotAwaitingRecheck: return "NotAwaitingRecheck";
        case NoActionReason::ReservoirEmpty: return "ReservoirEmpty";
    }
    return "Unknown";
}

std::string_view to_string(OutcomeKind k) {
    switch (k) {
        case OutcomeKind::Dosed: return "Dosed";
        case OutcomeKind::NoAction: return "NoAction";
        case OutcomeKind::Resolved: return "Resolved";
        case OutcomeKind::RecheckTooEarly: return "RecheckTooEarly";
        case OutcomeKind::ReservoirEmpty: return "ReservoirEmpty";
        case OutcomeKind::CycleCapReached: return "CycleCapReached";
    }
    return "Unknown";
}

std::optional<Alert> RefillMonitor::check(const PumpState& pump, SimTime now) {
    const auto left = pump.doses_remaining();
    if (left > limit_) {
        armed_ = true;
        return std::nullopt;
    }
    if (!armed_) return std::nullopt;
    armed_ = false;
    return Alert{AlertKind::RefillAlert, now, 0, pump.reservoir_ul};
}

RescueProtocol::RescueProtocol(PatientProfile profile, Microliters reservoir_ul, ProtocolConfig config)
    : profile_(profile),
      config_(config),
      pump_{reservoir_ul, profile.dose().volume_ul, std::nullopt},
      refill_monitor_(config.refill_alert_doses),
      initial_ul_(reservoir_ul) {
    if (reservoir_ul < 0) throw std::invalid_argument("reservoir must be non-negative");
}

std::optional<SimTime> RescueProtocol::recheck_due() const {
    if (const auto* a = std::get_if<phase::AwaitingRecheck>(&phase_)) return a->due;
    return std::nullopt;
}

void RescueProtocol::enter(Phase p, Outcome& out) {
    phase_ = p;
    out.transitions.push_back(phase_name(phase_));
}

Outcome RescueProtocol::give_dose(SimTime now, AlertKind alert) {
    Outcome out;
    const auto volume = profile_.dose().volume_ul;
    try {
        pump_ = dispense(pump_, volume, now);
    } catch (const InsufficientReservoir&) {
        enter(phase::ReservoirEmpty{}, out);
        out.kind = OutcomeKind::ReservoirEmpty;
        out.alerts.push_back({AlertKind::ReservoirEmpty, now, 0, pump_.reservoir_ul});
        episode_doses_ = 0;
        return out;
    }
    dispensed_ul_ += volume;
    ++episode_doses_;

    out.kind = OutcomeKind::Dosed;
    out.dose = DoseEvent{profile_.patient_id, volume, static_cast<std::uint8_t>(episode_doses_), now, pump_.reservoir_ul};
    enter(phase::FirstDoseGiven{now}, out);
    enter(phase::AwaitingRecheck{now + config_.recheck_interval_s}, out);

    out.alerts.push_back({alert, now, volume, pump_.reservoir_ul});
    if (auto refill = refill_monitor_.check(pump_, now)) out.alerts.push_back(*refill);
    if (pump_.doses_remaining() == 0) out.alerts.push_back({AlertKind::ReservoirEmpty, now, 0, pump_.reservoir_ul});
    return out;
}

Outcome RescueProtocol::on_detection(SimTime now) {
    if (std::holds_alternative<phase::Idle>(phase_)) {
        escalated_ = false;
        episode_doses_ = 0;
        return give_dose(now, AlertKind::HypoAlert);
    }
    Outcome out;
    out.kind = OutcomeKind::NoAction;
    out.reason = std::holds_alternative<phase::ReservoirEmpty>(phase_) ? NoActionReason::ReservoirEmpty
                                                                       : NoActionReason::AlreadyInCycle;
    return out;
}

Outcome RescueProtocol::on_recheck(double glucose_mg_dl, SimTime now) {
    Outcome out;
    const auto* awaiting = std::get_if<phase::AwaitingRecheck>(&phase_);
    if (!awaiting) {
        out.kind = OutcomeKind::NoAction;
        out.reason = NoActionReason::NotAwaitingRecheck;
        return out;
    }
    if (now < awaiting->due) {
        out.kind = OutcomeKind::RecheckTooEarly;
        return out;
    }
    if (!(glucose_mg_dl < config_.hypo_threshold_mg_dl)) {
        enter(phase::Resolved{}, out);
        enter(phase::Idle{}, out);
        out.kind = OutcomeKind::Resolved;
        episode_doses_ = 0;
        escalated_ = false;
        return out;
    }
    if (episode_doses_ >= config_.max_doses_per_episode) {
        out.kind = OutcomeKind::CycleCapReached;
        if (!escalated_) {
            out.alerts.push_back({AlertKind::Escalation, now, 0, pump_.reservoir_ul});
            escalated_ = true;
        }
        enter(phase::AwaitingRecheck{now + config_.recheck_interval_s}, out);
        return out;
    }
    auto dosed = give_dose(now, AlertKind::SecondDoseAlert);
    return dosed;
}

void RescueProtocol::refill(Microliters volume_ul, SimTime now) {
    if (volume_ul <= 0) throw std::invalid_argument("refill volume must be positive");
    pump_.reservoir_ul += volume_ul;
    refilled_ul_ += volume_ul;
    refill_monitor_.check(pump_, now);
    if (std::holds_alternative<phase::ReservoirEmpty>(phase_) && pump_.doses_remaining() > 0) phase_ = phase::Idle{};
}

}  // namespace glucoguard::dosing
