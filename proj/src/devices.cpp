#include "glucoguard/devices.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

namespace glucoguard::devices {

using nlohmann::json;

void VirtualClock::schedule(SimTime due, EventKind kind) {
    if (due < now_) throw TimeReversal();
    queue_.push({due, next_seq_++, kind});
}

std::optional<SimTime> VirtualClock::next_due() const {
    if (queue_.empty()) return std::nullopt;
    return queue_.top().due;
}

std::vector<ClockEvent> VirtualClock::advance(SimTime until) {
    if (until < now_) throw TimeReversal();
    std::vector<ClockEvent> fired;
    while (!queue_.empty() && queue_.top().due <= until) {
        fired.push_back(queue_.top());
        queue_.pop();
    }
    now_ = until;
    return fired;
}

std::optional<ClockEvent> VirtualClock::pop_next(SimTime until) {
    if (until < now_) throw TimeReversal();
    if (queue_.empty() || queue_.top().due > until) return std::nullopt;
    auto ev = queue_.top();
    queue_.pop();
    now_ = ev.due;
    return ev;
}

void ScenarioScript::validate() const {
    if (interval_s <= 0) throw ScenarioError("interval_s must be positive");
    if (duration_s < 0) throw ScenarioError("duration_s must be non-negative");
    if (trajectory.empty()) throw ScenarioError("trajectory needs at least one control point");
    for (std::size_t i = 0; i < trajectory.size(); ++i) {
        if (trajectory[i].mg_dl < 20 || trajectory[i].mg_dl > 600)
            throw ScenarioError("trajectory glucose must lie in [20, 600]");
        if (i > 0 && trajectory[i].t <= trajectory[i - 1].t)
            throw ScenarioError("trajectory times must be strictly increasing");
    }
    if (!(noise_sd >= 0)) throw ScenarioError("noise_sd must be non-negative");
    if (!(kinetics_scale >= 0)) throw ScenarioError("kinetics_scale must be non-negative");
    if (!(reservoir_ml >= 0)) throw ScenarioError("reservoir_ml must be non-negative");
    for (double p : {symptoms.sweating_hypo, symptoms.sweating_normal, symptoms.shivering_hypo,
                     symptoms.shivering_normal})
        if (!(p >= 0 && p <= 1)) throw ScenarioError("symptom probabilities must lie in [0, 1]");
}

ScenarioScript parse_scenario(const json& j) {
    ScenarioScript s;
    try {
        if (!j.is_object()) throw ScenarioError("scenario must be a JSON object");
        s.name = j.value("name", std::string{});
        if (j.contains("profile")) {
            const auto& p = j.at("profile");
            const std::string age = p.is_string() ? p.get<std::string>() : p.value("age_class", std::string("Adult"));
            const auto parsed = age_class_from_string(age);
            if (!parsed) throw ScenarioError("profile must be Adult or Child");
            s.age_class = *parsed;
        }
        s.interval_s = j.value("interval_s", s.interval_s);
        if (!j.contains("trajectory") || !j.at("trajectory").is_array())
            throw ScenarioError("trajectory must be an array of [t, mg_dl] pairs");
        for (const auto& pt : j.at("trajectory")) {
            if (!pt.is_array() || pt.size() != 2 || !pt[0].is_number() || !pt[1].is_number())
                throw ScenarioError("trajectory entries must be [t, mg_dl]");
            s.trajectory.push_back({pt[0].get<SimTime>(), pt[1].get<double>()});
        }
        if (j.contains("symptom_policy")) {
            const auto& sp = j.at("symptom_policy");
            s.symptoms.sweating_hypo = sp.value("sweating_hypo", s.symptoms.sweating_hypo);
            s.symptoms.sweating_normal = sp.value("sweating_normal", s.symptoms.sweating_normal);
            s.symptoms.shivering_hypo = sp.value("shivering_hypo", s.symptoms.shivering_hypo);
            s.symptoms.shivering_normal = sp.value("shivering_normal", s.symptoms.shivering_normal);
        }
        if (!j.contains("duration_s")) throw ScenarioError("duration_s is required");
        s.duration_s = j.at("duration_s").get<SimTime>();
        s.seed = j.value("seed", s.seed);
        s.noise_sd = j.value("noise_sd", s.noise_sd);
        s.kinetics_scale = j.value("kinetics_scale", s.kinetics_scale);
        s.reservoir_ml = j.value("reservoir_ml", s.reservoir_ml);
    } catch (const json::exception& e) {
        throw ScenarioError(std::string("bad scenario field: ") + e.what());
    }
    s.validate();
    return s;
}

ScenarioScript load_scenario(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read scenario " + path.string());
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ScenarioError(std::string("scenario is not valid JSON: ") + e.what());
    }
    auto s = parse_scenario(j);
    if (s.name.empty()) s.name = path.stem().string();
    return s;
}

double interpolate(const std::vector<ControlPoint>& tr, SimTime t) {
    if (t <= tr.front().t) return tr.front().mg_dl;
    if (t >= tr.back().t) return tr.back().mg_dl;
    const auto hi = std::upper_bound(tr.begin(), tr.end(), t, [](SimTime v, const ControlPoint& p) { return v < p.t; });
    const auto lo = hi - 1;
    const double frac = static_cast<double>(t - lo->t) / static_cast<double>(hi->t - lo->t);
    return lo->mg_dl + frac * (hi->mg_dl - lo->mg_dl);
}

GlucoseKinetics GlucoseKinetics::for_profile(AgeClass age, double scale) {
    return GlucoseKinetics((age == AgeClass::Adult ? 40.0 : 20.0) * scale);
}

double GlucoseKinetics::effect(SimTime t) const {
    double total = 0;
    for (SimTime d : doses_) {
        if (t <= d) continue;
        const SimTime elapsed = t - d;
        total += elapsed >= ramp_s_ ? per_dose_ : per_dose_ * static_cast<double>(elapsed) / static_cast<double>(ramp_s_);
    }
    return total;
}

namespace {

double clamp_normal(Rng& rng, double mean, double sd, double lo, double hi) {
    return std::clamp(mean + sd * standard_normal(rng), lo, hi);
}

fog::RawReading reading(const UserId& patient, fog::Source src, fog::Feature f, double v, SimTime now) {
    return {patient, src, f, v, static_cast<std::uint32_t>(now)};
}

}  // namespace

std::vector<fog::RawReading> next_reading(const ScenarioScript& script, const GlucoseKinetics& kinetics, SimTime now,
                                          Rng& rng, const UserId& patient) {
    if (now < 0 || now > script.duration_s) throw OutsideScenario();
    const double true_glucose = interpolate(script.trajectory, now) + kinetics.effect(now);
    const bool hypo = true_glucose < 70.0;

    const double noise = standard_normal(rng) * script.noise_sd;
    const double glucose = std::clamp(true_glucose + noise, 20.0, 600.0);
    const double systolic = clamp_normal(rng, hypo ? 121.09 : 115.41, 7.16, 95, 145);
    const double rr_ms = clamp_normal(rng, hypo ? 644.6 : 683.7, 65.8, 461, 769);
    const double diastolic = clamp_normal(rng, 78.0, 6.0, 50, 110);
    const double temp = clamp_normal(rng, 36.8, 0.3, 35.5, 38.5);
    const double sweat = bernoulli(rng, hypo ? script.symptoms.sweating_hypo : script.symptoms.sweating_normal);
    const double shiver = bernoulli(rng, hypo ? script.symptoms.shivering_hypo : script.symptoms.shivering_normal);

    using fog::Feature;
    using fog::Source;
    return {
        reading(patient, Source::CGM, Feature::Glucose, glucose, now),
        reading(patient, Source::Smartwatch, Feature::DiastolicBp, diastolic, now),
        reading(patient, Source::Smartwatch, Feature::SystolicBp, systolic, now),
        reading(patient, Source::Smartwatch, Feature::HeartRate, 60000.0 / rr_ms, now),
        reading(patient, Source::Smartwatch, Feature::BodyTemp, temp, now),
        reading(patient, Source::Smartwatch, Feature::Sweating, sweat, now),
        reading(patient, Source::Smartwatch, Feature::Shivering, shiver, now),
    };
}

std::size_t EventLog::count(std::string_view type) const {
    return static_cast<std::size_t>(
        std::count_if(events_.begin(), events_.end(), [&](const LogEvent& e) { return e.type == type; }));
}

std::string EventLog::to_jsonl() const {
    std::string out;
    for (const auto& e : events_) {
        out += json{{"t", e.t}, {"type", e.type}, {"payload", e.payload}}.dump();
        out += '\n';
    }
    return out;
}

void EventLog::write(const std::filesystem::path& path) const {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write event log " + path.string());
    out << to_jsonl();
    if (!out) throw std::runtime_error("failed writing event log " + path.string());
}

Participants register_participants(gateway::System& system, const ScenarioScript& script) {
    const std::string tag = script.name.empty() ? "scenario" : script.name;
    identity::RegistrationRequest p;
    p.role = identity::Role::Patient;
    p.profile = {"Simulated Patient", "1990-01-01", {tag + ".patient@example.org", "+10000000001", "1 Test Way"}};
    p.age_class = script.age_class;
    Participants out;
    out.patient = system.register_user(p);

    identity::RegistrationRequest d;
    d.role = identity::Role::Doctor;
    d.profile = {"Simulated Doctor", "1970-01-01", {tag + ".doctor@example.org", "+10000000002", "2 Clinic Road"}};
    d.qualification = "MD";
    d.job_details = "Endocrinology";
    d.links = {{out.patient.user_id, out.patient.public_key}};
    out.doctor = system.register_user(d);

    identity::RegistrationRequest r;
    r.role = identity::Role::Relative;
    r.profile = {"Simulated Relative", "1965-01-01", {tag + ".relative@example.org", "+10000000003", "1 Test Way"}};
    r.links = {{out.patient.user_id, out.patient.public_key}};
    out.relative = system.register_user(r);
    return out;
}

gateway::SystemConfig system_config_for(const ScenarioScript& script) {
    gateway::SystemConfig c;
    c.reservoir_ul = dosing::ml_to_ul(script.reservoir_ml);
    return c;
}

EventLog run_scenario(const ScenarioScript& script, gateway::System& system, const Participants& who) {
    script.validate();
    EventLog log;
    VirtualClock clock;
    Rng rng(script.seed);
    auto kinetics = GlucoseKinetics::for_profile(script.age_class, script.kinetics_scale);
    const UserId patient = who.patient.user_id;
    std::optional<SimTime> last_ingest;
    std::set<SimTime> rechecks;

    log.add(0, "start",
            {{"scenario", script.name},
             {"profile", to_string(script.age_class)},
             {"interval_s", script.interval_s},
             {"duration_s", script.duration_s},
             {"seed", script.seed},
             {"model_id", to_hex(system.model_id().span())},
             {"reservoir_ml", script.reservoir_ml}});

    clock.schedule(0, EventKind::Tick);
    try {
        while (auto ev = clock.pop_next(script.duration_s)) {
            const SimTime now = ev->due;
            if (ev->kind == EventKind::Tick && now + script.interval_s <= script.duration_s)
                clock.schedule(now + script.interval_s, EventKind::Tick);
            if (last_ingest == now) continue;
            last_ingest = now;

            gateway::IngestBatch batch{patient, next_reading(script, kinetics, now, rng, patient)};
            const auto result = system.ingest(who.patient, batch, now);

            for (const auto& c : result.cleaned) log.add(now, "reading", gateway::to_json(c));
            log.add(now, "blocks", {{"vitals", result.vitals_block}, {"detection", result.detection_block}});
            for (const auto& d : result.detections)
                log.add(now, "detection",
                        {{"probability", d.probability}, {"label", d.label}, {"sample_t", d.sample_t}});
            if (result.dosing) {
                const auto& o = *result.dosing;
                json transitions = json::array();
                for (auto t : o.transitions) transitions.push_back(std::string(t));
                json entry{{"trigger", ev->kind == EventKind::Recheck ? "recheck" : "tick"},
                           {"outcome", dosing::to_string(o.kind)},
                           {"transitions", transitions},
                           {"phase", result.phase_after}};
                if (o.reason) entry["reason"] = dosing::to_string(*o.reason);
                log.add(now, "dosing", entry);
                if (o.dose) {
                    kinetics.add_dose(now);
                    log.add(now, "dose",
                            {{"ordinal", o.dose->ordinal},
                             {"volume_ul", o.dose->volume_ul},
                             {"volume_ml", dosing::ul_to_ml(o.dose->volume_ul)},
                             {"reservoir_after_ul", o.dose->reservoir_after_ul}});
                }
            }
            for (const auto& n : result.notifications) log.add(now, "notification", notify::to_json(n));

            if (const auto* proto = system.protocol(patient)) {
                if (const auto due = proto->recheck_due(); due && *due <= script.duration_s && !rechecks.count(*due)) {
                    rechecks.insert(*due);
                    clock.schedule(*due, EventKind::Recheck);
                }
            }
        }
    } catch (const gateway::ApiError& e) {
        log.add(clock.now(), "error", {{"status", e.status()}, {"code", e.code()}, {"message", e.what()}});
    } catch (const std::exception& e) {
        log.add(clock.now(), "error", {{"message", e.what()}});
    }

    if (const auto* proto = system.protocol(patient)) {
        log.add(clock.now(), "end",
                {{"doses", kinetics.doses()},
                 {"initial_ul", proto->initial_reservoir_ul()},
                 {"dispensed_ul", proto->total_dispensed_ul()},
                 {"refilled_ul", proto->total_refilled_ul()},
                 {"reservoir_ul", proto->pump().reservoir_ul},
                 {"phase", std::string(dosing::phase_name(proto->phase()))},
                 {"chain_length", system.chain_length()}});
    }
    return log;
}

}  // namespace glucoguard::devices
