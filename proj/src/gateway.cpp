#include "glucoguard/gateway.hpp"

#include "glucoguard/crypto.hpp"

#include <algorithm>
#include <cmath>

namespace glucoguard::gateway {

using identity::Action;
using identity::Role;
using ledger::TxKind;

namespace {

bool is_lower_hex64(std::string_view s) {
    return s.size() == 64 &&
           std::all_of(s.begin(), s.end(), [](char c) { return (c >= '0' && c <= '9') || (c >= 'a' && c <= 'f'); });
}

const json& require(const json& obj, const char* field) {
    if (!obj.is_object() || !obj.contains(field)) throw ApiError(400, "MissingField", std::string("missing ") + field);
    return obj.at(field);
}

std::string string_field(const json& obj, const char* field, bool required) {
    if (!obj.is_object() || !obj.contains(field) || obj.at(field).is_null()) {
        if (required) throw ApiError(400, "MissingField", std::string("missing ") + field);
        return {};
    }
    if (!obj.at(field).is_string()) throw ApiError(400, "BadField", std::string(field) + " must be a string");
    return obj.at(field).get<std::string>();
}

std::uint32_t to_u32_time(SimTime now) {
    if (now < 0 || now > static_cast<SimTime>(UINT32_MAX)) throw ApiError(400, "BadTime", "time outside u32 range");
    return static_cast<std::uint32_t>(now);
}

ApiError from_ledger(const ledger::LedgerError& e) {
    switch (e.code()) {
        case ledger::LedgerErrorCode::InsufficientApprovals: return {503, "InsufficientApprovals", e.what()};
        case ledger::LedgerErrorCode::DuplicateTransaction: return {409, "DuplicateTransaction", e.what()};
        case ledger::LedgerErrorCode::UnknownPatient: return {404, "UnknownPatient", e.what()};
        case ledger::LedgerErrorCode::InvalidSignature: return {403, "InvalidSignature", e.what()};
        case ledger::LedgerErrorCode::EmptyTransactionSet: return {400, "EmptyTransactionSet", e.what()};
    }
    return {500, "LedgerError", e.what()};
}

json alert_json(const dosing::Alert& a) {
    return {{"kind", dosing::to_string(a.kind)},
            {"t", a.t},
            {"pushed_ml", dosing::ul_to_ml(a.pushed_ul)},
            {"remaining_ml", dosing::ul_to_ml(a.remaining_ul)}};
}

json dose_json(const dosing::DoseEvent& d) {
    return {{"ordinal", d.ordinal},
            {"volume_ml", dosing::ul_to_ml(d.volume_ul)},
            {"reservoir_after_ml", dosing::ul_to_ml(d.reservoir_after_ul)},
            {"t", d.t}};
}

}  // namespace

UserId parse_id(std::string_view hex, std::string_view field) {
    if (!is_lower_hex64(hex)) throw ApiError(400, "BadId", std::string(field) + " must be 64 lowercase hex characters");
    return fixed_from_hex<UserId>(hex);
}

Key parse_key(std::string_view hex, std::string_view field) {
    if (!is_lower_hex64(hex)) throw ApiError(400, "BadKey", std::string(field) + " must be 64 lowercase hex characters");
    return fixed_from_hex<Key>(hex);
}

IngestBatch parse_ingest_body(const json& body) {
    if (!body.is_object()) throw ApiError(400, "BadBody", "body must be a JSON object");
    IngestBatch batch;
    batch.patient_id = parse_id(string_field(body, "patient_id", true), "patient_id");
    const auto& readings = require(body, "readings");
    if (!readings.is_array()) throw ApiError(400, "BadBody", "readings must be an array");
    for (const auto& r : readings) {
        fog::RawReading raw;
        raw.patient_id = batch.patient_id;
        const auto feature = fog::feature_from_string(string_field(r, "feature", true));
        if (!feature) throw ApiError(400, "BadFeature", "unknown feature");
        raw.feature = *feature;
        const auto source_name = string_field(r, "source", false);
        if (!source_name.empty()) {
            const auto source = fog::source_from_string(source_name);
            if (!source) throw ApiError(400, "BadSource", "unknown source");
            raw.source = *source;
        }
        const auto& value = require(r, "value");
        if (value.is_number())
            raw.value = value.get<double>();
        else if (value.is_string())
            raw.value = value.get<std::string>();
        else
            raw.value = std::string{};  // coerces to Missing
        const auto& t = require(r, "t");
        if (!t.is_number_unsigned() || t.get<std::uint64_t>() > UINT32_MAX)
            throw ApiError(400, "BadTime", "t must be an unsigned 32-bit integer");
        raw.t = t.get<std::uint32_t>();
        batch.readings.push_back(std::move(raw));
    }
    return batch;
}

identity::RegistrationRequest parse_registration(const json& body) {
    if (!body.is_object()) throw ApiError(400, "BadBody", "body must be a JSON object");
    identity::RegistrationRequest req;
    const auto role = identity::role_from_string(string_field(body, "role", true));
    if (!role) throw ApiError(400, "BadRole", "role must be Patient, Doctor or Relative");
    req.role = *role;
    const json profile = body.value("profile", json::object());
    req.profile.name = string_field(profile, "name", false);
    req.profile.date_of_birth = string_field(profile, "date_of_birth", false);
    const json contact = profile.value("contact", json::object());
    req.profile.contact.email = string_field(contact, "email", false);
    req.profile.contact.phone = string_field(contact, "phone", false);
    req.profile.contact.address = string_field(contact, "address", false);
    if (const auto age = string_field(body, "age_class", false); !age.empty()) {
        const auto parsed = age_class_from_string(age);
        if (!parsed) throw ApiError(400, "BadAgeClass", "age_class must be Adult or Child");
        req.age_class = *parsed;
    }
    req.qualification = string_field(body, "qualification", false);
    req.job_details = string_field(body, "job_details", false);
    if (body.contains("links")) {
        if (!body["links"].is_array()) throw ApiError(400, "BadBody", "links must be an array");
        for (const auto& l : body["links"])
            req.links.push_back({parse_id(string_field(l, "patient_id", true), "patient_id"),
                                 parse_key(string_field(l, "patient_key", true), "patient_key")});
    }
    return req;
}

Bytes encode_detection_payload(const DetectionRecord& d) {
    ByteWriter w;
    w.f64(d.probability);
    w.u8(d.label);
    w.u32(d.sample_t);
    w.fixed(d.model_id);
    return std::move(w).take();
}

DetectionRecord decode_detection_payload(ByteSpan payload) {
    ByteReader r(payload);
    DetectionRecord d;
    d.probability = r.f64();
    d.label = r.u8();
    d.sample_t = r.u32();
    d.model_id = r.fixed<Digest>();
    if (!r.done()) throw DecodeError("trailing bytes in detection payload");
    return d;
}

json to_json(const fog::CleanReading& r) {
    json j{{"t", r.sample.timestamp},
           {"glucose", r.sample.glucose},
           {"systolic_bp", r.sample.systolic_bp},
           {"heart_rate", r.sample.heart_rate},
           {"sweating", r.sample.sweating},
           {"shivering", r.sample.shivering}};
    j["diastolic_bp"] = r.diastolic_bp ? json(*r.diastolic_bp) : json(nullptr);
    j["body_temp"] = r.body_temp ? json(*r.body_temp) : json(nullptr);
    return j;
}

json payload_json(const ledger::TransactionRecord& tx) {
    switch (tx.kind) {
        case TxKind::VitalsData: return to_json(fog::decode_vitals_payload(tx.payload, tx.patient_id));
        case TxKind::DetectionResult: {
            const auto d = decode_detection_payload(tx.payload);
            return {{"probability", d.probability},
                    {"label", d.label},
                    {"sample_t", d.sample_t},
                    {"model_id", to_hex(d.model_id.span())}};
        }
        case TxKind::DoseEvent:
            return dose_json(dosing::decode_dose_payload(tx.payload, tx.patient_id, tx.created_at));
        case TxKind::RetrievalGrant:
            if (tx.payload.size() == 32) return {{"grantee", to_hex(tx.payload)}};
            return {{"raw", to_hex(tx.payload)}};
    }
    return nullptr;
}

json block_to_json(const ledger::Block& b, const std::function<bool(const UserId&)>& with_payloads) {
    const auto& h = b.header;
    json txs = json::array();
    for (const auto& tx : b.transactions) {
        json t{{"kind", ledger::to_string(tx.kind)},
               {"patient_id", to_hex(tx.patient_id.span())},
               {"created_at", tx.created_at},
               {"hash", to_hex(ledger::hash_transaction(tx).span())}};
        if (with_payloads(tx.patient_id))
            t["payload"] = to_hex(tx.payload);
        else
            t["redacted"] = true;
        txs.push_back(std::move(t));
    }
    json approvals = json::array();
    for (const auto& a : b.approvals)
        approvals.push_back({{"miner_id", to_hex(a.miner_id.span())}, {"signature", to_hex(a.signature.span())}});
    return {{"header",
             {{"version", h.version},
              {"index", h.index},
              {"prev_hash", to_hex(h.prev_hash.span())},
              {"merkle_root", to_hex(h.merkle_root.span())},
              {"timestamp", h.timestamp},
              {"nonce", h.nonce},
              {"user_id", to_hex(h.user_id.span())},
              {"approval_digest", to_hex(h.approval_digest.span())}}},
            {"block_hash", to_hex(b.block_hash.span())},
            {"transactions", txs},
            {"approvals", approvals}};
}

json to_json(const IngestResult& r) {
    json detections = json::array();
    for (const auto& d : r.detections)
        detections.push_back({{"probability", d.probability}, {"label", d.label}, {"t", d.sample_t}});
    json summary{{"consulted", r.dosing.has_value()}, {"phase", r.phase_after}, {"dose", nullptr}};
    if (r.dosing) {
        summary["outcome"] = dosing::to_string(r.dosing->kind);
        if (r.dosing->reason) summary["reason"] = dosing::to_string(*r.dosing->reason);
        if (r.dosing->dose) summary["dose"] = dose_json(*r.dosing->dose);
        json alerts = json::array();
        for (const auto& a : r.dosing->alerts) alerts.push_back(alert_json(a));
        summary["alerts"] = alerts;
    }
    return {{"block_index", r.vitals_block},
            {"vitals_block", r.vitals_block},
            {"detection_block", r.detection_block},
            {"samples", r.cleaned.size()},
            {"detection", detections.empty() ? json(nullptr) : detections.back()},
            {"detections", detections},
            {"dose_summary", summary}};
}

System::System(SystemConfig config, std::optional<detector::RandomForest> model)
    : config_(std::move(config)),
      model_(std::move(model)),
      registry_(config_.registry),
      ledger_(registry_, config_.approvals),
      notifier_(config_.notifications) {
    if (model_) model_id_ = detector::model_id(*model_);
}

identity::Authenticated System::authenticate_locked(const identity::Credentials& who) {
    const auto result = registry_.authenticate(who.user_id, who.public_key);
    if (const auto* denied = std::get_if<identity::Denied>(&result))
        throw ApiError(401, "Unauthenticated", std::string(identity::to_string(denied->reason)));
    return std::get<identity::Authenticated>(result);
}

identity::UserIdentity System::patient_locked(const UserId& patient) const {
    auto u = registry_.find(patient);
    if (!u || u->role != Role::Patient) throw ApiError(404, "UnknownPatient", "no such patient");
    return *u;
}

void System::authorize_locked(const UserId& actor, Action action, const UserId& patient) {
    if (registry_.authorize(actor, action, patient) == identity::Effect::Deny)
        throw ApiError(403, "Forbidden", "policy denies this action");
}

std::vector<ledger::MinerApproval> System::auto_approvals_locked(const UserId& patient, const Digest& root) const {
    std::vector<ledger::MinerApproval> out;
    for (const auto& m : registry_.miners_of(patient))
        if (auto a = registry_.approve_as(m, root)) out.push_back(*a);
    return out;
}

ledger::Block System::append_locked(const std::vector<ledger::TransactionRecord>& txs, const UserId& patient,
                                    SimTime now) {
    try {
        return ledger_.append_block(txs, auto_approvals_locked(patient, ledger::transactions_root(txs)), patient,
                                    to_u32_time(now));
    } catch (const ledger::LedgerError& e) {
        throw from_ledger(e);
    }
}

dosing::RescueProtocol& System::protocol_locked(const UserId& patient) {
    auto it = protocols_.find(patient);
    if (it == protocols_.end()) {
        const auto u = patient_locked(patient);
        it = protocols_
                 .emplace(patient, dosing::RescueProtocol({patient, u.age_class}, config_.reservoir_ul,
                                                           config_.protocol))
                 .first;
    }
    return it->second;
}

std::vector<notify::Recipient> System::recipients_locked(const UserId& patient) const {
    std::vector<notify::Recipient> out{{patient, Role::Patient}};
    for (const auto& id : registry_.linked_to(patient))
        if (auto u = registry_.find(id)) out.push_back({id, u->role});
    return out;
}

identity::Credentials System::register_user(const identity::RegistrationRequest& request) {
    std::lock_guard lock(mutex_);
    identity::Credentials creds;
    try {
        creds = registry_.register_user(request);
    } catch (const identity::RegistrationError& e) {
        switch (e.code()) {
            case identity::RegistrationErrorCode::DuplicateRegistration:
                throw ApiError(409, "DuplicateRegistration", e.what());
            case identity::RegistrationErrorCode::MissingField: throw ApiError(400, "MissingField", e.what());
            case identity::RegistrationErrorCode::UnknownLinkedPatient:
                throw ApiError(422, "UnknownLinkedPatient", e.what());
        }
        throw;
    }
    if (request.role == Role::Patient) protocol_locked(creds.user_id);
    persist_locked();
    return creds;
}

IngestResult System::ingest(const identity::Credentials& who, const IngestBatch& batch, SimTime now) {
    std::lock_guard lock(mutex_);
    const auto actor = authenticate_locked(who);
    patient_locked(batch.patient_id);
    authorize_locked(actor.user_id, Action::IngestVitals, batch.patient_id);
    if (batch.readings.empty()) throw ApiError(400, "EmptyBatch", "no readings");
    if (!model_) throw ApiError(503, "NoModel", "no detection model loaded");
    to_u32_time(now);

    IngestResult result;
    result.cleaned = fog::preprocess_batch(batch.readings);

    std::vector<ledger::TransactionRecord> vitals;
    for (const auto& c : result.cleaned) {
        if (c.patient_id != batch.patient_id) throw ApiError(400, "BadBody", "reading for another patient");
        ledger::TransactionRecord tx{TxKind::VitalsData, batch.patient_id, fog::encode_vitals_payload(c),
                                     c.sample.timestamp};
        for (const auto& prior : ledger_.query(batch.patient_id, TxKind::VitalsData,
                                               {c.sample.timestamp, c.sample.timestamp}))
            if (prior == tx) throw ApiError(409, "DuplicateTransaction", "vitals already recorded");
        vitals.push_back(std::move(tx));
    }

    // Nothing above this line mutates state beyond violation counts.
    const auto vitals_block = append_locked(vitals, batch.patient_id, now);
    result.vitals_block = vitals_block.header.index;
    for (std::size_t i = 0; i < result.cleaned.size(); ++i)
        if (fog::decode_vitals_payload(vitals_block.transactions[i].payload, batch.patient_id) != result.cleaned[i])
            throw ApiError(500, "PayloadMismatch", "stored vitals differ from the cleaned sample");

    std::vector<ledger::TransactionRecord> detection_txs;
    for (const auto& c : result.cleaned) {
        DetectionRecord d;
        d.probability = detector::predict_proba(*model_, c.sample.features());
        d.label = d.probability >= config_.detection_threshold ? 1 : 0;
        d.sample_t = c.sample.timestamp;
        d.model_id = model_id_;
        detection_txs.push_back({TxKind::DetectionResult, batch.patient_id, encode_detection_payload(d), d.sample_t});
        result.detections.push_back(d);
    }

    auto& protocol = protocol_locked(batch.patient_id);
    const auto& latest = result.cleaned.back().sample;
    const auto due = protocol.recheck_due();
    if (due && now >= *due)
        result.dosing = protocol.on_recheck(latest.glucose, now);
    else if (result.detections.back().label == 1)
        result.dosing = protocol.on_detection(now);
    result.phase_after = std::string(dosing::phase_name(protocol.phase()));

    if (result.dosing && result.dosing->dose)
        detection_txs.push_back({TxKind::DoseEvent, batch.patient_id,
                                 dosing::encode_dose_payload(*result.dosing->dose), to_u32_time(now)});
    result.detection_block = append_locked(detection_txs, batch.patient_id, now).header.index;

    if (result.dosing) {
        const auto recipients = recipients_locked(batch.patient_id);
        for (const auto& a : result.dosing->alerts) {
            notify::NotificationEvent ev;
            ev.patient_id = batch.patient_id;
            ev.recipients = recipients;
            ev.kind = a.kind;
            ev.vitals = {latest.glucose, latest.systolic_bp, latest.heart_rate, latest.sweating, latest.shivering};
            ev.pushed_ul = a.pushed_ul;
            ev.remaining_ul = a.remaining_ul;
            ev.t = a.t;
            notifier_.notify(ev);
            result.notifications.push_back(ev);
        }
    }
    persist_locked();
    return result;
}

std::vector<ledger::TransactionRecord> System::history(const identity::Credentials& who, const UserId& patient,
                                                       std::optional<TxKind> kind, ledger::TimeRange range) {
    std::lock_guard lock(mutex_);
    const auto actor = authenticate_locked(who);
    patient_locked(patient);
    authorize_locked(actor.user_id, Action::ReadHistory, patient);
    return ledger_.query(patient, kind, range);
}

PumpSnapshot System::pump(const identity::Credentials& who, const UserId& patient) {
    std::lock_guard lock(mutex_);
    const auto actor = authenticate_locked(who);
    patient_locked(patient);
    authorize_locked(actor.user_id, Action::ReadPumpStatus, patient);
    const auto& p = protocol_locked(patient);
    return {p.pump().reservoir_ml(), p.pump().doses_remaining(), std::string(dosing::phase_name(p.phase())),
            p.recheck_due()};
}

void System::refill(const identity::Credentials& who, const UserId& patient, dosing::Microliters volume_ul,
                    SimTime now) {
    std::lock_guard lock(mutex_);
    const auto actor = authenticate_locked(who);
    patient_locked(patient);
    authorize_locked(actor.user_id, Action::IngestVitals, patient);
    if (volume_ul <= 0) throw ApiError(400, "BadVolume", "refill volume must be positive");
    protocol_locked(patient).refill(volume_ul, now);
}

std::size_t System::submit_grant(const identity::Credentials& who, const UserId& patient, const UserId& grantee,
                                 SimTime now) {
    std::lock_guard lock(mutex_);
    const auto actor = authenticate_locked(who);
    patient_locked(patient);
    authorize_locked(actor.user_id, Action::IngestVitals, patient);
    if (!registry_.is_registered(grantee)) throw ApiError(404, "UnknownUser", "grantee is not registered");
    ledger::TransactionRecord tx{TxKind::RetrievalGrant, patient, Bytes(grantee.bytes.begin(), grantee.bytes.end()),
                                 to_u32_time(now)};
    try {
        ledger_.submit(std::move(tx));
    } catch (const ledger::LedgerError& e) {
        throw from_ledger(e);
    }
    return ledger_.pending_for(patient).size();
}

ApprovalResult System::approve(const identity::Credentials& who, const UserId& patient, SimTime now) {
    std::lock_guard lock(mutex_);
    const auto actor = authenticate_locked(who);
    patient_locked(patient);
    authorize_locked(actor.user_id, Action::ApproveBlock, patient);
    const auto pending = ledger_.pending_for(patient);
    if (pending.empty()) throw ApiError(409, "NothingPending", "no pending transactions for this patient");
    const auto root = ledger::transactions_root(pending);
    const auto approval = registry_.approve_as(actor.user_id, root);
    if (!approval) throw ApiError(401, "Unauthenticated", "Blocked");

    auto& slot = pending_[patient];
    if (slot.root != root) slot = PendingApprovals{root, {}};
    slot.by_miner[actor.user_id] = *approval;

    ApprovalResult r;
    r.approvals = slot.by_miner.size();
    r.required = ledger_.required_approvals(patient);
    if (r.approvals < r.required) return r;

    std::vector<ledger::MinerApproval> approvals;
    for (const auto& [id, a] : slot.by_miner) approvals.push_back(a);
    try {
        r.block_index = ledger_.append_block(pending, approvals, patient, to_u32_time(now)).header.index;
    } catch (const ledger::LedgerError& e) {
        throw from_ledger(e);
    }
    pending_.erase(patient);
    persist_locked();
    return r;
}

std::optional<ledger::IntegrityError> System::verify(const identity::Credentials& who) {
    std::lock_guard lock(mutex_);
    authenticate_locked(who);
    return ledger_.validate();
}

json System::block_json(const identity::Credentials& who, std::uint64_t index) {
    std::lock_guard lock(mutex_);
    const auto actor = authenticate_locked(who);
    const auto b = ledger_.block(index);
    if (!b) throw ApiError(404, "UnknownBlock", "no block at this index");
    return block_to_json(*b, [&](const UserId& patient) {
        return registry_.evaluate(actor.user_id, Action::ReadHistory, patient) == identity::Effect::Allow;
    });
}

std::size_t System::chain_length() const { return ledger_.size(); }
std::vector<ledger::Block> System::blocks() const { return ledger_.blocks(); }
std::optional<identity::UserIdentity> System::user(const UserId& id) const { return registry_.find(id); }

std::optional<dosing::PumpState> System::pump_state(const UserId& patient) const {
    std::lock_guard lock(mutex_);
    auto it = protocols_.find(patient);
    if (it == protocols_.end()) return std::nullopt;
    return it->second.pump();
}

const dosing::RescueProtocol* System::protocol(const UserId& patient) const {
    std::lock_guard lock(mutex_);
    auto it = protocols_.find(patient);
    return it == protocols_.end() ? nullptr : &it->second;
}

void System::load_state() {
    std::lock_guard lock(mutex_);
    if (!config_.data_dir) return;
    const auto ids = *config_.data_dir / "identities.jsonl";
    const auto chain = *config_.data_dir / "chain.bin";
    if (std::filesystem::exists(ids)) registry_.load(ids);
    if (std::filesystem::exists(chain)) {
        auto blocks = ledger::load_chain(chain);
        if (const auto err = ledger::validate_chain(blocks, &registry_))
            throw std::runtime_error("stored chain fails verification at block " + std::to_string(err->block_index) +
                                     ": " + std::string(ledger::to_string(err->reason)));
        ledger_.restore(std::move(blocks));
    }
    for (const auto& u : registry_.all())
        if (u.role == Role::Patient) protocol_locked(u.user_id);
}

void System::save_state() const {
    std::lock_guard lock(mutex_);
    persist_locked();
}

void System::persist_locked() const {
    if (!config_.data_dir) return;
    std::filesystem::create_directories(*config_.data_dir);
    registry_.save(*config_.data_dir / "identities.jsonl");
    const auto blocks = ledger_.blocks();
    ledger::save_chain(*config_.data_dir / "chain.bin", blocks);
}

}  // namespace glucoguard::gateway
