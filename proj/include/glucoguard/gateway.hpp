#pragma once

#include "glucoguard/detector.hpp"
#include "glucoguard/dosing.hpp"
#include "glucoguard/fog.hpp"
#include "glucoguard/identity.hpp"
#include "glucoguard/ledger.hpp"
#include "glucoguard/notify.hpp"

#include <json.hpp>

#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

namespace glucoguard::gateway {

using nlohmann::json;

/// Every request failure: HTTP status, a stable machine code, and a message.
class ApiError : public std::runtime_error {
public:
    ApiError(int status, std::string code, std::string message)
        : std::runtime_error(std::move(message)), status_(status), code_(std::move(code)) {}
    int status() const { return status_; }
    const std::string& code() const { return code_; }
    json body() const { return {{"error", {{"code", code_}, {"message", what()}}}}; }

private:
    int status_;
    std::string code_;
};

struct SystemConfig {
    identity::RegistryConfig registry{};
    ledger::ApprovalThreshold approvals{};
    dosing::ProtocolConfig protocol{};
    dosing::Microliters reservoir_ul = 1200;  // fresh pump fill
    double detection_threshold = 0.5;
    /// When set, identities and the chain are written here after every mutation.
    std::optional<std::filesystem::path> data_dir;
    notify::Notifier::Options notifications{};
};

struct IngestBatch {
    UserId patient_id;
    std::vector<fog::RawReading> readings;
};

/// Throws ApiError(400) on a malformed body.
IngestBatch parse_ingest_body(const json& body);
identity::RegistrationRequest parse_registration(const json& body);
/// Throws ApiError(400) on anything but 64 lowercase hex characters.
UserId parse_id(std::string_view hex, std::string_view field);
Key parse_key(std::string_view hex, std::string_view field);

struct DetectionRecord {
    double probability = 0;
    std::uint8_t label = 0;
    std::uint32_t sample_t = 0;
    Digest model_id;

    friend bool operator==(const DetectionRecord&, const DetectionRecord&) = default;
};

/// probability (f64 BE) || label (1) || sample timestamp (4 BE) || model id (32)
Bytes encode_detection_payload(const DetectionRecord& d);
DetectionRecord decode_detection_payload(ByteSpan payload);

struct IngestResult {
    std::uint64_t vitals_block = 0;
    std::uint64_t detection_block = 0;
    std::vector<fog::CleanReading> cleaned;
    std::vector<DetectionRecord> detections;
    std::optional<dosing::Outcome> dosing;  // absent when the protocol was not consulted
    std::string phase_after;
    std::vector<notify::NotificationEvent> notifications;
};

json to_json(const IngestResult& r);
json to_json(const fog::CleanReading& r);
/// Decoded payload by kind; RetrievalGrant names the grantee.
json payload_json(const ledger::TransactionRecord& tx);
/// Header fields hex-encoded. Payloads are included only when `with_payloads` says so.
json block_to_json(const ledger::Block& block, const std::function<bool(const UserId&)>& with_payloads);

struct PumpSnapshot {
    double reservoir_ml = 0;
    std::int64_t doses_remaining = 0;
    std::string phase;
    std::optional<SimTime> recheck_due;
};

struct ApprovalResult {
    std::size_t approvals = 0;
    std::size_t required = 0;
    std::optional<std::uint64_t> block_index;  // set once the pending block is appended
};

/// The service core: registry, ledger, detector, per-patient rescue protocols
/// and the notifier. One mutex serializes every operation.
class System {
public:
    System(SystemConfig config, std::optional<detector::RandomForest> model);

    identity::Credentials register_user(const identity::RegistrationRequest& request);

    IngestResult ingest(const identity::Credentials& who, const IngestBatch& batch, SimTime now);

    std::vector<ledger::TransactionRecord> history(const identity::Credentials& who, const UserId& patient,
                                                   std::optional<ledger::TxKind> kind, ledger::TimeRange range);
    PumpSnapshot pump(const identity::Credentials& who, const UserId& patient);
    void refill(const identity::Credentials& who, const UserId& patient, dosing::Microliters volume_ul, SimTime now);

    /// Pools a RetrievalGrant naming `grantee` for interactive approval.
    std::size_t submit_grant(const identity::Credentials& who, const UserId& patient, const UserId& grantee,
                             SimTime now);
    /// Signs the patient's pending pool as `who`; appends once enough miners have.
    ApprovalResult approve(const identity::Credentials& who, const UserId& patient, SimTime now);

    std::optional<ledger::IntegrityError> verify(const identity::Credentials& who);
    json block_json(const identity::Credentials& who, std::uint64_t index);

    // Unauthenticated inspection for tests and the operator CLI.
    std::size_t chain_length() const;
    std::vector<ledger::Block> blocks() const;
    std::optional<identity::UserIdentity> user(const UserId& id) const;
    std::optional<dosing::PumpState> pump_state(const UserId& patient) const;
    const dosing::RescueProtocol* protocol(const UserId& patient) const;
    notify::Notifier& notifier() { return notifier_; }
    identity::Registry& registry() { return registry_; }
    ledger::Ledger& ledger() { return ledger_; }
    const Digest& model_id() const { return model_id_; }

    /// Loads identities and chain from data_dir when present; throws on an invalid chain.
    void load_state();
    void save_state() const;

private:
    identity::Authenticated authenticate_locked(const identity::Credentials& who);
    identity::UserIdentity patient_locked(const UserId& patient) const;
    void authorize_locked(const UserId& actor, identity::Action action, const UserId& patient);
    std::vector<ledger::MinerApproval> auto_approvals_locked(const UserId& patient, const Digest& root) const;
    ledger::Block append_locked(const std::vector<ledger::TransactionRecord>& txs, const UserId& patient,
                                SimTime now);
    dosing::RescueProtocol& protocol_locked(const UserId& patient);
    std::vector<notify::Recipient> recipients_locked(const UserId& patient) const;
    void persist_locked() const;

    SystemConfig config_;
    std::optional<detector::RandomForest> model_;
    Digest model_id_{};
    identity::Registry registry_;
    ledger::Ledger ledger_;
    notify::Notifier notifier_;
    std::map<UserId, dosing::RescueProtocol> protocols_;
    struct PendingApprovals {
        Digest root;
        std::map<UserId, ledger::MinerApproval> by_miner;
    };
    std::map<UserId, PendingApprovals> pending_;
    mutable std::mutex mutex_;
};

}  // namespace glucoguard::gateway
