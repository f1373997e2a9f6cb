#pragma once

#include "glucoguard/bytes.hpp"
#include "glucoguard/ledger.hpp"
#include "glucoguard/patient.hpp"
#include "glucoguard/rng.hpp"

#include <array>
#include <filesystem>
#include <mutex>
#include <optional>
#include <set>
#include <shared_mutex>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <variant>
#include <vector>

namespace glucoguard::identity {

using glucoguard::AgeClass;

/// Relatives exist so that the patient's family can hold signing keys as
/// miners; they carry no data rights beyond approvals.
enum class Role : std::uint8_t { Patient, Doctor, Relative };
enum class Status : std::uint8_t { Active, Blocked };

std::string_view to_string(Role role);
std::string_view to_string(Status status);
std::optional<Role> role_from_string(std::string_view s);

struct Contact {
    std::string email;
    std::string phone;
    std::string address;
};

struct Profile {
    std::string name;
    std::string date_of_birth;
    Contact contact;
};

struct LinkCredential {
    UserId patient_id;
    Key patient_key;
};

struct RegistrationRequest {
    Role role = Role::Patient;
    Profile profile;
    // Patient
    AgeClass age_class = AgeClass::Adult;
    // Doctor
    std::string qualification;
    std::string job_details;
    // Doctor and Relative: the patients they attach to, proven by id + key.
    std::vector<LinkCredential> links;
};

struct UserIdentity {
    UserId user_id;
    Key public_key;
    Role role = Role::Patient;
    Profile profile;
    std::string qualification;
    std::string job_details;
    std::vector<UserId> linked_patients;  // Doctor / Relative
    AgeClass age_class = AgeClass::Adult;  // Patient
    std::vector<UserId> relatives;         // Patient: registered relative miners
    Status status = Status::Active;
    std::uint32_t violation_count = 0;
};

struct Credentials {
    UserId user_id;
    Key public_key;
};

enum class RegistrationErrorCode { DuplicateRegistration, MissingField, UnknownLinkedPatient };

class RegistrationError : public std::runtime_error {
public:
    RegistrationError(RegistrationErrorCode code, std::string what)
        : std::runtime_error(std::move(what)), code_(code) {}
    RegistrationErrorCode code() const { return code_; }

private:
    RegistrationErrorCode code_;
};

struct UnknownMiner : std::runtime_error {
    UnknownMiner() : std::runtime_error("unknown miner") {}
};

enum class DenyReason { UnknownId, KeyMismatch, Blocked };
std::string_view to_string(DenyReason r);

struct Authenticated {
    UserId user_id;
    Role role;
};
struct Denied {
    DenyReason reason;
};
using AuthResult = std::variant<Authenticated, Denied>;

enum class Action : std::uint8_t { IngestVitals, ReadHistory, ReadPumpStatus, ApproveBlock, Register };
enum class Relation : std::uint8_t { Self, LinkedPatient, Any };
enum class Effect : std::uint8_t { Allow, Deny };

inline constexpr std::size_t kRoleCount = 3;
inline constexpr std::size_t kActionCount = 5;
inline constexpr std::size_t kRelationCount = 3;

/// Total map (role, action, relation) -> effect. Every entry starts as Deny.
class PolicyList {
public:
    PolicyList() { table_.fill(Effect::Deny); }

    /// Allows the patient's own data, linked doctors' reads, and approvals
    /// by any of the patient's miners.
    static PolicyList standard();

    void set(Role role, Action action, Relation rel, Effect effect) { table_[slot(role, action, rel)] = effect; }
    Effect resolve(Role role, Action action, Relation rel) const { return table_[slot(role, action, rel)]; }

private:
    static std::size_t slot(Role r, Action a, Relation rel) {
        return (static_cast<std::size_t>(r) * kActionCount + static_cast<std::size_t>(a)) * kRelationCount +
               static_cast<std::size_t>(rel);
    }
    std::array<Effect, kRoleCount * kActionCount * kRelationCount> table_{};
};

struct RegistryConfig {
    std::uint64_t seed = 1;
    /// Violations (failed authentications plus denied authorizations) that
    /// block a user. 1 blocks on the first offence.
    std::uint32_t block_threshold = 3;
};

Digest sign_approval(const Key& miner_key, const Digest& merkle_root);

/// Identity store, access policy and violation tracking. Mutations are serialized;
/// lookups share a reader lock.
class Registry final : public ledger::ApprovalAuthority {
public:
    explicit Registry(RegistryConfig config = {}, PolicyList policy = PolicyList::standard());

    Credentials register_user(const RegistrationRequest& request);

    AuthResult authenticate(const UserId& id, const Key& key);
    /// Resolves the actor's relation to the target against the policy list.
    /// A Deny is recorded as a violation.
    Effect authorize(const UserId& actor, Action action, const UserId& target_patient);
    /// Side-effect-free form of authorize.
    Effect evaluate(const UserId& actor, Action action, const UserId& target_patient) const;

    /// Throws UnknownMiner; returns false for a Blocked miner.
    bool verify_approval(const UserId& miner_id, const Digest& signature, const Digest& merkle_root) const;
    /// Signs with the stored key (the simulation holds every miner's key).
    std::optional<ledger::MinerApproval> approve_as(const UserId& miner_id, const Digest& merkle_root) const;

    std::optional<UserIdentity> find(const UserId& id) const;
    std::vector<UserIdentity> all() const;
    std::size_t size() const;
    /// Doctors and relatives linked to the patient.
    std::vector<UserId> linked_to(const UserId& patient) const;

    // ledger::ApprovalAuthority
    bool is_registered(const UserId& id) const override;
    /// The patient, linked doctors, and registered relatives, in id order.
    std::vector<UserId> miners_of(const UserId& patient) const override;
    bool accepts_approval(const ledger::MinerApproval& approval, const Digest& root) const override;
    bool signature_matches(const ledger::MinerApproval& approval, const Digest& root) const override;

    /// One JSON object per line.
    void save(const std::filesystem::path& path) const;
    void load(const std::filesystem::path& path);

    const RegistryConfig& config() const { return config_; }

private:
    Relation relation_locked(const UserIdentity& actor, const UserId& target) const;
    void record_violation_locked(UserIdentity& user);
    std::vector<UserId> miners_locked(const UserId& patient) const;

    RegistryConfig config_;
    PolicyList policy_;
    mutable std::shared_mutex mutex_;
    Rng rng_;
    std::unordered_map<UserId, UserIdentity> users_;
    std::vector<UserId> order_;  // registration order, for stable persistence
    std::unordered_map<Key, UserId> key_index_;
    std::set<std::pair<Role, std::string>> emails_;
};

}  // namespace glucoguard::identity
