#pragma once

#include "glucoguard/crypto.hpp"
#include "glucoguard/identity.hpp"
#include "glucoguard/ledger.hpp"

#include <unistd.h>

#include <cstdlib>
#include <filesystem>
#include <string>
#include <vector>

namespace glucoguard::testing {

inline identity::RegistrationRequest patient_request(const std::string& email,
                                                     AgeClass age = AgeClass::Adult) {
    identity::RegistrationRequest r;
    r.role = identity::Role::Patient;
    r.profile = {"Pat " + email, "1990-05-05", {email, "+1555000", "1 Main St"}};
    r.age_class = age;
    return r;
}

inline identity::RegistrationRequest doctor_request(const std::string& email, const identity::Credentials& patient) {
    identity::RegistrationRequest r;
    r.role = identity::Role::Doctor;
    r.profile = {"Doc " + email, "1970-01-01", {email, "+1555001", "2 Clinic Rd"}};
    r.qualification = "MD";
    r.job_details = "Endocrinology";
    r.links = {{patient.user_id, patient.public_key}};
    return r;
}

inline identity::RegistrationRequest relative_request(const std::string& email,
                                                      const identity::Credentials& patient) {
    identity::RegistrationRequest r;
    r.role = identity::Role::Relative;
    r.profile = {"Rel " + email, "1960-01-01", {email, "+1555002", "1 Main St"}};
    r.links = {{patient.user_id, patient.public_key}};
    return r;
}

/// A patient with one linked doctor and one relative: three miners.
struct Household {
    identity::Credentials patient;
    identity::Credentials doctor;
    identity::Credentials relative;
};

inline Household register_household(identity::Registry& reg, const std::string& tag = "h") {
    Household h;
    h.patient = reg.register_user(patient_request(tag + "-p@example.org"));
    h.doctor = reg.register_user(doctor_request(tag + "-d@example.org", h.patient));
    h.relative = reg.register_user(relative_request(tag + "-r@example.org", h.patient));
    return h;
}

inline ledger::TransactionRecord make_tx(const UserId& patient, std::uint32_t t, std::uint8_t salt = 0) {
    ledger::TransactionRecord tx;
    tx.kind = ledger::TxKind::VitalsData;
    tx.patient_id = patient;
    tx.created_at = t;
    tx.payload = {salt, static_cast<std::uint8_t>(t), static_cast<std::uint8_t>(t >> 8), 0x42};
    return tx;
}

inline std::vector<ledger::MinerApproval> approve_all(const identity::Registry& reg, const UserId& patient,
                                                      std::span<const ledger::TransactionRecord> txs) {
    const auto root = ledger::transactions_root(txs);
    std::vector<ledger::MinerApproval> out;
    for (const auto& m : reg.miners_of(patient))
        if (auto a = reg.approve_as(m, root)) out.push_back(*a);
    return out;
}

/// Appends `n` blocks of 1-3 transactions each.
inline void build_chain(ledger::Ledger& ledger, const identity::Registry& reg, const UserId& patient, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) {
        std::vector<ledger::TransactionRecord> txs;
        for (std::size_t k = 0; k <= i % 3; ++k)
            txs.push_back(make_tx(patient, static_cast<std::uint32_t>(100 * i + k), static_cast<std::uint8_t>(k)));
        ledger.append_block(txs, approve_all(reg, patient, txs), patient, static_cast<std::uint32_t>(1000 + i));
    }
}

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        auto base = std::filesystem::temp_directory_path();
        for (unsigned i = 0;; ++i) {
            path_ = base / ("glucoguard-" + tag + "-" + std::to_string(::getpid()) + "-" + std::to_string(i));
            if (std::filesystem::create_directory(path_)) break;
        }
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
    std::filesystem::path path_;
};

}  // namespace glucoguard::testing
