#include "glucoguard/identity.hpp"

#include "glucoguard/crypto.hpp"

#include <json.hpp>

#include <algorithm>
#include <fstream>
#include <set>

namespace glucoguard::identity {

using nlohmann::json;

std::string_view to_string(Role role) {
    switch (role) {
        case Role::Patient: return "Patient";
        case Role::Doctor: return "Doctor";
        case Role::Relative: return "Relative";
    }
    return "Unknown";
}

std::string_view to_string(Status status) { return status == Status::Active ? "Active" : "Blocked"; }

std::string_view to_string(DenyReason r) {
    switch (r) {
        case DenyReason::UnknownId: return "UnknownId";
        case DenyReason::KeyMismatch: return "KeyMismatch";
        case DenyReason::Blocked: return "Blocked";
    }
    return "Unknown";
}

std::optional<Role> role_from_string(std::string_view s) {
    for (auto r : {Role::Patient, Role::Doctor, Role::Relative})
        if (to_string(r) == s) return r;
    return std::nullopt;
}

PolicyList PolicyList::standard() {
    PolicyList p;
    for (auto a : {Action::IngestVitals, Action::ReadHistory, Action::ReadPumpStatus, Action::ApproveBlock}) {
        p.set(Role::Patient, a, Relation::Self, Effect::Allow);
        p.set(Role::Doctor, a, Relation::LinkedPatient, Effect::Allow);
    }
    p.set(Role::Relative, Action::ApproveBlock, Relation::LinkedPatient, Effect::Allow);
    p.set(Role::Relative, Action::ReadPumpStatus, Relation::LinkedPatient, Effect::Allow);
    return p;
}

Digest sign_approval(const Key& miner_key, const Digest& merkle_root) {
    return sha256({miner_key.span(), merkle_root.span()});
}

Registry::Registry(RegistryConfig config, PolicyList policy)
    : config_(config), policy_(policy), rng_(config.seed) {}

Credentials Registry::register_user(const RegistrationRequest& req) {
    std::unique_lock lock(mutex_);

    if (req.profile.name.empty()) throw RegistrationError(RegistrationErrorCode::MissingField, "name is required");
    if (req.profile.contact.email.empty())
        throw RegistrationError(RegistrationErrorCode::MissingField, "email is required");

    if (emails_.contains({req.role, req.profile.contact.email}))
        throw RegistrationError(RegistrationErrorCode::DuplicateRegistration,
                                    "email already registered for this role");

    std::vector<UserId> links;
    if (req.role != Role::Patient) {
        if (req.links.empty())
            throw RegistrationError(RegistrationErrorCode::UnknownLinkedPatient,
                                    "a linked patient id and key are required");
        for (const auto& link : req.links) {
            auto it = users_.find(link.patient_id);
            if (it == users_.end() || it->second.role != Role::Patient || it->second.public_key != link.patient_key)
                throw RegistrationError(RegistrationErrorCode::UnknownLinkedPatient,
                                        "linked patient credentials do not verify");
            if (std::find(links.begin(), links.end(), link.patient_id) == links.end())
                links.push_back(link.patient_id);
        }
    }

    using Raw = std::array<std::uint8_t, 32>;
    auto draw = [&] {
        Raw v;
        for (std::size_t i = 0; i < 32; i += 8) {
            const auto word = rng_();
            for (std::size_t j = 0; j < 8; ++j) v[i + j] = static_cast<std::uint8_t>(word >> (8 * j));
        }
        return v;
    };
    auto taken = [&](const Raw& v) { return users_.contains(UserId{v}) || key_index_.contains(Key{v}); };

    UserIdentity u;
    Raw id_bytes, key_bytes;
    do {
        id_bytes = draw();
    } while (taken(id_bytes));
    do {
        key_bytes = draw();
    } while (taken(key_bytes) || key_bytes == id_bytes);
    u.user_id = UserId{id_bytes};
    u.public_key = Key{key_bytes};

    u.role = req.role;
    u.profile = req.profile;
    u.age_class = req.age_class;
    u.qualification = req.qualification;
    u.job_details = req.job_details;
    u.linked_patients = links;

    if (req.role == Role::Relative)
        for (const auto& p : links) users_.at(p).relatives.push_back(u.user_id);

    key_index_.emplace(u.public_key, u.user_id);
    emails_.emplace(u.role, u.profile.contact.email);
    order_.push_back(u.user_id);
    users_.emplace(u.user_id, u);
    return {u.user_id, u.public_key};
}

AuthResult Registry::authenticate(const UserId& id, const Key& key) {
    std::unique_lock lock(mutex_);
    auto it = users_.find(id);
    if (it == users_.end()) return Denied{DenyReason::UnknownId};
    auto& u = it->second;
    if (u.status == Status::Blocked) return Denied{DenyReason::Blocked};
    if (u.public_key != key) {
        record_violation_locked(u);
        return Denied{DenyReason::KeyMismatch};
    }
    return Authenticated{u.user_id, u.role};
}

Relation Registry::relation_locked(const UserIdentity& actor, const UserId& target) const {
    if (actor.user_id == target) return Relation::Self;
    if (std::find(actor.linked_patients.begin(), actor.linked_patients.end(), target) != actor.linked_patients.end())
        return Relation::LinkedPatient;
    return Relation::Any;
}

void Registry::record_violation_locked(UserIdentity& user) {
    ++user.violation_count;
    if (user.violation_count >= config_.block_threshold) user.status = Status::Blocked;
}

Effect Registry::evaluate(const UserId& actor, Action action, const UserId& target) const {
    std::shared_lock lock(mutex_);
    auto it = users_.find(actor);
    if (it == users_.end() || it->second.status == Status::Blocked) return Effect::Deny;
    return policy_.resolve(it->second.role, action, relation_locked(it->second, target));
}

Effect Registry::authorize(const UserId& actor, Action action, const UserId& target) {
    std::unique_lock lock(mutex_);
    auto it = users_.find(actor);
    if (it == users_.end()) return Effect::Deny;
    auto& u = it->second;
    if (u.status == Status::Blocked) return Effect::Deny;
    const Effect e = policy_.resolve(u.role, action, relation_locked(u, target));
    if (e == Effect::Deny) record_violation_locked(u);
    return e;
}

bool Registry::verify_approval(const UserId& miner_id, const Digest& signature, const Digest& root) const {
    std::shared_lock lock(mutex_);
    auto it = users_.find(miner_id);
    if (it == users_.end()) throw UnknownMiner();
    if (it->second.status != Status::Active) return false;
    return sign_approval(it->second.public_key, root) == signature;
}

std::optional<ledger::MinerApproval> Registry::approve_as(const UserId& miner_id, const Digest& root) const {
    std::shared_lock lock(mutex_);
    auto it = users_.find(miner_id);
    if (it == users_.end() || it->second.status != Status::Active) return std::nullopt;
    return ledger::MinerApproval{miner_id, sign_approval(it->second.public_key, root)};
}

std::optional<UserIdentity> Registry::find(const UserId& id) const {
    std::shared_lock lock(mutex_);
    auto it = users_.find(id);
    if (it == users_.end()) return std::nullopt;
    return it->second;
}

std::vector<UserIdentity> Registry::all() const {
    std::shared_lock lock(mutex_);
    std::vector<UserIdentity> out;
    out.reserve(order_.size());
    for (const auto& id : order_) out.push_back(users_.at(id));
    return out;
}

std::size_t Registry::size() const {
    std::shared_lock lock(mutex_);
    return users_.size();
}

std::vector<UserId> Registry::linked_to(const UserId& patient) const {
    std::shared_lock lock(mutex_);
    std::vector<UserId> out;
    for (const auto& id : order_) {
        const auto& u = users_.at(id);
        if (u.role != Role::Patient &&
            std::find(u.linked_patients.begin(), u.linked_patients.end(), patient) != u.linked_patients.end())
            out.push_back(id);
    }
    return out;
}

bool Registry::is_registered(const UserId& id) const {
    std::shared_lock lock(mutex_);
    return users_.contains(id);
}

std::vector<UserId> Registry::miners_locked(const UserId& patient) const {
    auto it = users_.find(patient);
    if (it == users_.end() || it->second.role != Role::Patient) return {};
    std::set<UserId> miners{patient};
    for (const auto& [id, u] : users_)
        if (u.role != Role::Patient &&
            std::find(u.linked_patients.begin(), u.linked_patients.end(), patient) != u.linked_patients.end())
            miners.insert(id);
    for (const auto& r : it->second.relatives) miners.insert(r);
    return {miners.begin(), miners.end()};
}

std::vector<UserId> Registry::miners_of(const UserId& patient) const {
    std::shared_lock lock(mutex_);
    return miners_locked(patient);
}

bool Registry::accepts_approval(const ledger::MinerApproval& a, const Digest& root) const {
    try {
        return verify_approval(a.miner_id, a.signature, root);
    } catch (const UnknownMiner&) {
        return false;
    }
}

bool Registry::signature_matches(const ledger::MinerApproval& a, const Digest& root) const {
    std::shared_lock lock(mutex_);
    auto it = users_.find(a.miner_id);
    return it != users_.end() && sign_approval(it->second.public_key, root) == a.signature;
}

namespace {

json ids_to_json(const std::vector<UserId>& ids) {
    json arr = json::array();
    for (const auto& id : ids) arr.push_back(to_hex(id));
    return arr;
}

std::vector<UserId> ids_from_json(const json& arr) {
    std::vector<UserId> out;
    for (const auto& v : arr) out.push_back(fixed_from_hex<UserId>(v.get<std::string>()));
    return out;
}

}  // namespace

void Registry::save(const std::filesystem::path& path) const {
    std::shared_lock lock(mutex_);
    std::ofstream f(path, std::ios::trunc);
    if (!f) throw std::runtime_error("cannot open " + path.string() + " for writing");
    for (const auto& id : order_) {
        const auto& u = users_.at(id);
        json j;
        j["user_id"] = to_hex(u.user_id);
        j["public_key"] = to_hex(u.public_key);
        j["role"] = to_string(u.role);
        j["profile"] = {{"name", u.profile.name},
                        {"date_of_birth", u.profile.date_of_birth},
                        {"email", u.profile.contact.email},
                        {"phone", u.profile.contact.phone},
                        {"address", u.profile.contact.address}};
        j["status"] = to_string(u.status);
        j["violation_count"] = u.violation_count;
        j["links"] = {{"linked_patients", ids_to_json(u.linked_patients)}, {"relatives", ids_to_json(u.relatives)}};
        if (u.role == Role::Patient) j["age_class"] = to_string(u.age_class);
        if (u.role == Role::Doctor) {
            j["qualification"] = u.qualification;
            j["job_details"] = u.job_details;
        }
        f << j.dump() << '\n';
    }
}

void Registry::load(const std::filesystem::path& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("cannot open " + path.string());
    std::unordered_map<UserId, UserIdentity> users;
    std::vector<UserId> order;
    std::unordered_map<Key, UserId> keys;
    std::set<std::pair<Role, std::string>> emails;
    std::string line;
    while (std::getline(f, line)) {
        if (line.empty()) continue;
        const json j = json::parse(line);
        UserIdentity u;
        u.user_id = fixed_from_hex<UserId>(j.at("user_id").get<std::string>());
        u.public_key = fixed_from_hex<Key>(j.at("public_key").get<std::string>());
        const auto role = role_from_string(j.at("role").get<std::string>());
        if (!role) throw std::runtime_error("identity store: unknown role");
        u.role = *role;
        const auto& p = j.at("profile");
        u.profile.name = p.value("name", "");
        u.profile.date_of_birth = p.value("date_of_birth", "");
        u.profile.contact = {p.value("email", ""), p.value("phone", ""), p.value("address", "")};
        u.status = j.at("status").get<std::string>() == "Blocked" ? Status::Blocked : Status::Active;
        u.violation_count = j.at("violation_count").get<std::uint32_t>();
        u.linked_patients = ids_from_json(j.at("links").at("linked_patients"));
        u.relatives = ids_from_json(j.at("links").at("relatives"));
        if (auto age = age_class_from_string(j.value("age_class", "Adult"))) u.age_class = *age;
        u.qualification = j.value("qualification", "");
        u.job_details = j.value("job_details", "");
        if (users.contains(u.user_id) || keys.contains(u.public_key))
            throw std::runtime_error("identity store: duplicate id or key");
        keys.emplace(u.public_key, u.user_id);
        emails.emplace(u.role, u.profile.contact.email);
        order.push_back(u.user_id);
        users.emplace(u.user_id, std::move(u));
    }
    std::unique_lock lock(mutex_);
    users_ = std::move(users);
    order_ = std::move(order);
    key_index_ = std::move(keys);
    emails_ = std::move(emails);
}

}  // namespace glucoguard::identity
