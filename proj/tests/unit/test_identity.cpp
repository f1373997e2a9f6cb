#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "../support/fixtures.hpp"
#include "glucoguard/identity.hpp"

#include <set>

using namespace glucoguard;
using namespace glucoguard::identity;
using glucoguard::testing::doctor_request;
using glucoguard::testing::patient_request;
using glucoguard::testing::register_household;
using glucoguard::testing::relative_request;

namespace {

RegistrationErrorCode registration_code(Registry& reg, const RegistrationRequest& req) {
    try {
        reg.register_user(req);
    } catch (const RegistrationError& e) {
        return e.code();
    }
    FAIL("registration unexpectedly succeeded");
    return RegistrationErrorCode::MissingField;
}

}  // namespace

TEST_CASE("patient registration issues distinct 32-byte id and key") {
    Registry reg;
    const auto c = reg.register_user(patient_request("a@example.org"));
    CHECK(c.user_id.bytes != c.public_key.bytes);
    CHECK_FALSE(c.user_id.is_zero());
    const auto u = reg.find(c.user_id);
    REQUIRE(u.has_value());
    CHECK(u->status == Status::Active);
    CHECK(u->violation_count == 0);
    CHECK(u->role == Role::Patient);
}

TEST_CASE("registration is deterministic for a seed") {
    Registry a(RegistryConfig{99, 3}), b(RegistryConfig{99, 3}), c(RegistryConfig{100, 3});
    const auto ca = a.register_user(patient_request("x@example.org"));
    const auto cb = b.register_user(patient_request("x@example.org"));
    const auto cc = c.register_user(patient_request("x@example.org"));
    CHECK(ca.user_id == cb.user_id);
    CHECK(ca.public_key == cb.public_key);
    CHECK(ca.user_id != cc.user_id);
}

TEST_CASE("registration errors") {
    Registry reg;
    const auto p = reg.register_user(patient_request("p@example.org"));

    CHECK(registration_code(reg, patient_request("p@example.org")) == RegistrationErrorCode::DuplicateRegistration);

    auto nameless = patient_request("n@example.org");
    nameless.profile.name.clear();
    CHECK(registration_code(reg, nameless) == RegistrationErrorCode::MissingField);
    auto no_email = patient_request("");
    CHECK(registration_code(reg, no_email) == RegistrationErrorCode::MissingField);

    auto unlinked = doctor_request("d@example.org", p);
    unlinked.links.clear();
    CHECK(registration_code(reg, unlinked) == RegistrationErrorCode::UnknownLinkedPatient);

    auto bad_key = doctor_request("d@example.org", p);
    bad_key.links[0].patient_key.bytes[0] ^= 1;
    CHECK(registration_code(reg, bad_key) == RegistrationErrorCode::UnknownLinkedPatient);

    // Same email under a different role is a different registration.
    auto doc = doctor_request("p@example.org", p);
    CHECK_NOTHROW(reg.register_user(doc));
}

TEST_CASE("doctor linking to a doctor is rejected") {
    Registry reg;
    const auto p = reg.register_user(patient_request("p@example.org"));
    const auto d = reg.register_user(doctor_request("d@example.org", p));
    CHECK(registration_code(reg, doctor_request("d2@example.org", d)) == RegistrationErrorCode::UnknownLinkedPatient);
}

TEST_CASE("authenticate outcomes") {
    Registry reg;
    const auto c = reg.register_user(patient_request("p@example.org"));
    CHECK(std::holds_alternative<Authenticated>(reg.authenticate(c.user_id, c.public_key)));

    Key wrong = c.public_key;
    wrong.bytes[7] ^= 0x80;
    const auto denied = reg.authenticate(c.user_id, wrong);
    REQUIRE(std::holds_alternative<Denied>(denied));
    CHECK(std::get<Denied>(denied).reason == DenyReason::KeyMismatch);
    CHECK(reg.find(c.user_id)->violation_count == 1);

    UserId unknown;
    unknown.bytes[0] = 1;
    CHECK(std::get<Denied>(reg.authenticate(unknown, c.public_key)).reason == DenyReason::UnknownId);
}

TEST_CASE("policy resolves roles and relations") {
    Registry reg;
    const auto a = register_household(reg, "a");
    const auto b = register_household(reg, "b");

    CHECK(reg.evaluate(a.patient.user_id, Action::ReadHistory, a.patient.user_id) == Effect::Allow);
    CHECK(reg.evaluate(a.patient.user_id, Action::ReadHistory, b.patient.user_id) == Effect::Deny);
    CHECK(reg.evaluate(a.doctor.user_id, Action::ReadHistory, a.patient.user_id) == Effect::Allow);
    CHECK(reg.evaluate(a.doctor.user_id, Action::ReadHistory, b.patient.user_id) == Effect::Deny);
    CHECK(reg.evaluate(a.relative.user_id, Action::ReadHistory, a.patient.user_id) == Effect::Deny);
    CHECK(reg.evaluate(a.relative.user_id, Action::ApproveBlock, a.patient.user_id) == Effect::Allow);
    CHECK(reg.evaluate(a.relative.user_id, Action::ReadPumpStatus, a.patient.user_id) == Effect::Allow);
    CHECK(reg.evaluate(a.patient.user_id, Action::Register, a.patient.user_id) == Effect::Deny);

    // evaluate has no side effects; authorize is repeatable until state changes.
    CHECK(reg.find(a.patient.user_id)->violation_count == 0);
    for (int i = 0; i < 3; ++i)
        CHECK(reg.authorize(a.doctor.user_id, Action::ReadHistory, a.patient.user_id) == Effect::Allow);
}

TEST_CASE("a default policy list denies everything") {
    PolicyList empty;
    for (auto r : {Role::Patient, Role::Doctor, Role::Relative})
        for (auto a : {Action::IngestVitals, Action::ReadHistory, Action::ReadPumpStatus, Action::ApproveBlock,
                       Action::Register})
            for (auto rel : {Relation::Self, Relation::LinkedPatient, Relation::Any})
                CHECK(empty.resolve(r, a, rel) == Effect::Deny);
}

TEST_CASE("third denial blocks the actor") {
    Registry reg;
    const auto a = register_household(reg, "a");
    const auto b = register_household(reg, "b");
    CHECK(reg.authorize(a.patient.user_id, Action::ReadHistory, b.patient.user_id) == Effect::Deny);
    CHECK(reg.authorize(a.patient.user_id, Action::ReadHistory, b.patient.user_id) == Effect::Deny);
    CHECK(reg.find(a.patient.user_id)->status == Status::Active);
    CHECK(reg.authorize(a.patient.user_id, Action::ReadHistory, b.patient.user_id) == Effect::Deny);
    CHECK(reg.find(a.patient.user_id)->status == Status::Blocked);
    CHECK(std::get<Denied>(reg.authenticate(a.patient.user_id, a.patient.public_key)).reason == DenyReason::Blocked);
    // Blocked users are denied even their own data.
    CHECK(reg.authorize(a.patient.user_id, Action::ReadHistory, a.patient.user_id) == Effect::Deny);
}

TEST_CASE("threshold of one blocks on the first offence") {
    Registry reg(RegistryConfig{1, 1});
    const auto a = register_household(reg, "a");
    Key wrong;
    reg.authenticate(a.doctor.user_id, wrong);
    CHECK(reg.find(a.doctor.user_id)->status == Status::Blocked);
}

TEST_CASE("miners are the patient, linked doctors and relatives") {
    Registry reg;
    const auto h = register_household(reg);
    const auto miners = reg.miners_of(h.patient.user_id);
    CHECK(miners.size() == 3);
    CHECK(std::is_sorted(miners.begin(), miners.end()));
    const std::set<UserId> set(miners.begin(), miners.end());
    CHECK(set.count(h.patient.user_id) == 1);
    CHECK(set.count(h.doctor.user_id) == 1);
    CHECK(set.count(h.relative.user_id) == 1);
    CHECK(reg.find(h.patient.user_id)->relatives == std::vector<UserId>{h.relative.user_id});
    CHECK(reg.miners_of(h.doctor.user_id).empty());
    CHECK(reg.linked_to(h.patient.user_id).size() == 2);
}

TEST_CASE("approval signatures") {
    Registry reg;
    const auto h = register_household(reg);
    Digest root;
    root.bytes.fill(0x11);
    const auto sig = sign_approval(h.doctor.public_key, root);
    CHECK(sig == sha256({h.doctor.public_key.span(), root.span()}));
    CHECK(reg.verify_approval(h.doctor.user_id, sig, root));
    Digest other = root;
    other.bytes[0] = 0;
    CHECK_FALSE(reg.verify_approval(h.doctor.user_id, sig, other));
    CHECK(sign_approval(h.patient.public_key, root) != sig);
    UserId ghost;
    ghost.bytes[1] = 3;
    CHECK_THROWS_AS(reg.verify_approval(ghost, sig, root), UnknownMiner);
    CHECK(reg.approve_as(h.doctor.user_id, root)->signature == sig);
}

TEST_CASE("signature golden vector") {
    Key key;
    for (std::size_t i = 0; i < 32; ++i) key.bytes[i] = static_cast<std::uint8_t>(i);
    Digest root;
    root.bytes.fill(0xff);
    // Python: hashlib.sha256(bytes(range(32)) + b"\xff" * 32)
    CHECK(to_hex(sign_approval(key, root).span()) ==
          "50473549565866d7efcc486bcf3072145a9616a6a6f3cdf8cc6158ff2178e5dd");
}

TEST_CASE("blocked miners stop approving but old signatures still match") {
    Registry reg(RegistryConfig{5, 1});
    const auto h = register_household(reg);
    Digest root;
    root.bytes.fill(2);
    const auto a = *reg.approve_as(h.relative.user_id, root);
    Key wrong;
    reg.authenticate(h.relative.user_id, wrong);
    CHECK_FALSE(reg.approve_as(h.relative.user_id, root).has_value());
    CHECK_FALSE(reg.accepts_approval(a, root));
    CHECK(reg.signature_matches(a, root));
}

TEST_CASE("ten thousand registrations never collide") {
    Registry reg(RegistryConfig{2024, 3});
    std::set<std::array<std::uint8_t, 32>> seen;
    for (int i = 0; i < 10000; ++i) {
        const auto c = reg.register_user(patient_request("user" + std::to_string(i) + "@example.org"));
        CHECK(seen.insert(c.user_id.bytes).second);
        CHECK(seen.insert(c.public_key.bytes).second);
    }
    CHECK(reg.size() == 10000);
}

TEST_CASE("identity store round trips through JSON lines") {
    glucoguard::testing::TempDir dir("identity");
    Registry reg(RegistryConfig{8, 3});
    const auto h = register_household(reg);
    Key wrong;
    reg.authenticate(h.doctor.user_id, wrong);
    reg.save(dir / "ids.jsonl");

    Registry loaded(RegistryConfig{8, 3});
    loaded.load(dir / "ids.jsonl");
    CHECK(loaded.size() == 3);
    const auto d = loaded.find(h.doctor.user_id);
    REQUIRE(d.has_value());
    CHECK(d->violation_count == 1);
    CHECK(d->public_key == h.doctor.public_key);
    CHECK(d->linked_patients == std::vector<UserId>{h.patient.user_id});
    CHECK(d->qualification == "MD");
    CHECK(loaded.miners_of(h.patient.user_id) == reg.miners_of(h.patient.user_id));
    CHECK(std::holds_alternative<Authenticated>(loaded.authenticate(h.patient.user_id, h.patient.public_key)));

    const auto extra = loaded.register_user(patient_request("new@example.org"));
    CHECK(reg.find(extra.user_id) == std::nullopt);
    CHECK_THROWS_AS(loaded.register_user(patient_request(reg.find(h.patient.user_id)->profile.contact.email)),
                    RegistrationError);
}
