// One PASS/FAIL line per acceptance criterion; exit status is the failure count.

#include "../support/fixtures.hpp"
#include "glucoguard/datagen.hpp"
#include "glucoguard/detector.hpp"
#include "glucoguard/devices.hpp"
#include "glucoguard/experiments.hpp"
#include "glucoguard/gateway.hpp"
#include "glucoguard/ledger.hpp"
#include "glucoguard/merkle.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <numeric>
#include <string>

using namespace glucoguard;
using nlohmann::json;

namespace {

const std::filesystem::path kSource(GLUCOGUARD_SOURCE_DIR);

struct Verdict {
    bool pass = true;
    std::string detail;

    void require(bool ok, const std::string& what) {
        if (!ok) {
            pass = false;
            if (!detail.empty()) detail += "; ";
            detail += what;
        }
    }
};

std::string fmt(const char* f, double a) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, a);
    return buf;
}

int failures = 0;

void run(int id, const char* title, const std::function<Verdict()>& body) {
    const auto start = std::chrono::steady_clock::now();
    Verdict v;
    try {
        v = body();
    } catch (const std::exception& e) {
        v.pass = false;
        v.detail = std::string("exception: ") + e.what();
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::printf("%s [%d] %s (%.2fs)%s%s\n", v.pass ? "PASS" : "FAIL", id, title, secs, v.detail.empty() ? "" : ": ",
                v.detail.c_str());
    std::fflush(stdout);
    failures += v.pass ? 0 : 1;
}

double elapsed_since(std::chrono::steady_clock::time_point t) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t).count();
}

datagen::GeneratorConfig default_generator(double noise = 0.05) {
    datagen::GeneratorConfig c;
    c.n_samples = 16969;
    c.seed = 42;
    c.label_noise = noise;
    return c;
}

// Shared between criteria 2, 3, 8 and 9.
detector::Dataset& default_dataset() {
    static detector::Dataset d = [] {
        const auto samples = datagen::generate_dataset(default_generator());
        return detector::Dataset::from_samples(samples);
    }();
    return d;
}

const detector::RandomForest& default_model() {
    static const detector::RandomForest m = [] {
        return detector::train_with_report(default_dataset(), detector::ForestConfig{}, 0).model;
    }();
    return m;
}

// 1 ---------------------------------------------------------------------------

Verdict reference_calibration() {
    Verdict v;
    const auto t0 = std::chrono::steady_clock::now();
    const auto samples = datagen::generate_dataset(default_generator());
    const auto s = datagen::summarize(samples);
    const double secs = elapsed_since(t0);
    const auto& g = *s.feature(fog::ModelFeature::Glucose);
    auto within = [&](const char* name, double got, double want, double tol) {
        v.require(std::fabs(got - want) <= tol,
                  std::string(name) + fmt(" %.4f", got) + fmt(" vs %.2f", want) + fmt(" +/- %.2f", tol));
    };
    within("glucose mean", g.mean, 95.74, 2.0);
    within("glucose std", g.std, 42.99, 3.0);
    v.require(g.min >= 50 && g.max <= 250, "glucose range" + fmt(" [%.2f,", g.min) + fmt(" %.2f]", g.max));
    within("systolic mean", s.feature(fog::ModelFeature::SystolicBp)->mean, 118.19, 1.0);
    within("heart-rate mean", s.feature(fog::ModelFeature::HeartRate)->mean, 662.85, 10.0);
    within("sweating mean", s.feature(fog::ModelFeature::Sweating)->mean, 0.12, 0.02);
    within("shivering mean", s.feature(fog::ModelFeature::Shivering)->mean, 0.15, 0.02);
    within("label prevalence", s.label()->mean, 0.49, 0.03);
    v.require(g.count == 16969, "row count");
    v.require(secs < 5.0, fmt("runtime %.2fs", secs));
    if (v.pass)
        v.detail = fmt("glucose mean %.2f", g.mean) + fmt(" std %.2f", g.std) + fmt(", prevalence %.3f", s.label()->mean);
    return v;
}

// 2 ---------------------------------------------------------------------------

Verdict accuracy_anchor() {
    Verdict v;
    const auto t0 = std::chrono::steady_clock::now();
    const auto report = detector::train_with_report(default_dataset(), detector::ForestConfig{}, 0);
    const double secs = elapsed_since(t0);
    v.require(report.test_accuracy >= 0.90 && report.test_accuracy <= 0.96,
              fmt("test accuracy %.4f outside [0.90, 0.96]", report.test_accuracy));
    v.require(secs < 60.0, fmt("runtime %.2fs", secs));
    v.detail += (v.detail.empty() ? "" : "; ") + fmt("train %.4f", report.train_accuracy) +
                fmt(", test %.4f", report.test_accuracy);
    return v;
}

// 3 ---------------------------------------------------------------------------

Verdict model_ordering() {
    Verdict v;
    const auto rows = detector::compare_models(default_dataset(), detector::ForestConfig{});
    double best_other = 0;
    std::string summary;
    for (const auto& r : rows) {
        if (r.name != "RF") best_other = std::max(best_other, r.test_accuracy);
        summary += (summary.empty() ? "" : ", ") + r.name + fmt(" %.4f", r.test_accuracy);
    }
    v.require(rows.size() == 4 && rows[0].name == "RF", "unexpected comparison rows");
    v.require(rows[0].test_accuracy >= best_other - 0.01, "RF below best baseline - 0.01");

    const auto clean = datagen::generate_dataset(default_generator(0.0));
    const auto report = detector::train_with_report(detector::Dataset::from_samples(clean), detector::ForestConfig{}, 0);
    const auto n_test = report.split.test.size();
    const auto errors = report.test_metrics.fp + report.test_metrics.fn;
    const std::size_t allowed = std::max<std::size_t>(1, n_test / 10000);
    v.require(errors <= allowed, "noiseless errors " + std::to_string(errors) + " > " + std::to_string(allowed));
    v.detail += (v.detail.empty() ? "" : "; ") + summary + "; noiseless errors " + std::to_string(errors) + "/" +
                std::to_string(n_test);
    return v;
}

// 4 ---------------------------------------------------------------------------

/// Non-negative fraction in lowest terms.
struct Fraction {
    long long num = 0;
    long long den = 1;

    static Fraction make(long long n, long long d) {
        const long long g = std::gcd(n < 0 ? -n : n, d);
        return {n / g, d / g};
    }
    Fraction operator-(const Fraction& o) const { return make(num * o.den - o.num * den, den * o.den); }
    Fraction operator*(const Fraction& o) const { return make(num * o.num, den * o.den); }
    bool operator>(const Fraction& o) const { return num * o.den > o.num * den; }
    double value() const { return static_cast<double>(num) / static_cast<double>(den); }
};

Fraction oracle_gini(long long pos, long long n) {
    return Fraction::make(n * n - pos * pos - (n - pos) * (n - pos), n * n);
}

/// Enumerates (feature, midpoint) in ascending order and keeps the first maximum.
std::optional<detector::Split> oracle_split(const detector::Dataset& d, std::size_t min_leaf) {
    const long long n = static_cast<long long>(d.size());
    long long pos = 0;
    for (auto y : d.y) pos += y;
    const Fraction parent = oracle_gini(pos, n);
    std::optional<detector::Split> best;
    Fraction best_gain;
    for (std::size_t f = 0; f < fog::kModelFeatureCount; ++f) {
        std::vector<double> values;
        for (const auto& x : d.x) values.push_back(x[f]);
        std::sort(values.begin(), values.end());
        values.erase(std::unique(values.begin(), values.end()), values.end());
        for (std::size_t i = 0; i + 1 < values.size(); ++i) {
            const double t = (values[i] + values[i + 1]) / 2.0;
            long long nl = 0, pl = 0;
            for (std::size_t r = 0; r < d.size(); ++r)
                if (d.x[r][f] <= t) {
                    ++nl;
                    pl += d.y[r];
                }
            const long long nr = n - nl, pr = pos - pl;
            if (nl < static_cast<long long>(min_leaf) || nr < static_cast<long long>(min_leaf)) continue;
            const Fraction gain = parent - Fraction::make(nl, n) * oracle_gini(pl, nl) -
                                  Fraction::make(nr, n) * oracle_gini(pr, nr);
            if (gain.num <= 0) continue;
            if (!best || gain > best_gain) {
                best = detector::Split{f, t, gain.value()};
                best_gain = gain;
            }
        }
    }
    return best;
}

Verdict split_oracle() {
    Verdict v;
    Rng rng(4242);
    int mismatches = 0;
    for (int trial = 0; trial < 200; ++trial) {
        detector::Dataset d;
        const std::size_t n = 2 + uniform_index(rng, 29);
        // Small integer grids force many tied gains; some columns are continuous.
        const bool coarse = trial % 2 == 0;
        for (std::size_t i = 0; i < n; ++i) {
            fog::FeatureVector x;
            for (auto& value : x)
                value = coarse ? static_cast<double>(uniform_index(rng, 4)) : std::round(uniform01(rng) * 1000) / 10;
            d.x.push_back(x);
            d.y.push_back(static_cast<std::uint8_t>(uniform_index(rng, 2)));
        }
        const std::size_t min_leaf = 1 + uniform_index(rng, 3);
        std::vector<std::size_t> rows(n);
        std::iota(rows.begin(), rows.end(), 0);
        const std::vector<std::size_t> features{4, 2, 0, 3, 1};
        const auto got = detector::best_split(d, rows, features, min_leaf);
        const auto want = oracle_split(d, min_leaf);
        if (got != want) ++mismatches;
    }
    v.require(mismatches == 0, std::to_string(mismatches) + " of 200 datasets disagree");
    if (v.pass) v.detail = "200/200 exact matches";
    return v;
}

// 5 ---------------------------------------------------------------------------

/// Every mutable byte range of a block, for uniform single-bit mutation.
std::vector<std::pair<std::uint8_t*, std::size_t>> bit_sites(ledger::Block& b) {
    std::vector<std::pair<std::uint8_t*, std::size_t>> sites;
    auto add = [&](void* p, std::size_t n) { sites.emplace_back(static_cast<std::uint8_t*>(p), n); };
    auto& h = b.header;
    add(&h.version, sizeof h.version);
    add(&h.index, sizeof h.index);
    add(h.prev_hash.data(), 32);
    add(h.merkle_root.data(), 32);
    add(&h.timestamp, sizeof h.timestamp);
    add(&h.nonce, sizeof h.nonce);
    add(h.user_id.data(), 32);
    add(h.approval_digest.data(), 32);
    add(b.block_hash.data(), 32);
    for (auto& tx : b.transactions) {
        add(&tx.kind, 1);
        add(tx.patient_id.data(), 32);
        add(&tx.created_at, sizeof tx.created_at);
        add(tx.payload.data(), tx.payload.size());
    }
    for (auto& a : b.approvals) {
        add(a.miner_id.data(), 32);
        add(a.signature.data(), 32);
    }
    return sites;
}

Verdict tamper_evidence() {
    Verdict v;
    identity::Registry reg;
    const auto h = testing::register_household(reg);
    ledger::Ledger ledger(reg);
    testing::build_chain(ledger, reg, h.patient.user_id, 20);
    const auto pristine = ledger.blocks();
    v.require(!ledger::validate_chain(pristine, &reg).has_value(), "false alarm on the untampered chain");

    Rng rng(2024);
    int missed = 0, wrong_index = 0;
    for (int trial = 0; trial < 1000; ++trial) {
        auto blocks = pristine;
        const std::size_t k = uniform_index(rng, blocks.size());
        const auto sites = bit_sites(blocks[k]);
        std::size_t total_bits = 0;
        for (const auto& s : sites) total_bits += s.second * 8;
        std::size_t bit = uniform_index(rng, total_bits);
        for (const auto& [ptr, len] : sites) {
            if (bit < len * 8) {
                ptr[bit / 8] ^= static_cast<std::uint8_t>(1u << (bit % 8));
                break;
            }
            bit -= len * 8;
        }
        const auto err = ledger::validate_chain(blocks, &reg);
        if (!err)
            ++missed;
        else if (err->block_index != k)
            ++wrong_index;
    }
    v.require(missed == 0, std::to_string(missed) + " mutations undetected");
    v.require(wrong_index == 0, std::to_string(wrong_index) + " reported at the wrong block");
    if (v.pass) v.detail = "1000/1000 detected at the mutated block; untampered chain valid";
    return v;
}

// 6 ---------------------------------------------------------------------------

Verdict merkle_proofs() {
    Verdict v;
    Rng rng(66);
    auto random_digest = [&] {
        Digest d;
        for (auto& b : d.bytes) b = static_cast<std::uint8_t>(rng());
        return d;
    };
    std::size_t proofs = 0, bad_valid = 0, forged_accepted = 0;
    for (std::size_t size = 1; size <= 64; ++size) {
        std::vector<Digest> leaves;
        for (std::size_t i = 0; i < size; ++i) leaves.push_back(random_digest());
        const auto root = merkle::root(leaves);
        for (std::size_t i = 0; i < size; ++i) {
            const auto p = merkle::proof(leaves, i);
            ++proofs;
            if (!merkle::verify(leaves[i], p, root)) ++bad_valid;
            for (int f = 0; f < 3; ++f) {
                Digest forged = random_digest();
                if (forged == leaves[i]) continue;
                if (merkle::verify(forged, p, root)) ++forged_accepted;
            }
        }
    }
    v.require(bad_valid == 0, std::to_string(bad_valid) + " genuine proofs rejected");
    v.require(forged_accepted == 0, std::to_string(forged_accepted) + " forged leaves accepted");
    if (v.pass) v.detail = std::to_string(proofs) + " proofs verified, " + std::to_string(proofs * 3) + " forgeries rejected";
    return v;
}

// 7 ---------------------------------------------------------------------------

Verdict golden_header() {
    Verdict v;
    std::ifstream in(kSource / "tests" / "golden" / "header_v1_zero.sha256");
    std::string recorded;
    in >> recorded;
    v.require(recorded.size() == 64, "missing recorded digest");
    ledger::BlockHeader header;  // version 1, every other field zero
    const auto bytes = ledger::serialize_header(header);
    const auto got = to_hex(ledger::compute_block_hash(header).span());
    v.require(bytes.size() == 172, "header is not 172 bytes");
    v.require(got == recorded, "digest " + got + " != recorded " + recorded);
    if (v.pass) v.detail = got;
    return v;
}

// 8 ---------------------------------------------------------------------------

struct SimRun {
    devices::EventLog log;
    std::size_t chain_length = 0;
};

SimRun simulate(const std::string& scenario) {
    const auto script = devices::load_scenario(kSource / "scenarios" / (scenario + ".json"));
    gateway::System system(devices::system_config_for(script), default_model());
    const auto who = devices::register_participants(system, script);
    SimRun r{devices::run_scenario(script, system, who), 0};
    system.notifier().flush();
    r.chain_length = system.chain_length();
    return r;
}

std::vector<const devices::LogEvent*> events(const devices::EventLog& log, const char* type) {
    std::vector<const devices::LogEvent*> out;
    for (const auto& e : log.events())
        if (e.type == type) out.push_back(&e);
    return out;
}

bool conserved(const devices::EventLog& log) {
    const auto end = events(log, "end");
    if (end.size() != 1) return false;
    const auto& e = end[0]->payload;
    return e["reservoir_ul"].get<std::int64_t>() ==
           e["initial_ul"].get<std::int64_t>() + e["refilled_ul"].get<std::int64_t>() - e["dispensed_ul"].get<std::int64_t>();
}

Verdict dosing_conformance() {
    Verdict v;

    const auto drop = simulate("drop_and_rescue");
    const auto drop_doses = events(drop.log, "dose");
    v.require(events(drop.log, "error").empty(), "drop_and_rescue logged an error");
    v.require(drop_doses.size() == 1, "drop_and_rescue doses: " + std::to_string(drop_doses.size()));
    if (drop_doses.size() == 1) {
        v.require(drop_doses[0]->payload["volume_ul"] == 200, "first dose is not 0.2 ml");
        const SimTime at = drop_doses[0]->t;
        bool resolved = false;
        for (const auto* d : events(drop.log, "dosing"))
            if (d->payload["outcome"] == "Resolved") resolved = resolved || (d->t == at + 900 && d->payload["trigger"] == "recheck");
        v.require(resolved, "no Resolved recheck at dose + 900 s");
        // 1.2 ml minus the dose leaves exactly five: the refill alert rides on this dose.
        bool refill_alert = false;
        for (const auto* n : events(drop.log, "notification"))
            refill_alert = refill_alert || (n->t == at && n->payload["kind"] == "RefillAlert");
        v.require(refill_alert, "no refill alert when five doses remained");
    }

    const auto stubborn = simulate("stubborn_hypo");
    const auto doses = events(stubborn.log, "dose");
    v.require(doses.size() >= 2, "stubborn_hypo doses: " + std::to_string(doses.size()));
    if (doses.size() >= 2) {
        v.require(doses[1]->t == doses[0]->t + 900, "second dose not at +900 s");
        v.require(doses[1]->payload["ordinal"] == 2, "second dose ordinal");
        bool low = false;
        for (const auto* r : events(stubborn.log, "reading"))
            if (r->t == doses[1]->t) low = r->payload["glucose"].get<double>() < 70.0;
        v.require(low, "glucose at the second dose was not below 70");
    }

    const auto flat = simulate("flat_normal");
    v.require(events(flat.log, "dose").empty(), "flat_normal dosed");
    for (const auto* run : {&drop, &stubborn, &flat}) v.require(conserved(run->log), "reservoir not conserved");

    // Ten doses in the reservoir, a refill after eight: the alert fires once per descent to five.
    dosing::RescueProtocol p({UserId{}, AgeClass::Adult}, 2000);
    SimTime t = 0;
    std::vector<std::int64_t> alert_levels;
    for (int episode = 0; episode < 14; ++episode) {
        if (episode == 8) p.refill(1200, t);
        const auto o = p.on_detection(t);
        for (const auto& a : o.alerts)
            if (a.kind == dosing::AlertKind::RefillAlert) alert_levels.push_back(p.pump().doses_remaining());
        p.on_recheck(100, t + 900);
        t += 1000;
    }
    v.require(p.pump().reservoir_ul == p.initial_reservoir_ul() + p.total_refilled_ul() - p.total_dispensed_ul(),
              "protocol reservoir not conserved");
    v.require(alert_levels == std::vector<std::int64_t>{5, 5}, "refill alerts at unexpected levels");

    if (v.pass) v.detail = "one 0.2 ml dose then Resolved at +900 s; second dose at +900 s below 70; refill alert at 5";
    return v;
}

// 9 ---------------------------------------------------------------------------

Verdict determinism() {
    Verdict v;
    for (const char* name : {"drop_and_rescue", "stubborn_hypo"}) {
        const auto a = simulate(name);
        const auto b = simulate(name);
        v.require(a.log.to_jsonl() == b.log.to_jsonl(), std::string(name) + " logs differ");
        const auto ingests = events(a.log, "blocks");
        v.require(a.chain_length == 2 * ingests.size(), std::string(name) + " chain is not two blocks per ingest");
        for (const auto* e : ingests)
            if (e->payload["detection"].get<std::uint64_t>() != e->payload["vitals"].get<std::uint64_t>() + 1)
                v.require(false, "detection block does not follow its vitals block");
    }
    if (v.pass) v.detail = "byte-identical logs; chain length = 2 x ingests";
    return v;
}

// 10 --------------------------------------------------------------------------

Verdict blocked_user() {
    Verdict v;
    gateway::System s({}, default_model());
    testing::Household h, other;
    h.patient = s.register_user(testing::patient_request("blk-p@example.org"));
    h.doctor = s.register_user(testing::doctor_request("blk-d@example.org", h.patient));
    h.relative = s.register_user(testing::relative_request("blk-r@example.org", h.patient));
    other.patient = s.register_user(testing::patient_request("oth-p@example.org"));

    gateway::IngestBatch batch{h.patient.user_id, {{h.patient.user_id, fog::Source::CGM, fog::Feature::Glucose, 100.0, 1}}};
    s.ingest(h.patient, batch, 1);
    s.submit_grant(h.patient, h.patient.user_id, h.doctor.user_id, 2);

    // The scripted user keeps reading a stranger's history until blocked.
    int denied = 0;
    for (int i = 0; i < 3; ++i) {
        try {
            s.history(h.patient, other.patient.user_id, std::nullopt, {});
        } catch (const gateway::ApiError& e) {
            denied += e.status() == 403;
        }
    }
    v.require(denied == 3, "expected three policy denials");
    v.require(s.user(h.patient.user_id)->status == identity::Status::Blocked, "user not blocked after threshold");

    const auto before = s.chain_length();
    auto status = [](const std::function<void()>& f) {
        try {
            f();
        } catch (const gateway::ApiError& e) {
            return e.status();
        }
        return 0;
    };
    batch.readings[0].t = 5;
    const int ingest = status([&] { s.ingest(h.patient, batch, 5); });
    const int history = status([&] { s.history(h.patient, h.patient.user_id, std::nullopt, {}); });
    const int approve = status([&] { s.approve(h.patient, h.patient.user_id, 6); });
    v.require(ingest >= 400, "ingest succeeded");
    v.require(history >= 400, "history succeeded");
    v.require(approve >= 400, "approval succeeded");
    v.require(s.chain_length() == before, "chain length changed");
    if (v.pass)
        v.detail = "ingest " + std::to_string(ingest) + ", history " + std::to_string(history) + ", approve " +
                   std::to_string(approve) + "; chain length unchanged at " + std::to_string(before);
    return v;
}

}  // namespace

int main() {
    run(1, "dataset calibration", reference_calibration);
    run(2, "accuracy anchor", accuracy_anchor);
    run(3, "model ordering and noiseless accuracy", model_ordering);
    run(4, "best_split oracle equivalence", split_oracle);
    run(5, "ledger tamper evidence", tamper_evidence);
    run(6, "Merkle inclusion proofs", merkle_proofs);
    run(7, "golden header hash", golden_header);
    run(8, "dosing protocol conformance", dosing_conformance);
    run(9, "end-to-end determinism", determinism);
    run(10, "blocked-user access control", blocked_user);
    std::printf("%d/10 criteria passed\n", 10 - failures);
    return failures;
}
