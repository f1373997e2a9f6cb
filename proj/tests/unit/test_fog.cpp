#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "glucoguard/fog.hpp"

#include <cmath>
#include <limits>

using namespace glucoguard;
using namespace glucoguard::fog;

namespace {

UserId patient(std::uint8_t tag) {
    UserId id;
    id.bytes.fill(tag);
    return id;
}

RawReading raw(Feature f, std::variant<double, std::string> v, std::uint32_t t = 10, std::uint8_t who = 1) {
    return RawReading{patient(who), Source::Manual, f, std::move(v), t};
}

}  // namespace

TEST_CASE("reference table columns") {
    const auto s = ReferenceStats::reference();
    const auto& g = *s.feature(ModelFeature::Glucose);
    CHECK(g.count == 16969);
    CHECK(g.mean == doctest::Approx(95.74));
    CHECK(g.std == doctest::Approx(42.99));
    CHECK(g.q25 == 68);
    CHECK(g.q50 == 83);
    CHECK(g.q75 == 108);
    CHECK(s.feature(ModelFeature::SystolicBp)->mean == doctest::Approx(118.19));
    CHECK(s.feature(ModelFeature::HeartRate)->min == 461);
    CHECK(s.feature(ModelFeature::HeartRate)->max == 769);
    CHECK(s.feature(ModelFeature::Shivering)->mean == doctest::Approx(0.15));
    CHECK(s.label()->mean == doctest::Approx(0.49));
    CHECK(s.label()->q75 == 1);
}

TEST_CASE("coercion accepts numbers and numeric strings in range") {
    CHECK(coerce_numeric(raw(Feature::Glucose, 90.0)) == 90.0);
    CHECK(coerce_numeric(raw(Feature::Glucose, std::string(" 72.5 "))) == 72.5);
    CHECK(coerce_numeric(raw(Feature::Glucose, std::string("+80"))) == 80.0);
    CHECK(coerce_numeric(raw(Feature::Glucose, std::string("abc"))) == std::nullopt);
    CHECK(coerce_numeric(raw(Feature::Glucose, std::string(""))) == std::nullopt);
    CHECK(coerce_numeric(raw(Feature::Glucose, std::string("70mg"))) == std::nullopt);
    CHECK(coerce_numeric(raw(Feature::Glucose, std::numeric_limits<double>::quiet_NaN())) == std::nullopt);
    CHECK(coerce_numeric(raw(Feature::Glucose, std::numeric_limits<double>::infinity())) == std::nullopt);
    CHECK(coerce_numeric(raw(Feature::Glucose, 5.0)) == std::nullopt);
    CHECK(coerce_numeric(raw(Feature::Glucose, 20.0)) == 20.0);
    CHECK(coerce_numeric(raw(Feature::Glucose, 600.0)) == 600.0);
    CHECK(coerce_numeric(raw(Feature::Glucose, 600.5)) == std::nullopt);
    CHECK(coerce_numeric(raw(Feature::Sweating, 1.0)) == 1.0);
    CHECK(coerce_numeric(raw(Feature::Sweating, 0.5)) == std::nullopt);
    CHECK(coerce_numeric(raw(Feature::HeartRate, 10.0)) == std::nullopt);
}

TEST_CASE("heart rate conversion") {
    CHECK(convert_heart_rate(60) == 1000.0);
    CHECK(convert_heart_rate(100) == 600.0);
    CHECK(convert_heart_rate(80) == 750.0);
    CHECK_THROWS_AS(convert_heart_rate(0), NonPositiveRate);
    CHECK_THROWS_AS(convert_heart_rate(-12), NonPositiveRate);
    CHECK_THROWS_AS(convert_heart_rate(std::numeric_limits<double>::quiet_NaN()), NonPositiveRate);
}

TEST_CASE("imputation fills continuous means and binary zeros") {
    PartialSample p;
    p.patient_id = patient(2);
    p.timestamp = 77;
    p.at(Feature::Glucose) = 61.0;
    const auto out = impute(std::span(&p, 1));
    REQUIRE(out.size() == 1);
    const auto& s = out[0].sample;
    CHECK(s.glucose == 61.0);
    CHECK(s.systolic_bp == doctest::Approx(118.19));
    CHECK(s.heart_rate == doctest::Approx(662.85));
    CHECK(s.sweating == 0.0);
    CHECK(s.shivering == 0.0);
    CHECK(s.timestamp == 77);
    CHECK_FALSE(out[0].diastolic_bp.has_value());

    ReferenceStats partial;
    CHECK_THROWS_AS(impute(std::span(&p, 1), partial), NoReferenceMean);
}

TEST_CASE("batch groups by patient and timestamp in order") {
    std::vector<RawReading> batch{
        raw(Feature::Glucose, 100.0, 20),
        raw(Feature::HeartRate, 75.0, 20),
        raw(Feature::Glucose, 55.0, 10),
        raw(Feature::Glucose, "bogus", 10),
        raw(Feature::Glucose, 48.0, 10, 0),
        raw(Feature::Sweating, 1.0, 10),
        raw(Feature::Sweating, 0.0, 10),
        raw(Feature::BodyTemp, 36.6, 10),
        raw(Feature::DiastolicBp, 999.0, 10),
    };
    const auto out = preprocess_batch(batch);
    REQUIRE(out.size() == 3);
    CHECK(out[0].patient_id == patient(0));
    CHECK(out[0].sample.glucose == 48.0);
    CHECK(out[1].patient_id == patient(1));
    CHECK(out[1].sample.timestamp == 10);
    // Invalid repeats do not override a valid earlier value; last valid wins.
    CHECK(out[1].sample.glucose == 55.0);
    CHECK(out[1].sample.sweating == 0.0);
    CHECK(out[1].body_temp == 36.6);
    CHECK_FALSE(out[1].diastolic_bp.has_value());
    CHECK(out[2].sample.timestamp == 20);
    CHECK(out[2].sample.heart_rate == 800.0);
}

TEST_CASE("vitals payload golden") {
    CleanReading r;
    r.sample = {55.5, 120, 600, 1, 0, 1500, std::nullopt};
    r.diastolic_bp = 78;
    // Python: struct.pack(">5dI2d", 55.5, 120, 600, 1, 0, 1500, 78, float("nan"))
    CHECK(to_hex(encode_vitals_payload(r)) ==
          "404bc00000000000405e0000000000004082c000000000003ff0000000000000"
          "0000000000000000000005dc40538000000000007ff8000000000000");
}

TEST_CASE("vitals payload round trip") {
    CleanReading r;
    r.patient_id = patient(4);
    r.sample = {63.25, 101, 812.5, 0, 1, 99, std::nullopt};
    r.body_temp = 37.1;
    const auto bytes = encode_vitals_payload(r);
    CHECK(bytes.size() == 5 * 8 + 4 + 2 * 8);
    CHECK(decode_vitals_payload(bytes, r.patient_id) == r);

    auto longer = bytes;
    longer.push_back(0);
    CHECK_THROWS_AS(decode_vitals_payload(longer, r.patient_id), DecodeError);
    auto shorter = bytes;
    shorter.pop_back();
    CHECK_THROWS_AS(decode_vitals_payload(shorter, r.patient_id), DecodeError);
}

TEST_CASE("name lookups") {
    CHECK(feature_from_string("heart_rate") == Feature::HeartRate);
    CHECK(feature_from_string("pulse") == std::nullopt);
    CHECK(source_from_string("Smartwatch") == Source::Smartwatch);
    CHECK(to_string(Feature::BodyTemp) == "body_temp");
    for (std::size_t i = 0; i < kRawFeatureCount; ++i) {
        const auto f = static_cast<Feature>(i);
        CHECK(feature_from_string(to_string(f)) == f);
    }
}
