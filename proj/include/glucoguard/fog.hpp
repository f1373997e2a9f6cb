#pragma once

#include "glucoguard/bytes.hpp"

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace glucoguard::fog {

/// The seven collected vitals.
enum class Feature : std::uint8_t { Glucose, DiastolicBp, SystolicBp, HeartRate, BodyTemp, Sweating, Shivering };
inline constexpr std::size_t kRawFeatureCount = 7;

enum class Source : std::uint8_t { CGM, Smartwatch, Manual };

std::string_view to_string(Feature f);
std::string_view to_string(Source s);
std::optional<Feature> feature_from_string(std::string_view s);
std::optional<Source> source_from_string(std::string_view s);

/// Model-facing columns, in the fixed order used by every matrix and payload.
enum class ModelFeature : std::uint8_t { Glucose, SystolicBp, HeartRate, Sweating, Shivering };
inline constexpr std::size_t kModelFeatureCount = 5;
inline constexpr std::array<std::string_view, kModelFeatureCount> kModelFeatureNames{
    "glucose", "systolic_bp", "heart_rate", "sweating", "shivering"};

using FeatureVector = std::array<double, kModelFeatureCount>;

struct RawReading {
    UserId patient_id;
    Source source = Source::CGM;
    Feature feature = Feature::Glucose;
    std::variant<double, std::string> value;  // as received
    std::uint32_t t = 0;                      // device timestamp, seconds
};

/// glucose mg/dl, systolic mmHg, heart_rate as R-R interval in ms,
/// sweating / shivering in {0, 1}.
struct VitalsSample {
    double glucose = 0;
    double systolic_bp = 0;
    double heart_rate = 0;
    double sweating = 0;
    double shivering = 0;
    std::uint32_t timestamp = 0;
    std::optional<std::uint8_t> label;

    FeatureVector features() const { return {glucose, systolic_bp, heart_rate, sweating, shivering}; }
    static VitalsSample from_features(const FeatureVector& f, std::uint32_t t = 0) {
        return {f[0], f[1], f[2], f[3], f[4], t, std::nullopt};
    }
    friend bool operator==(const VitalsSample&, const VitalsSample&) = default;
};

struct FeatureStats {
    double count = 0;
    double mean = 0;
    double std = 0;
    double min = 0;
    double q25 = 0;
    double q50 = 0;
    double q75 = 0;
    double max = 0;
};

/// Per-column descriptive statistics: the five model features then the label.
struct ReferenceStats {
    static constexpr std::size_t kLabelColumn = kModelFeatureCount;
    std::array<std::optional<FeatureStats>, kModelFeatureCount + 1> columns{};

    const std::optional<FeatureStats>& feature(ModelFeature f) const {
        return columns[static_cast<std::size_t>(f)];
    }
    const std::optional<FeatureStats>& label() const { return columns[kLabelColumn]; }

    /// Reference description of the 16969-row sample dataset.
    static ReferenceStats reference();
};

/// Inclusive plausibility bounds applied during coercion.
struct PhysicalRange {
    double lo;
    double hi;
};
PhysicalRange physical_range(Feature f);

struct NonPositiveRate : std::domain_error {
    NonPositiveRate() : std::domain_error("heart rate must be positive") {}
};

struct NoReferenceMean : std::invalid_argument {
    explicit NoReferenceMean(std::string_view feature)
        : std::invalid_argument("no reference mean for " + std::string(feature)) {}
};

/// Finite in-range number, or nullopt (Missing). Heart rate is range-checked
/// in beats per minute, before conversion.
std::optional<double> coerce_numeric(const RawReading& raw);

/// Beats per minute to mean R-R interval in ms: 60000 / bpm.
double convert_heart_rate(double rate_bpm);

/// One timestamp's worth of coerced values; heart_rate already in ms.
struct PartialSample {
    UserId patient_id;
    std::uint32_t timestamp = 0;
    std::array<std::optional<double>, kRawFeatureCount> values{};  // indexed by Feature

    std::optional<double>& at(Feature f) { return values[static_cast<std::size_t>(f)]; }
    const std::optional<double>& at(Feature f) const { return values[static_cast<std::size_t>(f)]; }
};

/// A cleaned sample plus the two non-predictive vitals kept for the ledger.
struct CleanReading {
    UserId patient_id;
    VitalsSample sample;
    std::optional<double> diastolic_bp;
    std::optional<double> body_temp;

    friend bool operator==(const CleanReading&, const CleanReading&) = default;
};

/// Continuous features missing -> reference mean; binary features missing -> 0.
std::vector<CleanReading> impute(std::span<const PartialSample> samples,
                                 const ReferenceStats& stats = ReferenceStats::reference());

/// Groups by (patient, timestamp) in ascending order, coerces, converts heart
/// rate, imputes. When a feature repeats within a group the last valid value wins.
std::vector<CleanReading> preprocess_batch(std::span<const RawReading> raw,
                                           const ReferenceStats& stats = ReferenceStats::reference());

/// glucose, systolic_bp, heart_rate, sweating, shivering (f64 BE each) ||
/// timestamp (u32 BE) || diastolic_bp, body_temp (f64 BE, NaN when absent).
Bytes encode_vitals_payload(const CleanReading& reading);
CleanReading decode_vitals_payload(ByteSpan payload, const UserId& patient_id);

}  // namespace glucoguard::fog
