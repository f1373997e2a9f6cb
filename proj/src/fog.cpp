#include "glucoguard/fog.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <limits>
#include <map>

namespace glucoguard::fog {

namespace {

constexpr std::array<std::string_view, kRawFeatureCount> kFeatureNames{
    "glucose", "diastolic_bp", "systolic_bp", "heart_rate", "body_temp", "sweating", "shivering"};

bool is_binary(Feature f) { return f == Feature::Sweating || f == Feature::Shivering; }

std::optional<double> parse_number(std::string_view text) {
    while (!text.empty() && std::isspace(static_cast<unsigned char>(text.front()))) text.remove_prefix(1);
    while (!text.empty() && std::isspace(static_cast<unsigned char>(text.back()))) text.remove_suffix(1);
    if (!text.empty() && text.front() == '+') text.remove_prefix(1);
    double v = 0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc{} || ptr != text.data() + text.size() || text.empty()) return std::nullopt;
    return v;
}

std::optional<std::size_t> model_column(Feature f) {
    switch (f) {
        case Feature::Glucose: return 0;
        case Feature::SystolicBp: return 1;
        case Feature::HeartRate: return 2;
        case Feature::Sweating: return 3;
        case Feature::Shivering: return 4;
        default: return std::nullopt;
    }
}

}  // namespace

std::string_view to_string(Feature f) { return kFeatureNames[static_cast<std::size_t>(f)]; }

std::string_view to_string(Source s) {
    switch (s) {
        case Source::CGM: return "CGM";
        case Source::Smartwatch: return "Smartwatch";
        case Source::Manual: return "Manual";
    }
    return "Unknown";
}

std::optional<Feature> feature_from_string(std::string_view s) {
    for (std::size_t i = 0; i < kFeatureNames.size(); ++i)
        if (kFeatureNames[i] == s) return static_cast<Feature>(i);
    return std::nullopt;
}

std::optional<Source> source_from_string(std::string_view s) {
    for (auto src : {Source::CGM, Source::Smartwatch, Source::Manual})
        if (to_string(src) == s) return src;
    return std::nullopt;
}

ReferenceStats ReferenceStats::reference() {
    ReferenceStats s;
    s.columns[0] = FeatureStats{16969, 95.74, 42.99, 50, 68, 83, 108, 250};
    s.columns[1] = FeatureStats{16969, 118.19, 7.70, 95, 113, 119, 124, 145};
    s.columns[2] = FeatureStats{16969, 662.85, 68.68, 461, 631, 674, 714, 769};
    s.columns[3] = FeatureStats{16969, 0.12, 0.33, 0, 0, 0, 0, 1};
    s.columns[4] = FeatureStats{16969, 0.15, 0.35, 0, 0, 0, 0, 1};
    s.columns[kLabelColumn] = FeatureStats{16969, 0.49, 0.50, 0, 0, 0, 1, 1};
    return s;
}

PhysicalRange physical_range(Feature f) {
    switch (f) {
        case Feature::Glucose: return {20, 600};
        case Feature::DiastolicBp: return {30, 150};
        case Feature::SystolicBp: return {60, 250};
        case Feature::HeartRate: return {20, 300};  // bpm
        case Feature::BodyTemp: return {30, 45};
        case Feature::Sweating:
        case Feature::Shivering: return {0, 1};
    }
    return {0, 0};
}

std::optional<double> coerce_numeric(const RawReading& raw) {
    std::optional<double> v;
    if (const double* d = std::get_if<double>(&raw.value))
        v = *d;
    else
        v = parse_number(std::get<std::string>(raw.value));
    if (!v || !std::isfinite(*v)) return std::nullopt;
    const auto range = physical_range(raw.feature);
    if (*v < range.lo || *v > range.hi) return std::nullopt;
    if (is_binary(raw.feature) && *v != 0.0 && *v != 1.0) return std::nullopt;
    return v;
}

double convert_heart_rate(double rate_bpm) {
    if (!(rate_bpm > 0.0)) throw NonPositiveRate();
    return 60000.0 / rate_bpm;
}

std::vector<CleanReading> impute(std::span<const PartialSample> samples, const ReferenceStats& stats) {
    std::vector<CleanReading> out;
    out.reserve(samples.size());
    for (const auto& p : samples) {
        FeatureVector f{};
        for (auto feat : {Feature::Glucose, Feature::SystolicBp, Feature::HeartRate, Feature::Sweating,
                          Feature::Shivering}) {
            const auto col = *model_column(feat);
            if (const auto& v = p.at(feat)) {
                f[col] = *v;
            } else if (is_binary(feat)) {
                f[col] = 0.0;
            } else {
                const auto& ref = stats.columns[col];
                if (!ref) throw NoReferenceMean(to_string(feat));
                f[col] = ref->mean;
            }
        }
        CleanReading r;
        r.patient_id = p.patient_id;
        r.sample = VitalsSample::from_features(f, p.timestamp);
        r.diastolic_bp = p.at(Feature::DiastolicBp);
        r.body_temp = p.at(Feature::BodyTemp);
        out.push_back(r);
    }
    return out;
}

std::vector<CleanReading> preprocess_batch(std::span<const RawReading> raw, const ReferenceStats& stats) {
    std::map<std::pair<UserId, std::uint32_t>, PartialSample> groups;
    for (const auto& r : raw) {
        auto& g = groups[{r.patient_id, r.t}];
        g.patient_id = r.patient_id;
        g.timestamp = r.t;
        auto v = coerce_numeric(r);
        if (!v) continue;
        if (r.feature == Feature::HeartRate) v = convert_heart_rate(*v);
        g.at(r.feature) = v;
    }
    std::vector<PartialSample> partial;
    partial.reserve(groups.size());
    for (auto& [key, g] : groups) partial.push_back(g);
    return impute(partial, stats);
}

Bytes encode_vitals_payload(const CleanReading& r) {
    constexpr double nan = std::numeric_limits<double>::quiet_NaN();
    ByteWriter w;
    for (double v : r.sample.features()) w.f64(v);
    w.u32(r.sample.timestamp);
    w.f64(r.diastolic_bp.value_or(nan));
    w.f64(r.body_temp.value_or(nan));
    return std::move(w).take();
}

CleanReading decode_vitals_payload(ByteSpan payload, const UserId& patient_id) {
    ByteReader rd(payload);
    FeatureVector f;
    for (auto& v : f) v = rd.f64();
    CleanReading r;
    r.patient_id = patient_id;
    r.sample = VitalsSample::from_features(f, rd.u32());
    const double dia = rd.f64();
    const double temp = rd.f64();
    if (!std::isnan(dia)) r.diastolic_bp = dia;
    if (!std::isnan(temp)) r.body_temp = temp;
    if (!rd.done()) throw DecodeError("trailing bytes in vitals payload");
    return r;
}

}  // namespace glucoguard::fog
