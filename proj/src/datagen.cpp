#include "glucoguard/datagen.hpp"

#include "glucoguard/rng.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>
#include <string>

namespace glucoguard::datagen {

using fog::VitalsSample;

namespace {

double clamp_normal(Rng& rng, double mean, double sd, double lo, double hi) {
    return std::clamp(mean + sd * standard_normal(rng), lo, hi);
}

std::string format_sig6(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.6g", v);
    return buf;
}

double quantile(const std::vector<double>& sorted, double q) {
    const double pos = q * static_cast<double>(sorted.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, sorted.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    return sorted[lo] + (sorted[hi] - sorted[lo]) * frac;
}

fog::FeatureStats describe(std::vector<double> values) {
    fog::FeatureStats s;
    const auto n = values.size();
    s.count = static_cast<double>(n);
    double sum = 0;
    for (double v : values) sum += v;
    s.mean = sum / static_cast<double>(n);
    if (n > 1) {
        double ss = 0;
        for (double v : values) ss += (v - s.mean) * (v - s.mean);
        s.std = std::sqrt(ss / static_cast<double>(n - 1));
    }
    std::sort(values.begin(), values.end());
    s.min = values.front();
    s.max = values.back();
    s.q25 = quantile(values, 0.25);
    s.q50 = quantile(values, 0.50);
    s.q75 = quantile(values, 0.75);
    return s;
}

}  // namespace

double round_sig6(double v) { return std::strtod(format_sig6(v).c_str(), nullptr); }

void validate(const GeneratorConfig& c) {
    if (!(c.label_noise >= 0.0 && c.label_noise < 0.5)) throw InvalidConfig("noise must be < 0.5");
}

std::vector<VitalsSample> generate_dataset(const GeneratorConfig& config) {
    validate(config);
    const auto& sh = config.shape;
    Rng rng(config.seed);
    std::vector<VitalsSample> out;
    out.reserve(config.n_samples);
    for (std::size_t i = 0; i < config.n_samples; ++i) {
        const bool hypo = bernoulli(rng, sh.hypo_fraction);
        double glucose;
        if (hypo)
            glucose = 50.0 + 20.0 * beta_sample(rng, sh.hypo_beta_a, sh.hypo_beta_b);
        else
            glucose = std::min(70.0 + sh.upper_gamma_scale * standard_gamma(rng, sh.upper_gamma_shape), 250.0);

        VitalsSample s;
        s.glucose = round_sig6(glucose);
        s.systolic_bp = round_sig6(
            clamp_normal(rng, hypo ? sh.systolic_hypo_mean : sh.systolic_normal_mean, sh.systolic_sd, 95, 145));
        s.heart_rate = round_sig6(clamp_normal(
            rng, hypo ? sh.heart_rate_hypo_mean : sh.heart_rate_normal_mean, sh.heart_rate_sd, 461, 769));
        s.sweating = bernoulli(rng, hypo ? sh.sweating_hypo_p : sh.sweating_normal_p) ? 1.0 : 0.0;
        s.shivering = bernoulli(rng, hypo ? sh.shivering_hypo_p : sh.shivering_normal_p) ? 1.0 : 0.0;
        s.timestamp = static_cast<std::uint32_t>(i);

        const bool base_label = s.glucose < 70.0;
        const bool flip = bernoulli(rng, config.label_noise);
        s.label = static_cast<std::uint8_t>(base_label != flip);
        out.push_back(s);
    }
    return out;
}

fog::ReferenceStats summarize(const std::vector<VitalsSample>& dataset) {
    if (dataset.empty()) throw EmptyDataset();
    fog::ReferenceStats stats;
    for (std::size_t col = 0; col < fog::kModelFeatureCount; ++col) {
        std::vector<double> values;
        values.reserve(dataset.size());
        for (const auto& s : dataset) values.push_back(s.features()[col]);
        stats.columns[col] = describe(std::move(values));
    }
    if (std::all_of(dataset.begin(), dataset.end(), [](const auto& s) { return s.label.has_value(); })) {
        std::vector<double> labels;
        labels.reserve(dataset.size());
        for (const auto& s : dataset) labels.push_back(static_cast<double>(*s.label));
        stats.columns[fog::ReferenceStats::kLabelColumn] = describe(std::move(labels));
    }
    return stats;
}

void print_summary(std::ostream& out, const fog::ReferenceStats& stats) {
    constexpr std::array<std::string_view, 6> headers{"glucose",  "systolic_bp", "heart_rate",
                                                      "sweating", "shivering",   "hypoglycemia"};
    constexpr std::array<std::string_view, 8> rows{"count", "mean", "std", "min", "25%", "50%", "75%", "max"};
    out << std::left << std::setw(8) << "";
    for (auto h : headers) out << std::right << std::setw(14) << h;
    out << '\n';
    for (std::size_t r = 0; r < rows.size(); ++r) {
        out << std::left << std::setw(8) << rows[r];
        for (const auto& col : stats.columns) {
            out << std::right << std::setw(14);
            if (!col) {
                out << "-";
                continue;
            }
            const double vals[] = {col->count, col->mean, col->std, col->min,
                                   col->q25,   col->q50,  col->q75, col->max};
            out << std::fixed << std::setprecision(2) << vals[r];
        }
        out << '\n';
    }
    out.unsetf(std::ios::floatfield);
}

void write_csv(std::ostream& out, const std::vector<VitalsSample>& dataset) {
    out << "glucose,systolic_bp,heart_rate,sweating,shivering,hypoglycemia\n";
    for (const auto& s : dataset) {
        for (double v : s.features()) out << format_sig6(v) << ',';
        out << static_cast<int>(s.label.value_or(0)) << '\n';
    }
}

void write_csv(const std::filesystem::path& path, const std::vector<VitalsSample>& dataset) {
    std::ofstream f(path, std::ios::trunc);
    if (!f) throw std::runtime_error("cannot open " + path.string() + " for writing");
    write_csv(f, dataset);
    if (!f) throw std::runtime_error("write failed: " + path.string());
}

std::vector<VitalsSample> read_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("csv: missing header");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != "glucose,systolic_bp,heart_rate,sweating,shivering,hypoglycemia")
        throw std::runtime_error("csv: unexpected header: " + line);
    std::vector<VitalsSample> out;
    std::size_t row = 0;
    while (std::getline(in, line)) {
        ++row;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::array<double, 6> v{};
        std::stringstream ss(line);
        std::string cell;
        std::size_t i = 0;
        while (std::getline(ss, cell, ',')) {
            if (i >= v.size()) throw std::runtime_error("csv: too many columns on row " + std::to_string(row));
            char* end = nullptr;
            v[i] = std::strtod(cell.c_str(), &end);
            if (end == cell.c_str() || *end != '\0' || !std::isfinite(v[i]))
                throw std::runtime_error("csv: bad number on row " + std::to_string(row));
            ++i;
        }
        if (i != v.size()) throw std::runtime_error("csv: expected 6 columns on row " + std::to_string(row));
        auto s = VitalsSample::from_features({v[0], v[1], v[2], v[3], v[4]}, static_cast<std::uint32_t>(row - 1));
        s.label = static_cast<std::uint8_t>(v[5] != 0.0);
        out.push_back(s);
    }
    return out;
}

std::vector<VitalsSample> read_csv(const std::filesystem::path& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("cannot open " + path.string());
    return read_csv(f);
}

}  // namespace glucoguard::datagen
