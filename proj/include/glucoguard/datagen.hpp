#pragma once

#include "glucoguard/fog.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <stdexcept>
#include <vector>

namespace glucoguard::datagen {

/// Shape parameters of the label-conditioned generator. Defaults are fitted
/// so the marginals land on the reference description.
struct GeneratorShape {
    double hypo_fraction = 0.489;    // P(glucose < 70) before label noise
    double hypo_beta_a = 3.0;        // hypo glucose = 50 + 20 * Beta(a, b)
    double hypo_beta_b = 1.0;
    double upper_gamma_shape = 1.55;  // other glucose = 70 + Gamma(k, theta), clamped at 250
    double upper_gamma_scale = 36.5;

    double systolic_hypo_mean = 121.09;
    double systolic_normal_mean = 115.41;
    double systolic_sd = 7.16;

    double heart_rate_hypo_mean = 644.6;  // ms; shorter R-R intervals when hypo
    double heart_rate_normal_mean = 683.7;
    double heart_rate_sd = 65.8;

    double sweating_hypo_p = 0.20;
    double sweating_normal_p = 0.0434;
    double shivering_hypo_p = 0.25;
    double shivering_normal_p = 0.0543;
};

struct GeneratorConfig {
    std::size_t n_samples = 16969;
    std::uint64_t seed = 42;
    double label_noise = 0.05;
    GeneratorShape shape{};
    fog::ReferenceStats target = fog::ReferenceStats::reference();
};

struct InvalidConfig : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct EmptyDataset : std::invalid_argument {
    EmptyDataset() : std::invalid_argument("dataset is empty") {}
};

void validate(const GeneratorConfig& config);

/// Labeled samples; timestamps are the row index. Every value is already
/// rounded to 6 significant digits, so a CSV round trip is lossless.
std::vector<fog::VitalsSample> generate_dataset(const GeneratorConfig& config);

/// count / mean / sample std / min / quartiles (linear interpolation) / max
/// per model feature plus the label column.
fog::ReferenceStats summarize(const std::vector<fog::VitalsSample>& dataset);

/// Rows in order: count, mean, std, min, 25%, 50%, 75%, max.
void print_summary(std::ostream& out, const fog::ReferenceStats& stats);

double round_sig6(double v);

void write_csv(std::ostream& out, const std::vector<fog::VitalsSample>& dataset);
void write_csv(const std::filesystem::path& path, const std::vector<fog::VitalsSample>& dataset);
/// Throws std::runtime_error on unreadable input or a malformed row.
std::vector<fog::VitalsSample> read_csv(std::istream& in);
std::vector<fog::VitalsSample> read_csv(const std::filesystem::path& path);

}  // namespace glucoguard::datagen
