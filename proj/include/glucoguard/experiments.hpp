#pragma once

#include "glucoguard/detector.hpp"

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace glucoguard::detector {

inline constexpr double kDefaultTestFraction = 0.2;

struct TrainReport {
    RandomForest model;
    TrainTest split;
    double train_accuracy = 0;
    double test_accuracy = 0;
    std::vector<double> cv_accuracies;  // empty when cv_folds < 2
    Metrics test_metrics;

    double cv_mean() const;
};

/// Splits with config.seed, fits on the training part, scores both parts and
/// cross-validates on the training part with `cv_folds` folds.
TrainReport train_with_report(const Dataset& data, const ForestConfig& config, std::size_t cv_folds,
                              double test_fraction = kDefaultTestFraction, unsigned threads = 0);

struct ComparisonRow {
    std::string name;
    double train_accuracy = 0;
    double test_accuracy = 0;
    std::optional<double> auc;
};

/// Random forest, a single decision tree of the same depth, KNN-9 and KNN-11
/// on one shared split, in that order.
std::vector<ComparisonRow> compare_models(const Dataset& data, const ForestConfig& config,
                                          double test_fraction = kDefaultTestFraction, unsigned threads = 0);

/// Stable sort by test accuracy, best first.
void rank_by_test_accuracy(std::vector<ComparisonRow>& rows);
void print_comparison(std::ostream& out, const std::vector<ComparisonRow>& rows);

}  // namespace glucoguard::detector
