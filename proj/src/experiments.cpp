#include "glucoguard/experiments.hpp"

#include <algorithm>
#include <cstdio>
#include <numeric>
#include <ostream>

namespace glucoguard::detector {

double TrainReport::cv_mean() const {
    if (cv_accuracies.empty()) return 0;
    return std::accumulate(cv_accuracies.begin(), cv_accuracies.end(), 0.0) /
           static_cast<double>(cv_accuracies.size());
}

TrainReport train_with_report(const Dataset& data, const ForestConfig& config, std::size_t cv_folds,
                              double test_fraction, unsigned threads) {
    config.validate();
    TrainReport r;
    r.split = train_test_split(data.size(), test_fraction, config.seed);
    const auto train = data.subset(r.split.train);
    const auto test = data.subset(r.split.test);
    r.model = fit_forest(train, config, 0, threads);
    r.train_accuracy = evaluate(r.model, train).accuracy;
    r.test_metrics = evaluate(r.model, test);
    r.test_accuracy = r.test_metrics.accuracy;
    if (cv_folds >= 2) r.cv_accuracies = cross_validate(train, config, cv_folds, config.seed, threads);
    return r;
}

namespace {

ComparisonRow score(std::string name, std::span<const double> train_scores, const Dataset& train,
                    std::span<const double> test_scores, const Dataset& test) {
    const auto te = evaluate(test_scores, test.y);
    return {std::move(name), evaluate(train_scores, train.y).accuracy, te.accuracy,
            te.roc ? std::optional(te.roc->auc) : std::nullopt};
}

}  // namespace

std::vector<ComparisonRow> compare_models(const Dataset& data, const ForestConfig& config, double test_fraction,
                                          unsigned threads) {
    config.validate();
    const auto split = train_test_split(data.size(), test_fraction, config.seed);
    const auto train = data.subset(split.train);
    const auto test = data.subset(split.test);

    std::vector<ComparisonRow> rows;
    const auto rf = fit_forest(train, config, 0, threads);
    rows.push_back(score("RF", predict_proba(rf, train), train, predict_proba(rf, test), test));

    const auto dt = fit_decision_tree(train, config.max_depth, config.min_samples_leaf);
    rows.push_back(score("DT", predict_proba(dt, train), train, predict_proba(dt, test), test));

    for (std::size_t k : {9u, 11u}) {
        const auto knn = fit_knn(train, k);
        rows.push_back(score("KNN-" + std::to_string(k), knn_scores(knn, train, threads), train,
                             knn_scores(knn, test, threads), test));
    }
    return rows;
}

void rank_by_test_accuracy(std::vector<ComparisonRow>& rows) {
    std::stable_sort(rows.begin(), rows.end(),
                     [](const auto& a, const auto& b) { return a.test_accuracy > b.test_accuracy; });
}

void print_comparison(std::ostream& out, const std::vector<ComparisonRow>& rows) {
    char line[128];
    std::snprintf(line, sizeof line, "%-8s %10s %10s %8s\n", "model", "train_acc", "test_acc", "auc");
    out << line;
    for (const auto& r : rows) {
        if (r.auc)
            std::snprintf(line, sizeof line, "%-8s %10.4f %10.4f %8.4f\n", r.name.c_str(), r.train_accuracy,
                          r.test_accuracy, *r.auc);
        else
            std::snprintf(line, sizeof line, "%-8s %10.4f %10.4f %8s\n", r.name.c_str(), r.train_accuracy,
                          r.test_accuracy, "n/a");
        out << line;
    }
}

}  // namespace glucoguard::detector
