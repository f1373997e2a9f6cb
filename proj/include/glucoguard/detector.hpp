#pragma once

#include "glucoguard/bytes.hpp"
#include "glucoguard/fog.hpp"
#include "glucoguard/rng.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace glucoguard::detector {

using fog::FeatureVector;
using fog::kModelFeatureCount;

struct Dataset {
    std::vector<FeatureVector> x;
    std::vector<std::uint8_t> y;

    std::size_t size() const { return x.size(); }
    bool empty() const { return x.empty(); }

    /// Throws std::invalid_argument on an unlabeled sample or a non-finite value.
    static Dataset from_samples(std::span<const fog::VitalsSample> samples);
    Dataset subset(std::span<const std::size_t> rows) const;
};

struct EmptyNode : std::invalid_argument {
    EmptyNode() : std::invalid_argument("gini of an empty node") {}
};
struct InvalidConfig : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};
struct NonFiniteFeature : std::invalid_argument {
    NonFiniteFeature() : std::invalid_argument("sample has a non-finite feature") {}
};
struct TooFewSamples : std::invalid_argument {
    TooFewSamples() : std::invalid_argument("fewer samples than folds") {}
};
struct EmptyTestSet : std::invalid_argument {
    EmptyTestSet() : std::invalid_argument("test set is empty") {}
};
struct SingleClassTest : std::invalid_argument {
    SingleClassTest() : std::invalid_argument("ROC undefined: test labels contain one class") {}
};
struct EvenK : std::invalid_argument {
    EvenK() : std::invalid_argument("k must be odd") {}
};
struct KExceedsN : std::invalid_argument {
    KExceedsN() : std::invalid_argument("k exceeds the number of training samples") {}
};
struct ModelFormatError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// 1 - p0^2 - p1^2 from class counts; total > 0.
double gini_from_counts(std::size_t positives, std::size_t total);
double gini(std::span<const std::uint8_t> labels);

/// Decreases at or below this are treated as no improvement.
inline constexpr double kMinDecrease = 1e-12;

struct Split {
    std::size_t feature;
    double threshold;  // x[feature] <= threshold goes left
    double decrease;   // parent gini - size-weighted child gini

    friend bool operator==(const Split&, const Split&) = default;
};

/// Exhaustive CART search over midpoints between consecutive distinct values.
/// Ties go to the lower feature index, then the lower threshold. nullopt when
/// nothing beats kMinDecrease.
std::optional<Split> best_split(const Dataset& data, std::span<const std::size_t> rows,
                                std::span<const std::size_t> candidate_features, std::size_t min_samples_leaf = 1);

struct TreeParams {
    std::size_t max_depth = 4;
    std::size_t features_per_split = kModelFeatureCount;
    std::size_t min_samples_leaf = 1;
    std::size_t min_samples_split = 2;
};

class DecisionTree {
public:
    struct Node {
        std::int32_t feature = -1;  // -1 marks a leaf
        double threshold = 0;
        std::uint32_t left = 0;
        std::uint32_t right = 0;
        double probability = 0;  // positive fraction at this node

        bool is_leaf() const { return feature < 0; }
        friend bool operator==(const Node&, const Node&) = default;
    };

    DecisionTree() = default;
    DecisionTree(std::vector<Node> nodes, std::size_t max_depth) : nodes_(std::move(nodes)), max_depth_(max_depth) {}

    double predict_proba(const FeatureVector& x) const;
    const std::vector<Node>& nodes() const { return nodes_; }
    std::size_t max_depth() const { return max_depth_; }
    /// Longest root-to-leaf path, in edges.
    std::size_t depth() const;

    friend bool operator==(const DecisionTree&, const DecisionTree&) = default;

private:
    std::vector<Node> nodes_;
    std::size_t max_depth_ = 0;
};

/// Recursive CART over `rows` (duplicates allowed, e.g. a bootstrap sample).
/// Candidate features are drawn without replacement from `rng` at every node.
DecisionTree fit_tree(const Dataset& data, std::span<const std::size_t> rows, const TreeParams& params, Rng& rng);
DecisionTree fit_tree(const Dataset& data, const TreeParams& params, Rng& rng);

struct ForestConfig {
    std::size_t n_trees = 100;
    std::size_t max_depth = 4;
    std::uint64_t seed = 42;
    std::size_t features_per_split = 3;  // ceil(sqrt(5))
    bool bootstrap = true;
    std::size_t min_samples_leaf = 1;
    std::size_t min_samples_split = 2;

    void validate() const;
    TreeParams tree_params() const { return {max_depth, features_per_split, min_samples_leaf, min_samples_split}; }
    friend bool operator==(const ForestConfig&, const ForestConfig&) = default;
};

struct TrainingMetadata {
    std::uint64_t n_train = 0;
    std::uint64_t seed = 0;
    std::uint32_t timestamp = 0;
    std::vector<std::string> feature_order;

    friend bool operator==(const TrainingMetadata&, const TrainingMetadata&) = default;
};

struct RandomForest {
    std::vector<DecisionTree> trees;
    ForestConfig config;
    TrainingMetadata metadata;

    friend bool operator==(const RandomForest&, const RandomForest&) = default;
};

/// Tree t is grown from Rng(derive_seed(seed, t)): bootstrap rows first, then
/// node feature sampling. Trees are built on `threads` workers (0 = hardware
/// concurrency); the result does not depend on the thread count.
RandomForest fit_forest(const Dataset& data, const ForestConfig& config, std::uint32_t timestamp = 0,
                        unsigned threads = 0);

double predict_proba(const RandomForest& forest, const FeatureVector& x);
int predict(const RandomForest& forest, const FeatureVector& x, double threshold = 0.5);
std::vector<double> predict_proba(const RandomForest& forest, const Dataset& data);

/// Single unbagged tree over all features.
DecisionTree fit_decision_tree(const Dataset& data, std::size_t max_depth = 4, std::size_t min_samples_leaf = 1);
std::vector<double> predict_proba(const DecisionTree& tree, const Dataset& data);

std::vector<std::vector<std::size_t>> kfold_split(std::size_t n, std::size_t k, std::uint64_t seed);

struct TrainTest {
    std::vector<std::size_t> train;
    std::vector<std::size_t> test;
};
/// Test size is floor(test_fraction * n + 0.5).
TrainTest train_test_split(std::size_t n, double test_fraction, std::uint64_t seed);

struct RocPoint {
    double fpr;
    double tpr;
    double threshold;
};

struct RocCurve {
    std::vector<RocPoint> points;  // from (0, 0, +inf) to (1, 1)
    double auc = 0;
};

/// Sweeps every distinct score as a ">= threshold" cut; trapezoidal AUC.
RocCurve roc_curve(std::span<const double> scores, std::span<const std::uint8_t> labels);

struct Metrics {
    double accuracy = 0;
    std::size_t tp = 0, fp = 0, tn = 0, fn = 0;
    std::optional<RocCurve> roc;  // absent for a single-class test set
};

Metrics evaluate(std::span<const double> scores, std::span<const std::uint8_t> labels, double threshold = 0.5);
Metrics evaluate(const RandomForest& forest, const Dataset& test);

/// Mean test accuracy over k folds of `data`.
std::vector<double> cross_validate(const Dataset& data, const ForestConfig& config, std::size_t k, std::uint64_t seed,
                                   unsigned threads = 0);

struct KnnModel {
    std::size_t k = 1;
    FeatureVector mean{};
    FeatureVector scale{};
    std::vector<FeatureVector> points;  // standardized
    std::vector<std::uint8_t> labels;
};

KnnModel fit_knn(const Dataset& data, std::size_t k);
/// Fraction of positive labels among the k nearest (ties by lower index).
double knn_score(const KnnModel& model, const FeatureVector& x);
int predict_knn(const KnnModel& model, const FeatureVector& x);
std::vector<double> knn_scores(const KnnModel& model, const Dataset& data, unsigned threads = 0);

/// Hyperparameter grid searched by the tuning path.
struct ForestGrid {
    std::vector<std::size_t> max_depth{3, 6, 10};
    std::vector<std::size_t> max_features{2, 3, 5, 7, 9};
    std::vector<std::size_t> min_samples_leaf{3, 4, 5, 9, 12};
    std::vector<std::size_t> min_samples_split{8, 10, 12};
    std::vector<std::size_t> n_estimators{100, 200, 300, 500};

    /// Cartesian product; max_features above the feature count are skipped.
    std::vector<ForestConfig> expand(std::uint64_t seed) const;
};

struct GridResult {
    ForestConfig config;
    double cv_accuracy;
};

std::vector<GridResult> grid_search(const Dataset& data, const std::vector<ForestConfig>& configs, std::size_t k,
                                    std::uint64_t seed, unsigned threads = 0);

inline constexpr std::uint16_t kModelFormatVersion = 1;

/// "GGRF" || version || config || metadata || per-tree node arrays, big-endian.
Bytes serialize_model(const RandomForest& forest);
RandomForest deserialize_model(ByteSpan bytes);
void save_model(const std::filesystem::path& path, const RandomForest& forest);
RandomForest load_model(const std::filesystem::path& path);
/// SHA-256 of the serialized model.
Digest model_id(const RandomForest& forest);

void write_roc_csv(std::ostream& out, const RocCurve& roc);

}  // namespace glucoguard::detector
