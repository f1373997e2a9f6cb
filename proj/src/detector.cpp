#include "glucoguard/detector.hpp"

#include "glucoguard/crypto.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <iterator>
#include <limits>
#include <numeric>
#include <ostream>
#include <thread>

namespace glucoguard::detector {

namespace {

unsigned resolve_threads(unsigned requested, std::size_t jobs) {
    unsigned t = requested ? requested : std::max(1u, std::thread::hardware_concurrency());
    return static_cast<unsigned>(std::min<std::size_t>(t, std::max<std::size_t>(jobs, 1)));
}

/// Runs job(i) for i in [0, count) on `threads` workers.
template <class Fn>
void parallel_for(std::size_t count, unsigned threads, Fn&& job) {
    threads = resolve_threads(threads, count);
    if (threads <= 1) {
        for (std::size_t i = 0; i < count; ++i) job(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::jthread> workers;
    workers.reserve(threads);
    for (unsigned w = 0; w < threads; ++w)
        workers.emplace_back([&] {
            for (std::size_t i = next++; i < count; i = next++) job(i);
        });
}

void check_finite(const FeatureVector& x) {
    for (double v : x)
        if (!std::isfinite(v)) throw NonFiniteFeature();
}

}  // namespace

Dataset Dataset::from_samples(std::span<const fog::VitalsSample> samples) {
    Dataset d;
    d.x.reserve(samples.size());
    d.y.reserve(samples.size());
    for (const auto& s : samples) {
        if (!s.label) throw std::invalid_argument("dataset sample has no label");
        const auto f = s.features();
        for (double v : f)
            if (!std::isfinite(v)) throw NonFiniteFeature();
        d.x.push_back(f);
        d.y.push_back(*s.label);
    }
    return d;
}

Dataset Dataset::subset(std::span<const std::size_t> rows) const {
    Dataset d;
    d.x.reserve(rows.size());
    d.y.reserve(rows.size());
    for (auto r : rows) {
        d.x.push_back(x.at(r));
        d.y.push_back(y.at(r));
    }
    return d;
}

double gini_from_counts(std::size_t positives, std::size_t total) {
    if (total == 0) throw EmptyNode();
    const double p1 = static_cast<double>(positives) / static_cast<double>(total);
    const double p0 = static_cast<double>(total - positives) / static_cast<double>(total);
    return 1.0 - p0 * p0 - p1 * p1;
}

double gini(std::span<const std::uint8_t> labels) {
    const auto pos = static_cast<std::size_t>(std::count_if(labels.begin(), labels.end(), [](auto l) { return l != 0; }));
    return gini_from_counts(pos, labels.size());
}

namespace {

using Wide = __int128;

/// Gini decrease of a split as the exact fraction num / den, from class counts:
/// num = n * ((pl^2 + ql^2) * nr + (pr^2 + qr^2) * nl) - (p^2 + q^2) * nl * nr,
/// den = n^2 * nl * nr. Equal splits compare equal regardless of evaluation order.
struct ExactDecrease {
    Wide num;
    Wide den;

    double value() const { return static_cast<double>(num) / static_cast<double>(den); }
    bool greater_than(const ExactDecrease& o) const { return num * o.den > o.num * den; }
};

ExactDecrease exact_decrease(std::size_t n, std::size_t pos, std::size_t nl, std::size_t left_pos) {
    const Wide N = static_cast<Wide>(n), P = static_cast<Wide>(pos), Q = N - P;
    const Wide NL = static_cast<Wide>(nl), PL = static_cast<Wide>(left_pos), QL = NL - PL;
    const Wide NR = N - NL, PR = P - PL, QR = NR - PR;
    const Wide a = (PL * PL + QL * QL) * NR + (PR * PR + QR * QR) * NL;
    return {a * N - (P * P + Q * Q) * NL * NR, N * N * NL * NR};
}

}  // namespace

std::optional<Split> best_split(const Dataset& data, std::span<const std::size_t> rows,
                                std::span<const std::size_t> candidate_features, std::size_t min_samples_leaf) {
    const std::size_t n = rows.size();
    if (n < 2) return std::nullopt;
    min_samples_leaf = std::max<std::size_t>(min_samples_leaf, 1);

    std::size_t total_pos = 0;
    for (auto r : rows) total_pos += data.y[r] != 0;

    std::vector<std::size_t> features(candidate_features.begin(), candidate_features.end());
    std::sort(features.begin(), features.end());

    std::optional<Split> best;
    ExactDecrease best_exact{0, 1};
    std::vector<std::pair<double, std::uint8_t>> column(n);
    for (auto f : features) {
        for (std::size_t i = 0; i < n; ++i) column[i] = {data.x[rows[i]][f], data.y[rows[i]]};
        std::sort(column.begin(), column.end(),
                  [](const auto& a, const auto& b) { return a.first < b.first; });

        std::size_t left_pos = 0;
        for (std::size_t i = 0; i + 1 < n; ++i) {
            left_pos += column[i].second != 0;
            if (!(column[i].first < column[i + 1].first)) continue;
            const std::size_t nl = i + 1;
            const std::size_t nr = n - nl;
            if (nl < min_samples_leaf || nr < min_samples_leaf) continue;
            const auto exact = exact_decrease(n, total_pos, nl, left_pos);
            const double decrease = exact.value();
            if (decrease <= kMinDecrease) continue;
            // Strictly greater: earlier (lower feature, lower threshold) wins ties.
            if (!best || exact.greater_than(best_exact)) {
                const double threshold = (column[i].first + column[i + 1].first) / 2.0;
                best = Split{f, threshold, decrease};
                best_exact = exact;
            }
        }
    }
    return best;
}

double DecisionTree::predict_proba(const FeatureVector& x) const {
    if (nodes_.empty()) throw std::logic_error("predict on an empty tree");
    std::uint32_t i = 0;
    while (!nodes_[i].is_leaf()) {
        const auto& node = nodes_[i];
        i = x[static_cast<std::size_t>(node.feature)] <= node.threshold ? node.left : node.right;
    }
    return nodes_[i].probability;
}

std::size_t DecisionTree::depth() const {
    if (nodes_.empty()) return 0;
    std::size_t deepest = 0;
    std::vector<std::pair<std::uint32_t, std::size_t>> stack{{0, 0}};
    while (!stack.empty()) {
        auto [i, d] = stack.back();
        stack.pop_back();
        deepest = std::max(deepest, d);
        if (!nodes_[i].is_leaf()) {
            stack.push_back({nodes_[i].left, d + 1});
            stack.push_back({nodes_[i].right, d + 1});
        }
    }
    return deepest;
}

namespace {

class TreeBuilder {
public:
    TreeBuilder(const Dataset& data, const TreeParams& params, Rng& rng) : data_(data), params_(params), rng_(rng) {}

    std::uint32_t grow(std::vector<std::size_t> rows, std::size_t depth) {
        const auto id = static_cast<std::uint32_t>(nodes_.size());
        nodes_.emplace_back();
        std::size_t pos = 0;
        for (auto r : rows) pos += data_.y[r] != 0;
        nodes_[id].probability = static_cast<double>(pos) / static_cast<double>(rows.size());

        if (depth >= params_.max_depth || rows.size() < 2 * params_.min_samples_leaf ||
            rows.size() < params_.min_samples_split)
            return id;

        const auto candidates = sample_features();
        const auto split = best_split(data_, rows, candidates, params_.min_samples_leaf);
        if (!split) return id;

        std::vector<std::size_t> left, right;
        for (auto r : rows) (data_.x[r][split->feature] <= split->threshold ? left : right).push_back(r);
        rows.clear();
        rows.shrink_to_fit();

        const auto l = grow(std::move(left), depth + 1);
        const auto rt = grow(std::move(right), depth + 1);
        nodes_[id].feature = static_cast<std::int32_t>(split->feature);
        nodes_[id].threshold = split->threshold;
        nodes_[id].left = l;
        nodes_[id].right = rt;
        return id;
    }

    std::vector<DecisionTree::Node> take() && { return std::move(nodes_); }

private:
    std::vector<std::size_t> sample_features() {
        std::array<std::size_t, kModelFeatureCount> all;
        std::iota(all.begin(), all.end(), 0);
        const auto m = std::min(params_.features_per_split, kModelFeatureCount);
        for (std::size_t i = 0; i < m; ++i) {
            const auto j = i + static_cast<std::size_t>(uniform_index(rng_, kModelFeatureCount - i));
            std::swap(all[i], all[j]);
        }
        return {all.begin(), all.begin() + static_cast<std::ptrdiff_t>(m)};
    }

    const Dataset& data_;
    const TreeParams& params_;
    Rng& rng_;
    std::vector<DecisionTree::Node> nodes_;
};

}  // namespace

DecisionTree fit_tree(const Dataset& data, std::span<const std::size_t> rows, const TreeParams& params, Rng& rng) {
    if (rows.empty()) throw EmptyNode();
    TreeBuilder builder(data, params, rng);
    builder.grow({rows.begin(), rows.end()}, 0);
    return {std::move(builder).take(), params.max_depth};
}

DecisionTree fit_tree(const Dataset& data, const TreeParams& params, Rng& rng) {
    std::vector<std::size_t> rows(data.size());
    std::iota(rows.begin(), rows.end(), 0);
    return fit_tree(data, rows, params, rng);
}

void ForestConfig::validate() const {
    if (n_trees < 1) throw InvalidConfig("n_trees must be >= 1");
    if (max_depth < 1) throw InvalidConfig("max_depth must be >= 1");
    if (features_per_split < 1 || features_per_split > kModelFeatureCount)
        throw InvalidConfig("features_per_split must be in [1, 5]");
    if (min_samples_leaf < 1) throw InvalidConfig("min_samples_leaf must be >= 1");
}

RandomForest fit_forest(const Dataset& data, const ForestConfig& config, std::uint32_t timestamp, unsigned threads) {
    config.validate();
    if (data.empty()) throw EmptyNode();

    RandomForest forest;
    forest.config = config;
    forest.metadata = {data.size(), config.seed, timestamp,
                       std::vector<std::string>(fog::kModelFeatureNames.begin(), fog::kModelFeatureNames.end())};
    forest.trees.resize(config.n_trees);
    const auto params = config.tree_params();

    parallel_for(config.n_trees, threads, [&](std::size_t t) {
        Rng rng(derive_seed(config.seed, t));
        std::vector<std::size_t> rows(data.size());
        if (config.bootstrap) {
            for (auto& r : rows) r = static_cast<std::size_t>(uniform_index(rng, data.size()));
        } else {
            std::iota(rows.begin(), rows.end(), 0);
        }
        forest.trees[t] = fit_tree(data, rows, params, rng);
    });
    return forest;
}

double predict_proba(const RandomForest& forest, const FeatureVector& x) {
    check_finite(x);
    double sum = 0;
    for (const auto& tree : forest.trees) sum += tree.predict_proba(x);
    return sum / static_cast<double>(forest.trees.size());
}

int predict(const RandomForest& forest, const FeatureVector& x, double threshold) {
    return predict_proba(forest, x) >= threshold ? 1 : 0;
}

std::vector<double> predict_proba(const RandomForest& forest, const Dataset& data) {
    std::vector<double> out(data.size());
    for (std::size_t i = 0; i < data.size(); ++i) out[i] = predict_proba(forest, data.x[i]);
    return out;
}

DecisionTree fit_decision_tree(const Dataset& data, std::size_t max_depth, std::size_t min_samples_leaf) {
    Rng rng(0);  // all features are candidates, so the stream is never consulted for a choice
    return fit_tree(data, TreeParams{max_depth, kModelFeatureCount, min_samples_leaf, 2}, rng);
}

std::vector<double> predict_proba(const DecisionTree& tree, const Dataset& data) {
    std::vector<double> out(data.size());
    for (std::size_t i = 0; i < data.size(); ++i) {
        check_finite(data.x[i]);
        out[i] = tree.predict_proba(data.x[i]);
    }
    return out;
}

std::vector<std::vector<std::size_t>> kfold_split(std::size_t n, std::size_t k, std::uint64_t seed) {
    if (k == 0 || n < k) throw TooFewSamples();
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    Rng rng(seed);
    shuffle(std::span(perm), rng);
    std::vector<std::vector<std::size_t>> folds(k);
    std::size_t pos = 0;
    for (std::size_t f = 0; f < k; ++f) {
        const std::size_t size = n / k + (f < n % k ? 1 : 0);
        folds[f].assign(perm.begin() + static_cast<std::ptrdiff_t>(pos),
                        perm.begin() + static_cast<std::ptrdiff_t>(pos + size));
        pos += size;
    }
    return folds;
}

TrainTest train_test_split(std::size_t n, double test_fraction, std::uint64_t seed) {
    if (!(test_fraction >= 0.0 && test_fraction <= 1.0))
        throw std::invalid_argument("test_fraction must be in [0, 1]");
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    Rng rng(seed);
    shuffle(std::span(perm), rng);
    const auto test_size = static_cast<std::size_t>(std::floor(test_fraction * static_cast<double>(n) + 0.5));
    TrainTest out;
    out.test.assign(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(test_size));
    out.train.assign(perm.begin() + static_cast<std::ptrdiff_t>(test_size), perm.end());
    return out;
}

RocCurve roc_curve(std::span<const double> scores, std::span<const std::uint8_t> labels) {
    if (scores.size() != labels.size()) throw std::invalid_argument("scores and labels differ in length");
    if (scores.empty()) throw EmptyTestSet();
    for (double s : scores)
        if (!std::isfinite(s)) throw std::invalid_argument("non-finite score");

    std::size_t pos = 0;
    for (auto l : labels) pos += l != 0;
    const std::size_t neg = labels.size() - pos;
    if (pos == 0 || neg == 0) throw SingleClassTest();

    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](auto a, auto b) { return scores[a] > scores[b]; });

    RocCurve roc;
    roc.points.push_back({0.0, 0.0, std::numeric_limits<double>::infinity()});
    std::size_t tp = 0, fp = 0;
    for (std::size_t i = 0; i < order.size();) {
        const double thr = scores[order[i]];
        while (i < order.size() && scores[order[i]] == thr) {
            (labels[order[i]] ? tp : fp)++;
            ++i;
        }
        roc.points.push_back(
            {static_cast<double>(fp) / static_cast<double>(neg), static_cast<double>(tp) / static_cast<double>(pos), thr});
    }
    for (std::size_t i = 1; i < roc.points.size(); ++i) {
        const auto& a = roc.points[i - 1];
        const auto& b = roc.points[i];
        roc.auc += (b.fpr - a.fpr) * (a.tpr + b.tpr) / 2.0;
    }
    return roc;
}

Metrics evaluate(std::span<const double> scores, std::span<const std::uint8_t> labels, double threshold) {
    if (scores.size() != labels.size()) throw std::invalid_argument("scores and labels differ in length");
    if (scores.empty()) throw EmptyTestSet();
    Metrics m;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        const bool predicted = scores[i] >= threshold;
        const bool actual = labels[i] != 0;
        if (predicted && actual) ++m.tp;
        else if (predicted) ++m.fp;
        else if (actual) ++m.fn;
        else ++m.tn;
    }
    m.accuracy = static_cast<double>(m.tp + m.tn) / static_cast<double>(scores.size());
    try {
        m.roc = roc_curve(scores, labels);
    } catch (const SingleClassTest&) {
        m.roc.reset();
    }
    return m;
}

Metrics evaluate(const RandomForest& forest, const Dataset& test) {
    if (test.empty()) throw EmptyTestSet();
    const auto scores = predict_proba(forest, test);
    return evaluate(scores, test.y);
}

std::vector<double> cross_validate(const Dataset& data, const ForestConfig& config, std::size_t k, std::uint64_t seed,
                                   unsigned threads) {
    const auto folds = kfold_split(data.size(), k, seed);
    std::vector<double> accuracies;
    for (std::size_t f = 0; f < k; ++f) {
        std::vector<std::size_t> train;
        for (std::size_t g = 0; g < k; ++g)
            if (g != f) train.insert(train.end(), folds[g].begin(), folds[g].end());
        const auto model = fit_forest(data.subset(train), config, 0, threads);
        accuracies.push_back(evaluate(model, data.subset(folds[f])).accuracy);
    }
    return accuracies;
}

KnnModel fit_knn(const Dataset& data, std::size_t k) {
    if (k % 2 == 0) throw EvenK();
    if (k > data.size()) throw KExceedsN();
    KnnModel m;
    m.k = k;
    const double n = static_cast<double>(data.size());
    for (std::size_t f = 0; f < kModelFeatureCount; ++f) {
        double sum = 0;
        for (const auto& x : data.x) sum += x[f];
        m.mean[f] = sum / n;
        double ss = 0;
        for (const auto& x : data.x) ss += (x[f] - m.mean[f]) * (x[f] - m.mean[f]);
        const double sd = std::sqrt(ss / n);
        m.scale[f] = sd > 0 ? sd : 1.0;
    }
    m.points.reserve(data.size());
    for (const auto& x : data.x) {
        FeatureVector z;
        for (std::size_t f = 0; f < kModelFeatureCount; ++f) z[f] = (x[f] - m.mean[f]) / m.scale[f];
        m.points.push_back(z);
    }
    m.labels = data.y;
    return m;
}

double knn_score(const KnnModel& model, const FeatureVector& x) {
    check_finite(x);
    FeatureVector z;
    for (std::size_t f = 0; f < kModelFeatureCount; ++f) z[f] = (x[f] - model.mean[f]) / model.scale[f];
    std::vector<std::pair<double, std::size_t>> dist(model.points.size());
    for (std::size_t i = 0; i < model.points.size(); ++i) {
        double d = 0;
        for (std::size_t f = 0; f < kModelFeatureCount; ++f) {
            const double diff = model.points[i][f] - z[f];
            d += diff * diff;
        }
        dist[i] = {d, i};
    }
    const auto kth = dist.begin() + static_cast<std::ptrdiff_t>(model.k);
    std::nth_element(dist.begin(), kth - 1, dist.end());
    std::size_t pos = 0;
    for (auto it = dist.begin(); it != kth; ++it) pos += model.labels[it->second] != 0;
    return static_cast<double>(pos) / static_cast<double>(model.k);
}

int predict_knn(const KnnModel& model, const FeatureVector& x) { return knn_score(model, x) > 0.5 ? 1 : 0; }

std::vector<double> knn_scores(const KnnModel& model, const Dataset& data, unsigned threads) {
    std::vector<double> out(data.size());
    parallel_for(data.size(), threads, [&](std::size_t i) { out[i] = knn_score(model, data.x[i]); });
    return out;
}

std::vector<ForestConfig> ForestGrid::expand(std::uint64_t seed) const {
    std::vector<ForestConfig> out;
    for (auto depth : max_depth)
        for (auto feats : max_features) {
            if (feats > kModelFeatureCount) continue;
            for (auto leaf : min_samples_leaf)
                for (auto split : min_samples_split)
                    for (auto trees : n_estimators) {
                        ForestConfig c;
                        c.n_trees = trees;
                        c.max_depth = depth;
                        c.seed = seed;
                        c.features_per_split = feats;
                        c.bootstrap = true;
                        c.min_samples_leaf = leaf;
                        c.min_samples_split = split;
                        out.push_back(c);
                    }
        }
    return out;
}

std::vector<GridResult> grid_search(const Dataset& data, const std::vector<ForestConfig>& configs, std::size_t k,
                                    std::uint64_t seed, unsigned threads) {
    std::vector<GridResult> out;
    for (const auto& c : configs) {
        const auto acc = cross_validate(data, c, k, seed, threads);
        out.push_back({c, std::accumulate(acc.begin(), acc.end(), 0.0) / static_cast<double>(acc.size())});
    }
    return out;
}

namespace {
constexpr std::array<std::uint8_t, 4> kMagic{'G', 'G', 'R', 'F'};
}

Bytes serialize_model(const RandomForest& forest) {
    ByteWriter w;
    w.raw(kMagic);
    w.u16(kModelFormatVersion);
    const auto& c = forest.config;
    w.u32(static_cast<std::uint32_t>(c.n_trees));
    w.u32(static_cast<std::uint32_t>(c.max_depth));
    w.u64(c.seed);
    w.u32(static_cast<std::uint32_t>(c.features_per_split));
    w.u8(c.bootstrap ? 1 : 0);
    w.u32(static_cast<std::uint32_t>(c.min_samples_leaf));
    w.u32(static_cast<std::uint32_t>(c.min_samples_split));

    const auto& m = forest.metadata;
    w.u64(m.n_train);
    w.u64(m.seed);
    w.u32(m.timestamp);
    w.u32(static_cast<std::uint32_t>(m.feature_order.size()));
    for (const auto& name : m.feature_order) {
        w.u32(static_cast<std::uint32_t>(name.size()));
        w.raw({reinterpret_cast<const std::uint8_t*>(name.data()), name.size()});
    }

    w.u32(static_cast<std::uint32_t>(forest.trees.size()));
    for (const auto& tree : forest.trees) {
        w.u32(static_cast<std::uint32_t>(tree.max_depth()));
        w.u32(static_cast<std::uint32_t>(tree.nodes().size()));
        for (const auto& n : tree.nodes()) {
            w.i32(n.feature);
            w.f64(n.threshold);
            w.u32(n.left);
            w.u32(n.right);
            w.f64(n.probability);
        }
    }
    return std::move(w).take();
}

RandomForest deserialize_model(ByteSpan bytes) {
    try {
        ByteReader r(bytes);
        const auto magic = r.raw(4);
        if (!std::equal(magic.begin(), magic.end(), kMagic.begin())) throw ModelFormatError("not a GGRF model file");
        if (r.u16() != kModelFormatVersion) throw ModelFormatError("unsupported model format version");
        RandomForest f;
        auto& c = f.config;
        c.n_trees = r.u32();
        c.max_depth = r.u32();
        c.seed = r.u64();
        c.features_per_split = r.u32();
        c.bootstrap = r.u8() != 0;
        c.min_samples_leaf = r.u32();
        c.min_samples_split = r.u32();

        auto& m = f.metadata;
        m.n_train = r.u64();
        m.seed = r.u64();
        m.timestamp = r.u32();
        const auto names = r.u32();
        for (std::uint32_t i = 0; i < names; ++i) {
            const auto len = r.u32();
            const auto s = r.raw(len);
            m.feature_order.emplace_back(s.begin(), s.end());
        }
        if (m.feature_order.size() != kModelFeatureCount) throw ModelFormatError("model expects a different feature count");

        const auto tree_count = r.u32();
        for (std::uint32_t t = 0; t < tree_count; ++t) {
            const std::size_t depth = r.u32();
            const auto node_count = r.u32();
            if (node_count == 0) throw ModelFormatError("tree without nodes");
            std::vector<DecisionTree::Node> nodes(node_count);
            for (auto& n : nodes) {
                n.feature = r.i32();
                n.threshold = r.f64();
                n.left = r.u32();
                n.right = r.u32();
                n.probability = r.f64();
                if (!n.is_leaf() && (n.feature >= static_cast<std::int32_t>(kModelFeatureCount) ||
                                     n.left >= node_count || n.right >= node_count))
                    throw ModelFormatError("corrupt tree node");
            }
            f.trees.emplace_back(std::move(nodes), depth);
        }
        if (!r.done()) throw ModelFormatError("trailing bytes in model file");
        if (f.trees.size() != c.n_trees) throw ModelFormatError("tree count does not match config");
        return f;
    } catch (const DecodeError& e) {
        throw ModelFormatError(std::string("truncated model file: ") + e.what());
    }
}

void save_model(const std::filesystem::path& path, const RandomForest& forest) {
    const auto bytes = serialize_model(forest);
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error("cannot open " + path.string() + " for writing");
    f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

RandomForest load_model(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open " + path.string());
    Bytes bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
    return deserialize_model(bytes);
}

Digest model_id(const RandomForest& forest) { return sha256(serialize_model(forest)); }

void write_roc_csv(std::ostream& out, const RocCurve& roc) {
    out << "threshold,fpr,tpr\n";
    out.precision(17);
    for (const auto& p : roc.points) {
        if (std::isinf(p.threshold))
            out << "inf";
        else
            out << p.threshold;
        out << ',' << p.fpr << ',' << p.tpr << '\n';
    }
}

}  // namespace glucoguard::detector
