#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <memory>
#include <numeric>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "remind/error.hpp"
#include "remind/features.hpp"
#include "remind/rng.hpp"

namespace remind {

inline constexpr int kClassCount = 3;

enum class MembershipLabel { Retained = 0, Forgotten = 1, Holdout = 2 };

inline const char* label_name(MembershipLabel l) {
    switch (l) {
        case MembershipLabel::Retained: return "retained";
        case MembershipLabel::Forgotten: return "forgotten";
        case MembershipLabel::Holdout: return "holdout";
    }
    return "?";
}

inline MembershipLabel label_from_name(const std::string& name) {
    if (name == "retained") return MembershipLabel::Retained;
    if (name == "forgotten") return MembershipLabel::Forgotten;
    if (name == "holdout") return MembershipLabel::Holdout;
    raise(ErrorKind::Data, "unknown membership label '" + name + "'");
}

struct FeatureRow {
    IllFeatureVector features;
    MembershipLabel label = MembershipLabel::Retained;
    std::string sample_id;
};

struct FeatureDataset {
    std::vector<FeatureRow> rows;

    void add(IllFeatureVector f, MembershipLabel label, std::string sample_id) {
        rows.push_back({f, label, std::move(sample_id)});
    }
    size_t size() const { return rows.size(); }

    std::vector<int> labels() const {
        std::vector<int> out;
        out.reserve(rows.size());
        for (const auto& r : rows) out.push_back(static_cast<int>(r.label));
        return out;
    }
};

namespace detail {

inline void validate_training_data(const FeatureDataset& data) {
    if (data.size() < 10) raise(ErrorKind::Training, "training needs at least 10 rows");
    std::set<std::string> ids;
    std::set<int> classes;
    for (const auto& row : data.rows) {
        if (!ids.insert(row.sample_id).second)
            raise(ErrorKind::Data, "duplicate sample id '" + row.sample_id + "'");
        classes.insert(static_cast<int>(row.label));
        for (double v : row.features.values)
            if (!std::isfinite(v))
                raise(ErrorKind::Data, "non-finite feature in sample '" + row.sample_id + "'");
    }
    if (classes.size() < 2) raise(ErrorKind::Training, "training needs at least 2 classes");
}

inline void validate_input(const IllFeatureVector& x) {
    for (double v : x.values)
        if (!std::isfinite(v)) raise(ErrorKind::Data, "non-finite feature in input");
}

}  // namespace detail

// Per-feature affine transform fitted on training rows only.
struct Standardization {
    std::array<double, kFeatureCount> mean{};
    std::array<double, kFeatureCount> std{};

    static Standardization fit(const FeatureDataset& data) {
        Standardization s;
        const double n = static_cast<double>(data.size());
        for (size_t d = 0; d < kFeatureCount; ++d) {
            double m = 0;
            for (const auto& row : data.rows) m += row.features[d];
            m /= n;
            double var = 0;
            for (const auto& row : data.rows) {
                const double diff = row.features[d] - m;
                var += diff * diff;
            }
            var /= n;
            s.mean[d] = m;
            // Constant features map to zero rather than dividing by zero.
            s.std[d] = var < 1e-24 ? 1.0 : std::sqrt(var);
        }
        return s;
    }

    std::array<double, kFeatureCount> apply(const IllFeatureVector& x) const {
        std::array<double, kFeatureCount> out;
        for (size_t d = 0; d < kFeatureCount; ++d) out[d] = (x[d] - mean[d]) / std[d];
        return out;
    }
};

class Classifier {
public:
    virtual ~Classifier() = default;
    virtual std::string kind() const = 0;
    virtual std::array<double, kClassCount> predict_proba(const IllFeatureVector& x) const = 0;
    virtual nlohmann::json to_json() const = 0;

    int predict(const IllFeatureVector& x) const {
        const auto p = predict_proba(x);
        return static_cast<int>(std::max_element(p.begin(), p.end()) - p.begin());
    }
};

// ---------------------------------------------------------------------------
// Multinomial logistic regression, full-batch gradient descent.
// ---------------------------------------------------------------------------

struct LogisticRegressionParams {
    double l2_lambda = 1e-3;  // excludes the bias terms
    double tolerance = 1e-7;  // on loss change between iterations
    int max_iterations = 5000;
};

class LogisticRegressionModel final : public Classifier {
public:
    // weights[c] has kFeatureCount coefficients followed by the bias.
    std::array<std::array<double, kFeatureCount + 1>, kClassCount> weights{};
    Standardization standardization;
    LogisticRegressionParams params;
    uint64_t seed = 0;
    std::vector<double> training_loss;  // per-iteration trace, not serialized

    std::string kind() const override { return "logistic-regression"; }

    std::array<double, kClassCount> predict_proba(const IllFeatureVector& x) const override {
        detail::validate_input(x);
        return softmax(logits(standardization.apply(x)));
    }

    nlohmann::json to_json() const override {
        nlohmann::json w = nlohmann::json::array();
        for (const auto& row : weights) w.push_back(row);
        return {{"format", "remind-model v1"},
                {"kind", kind()},
                {"seed", seed},
                {"hyperparams",
                 {{"l2_lambda", params.l2_lambda},
                  {"tolerance", params.tolerance},
                  {"max_iterations", params.max_iterations}}},
                {"standardization", {{"mean", standardization.mean}, {"std", standardization.std}}},
                {"weights", w}};
    }

    static LogisticRegressionModel from_json(const nlohmann::json& j) {
        LogisticRegressionModel m;
        m.seed = j.at("seed").get<uint64_t>();
        const auto& h = j.at("hyperparams");
        m.params.l2_lambda = h.at("l2_lambda").get<double>();
        m.params.tolerance = h.at("tolerance").get<double>();
        m.params.max_iterations = h.at("max_iterations").get<int>();
        m.standardization.mean =
            j.at("standardization").at("mean").get<std::array<double, kFeatureCount>>();
        m.standardization.std =
            j.at("standardization").at("std").get<std::array<double, kFeatureCount>>();
        const auto& w = j.at("weights");
        if (!w.is_array() || w.size() != kClassCount)
            raise(ErrorKind::Format, "model weights must have one row per class");
        for (size_t c = 0; c < kClassCount; ++c)
            m.weights[c] = w[c].get<std::array<double, kFeatureCount + 1>>();
        return m;
    }

    std::array<double, kClassCount> logits(const std::array<double, kFeatureCount>& x) const {
        std::array<double, kClassCount> z{};
        for (int c = 0; c < kClassCount; ++c) {
            double acc = weights[c][kFeatureCount];
            for (size_t d = 0; d < kFeatureCount; ++d) acc += weights[c][d] * x[d];
            z[c] = acc;
        }
        return z;
    }

    static std::array<double, kClassCount> softmax(std::array<double, kClassCount> z) {
        const double top = *std::max_element(z.begin(), z.end());
        double sum = 0;
        for (double& v : z) {
            v = std::exp(v - top);
            sum += v;
        }
        for (double& v : z) v /= sum;
        return z;
    }
};

namespace detail {

// Largest eigenvalue of the (D+1)x(D+1) Gram matrix X'X/n (bias column
// included), by power iteration. Sets the safe fixed step for descent.
inline double gram_spectral_radius(const std::vector<std::array<double, kFeatureCount + 1>>& xs) {
    constexpr size_t dim = kFeatureCount + 1;
    const double n = static_cast<double>(xs.size());
    std::array<std::array<double, dim>, dim> gram{};
    for (const auto& x : xs)
        for (size_t a = 0; a < dim; ++a)
            for (size_t b = 0; b < dim; ++b) gram[a][b] += x[a] * x[b] / n;

    std::array<double, dim> v{};
    v.fill(1.0 / std::sqrt(static_cast<double>(dim)));
    double eigen = 0;
    for (int iter = 0; iter < 200; ++iter) {
        std::array<double, dim> w{};
        for (size_t a = 0; a < dim; ++a)
            for (size_t b = 0; b < dim; ++b) w[a] += gram[a][b] * v[b];
        double norm = 0;
        for (double x : w) norm += x * x;
        norm = std::sqrt(norm);
        if (norm == 0) return 0;
        const double next = norm;
        for (size_t a = 0; a < dim; ++a) v[a] = w[a] / norm;
        if (std::abs(next - eigen) < 1e-10 * std::max(1.0, next)) return next;
        eigen = next;
    }
    return eigen;
}

}  // namespace detail

inline LogisticRegressionModel train_logistic_regression(const FeatureDataset& data,
                                                         LogisticRegressionParams params,
                                                         uint64_t seed) {
    detail::validate_training_data(data);
    if (params.l2_lambda < 0) raise(ErrorKind::Parameter, "l2_lambda must be >= 0");
    if (params.max_iterations < 1) raise(ErrorKind::Parameter, "max_iterations must be >= 1");

    LogisticRegressionModel model;
    model.params = params;
    model.seed = seed;
    model.standardization = Standardization::fit(data);

    const size_t n = data.size();
    constexpr size_t dim = kFeatureCount + 1;
    std::vector<std::array<double, dim>> xs(n);
    std::vector<int> ys(n);
    for (size_t i = 0; i < n; ++i) {
        const auto std_x = model.standardization.apply(data.rows[i].features);
        std::copy(std_x.begin(), std_x.end(), xs[i].begin());
        xs[i][kFeatureCount] = 1.0;  // bias input
        ys[i] = static_cast<int>(data.rows[i].label);
    }

    // Softmax cross-entropy is L-smooth with L = lambda_max(X'X/n)/2; the
    // penalty adds lambda. Step 1/L keeps the loss non-increasing.
    const double lipschitz =
        0.5 * detail::gram_spectral_radius(xs) + params.l2_lambda;
    const double step = lipschitz > 0 ? 1.0 / lipschitz : 1.0;

    auto& w = model.weights;  // zero-initialized
    std::vector<std::array<double, kClassCount>> probs(n);
    double prev_loss = std::numeric_limits<double>::infinity();
    for (int iter = 0; iter < params.max_iterations; ++iter) {
        double loss = 0;
        for (size_t i = 0; i < n; ++i) {
            std::array<double, kClassCount> z{};
            for (int c = 0; c < kClassCount; ++c) {
                double acc = 0;
                for (size_t d = 0; d < dim; ++d) acc += w[c][d] * xs[i][d];
                z[c] = acc;
            }
            probs[i] = LogisticRegressionModel::softmax(z);
            loss -= std::log(std::max(probs[i][ys[i]], 1e-300));
        }
        loss /= static_cast<double>(n);
        for (int c = 0; c < kClassCount; ++c)
            for (size_t d = 0; d < kFeatureCount; ++d)
                loss += 0.5 * params.l2_lambda * w[c][d] * w[c][d];
        model.training_loss.push_back(loss);
        if (std::abs(prev_loss - loss) < params.tolerance) break;
        prev_loss = loss;

        std::array<std::array<double, dim>, kClassCount> grad{};
        for (size_t i = 0; i < n; ++i) {
            for (int c = 0; c < kClassCount; ++c) {
                const double residual = probs[i][c] - (ys[i] == c ? 1.0 : 0.0);
                for (size_t d = 0; d < dim; ++d) grad[c][d] += residual * xs[i][d];
            }
        }
        for (int c = 0; c < kClassCount; ++c) {
            for (size_t d = 0; d < dim; ++d) {
                double g = grad[c][d] / static_cast<double>(n);
                if (d < kFeatureCount) g += params.l2_lambda * w[c][d];
                w[c][d] -= step * g;
            }
        }
    }
    return model;
}

// ---------------------------------------------------------------------------
// Random forest with Gini splits and per-tree keyed RNG streams.
// ---------------------------------------------------------------------------

struct RandomForestParams {
    int trees = 200;
    int max_depth = 12;
    int min_leaf = 2;
    int features_per_split = 0;  // 0 selects ceil(sqrt(feature count))
};

struct TreeNode {
    int feature = -1;  // -1 marks a leaf
    double threshold = 0;
    int left = -1, right = -1;
    int vote = 0;  // leaf only: majority class, ties to the lowest index
};

class RandomForestModel final : public Classifier {
public:
    std::vector<std::vector<TreeNode>> trees;
    RandomForestParams params;
    uint64_t seed = 0;

    std::string kind() const override { return "random-forest"; }

    std::array<double, kClassCount> predict_proba(const IllFeatureVector& x) const override {
        detail::validate_input(x);
        std::array<double, kClassCount> votes{};
        for (const auto& tree : trees) votes[route(tree, x)] += 1;
        // Laplace smoothing keeps probabilities off the 0/1 boundary.
        std::array<double, kClassCount> p{};
        const double denom = static_cast<double>(trees.size()) + kClassCount;
        for (int c = 0; c < kClassCount; ++c) p[c] = (votes[c] + 1.0) / denom;
        return p;
    }

    nlohmann::json to_json() const override {
        nlohmann::json forest = nlohmann::json::array();
        for (const auto& tree : trees) {
            nlohmann::json nodes = nlohmann::json::array();
            for (const auto& node : tree)
                nodes.push_back({{"feature", node.feature},
                                 {"threshold", node.threshold},
                                 {"left", node.left},
                                 {"right", node.right},
                                 {"vote", node.vote}});
            forest.push_back(std::move(nodes));
        }
        return {{"format", "remind-model v1"},
                {"kind", kind()},
                {"seed", seed},
                {"hyperparams",
                 {{"trees", params.trees},
                  {"max_depth", params.max_depth},
                  {"min_leaf", params.min_leaf},
                  {"features_per_split", params.features_per_split}}},
                {"trees", forest}};
    }

    static RandomForestModel from_json(const nlohmann::json& j) {
        RandomForestModel m;
        m.seed = j.at("seed").get<uint64_t>();
        const auto& h = j.at("hyperparams");
        m.params.trees = h.at("trees").get<int>();
        m.params.max_depth = h.at("max_depth").get<int>();
        m.params.min_leaf = h.at("min_leaf").get<int>();
        m.params.features_per_split = h.at("features_per_split").get<int>();
        for (const auto& tree_json : j.at("trees")) {
            std::vector<TreeNode> tree;
            for (const auto& node_json : tree_json) {
                TreeNode node;
                node.feature = node_json.at("feature").get<int>();
                node.threshold = node_json.at("threshold").get<double>();
                node.left = node_json.at("left").get<int>();
                node.right = node_json.at("right").get<int>();
                node.vote = node_json.at("vote").get<int>();
                tree.push_back(node);
            }
            m.trees.push_back(std::move(tree));
        }
        return m;
    }

private:
    static int route(const std::vector<TreeNode>& tree, const IllFeatureVector& x) {
        int at = 0;
        while (tree[at].feature >= 0)
            at = x[static_cast<size_t>(tree[at].feature)] <= tree[at].threshold ? tree[at].left
                                                                                : tree[at].right;
        return tree[at].vote;
    }
};

namespace detail {

struct TreeBuilder {
    const FeatureDataset& data;
    const RandomForestParams& params;  // features_per_split already resolved
    CounterRng rng;
    std::vector<TreeNode> nodes;

    int build(std::vector<size_t> indices, int depth) {
        std::array<double, kClassCount> counts{};
        for (size_t i : indices) counts[static_cast<int>(data.rows[i].label)] += 1;
        const bool pure =
            *std::max_element(counts.begin(), counts.end()) == static_cast<double>(indices.size());

        if (pure || depth >= params.max_depth ||
            indices.size() < 2 * static_cast<size_t>(params.min_leaf)) {
            return make_leaf(counts);
        }

        const auto split = best_split(indices);
        if (!split.valid) return make_leaf(counts);

        std::vector<size_t> left, right;
        for (size_t i : indices) {
            if (data.rows[i].features[split.feature] <= split.threshold) left.push_back(i);
            else right.push_back(i);
        }
        const int id = static_cast<int>(nodes.size());
        nodes.emplace_back();
        nodes[id].feature = static_cast<int>(split.feature);
        nodes[id].threshold = split.threshold;
        const int left_id = build(std::move(left), depth + 1);
        const int right_id = build(std::move(right), depth + 1);
        nodes[id].left = left_id;
        nodes[id].right = right_id;
        return id;
    }

    int make_leaf(const std::array<double, kClassCount>& counts) {
        const int id = static_cast<int>(nodes.size());
        nodes.emplace_back();
        nodes[id].vote =
            static_cast<int>(std::max_element(counts.begin(), counts.end()) - counts.begin());
        return id;
    }

    struct Split {
        bool valid = false;
        size_t feature = 0;
        double threshold = 0;
        double impurity = std::numeric_limits<double>::infinity();
    };

    static double gini(const std::array<double, kClassCount>& counts, double total) {
        if (total == 0) return 0;
        double out = 1;
        for (double c : counts) out -= (c / total) * (c / total);
        return out;
    }

    Split best_split(const std::vector<size_t>& indices) {
        // Feature subsample without replacement, drawn from this tree's
        // keyed stream so the forest is schedule-independent.
        std::array<size_t, kFeatureCount> pool;
        std::iota(pool.begin(), pool.end(), size_t{0});
        for (int d = 0; d < params.features_per_split; ++d) {
            const size_t pick = rng.next_range(d, kFeatureCount - 1);
            std::swap(pool[d], pool[pick]);
        }

        Split best;
        std::vector<std::pair<double, int>> column(indices.size());
        for (int d = 0; d < params.features_per_split; ++d) {
            const size_t feature = pool[d];
            for (size_t i = 0; i < indices.size(); ++i)
                column[i] = {data.rows[indices[i]].features[feature],
                             static_cast<int>(data.rows[indices[i]].label)};
            std::sort(column.begin(), column.end());

            std::array<double, kClassCount> left_counts{}, right_counts{};
            for (const auto& [value, label] : column) right_counts[label] += 1;
            const double total = static_cast<double>(column.size());

            double moved = 0;
            for (size_t i = 0; i + 1 < column.size(); ++i) {
                left_counts[column[i].second] += 1;
                right_counts[column[i].second] -= 1;
                moved += 1;
                if (column[i].first == column[i + 1].first) continue;
                if (moved < params.min_leaf || total - moved < params.min_leaf) continue;
                const double impurity = (moved * gini(left_counts, moved) +
                                         (total - moved) * gini(right_counts, total - moved)) /
                                        total;
                if (impurity < best.impurity) {
                    best.valid = true;
                    best.feature = feature;
                    best.threshold = (column[i].first + column[i + 1].first) / 2.0;
                    best.impurity = impurity;
                }
            }
        }
        return best;
    }
};

}  // namespace detail

inline RandomForestModel train_random_forest(const FeatureDataset& data, RandomForestParams params,
                                             uint64_t seed) {
    detail::validate_training_data(data);
    if (params.trees < 1) raise(ErrorKind::Parameter, "forest needs at least 1 tree");
    if (params.min_leaf < 1) raise(ErrorKind::Parameter, "min_leaf must be >= 1");
    if (params.features_per_split <= 0)
        params.features_per_split =
            static_cast<int>(std::ceil(std::sqrt(static_cast<double>(kFeatureCount))));
    params.features_per_split = std::min(params.features_per_split, static_cast<int>(kFeatureCount));

    RandomForestModel model;
    model.params = params;
    model.seed = seed;
    model.trees.resize(static_cast<size_t>(params.trees));

    const size_t n = data.size();
    for (int t = 0; t < params.trees; ++t) {
        detail::TreeBuilder builder{data, model.params,
                                    CounterRng::keyed(seed, static_cast<uint64_t>(t)), {}};
        std::vector<size_t> bootstrap(n);
        for (size_t i = 0; i < n; ++i) bootstrap[i] = builder.rng.next_range(0, n - 1);
        builder.build(std::move(bootstrap), 0);
        model.trees[static_cast<size_t>(t)] = std::move(builder.nodes);
    }
    return model;
}

inline std::unique_ptr<Classifier> classifier_from_json(const nlohmann::json& j) {
    if (j.value("format", "") != "remind-model v1")
        raise(ErrorKind::Format, "unrecognized model format tag");
    const std::string kind = j.at("kind").get<std::string>();
    if (kind == "logistic-regression")
        return std::make_unique<LogisticRegressionModel>(LogisticRegressionModel::from_json(j));
    if (kind == "random-forest")
        return std::make_unique<RandomForestModel>(RandomForestModel::from_json(j));
    raise(ErrorKind::Format, "unknown model kind '" + kind + "'");
}

// ---------------------------------------------------------------------------
// Stratified train/test split.
// ---------------------------------------------------------------------------

struct SplitResult {
    FeatureDataset train, test;
};

// Test quota T = round(test_size * N), allocated per class by largest
// remainder (ties favor the lower class index). Row selection within a
// class orders by a seed-keyed hash of the sample id, so the split is
// independent of input file ordering.
inline SplitResult stratified_split(const FeatureDataset& data, double test_size, uint64_t seed) {
    if (!(test_size > 0 && test_size < 1))
        raise(ErrorKind::Parameter, "test_size must be in (0, 1)");

    std::array<std::vector<size_t>, kClassCount> by_class;
    for (size_t i = 0; i < data.size(); ++i)
        by_class[static_cast<int>(data.rows[i].label)].push_back(i);
    for (int c = 0; c < kClassCount; ++c)
        if (!by_class[c].empty() && by_class[c].size() < 2)
            raise(ErrorKind::Data, std::string("class '") +
                                       label_name(static_cast<MembershipLabel>(c)) +
                                       "' has fewer than 2 rows, cannot stratify");

    const size_t total_quota = static_cast<size_t>(
        std::llround(test_size * static_cast<double>(data.size())));
    std::array<size_t, kClassCount> quota{};
    std::array<double, kClassCount> remainder{};
    size_t allocated = 0;
    for (int c = 0; c < kClassCount; ++c) {
        const double exact = test_size * static_cast<double>(by_class[c].size());
        quota[c] = static_cast<size_t>(std::floor(exact));
        remainder[c] = exact - std::floor(exact);
        allocated += quota[c];
    }
    std::array<int, kClassCount> class_order{0, 1, 2};
    std::stable_sort(class_order.begin(), class_order.end(),
                     [&](int a, int b) { return remainder[a] > remainder[b]; });
    for (int k = 0; allocated < total_quota; k = (k + 1) % kClassCount) {
        const int c = class_order[k];
        if (quota[c] < by_class[c].size()) {
            ++quota[c];
            ++allocated;
        }
    }

    std::vector<uint64_t> row_hash(data.size());
    for (size_t i = 0; i < data.size(); ++i) {
        const auto& id = data.rows[i].sample_id;
        row_hash[i] = rng::hash_bytes(rng::splitmix64(seed), id.data(), id.size());
    }
    std::vector<bool> in_test(data.size(), false);
    for (int c = 0; c < kClassCount; ++c) {
        auto order = by_class[c];
        std::sort(order.begin(), order.end(), [&](size_t a, size_t b) {
            if (row_hash[a] != row_hash[b]) return row_hash[a] < row_hash[b];
            return data.rows[a].sample_id < data.rows[b].sample_id;
        });
        for (size_t k = 0; k < quota[c] && k < order.size(); ++k) in_test[order[k]] = true;
    }

    SplitResult out;
    for (size_t i = 0; i < data.size(); ++i)
        (in_test[i] ? out.test : out.train).rows.push_back(data.rows[i]);
    return out;
}

}  // namespace remind
