#include "icsdet/trees.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "icsdet/error.hpp"
#include "icsdet/rng.hpp"

namespace icsdet {

DecisionTree::DecisionTree(std::vector<TreeNode> nodes) : nodes_(std::move(nodes)) {
    if (nodes_.empty()) fail(ErrorCode::InvalidArgument, "DecisionTree: no nodes");
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
        const auto& n = nodes_[i];
        if (!n.leaf && (n.left <= i || n.right <= i || n.left >= nodes_.size() ||
                        n.right >= nodes_.size())) {
            fail(ErrorCode::InvalidArgument, "DecisionTree: node " + std::to_string(i) +
                                                 " has children out of pre-order");
        }
    }
}

double DecisionTree::probability(std::span<const double> row) const {
    std::size_t i = 0;
    while (!nodes_[i].leaf) {
        const auto& n = nodes_[i];
        i = row[n.feature] <= n.threshold ? n.left : n.right;
    }
    return nodes_[i].probability;
}

std::size_t DecisionTree::depth() const {
    std::vector<std::size_t> depth(nodes_.size(), 0);
    std::size_t deepest = 0;
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
        deepest = std::max(deepest, depth[i]);
        if (!nodes_[i].leaf) {
            depth[nodes_[i].left] = depth[i] + 1;
            depth[nodes_[i].right] = depth[i] + 1;
        }
    }
    return deepest;
}

std::size_t DecisionTree::required_features() const {
    std::size_t need = 0;
    for (const auto& n : nodes_) {
        if (!n.leaf) need = std::max(need, n.feature + 1);
    }
    return need;
}

double gini(std::size_t count_pos, std::size_t count_neg) {
    if (count_pos + count_neg == 0) fail(ErrorCode::EmptyNode, "gini: node holds no samples");
    return weighted_gini(static_cast<double>(count_pos), static_cast<double>(count_neg));
}

double weighted_gini(double weight_pos, double weight_neg) {
    const double total = weight_pos + weight_neg;
    if (!(total > 0.0)) fail(ErrorCode::EmptyNode, "gini: node holds no weight");
    const double p = weight_pos / total;
    const double q = weight_neg / total;
    return 1.0 - p * p - q * q;
}

SplitChoice best_split(const Matrix& x, const Labels& y, std::span<const double> weights,
                       std::span<const std::size_t> rows, std::span<const std::size_t> features,
                       std::size_t min_samples_leaf) {
    SplitChoice best;
    const std::size_t n = rows.size();
    const std::size_t min_leaf = std::max<std::size_t>(1, min_samples_leaf);
    if (n < 2 * min_leaf) return best;

    auto w = [&](std::size_t r) { return weights.empty() ? 1.0 : weights[r]; };
    double total_pos = 0.0, total_neg = 0.0;
    for (auto r : rows) (y[r] ? total_pos : total_neg) += w(r);
    const double total = total_pos + total_neg;
    if (!(total > 0.0)) return best;
    const double parent = weighted_gini(total_pos, total_neg);

    std::vector<std::size_t> order(rows.begin(), rows.end());
    for (auto f : features) {
        std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            const double va = x(a, f), vb = x(b, f);
            return va < vb || (va == vb && a < b);
        });
        double left_pos = 0.0, left_neg = 0.0;
        for (std::size_t i = 0; i + 1 < n; ++i) {
            const std::size_t r = order[i];
            (y[r] ? left_pos : left_neg) += w(r);
            const double a = x(r, f), b = x(order[i + 1], f);
            const std::size_t n_left = i + 1;
            if (a == b || n_left < min_leaf || n - n_left < min_leaf) continue;
            const double left_w = left_pos + left_neg;
            const double right_pos = total_pos - left_pos, right_neg = total_neg - left_neg;
            const double right_w = right_pos + right_neg;
            if (!(left_w > 0.0) || !(right_w > 0.0)) continue;
            const double child = (left_w / total) * weighted_gini(left_pos, left_neg) +
                                 (right_w / total) * weighted_gini(right_pos, right_neg);
            const double decrease = parent - child;
            if (!best.found || decrease > best.decrease + 1e-12) {
                double mid = (a + b) / 2.0;
                if (!(mid < b)) mid = a;
                best = SplitChoice{true, f, mid, decrease};
            }
        }
    }
    return best;
}

namespace {

class TreeBuilder {
public:
    TreeBuilder(const Matrix& x, const Labels& y, const TreeFitOptions& options)
        : x_(x), y_(y), options_(options) {}

    std::vector<TreeNode> build(std::vector<std::size_t> rows) {
        grow(std::move(rows), 0);
        return std::move(nodes_);
    }

private:
    std::size_t grow(std::vector<std::size_t> rows, std::size_t depth) {
        const std::size_t id = nodes_.size();
        nodes_.emplace_back();
        double pos = 0.0, neg = 0.0;
        for (auto r : rows) (y_[r] ? pos : neg) += weight(r);
        TreeNode node;
        node.sample_count = rows.size();
        node.probability = pos + neg > 0.0 ? pos / (pos + neg) : 0.0;

        const auto& hyper = options_.hyper;
        const bool pure = pos == 0.0 || neg == 0.0;
        if (!pure && depth < hyper.max_depth) {
            const auto split = best_split(x_, y_, options_.sample_weights, rows, features(),
                                          hyper.min_samples_leaf);
            if (split.found && split.decrease >= hyper.min_impurity_decrease) {
                std::vector<std::size_t> left, right;
                for (auto r : rows) (x_(r, split.feature) <= split.threshold ? left : right).push_back(r);
                rows.clear();
                rows.shrink_to_fit();
                node.leaf = false;
                node.feature = split.feature;
                node.threshold = split.threshold;
                node.left = grow(std::move(left), depth + 1);
                node.right = grow(std::move(right), depth + 1);
            }
        }
        nodes_[id] = node;
        return id;
    }

    double weight(std::size_t r) const {
        return options_.sample_weights.empty() ? 1.0 : options_.sample_weights[r];
    }

    std::span<const std::size_t> features() {
        if (!options_.features.empty()) return options_.features;
        if (all_features_.empty()) {
            all_features_.resize(x_.cols());
            std::iota(all_features_.begin(), all_features_.end(), std::size_t{0});
        }
        return all_features_;
    }

    const Matrix& x_;
    const Labels& y_;
    const TreeFitOptions& options_;
    std::vector<std::size_t> all_features_;
    std::vector<TreeNode> nodes_;
};

void require_both_classes(const Labels& y, const char* who) {
    const auto pos = std::count(y.begin(), y.end(), 1);
    if (pos == 0 || static_cast<std::size_t>(pos) == y.size()) {
        fail(ErrorCode::SingleClassDataset, std::string(who) + ": both classes must be present");
    }
}

}  // namespace

DecisionTree fit_tree(const Matrix& x, const Labels& y, const TreeHyper& hyper) {
    TreeFitOptions options;
    options.hyper = hyper;
    return fit_tree(x, y, options);
}

DecisionTree fit_tree(const Matrix& x, const Labels& y, const TreeFitOptions& options) {
    if (x.rows() != y.size()) fail(ErrorCode::DimensionMismatch, "fit_tree: rows and labels differ");
    if (x.rows() == 0) fail(ErrorCode::EmptyDataset, "fit_tree: no samples");
    if (!options.sample_weights.empty() && options.sample_weights.size() != y.size()) {
        fail(ErrorCode::DimensionMismatch, "fit_tree: sample weight count differs from rows");
    }
    for (auto f : options.features) {
        if (f >= x.cols()) fail(ErrorCode::DimensionMismatch, "fit_tree: feature index out of range");
    }
    std::vector<std::size_t> rows = options.rows;
    if (rows.empty()) {
        rows.resize(x.rows());
        std::iota(rows.begin(), rows.end(), std::size_t{0});
    }
    return DecisionTree(TreeBuilder(x, y, options).build(std::move(rows)));
}

Prediction predict_tree(const DecisionTree& tree, const Matrix& x) {
    if (x.cols() < tree.required_features()) {
        fail(ErrorCode::DimensionMismatch, "predict_tree: rows have " + std::to_string(x.cols()) +
                                               " features, tree needs " +
                                               std::to_string(tree.required_features()));
    }
    Prediction out;
    out.probability.resize(x.rows());
    out.labels.resize(x.rows());
    for (std::size_t i = 0; i < x.rows(); ++i) {
        out.probability[i] = tree.probability(x.row(i));
        out.labels[i] = out.probability[i] >= 0.5 ? 1 : 0;
    }
    return out;
}

ForestModel fit_random_forest(const Matrix& x, const Labels& y, const ForestOptions& options) {
    if (x.rows() != y.size()) fail(ErrorCode::DimensionMismatch, "fit_random_forest: rows and labels differ");
    require_both_classes(y, "fit_random_forest");
    if (options.n_trees == 0) fail(ErrorCode::InvalidArgument, "fit_random_forest: n_trees must be >= 1");
    const std::size_t d = x.cols();
    std::size_t per_tree = options.features_per_tree;
    if (per_tree == 0) per_tree = static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(d))));
    per_tree = std::clamp<std::size_t>(per_tree, 1, d);

    ForestModel forest;
    for (std::size_t t = 0; t < options.n_trees; ++t) {
        const std::uint64_t seed = derive_seed(options.seed, t);
        Rng rng(seed);
        TreeFitOptions fit;
        fit.hyper = options.hyper;
        std::vector<std::size_t> all(d);
        std::iota(all.begin(), all.end(), std::size_t{0});
        if (per_tree < d) {
            std::shuffle(all.begin(), all.end(), rng);
            all.resize(per_tree);
            std::sort(all.begin(), all.end());
        }
        fit.features = all;
        if (options.bootstrap) {
            std::uniform_int_distribution<std::size_t> pick(0, x.rows() - 1);
            fit.rows.resize(x.rows());
            for (auto& r : fit.rows) r = pick(rng);
        }
        forest.trees.push_back(fit_tree(x, y, fit));
        forest.feature_subsets.push_back(std::move(all));
        forest.tree_seeds.push_back(seed);
    }
    return forest;
}

Prediction predict_forest(const ForestModel& forest, const Matrix& x) {
    if (forest.trees.empty()) fail(ErrorCode::InvalidArgument, "predict_forest: empty forest");
    std::vector<double> votes(x.rows(), 0.0);
    for (const auto& tree : forest.trees) {
        const auto p = predict_tree(tree, x);
        for (std::size_t i = 0; i < x.rows(); ++i) votes[i] += p.labels[i];
    }
    Prediction out;
    out.probability.resize(x.rows());
    out.labels.resize(x.rows());
    const double n = static_cast<double>(forest.trees.size());
    for (std::size_t i = 0; i < x.rows(); ++i) {
        out.probability[i] = votes[i] / n;
        out.labels[i] = out.probability[i] >= 0.5 ? 1 : 0;
    }
    return out;
}

AdaBoostModel fit_adaboost(const Matrix& x, const Labels& y, const AdaBoostOptions& options) {
    if (x.rows() != y.size()) fail(ErrorCode::DimensionMismatch, "fit_adaboost: rows and labels differ");
    require_both_classes(y, "fit_adaboost");
    if (options.n_rounds == 0) fail(ErrorCode::InvalidArgument, "fit_adaboost: n_rounds must be >= 1");

    // Weight assigned to a stump with zero weighted error.
    const double perfect_weight = std::log((1.0 - 1e-10) / 1e-10);

    AdaBoostModel model;
    const std::size_t n = x.rows();
    TreeFitOptions fit;
    fit.hyper = TreeHyper{1, 1, 0.0};
    fit.sample_weights.assign(n, 1.0 / static_cast<double>(n));

    for (std::size_t round = 0; round < options.n_rounds; ++round) {
        auto stump = fit_tree(x, y, fit);
        const auto pred = predict_tree(stump, x);
        double err = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            if (pred.labels[i] != y[i]) err += fit.sample_weights[i];
        }
        if (err >= 0.5) {
            if (model.stumps.empty()) {
                model.stumps.push_back(std::move(stump));
                model.stump_weights.push_back(1.0);
                model.round_weight_sums.push_back(
                    std::accumulate(fit.sample_weights.begin(), fit.sample_weights.end(), 0.0));
            }
            break;
        }
        if (err <= 1e-12) {
            model.stumps.push_back(std::move(stump));
            model.stump_weights.push_back(perfect_weight);
            model.round_weight_sums.push_back(
                std::accumulate(fit.sample_weights.begin(), fit.sample_weights.end(), 0.0));
            break;
        }
        const double alpha = std::log((1.0 - err) / err);
        double sum = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            if (pred.labels[i] != y[i]) fit.sample_weights[i] *= std::exp(alpha);
            sum += fit.sample_weights[i];
        }
        for (auto& w : fit.sample_weights) w /= sum;
        model.stumps.push_back(std::move(stump));
        model.stump_weights.push_back(alpha);
        model.round_weight_sums.push_back(
            std::accumulate(fit.sample_weights.begin(), fit.sample_weights.end(), 0.0));
    }
    return model;
}

Prediction predict_adaboost(const AdaBoostModel& model, const Matrix& x) {
    if (model.stumps.empty()) fail(ErrorCode::InvalidArgument, "predict_adaboost: empty ensemble");
    std::vector<double> score(x.rows(), 0.0);
    double total = 0.0;
    for (std::size_t t = 0; t < model.stumps.size(); ++t) {
        const auto p = predict_tree(model.stumps[t], x);
        for (std::size_t i = 0; i < x.rows(); ++i) score[i] += model.stump_weights[t] * p.labels[i];
        total += model.stump_weights[t];
    }
    Prediction out;
    out.probability.resize(x.rows());
    out.labels.resize(x.rows());
    for (std::size_t i = 0; i < x.rows(); ++i) {
        out.probability[i] = score[i] / total;
        out.labels[i] = out.probability[i] >= 0.5 ? 1 : 0;
    }
    return out;
}

}  // namespace icsdet
