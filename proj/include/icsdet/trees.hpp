#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "icsdet/dataset.hpp"
#include "icsdet/matrix.hpp"

namespace icsdet {

struct TreeHyper {
    std::size_t max_depth = 12;
    std::size_t min_samples_leaf = 5;
    double min_impurity_decrease = 1e-7;
};

// Flat pre-order node. A split routes x[feature] <= threshold to `left`.
struct TreeNode {
    bool leaf = true;
    double probability = 0.0;  // weighted fraction of Attack rows (leaves)
    std::size_t sample_count = 0;
    std::size_t feature = 0;
    double threshold = 0.0;
    std::size_t left = 0;
    std::size_t right = 0;

    bool operator==(const TreeNode&) const = default;
};

class DecisionTree {
public:
    DecisionTree() = default;
    explicit DecisionTree(std::vector<TreeNode> nodes);

    const std::vector<TreeNode>& nodes() const noexcept { return nodes_; }
    double probability(std::span<const double> row) const;
    std::size_t depth() const;
    // Number of features a row must provide (1 + largest split feature).
    std::size_t required_features() const;

    bool operator==(const DecisionTree&) const = default;

private:
    std::vector<TreeNode> nodes_;
};

double gini(std::size_t count_pos, std::size_t count_neg);
double weighted_gini(double weight_pos, double weight_neg);

struct SplitChoice {
    bool found = false;
    std::size_t feature = 0;
    double threshold = 0.0;
    double decrease = 0.0;
};

// Exact search over `features` and midpoints of consecutive distinct sorted
// values; ties go to the lower feature index, then the lower threshold.
SplitChoice best_split(const Matrix& x, const Labels& y, std::span<const double> weights,
                       std::span<const std::size_t> rows, std::span<const std::size_t> features,
                       std::size_t min_samples_leaf);

struct TreeFitOptions {
    TreeHyper hyper;
    std::vector<double> sample_weights;      // empty = uniform
    std::vector<std::size_t> features;       // empty = all columns
    std::vector<std::size_t> rows;           // empty = all rows (may repeat)
};

DecisionTree fit_tree(const Matrix& x, const Labels& y, const TreeHyper& hyper = {});
DecisionTree fit_tree(const Matrix& x, const Labels& y, const TreeFitOptions& options);

struct Prediction {
    std::vector<double> probability;  // P(Attack)
    Labels labels;                    // probability >= 0.5
};

Prediction predict_tree(const DecisionTree& tree, const Matrix& x);

struct ForestOptions {
    std::size_t n_trees = 100;
    // 0 selects ceil(sqrt(d)) features per tree.
    std::size_t features_per_tree = 0;
    bool bootstrap = true;
    TreeHyper hyper{12, 1, 1e-7};
    std::uint64_t seed = 0;
};

struct ForestModel {
    std::vector<DecisionTree> trees;
    std::vector<std::vector<std::size_t>> feature_subsets;
    std::vector<std::uint64_t> tree_seeds;
};

ForestModel fit_random_forest(const Matrix& x, const Labels& y, const ForestOptions& options = {});
// Majority vote; probability is the fraction of trees voting Attack.
Prediction predict_forest(const ForestModel& forest, const Matrix& x);

struct AdaBoostOptions {
    std::size_t n_rounds = 100;
};

struct AdaBoostModel {
    std::vector<DecisionTree> stumps;
    std::vector<double> stump_weights;
    // Sum of the sample weight distribution after each round.
    std::vector<double> round_weight_sums;
};

// Binary SAMME with depth-1 stumps fitted on reweighted data.
AdaBoostModel fit_adaboost(const Matrix& x, const Labels& y, const AdaBoostOptions& options = {});
Prediction predict_adaboost(const AdaBoostModel& model, const Matrix& x);

}  // namespace icsdet
