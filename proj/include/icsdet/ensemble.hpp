#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "icsdet/dataset.hpp"
#include "icsdet/metrics.hpp"
#include "icsdet/neural.hpp"
#include "icsdet/trees.hpp"

namespace icsdet {

enum class FusionMode : std::uint8_t { Hidden = 0, HiddenPlusProb = 1, ProbOnly = 2 };

std::string_view fusion_mode_name(FusionMode mode);
FusionMode parse_fusion_mode(std::string_view name);

struct PipelineConfig {
    std::size_t branches = 4;
    std::vector<std::size_t> sae_hidden{32, 16};
    std::vector<std::size_t> dnn_hidden{32, 16};
    FusionMode fusion_mode = FusionMode::Hidden;
    double w_s = 2.0;
    double w_l = 1.0;
    double dropout = 0.2;
    std::size_t epochs = 50;
    std::size_t batch_size = 64;
    double learning_rate = 1e-3;
    TreeHyper tree;
    bool partition_attacks = false;
    std::uint64_t seed = 0;
};

void validate(const PipelineConfig& config);
// Canonical JSON text (sorted keys) and its FNV-1a hash.
std::string config_to_json(const PipelineConfig& config);
PipelineConfig config_from_json(std::string_view text, PipelineConfig base = {});
std::uint64_t config_hash(const PipelineConfig& config);

struct Branch {
    SaeModel sae;
    Mlp dnn;

    bool operator==(const Branch&) const = default;
};

struct Provenance {
    std::string config_json;
    std::uint64_t seed = 0;
    std::uint64_t train_fingerprint = 0;
    std::uint64_t train_rows = 0;
    bool balanced_with_replacement = false;
    std::uint64_t discarded_normals = 0;

    bool operator==(const Provenance&) const = default;
};

struct EnsembleModel {
    NormalizationParams normalization;
    std::vector<Branch> branches;
    FusionMode fusion_mode = FusionMode::Hidden;
    DecisionTree tree;
    Provenance provenance;

    std::size_t input_dim() const { return normalization.min.size(); }
    std::size_t branch_width() const;
    std::size_t super_vector_width() const { return branches.size() * branch_width(); }
};

// Output of one branch for a batch: final-hidden activations of the DNN
// and its sigmoid probability.
struct BranchOutput {
    Matrix hidden;
    std::vector<double> probability;
};

BranchOutput run_branch(const Branch& branch, const Matrix& normalized);
// Column blocks in branch order; each block is the hidden activations,
// hidden + probability, or the probability alone, depending on `mode`.
Matrix fuse(std::span<const BranchOutput> outputs, FusionMode mode);
Matrix super_vectors(const EnsembleModel& model, const Matrix& normalized);

// Trains one branch (SAE, then the DNN on its representation) on a balanced set.
Branch train_branch(const Dataset& balanced, const PipelineConfig& config, std::uint64_t seed);

EnsembleModel train_pipeline(const Dataset& train, const PipelineConfig& config);
Prediction predict(const EnsembleModel& model, const Matrix& features);
Prediction predict(const EnsembleModel& model, const Dataset& data);

struct Evaluation {
    ConfusionMatrix confusion;
    Scores scores;
    std::uint64_t test_fingerprint = 0;
};

Evaluation evaluate_predictions(const Prediction& prediction, const Dataset& test);
Evaluation evaluate(const EnsembleModel& model, const Dataset& test);

std::string serialize_ensemble(const EnsembleModel& model);
EnsembleModel deserialize_ensemble(std::string_view bytes);


// Experiments: repeated splits x imbalance ratios x methods.

enum class Method : std::uint8_t { Proposed, DecisionTree, RandomForest, AdaBoost, Dnn };

std::string_view method_name(Method method);
Method parse_method(std::string_view name);
std::vector<Method> all_methods();

struct BaselineOptions {
    std::size_t forest_trees = 100;
    std::size_t adaboost_rounds = 100;
};

struct ExperimentOptions {
    std::vector<double> ratios{1.0};
    std::vector<Method> methods = all_methods();
    BaselineOptions baselines;
    std::size_t threads = 1;
};

struct RunRecord {
    Method method = Method::Proposed;
    double ratio = 1.0;
    std::size_t repetition = 0;
    ConfusionMatrix confusion;
    Scores scores;
};

struct ExperimentReport {
    PipelineConfig config;
    SplitPlan plan;
    std::uint64_t dataset_fingerprint = 0;
    std::vector<double> ratios;
    std::vector<Method> methods;
    std::vector<RunRecord> runs;  // ordered by (repetition, ratio, method)

    ScoreSummary summary(Method method, double ratio) const;
};

// Seed for the models of one (repetition, ratio) cell.
std::uint64_t cell_seed(std::uint64_t master, std::size_t repetition, double ratio);

// Train/test pair of one (repetition, ratio) cell: the split's training side
// with its attacks subsampled to `ratio`, the untouched test side, and the
// config carrying the cell seed.
struct CellData {
    Dataset train;
    Dataset test;
    PipelineConfig config;
};

CellData prepare_cell(const Dataset& data, const SplitPlan& plan, const PipelineConfig& config,
                      std::size_t repetition, double ratio);

// Trains and scores a single method on one train/test pair.
Evaluation run_method(Method method, const Dataset& train, const Dataset& test,
                      const PipelineConfig& config, const BaselineOptions& baselines);

ExperimentReport run_experiment(const Dataset& data, const SplitPlan& plan,
                                const PipelineConfig& config, const ExperimentOptions& options);

}  // namespace icsdet
