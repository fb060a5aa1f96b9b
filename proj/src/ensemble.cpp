#include "icsdet/ensemble.hpp"

#include <algorithm>
#include <bit>
#include <future>
#include <string>

#include "json.hpp"

#include "icsdet/error.hpp"
#include "icsdet/rng.hpp"
#include "icsdet/serialize.hpp"

namespace icsdet {

using nlohmann::json;

std::string_view fusion_mode_name(FusionMode mode) {
    switch (mode) {
        case FusionMode::Hidden: return "hidden";
        case FusionMode::HiddenPlusProb: return "hidden_plus_prob";
        case FusionMode::ProbOnly: return "prob_only";
    }
    return "hidden";
}

FusionMode parse_fusion_mode(std::string_view name) {
    if (name == "hidden") return FusionMode::Hidden;
    if (name == "hidden_plus_prob") return FusionMode::HiddenPlusProb;
    if (name == "prob_only") return FusionMode::ProbOnly;
    fail(ErrorCode::ConfigParse, "unknown fusion mode '" + std::string(name) + "'");
}

void validate(const PipelineConfig& c) {
    auto bad = [](const std::string& m) { fail(ErrorCode::InvalidArgument, "pipeline config: " + m); };
    if (c.branches == 0) bad("branches must be >= 1");
    if (c.sae_hidden.empty()) bad("sae_hidden needs at least one layer");
    if (c.dnn_hidden.empty() && c.fusion_mode != FusionMode::ProbOnly) {
        bad("hidden fusion modes need at least one DNN hidden layer");
    }
    for (auto w : c.sae_hidden) if (w == 0) bad("zero-width SAE layer");
    for (auto w : c.dnn_hidden) if (w == 0) bad("zero-width DNN layer");
    if (!(c.w_l > 0.0 && c.w_s >= c.w_l)) fail(ErrorCode::InvalidWeights, "pipeline config: need w_s >= w_l > 0");
    if (!(c.dropout >= 0.0 && c.dropout < 1.0)) bad("dropout must lie in [0,1)");
    if (c.batch_size == 0) bad("batch_size must be >= 1");
    if (!(c.learning_rate > 0.0)) bad("learning_rate must be positive");
    if (c.tree.max_depth == 0 || c.tree.min_samples_leaf == 0 || !(c.tree.min_impurity_decrease > 0.0)) {
        bad("tree hyperparameters must be positive");
    }
}

namespace {

json config_json(const PipelineConfig& c) {
    return json{
        {"branches", c.branches},
        {"sae_hidden", c.sae_hidden},
        {"dnn_hidden", c.dnn_hidden},
        {"fusion_mode", std::string(fusion_mode_name(c.fusion_mode))},
        {"w_s", c.w_s},
        {"w_l", c.w_l},
        {"dropout", c.dropout},
        {"epochs", c.epochs},
        {"batch_size", c.batch_size},
        {"learning_rate", c.learning_rate},
        {"tree", json{{"max_depth", c.tree.max_depth},
                      {"min_samples_leaf", c.tree.min_samples_leaf},
                      {"min_impurity_decrease", c.tree.min_impurity_decrease}}},
        {"partition_attacks", c.partition_attacks},
        {"seed", c.seed},
    };
}

}  // namespace

std::string config_to_json(const PipelineConfig& config) { return config_json(config).dump(); }

PipelineConfig config_from_json(std::string_view text, PipelineConfig c) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        fail(ErrorCode::ConfigParse, std::string("config: ") + e.what());
    }
    if (!j.is_object()) fail(ErrorCode::ConfigParse, "config: top level must be an object");
    try {
        for (auto it = j.begin(); it != j.end(); ++it) {
            const auto& key = it.key();
            const auto& v = it.value();
            if (key == "branches") c.branches = v.get<std::size_t>();
            else if (key == "sae_hidden") c.sae_hidden = v.get<std::vector<std::size_t>>();
            else if (key == "dnn_hidden") c.dnn_hidden = v.get<std::vector<std::size_t>>();
            else if (key == "fusion_mode") c.fusion_mode = parse_fusion_mode(v.get<std::string>());
            else if (key == "w_s") c.w_s = v.get<double>();
            else if (key == "w_l") c.w_l = v.get<double>();
            else if (key == "dropout") c.dropout = v.get<double>();
            else if (key == "epochs") c.epochs = v.get<std::size_t>();
            else if (key == "batch_size") c.batch_size = v.get<std::size_t>();
            else if (key == "learning_rate") c.learning_rate = v.get<double>();
            else if (key == "partition_attacks") c.partition_attacks = v.get<bool>();
            else if (key == "seed") c.seed = v.get<std::uint64_t>();
            else if (key == "tree") {
                for (auto t = v.begin(); t != v.end(); ++t) {
                    if (t.key() == "max_depth") c.tree.max_depth = t.value().get<std::size_t>();
                    else if (t.key() == "min_samples_leaf") c.tree.min_samples_leaf = t.value().get<std::size_t>();
                    else if (t.key() == "min_impurity_decrease") c.tree.min_impurity_decrease = t.value().get<double>();
                    else fail(ErrorCode::ConfigParse, "config: unknown key 'tree." + t.key() + "'");
                }
            } else {
                fail(ErrorCode::ConfigParse, "config: unknown key '" + key + "'");
            }
        }
    } catch (const json::exception& e) {
        fail(ErrorCode::ConfigParse, std::string("config: ") + e.what());
    }
    return c;
}

std::uint64_t config_hash(const PipelineConfig& config) {
    const auto text = config_to_json(config);
    Fnv1a h;
    h.update(text.data(), text.size());
    return h.digest();
}

std::size_t EnsembleModel::branch_width() const {
    if (branches.empty()) return 0;
    const auto& layers = branches.front().dnn.layers();
    const std::size_t hidden = layers.size() >= 2 ? layers[layers.size() - 2].out_dim() : 0;
    switch (fusion_mode) {
        case FusionMode::Hidden: return hidden;
        case FusionMode::HiddenPlusProb: return hidden + 1;
        case FusionMode::ProbOnly: return 1;
    }
    return hidden;
}

BranchOutput run_branch(const Branch& branch, const Matrix& normalized) {
    const Matrix rep = encode(branch.sae, normalized);
    const auto& dnn = branch.dnn;
    BranchOutput out;
    const std::size_t n_layers = dnn.layers().size();
    if (n_layers >= 2) {
        out.hidden = forward_prefix(dnn, rep, n_layers - 1);
        const auto& last = dnn.layers().back();
        Mlp head({last}, 0.0);
        const Matrix p = predict(head, out.hidden);
        out.probability = p.data();
    } else {
        out.hidden = Matrix(rep.rows(), 0);
        out.probability = predict(dnn, rep).data();
    }
    return out;
}

Matrix fuse(std::span<const BranchOutput> outputs, FusionMode mode) {
    if (outputs.empty()) fail(ErrorCode::WidthMismatch, "fuse: no branch outputs");
    const std::size_t rows = outputs.front().probability.size();
    const std::size_t hidden = outputs.front().hidden.cols();
    for (const auto& o : outputs) {
        if (o.probability.size() != rows || o.hidden.rows() != rows) {
            fail(ErrorCode::WidthMismatch, "fuse: branch outputs differ in row count");
        }
        if (mode != FusionMode::ProbOnly && o.hidden.cols() != hidden) {
            fail(ErrorCode::WidthMismatch, "fuse: branch hidden widths differ");
        }
    }
    const std::size_t width = mode == FusionMode::ProbOnly ? 1
                              : mode == FusionMode::Hidden ? hidden
                                                           : hidden + 1;
    Matrix out(rows, outputs.size() * width);
    for (std::size_t r = 0; r < rows; ++r) {
        auto dst = out.row(r).begin();
        for (const auto& o : outputs) {
            if (mode != FusionMode::ProbOnly) {
                auto h = o.hidden.row(r);
                dst = std::copy(h.begin(), h.end(), dst);
            }
            if (mode != FusionMode::Hidden) *dst++ = o.probability[r];
        }
    }
    return out;
}

Matrix super_vectors(const EnsembleModel& model, const Matrix& normalized) {
    std::vector<BranchOutput> outputs;
    outputs.reserve(model.branches.size());
    for (const auto& b : model.branches) outputs.push_back(run_branch(b, normalized));
    return fuse(outputs, model.fusion_mode);
}

Branch train_branch(const Dataset& balanced, const PipelineConfig& config, std::uint64_t seed) {
    TrainOptions opts;
    opts.epochs = config.epochs;
    opts.batch_size = config.batch_size;
    opts.adam.lr = config.learning_rate;

    Rng init(derive_seed(seed, 0));
    Branch branch;
    opts.seed = derive_seed(seed, 1);
    auto sae = make_sae(balanced.n_features(), config.sae_hidden, config.dropout, init);
    branch.sae = train_autoencoder(std::move(sae), balanced.features(), opts).model;

    const Matrix rep = encode(branch.sae, balanced.features());
    std::vector<std::size_t> dims{rep.cols()};
    dims.insert(dims.end(), config.dnn_hidden.begin(), config.dnn_hidden.end());
    dims.push_back(1);
    Mlp dnn(dims, Activation::ReLU, Activation::Sigmoid, config.dropout, init);
    opts.seed = derive_seed(seed, 2);
    branch.dnn = train_mlp(std::move(dnn), rep, labels_to_column(balanced.labels()),
                           Loss::weighted_bce(config.w_s, config.w_l), opts)
                     .model;
    return branch;
}

EnsembleModel train_pipeline(const Dataset& train, const PipelineConfig& config) {
    validate(config);
    if (train.count_attacks() == 0 || train.count_normals() == 0) {
        fail(ErrorCode::SingleClassDataset, "train_pipeline: both classes must be present");
    }
    EnsembleModel model;
    model.fusion_mode = config.fusion_mode;
    model.normalization = minmax_fit(train);
    const Dataset normalized = minmax_apply(model.normalization, train);

    const auto balanced = make_balanced_sets(normalized, config.branches,
                                             derive_seed(config.seed, 0xBA1A), config.partition_attacks);
    for (std::size_t i = 0; i < config.branches; ++i) {
        try {
            model.branches.push_back(train_branch(balanced.sets[i], config, derive_seed(config.seed, 0xB0, i)));
        } catch (const Error& e) {
            fail(e.code(), "branch " + std::to_string(i) + ": " + e.what());
        }
    }

    const Matrix fused = super_vectors(model, normalized.features());
    model.tree = fit_tree(fused, normalized.labels(), config.tree);

    model.provenance.config_json = config_to_json(config);
    model.provenance.seed = config.seed;
    model.provenance.train_fingerprint = train.fingerprint();
    model.provenance.train_rows = train.n_samples();
    model.provenance.balanced_with_replacement = balanced.with_replacement;
    model.provenance.discarded_normals = balanced.discarded_normals;
    return model;
}

Prediction predict(const EnsembleModel& model, const Matrix& features) {
    if (features.cols() != model.input_dim()) {
        fail(ErrorCode::DimensionMismatch, "predict: data has " + std::to_string(features.cols()) +
                                               " features, model expects " +
                                               std::to_string(model.input_dim()));
    }
    return predict_tree(model.tree, super_vectors(model, minmax_apply(model.normalization, features)));
}

Prediction predict(const EnsembleModel& model, const Dataset& data) {
    return predict(model, data.features());
}

Evaluation evaluate_predictions(const Prediction& prediction, const Dataset& test) {
    if (test.n_samples() == 0) fail(ErrorCode::EmptyDataset, "evaluate: empty test set");
    Evaluation ev;
    ev.confusion = confusion(prediction.labels, test.labels());
    ev.scores = compute(ev.confusion);
    ev.test_fingerprint = test.fingerprint();
    return ev;
}

Evaluation evaluate(const EnsembleModel& model, const Dataset& test) {
    if (test.n_samples() == 0) fail(ErrorCode::EmptyDataset, "evaluate: empty test set");
    return evaluate_predictions(predict(model, test), test);
}

std::string serialize_ensemble(const EnsembleModel& model) {
    ByteWriter out;
    out.tag("ICSD");
    out.tag("ETEM");
    out.u32(kModelFormatVersion);
    out.tag("PROV");
    out.str(model.provenance.config_json);
    out.u64(model.provenance.seed);
    out.u64(model.provenance.train_fingerprint);
    out.u64(model.provenance.train_rows);
    out.u8(model.provenance.balanced_with_replacement ? 1 : 0);
    out.u64(model.provenance.discarded_normals);
    write_normalization(out, model.normalization);
    out.tag("FUSE");
    out.u8(static_cast<std::uint8_t>(model.fusion_mode));
    out.u32(static_cast<std::uint32_t>(model.branches.size()));
    for (const auto& b : model.branches) {
        out.tag("BRCH");
        write_mlp(out, b.sae.encoder);
        write_mlp(out, b.sae.decoder);
        write_mlp(out, b.dnn);
    }
    write_tree(out, model.tree);
    return out.bytes();
}

EnsembleModel deserialize_ensemble(std::string_view bytes) {
    ByteReader in(bytes);
    in.expect_tag("ICSD");
    in.expect_tag("ETEM");
    const auto version = in.u32();
    if (version != kModelFormatVersion) {
        fail(ErrorCode::BadModelFile, "unsupported model file version " + std::to_string(version));
    }
    EnsembleModel m;
    in.expect_tag("PROV");
    m.provenance.config_json = in.str();
    m.provenance.seed = in.u64();
    m.provenance.train_fingerprint = in.u64();
    m.provenance.train_rows = in.u64();
    m.provenance.balanced_with_replacement = in.u8() != 0;
    m.provenance.discarded_normals = in.u64();
    m.normalization = read_normalization(in);
    in.expect_tag("FUSE");
    const auto mode = in.u8();
    if (mode > static_cast<std::uint8_t>(FusionMode::ProbOnly)) fail(ErrorCode::BadModelFile, "unknown fusion mode");
    m.fusion_mode = static_cast<FusionMode>(mode);
    const auto k = in.u32();
    for (std::uint32_t i = 0; i < k; ++i) {
        in.expect_tag("BRCH");
        Branch b;
        b.sae.encoder = read_mlp(in);
        b.sae.decoder = read_mlp(in);
        b.dnn = read_mlp(in);
        if (b.sae.encoder.input_dim() != m.input_dim() ||
            b.dnn.input_dim() != b.sae.representation_dim()) {
            fail(ErrorCode::BadModelFile, "branch " + std::to_string(i) + " dimensions are inconsistent");
        }
        m.branches.push_back(std::move(b));
    }
    m.tree = read_tree(in);
    if (!in.at_end()) fail(ErrorCode::BadModelFile, "trailing bytes after model");
    if (m.tree.required_features() > m.super_vector_width()) {
        fail(ErrorCode::BadModelFile, "tree reads beyond the super-vector width");
    }
    return m;
}

std::string_view method_name(Method method) {
    switch (method) {
        case Method::Proposed: return "proposed";
        case Method::DecisionTree: return "dt";
        case Method::RandomForest: return "rf";
        case Method::AdaBoost: return "adaboost";
        case Method::Dnn: return "dnn";
    }
    return "proposed";
}

Method parse_method(std::string_view name) {
    for (auto m : all_methods()) {
        if (method_name(m) == name) return m;
    }
    fail(ErrorCode::ConfigParse, "unknown method '" + std::string(name) + "'");
}

std::vector<Method> all_methods() {
    return {Method::Proposed, Method::DecisionTree, Method::RandomForest, Method::AdaBoost, Method::Dnn};
}

ScoreSummary ExperimentReport::summary(Method method, double ratio) const {
    std::vector<Scores> picked;
    for (const auto& r : runs) {
        if (r.method == method && r.ratio == ratio) picked.push_back(r.scores);
    }
    return aggregate(picked);
}

std::uint64_t cell_seed(std::uint64_t master, std::size_t repetition, double ratio) {
    return derive_seed(master, repetition, std::bit_cast<std::uint64_t>(ratio));
}

Evaluation run_method(Method method, const Dataset& train, const Dataset& test,
                      const PipelineConfig& config, const BaselineOptions& baselines) {
    if (method == Method::Proposed) {
        const auto model = train_pipeline(train, config);
        if (model.provenance.train_fingerprint != train.fingerprint()) {
            fail(ErrorCode::InvalidArgument, "run_method: pipeline trained on unexpected data");
        }
        return evaluate(model, test);
    }

    // Baselines see the raw imbalanced training split, normalised the same way.
    const auto norm = minmax_fit(train);
    const Matrix x_train = minmax_apply(norm, train.features());
    const Matrix x_test = minmax_apply(norm, test.features());
    switch (method) {
        case Method::DecisionTree:
            return evaluate_predictions(predict_tree(fit_tree(x_train, train.labels(), config.tree), x_test), test);
        case Method::RandomForest: {
            ForestOptions opts;
            opts.n_trees = baselines.forest_trees;
            opts.seed = derive_seed(config.seed, 0xF0);
            return evaluate_predictions(predict_forest(fit_random_forest(x_train, train.labels(), opts), x_test),
                                        test);
        }
        case Method::AdaBoost: {
            AdaBoostOptions opts;
            opts.n_rounds = baselines.adaboost_rounds;
            return evaluate_predictions(predict_adaboost(fit_adaboost(x_train, train.labels(), opts), x_test),
                                        test);
        }
        case Method::Dnn: {
            std::vector<std::size_t> dims{x_train.cols()};
            dims.insert(dims.end(), config.dnn_hidden.begin(), config.dnn_hidden.end());
            dims.push_back(1);
            Rng init(derive_seed(config.seed, 0xD0));
            Mlp dnn(dims, Activation::ReLU, Activation::Sigmoid, config.dropout, init);
            TrainOptions opts;
            opts.epochs = config.epochs;
            opts.batch_size = config.batch_size;
            opts.adam.lr = config.learning_rate;
            opts.seed = derive_seed(config.seed, 0xD1);
            auto trained = train_mlp(std::move(dnn), x_train, labels_to_column(train.labels()), Loss::bce(), opts);
            const Matrix p = predict(trained.model, x_test);
            Prediction pred;
            pred.probability = p.data();
            pred.labels.resize(p.rows());
            for (std::size_t i = 0; i < p.rows(); ++i) pred.labels[i] = pred.probability[i] >= 0.5 ? 1 : 0;
            return evaluate_predictions(pred, test);
        }
        case Method::Proposed: break;
    }
    fail(ErrorCode::InvalidArgument, "run_method: unhandled method");
}

CellData prepare_cell(const Dataset& data, const SplitPlan& plan, const PipelineConfig& config,
                      std::size_t repetition, double ratio) {
    auto [train, test] = stratified_split(data, plan, repetition);
    const std::uint64_t seed = cell_seed(config.seed, repetition, ratio);
    // Only the training side is subsampled.
    CellData cell{subsample_attacks(train, ratio, derive_seed(seed, 0x5B)), std::move(test), config};
    cell.config.seed = seed;
    return cell;
}

namespace {

std::vector<RunRecord> run_cell(const Dataset& data, const SplitPlan& plan, const PipelineConfig& config,
                                const ExperimentOptions& options, std::size_t repetition, double ratio) {
    const auto cell = prepare_cell(data, plan, config, repetition, ratio);
    const auto& test = cell.test;
    const std::uint64_t test_print = test.fingerprint();
    std::vector<RunRecord> records;
    for (auto method : options.methods) {
        const auto ev = run_method(method, cell.train, test, cell.config, options.baselines);
        if (ev.test_fingerprint != test_print) {
            fail(ErrorCode::InvalidArgument, "run_experiment: test split changed during evaluation");
        }
        records.push_back(RunRecord{method, ratio, repetition, ev.confusion, ev.scores});
    }
    return records;
}

}  // namespace

ExperimentReport run_experiment(const Dataset& data, const SplitPlan& plan, const PipelineConfig& config,
                                const ExperimentOptions& options) {
    validate(config);
    for (double r : options.ratios) {
        if (!(r > 0.0 && r <= 1.0)) fail(ErrorCode::InvalidArgument, "run_experiment: ratios must lie in (0,1]");
    }
    if (options.ratios.empty() || options.methods.empty()) {
        fail(ErrorCode::InvalidArgument, "run_experiment: need at least one ratio and one method");
    }
    ExperimentReport report;
    report.config = config;
    report.plan = plan;
    report.dataset_fingerprint = data.fingerprint();
    report.ratios = options.ratios;
    report.methods = options.methods;

    const std::size_t reps = plan.kfold >= 2 ? plan.kfold : plan.repetitions;
    struct Cell {
        std::size_t repetition;
        double ratio;
    };
    std::vector<Cell> cells;
    for (std::size_t rep = 0; rep < reps; ++rep) {
        for (double ratio : options.ratios) cells.push_back({rep, ratio});
    }

    std::vector<std::vector<RunRecord>> results(cells.size());
    const std::size_t threads = std::max<std::size_t>(1, options.threads);
    for (std::size_t start = 0; start < cells.size(); start += threads) {
        const std::size_t end = std::min(cells.size(), start + threads);
        if (threads == 1) {
            results[start] = run_cell(data, plan, config, options, cells[start].repetition, cells[start].ratio);
            continue;
        }
        std::vector<std::future<std::vector<RunRecord>>> pending;
        for (std::size_t c = start; c < end; ++c) {
            pending.push_back(std::async(std::launch::async, run_cell, std::cref(data), std::cref(plan),
                                         std::cref(config), std::cref(options), cells[c].repetition,
                                         cells[c].ratio));
        }
        for (std::size_t c = start; c < end; ++c) results[c] = pending[c - start].get();
    }
    for (auto& r : results) report.runs.insert(report.runs.end(), r.begin(), r.end());
    return report;
}

}  // namespace icsdet
