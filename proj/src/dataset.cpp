#include "icsdet/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numeric>
#include <ostream>

#include "icsdet/error.hpp"
#include "icsdet/rng.hpp"

namespace icsdet {

Dataset::Dataset(Matrix features, Labels labels, std::vector<std::string> feature_names)
    : features_(std::move(features)), labels_(std::move(labels)), names_(std::move(feature_names)) {
    if (features_.rows() != labels_.size()) {
        fail(ErrorCode::DimensionMismatch, "dataset: " + std::to_string(features_.rows()) +
                                               " feature rows but " +
                                               std::to_string(labels_.size()) + " labels");
    }
    if (names_.empty()) {
        for (std::size_t j = 0; j < features_.cols(); ++j) names_.push_back("f" + std::to_string(j));
    }
    if (names_.size() != features_.cols()) {
        fail(ErrorCode::DimensionMismatch, "dataset: feature name count differs from column count");
    }
    for (double v : features_.data()) {
        if (!std::isfinite(v)) fail(ErrorCode::InvalidArgument, "dataset: non-finite feature value");
    }
    for (auto y : labels_) {
        if (y > 1) fail(ErrorCode::InvalidArgument, "dataset: labels must be 0 or 1");
    }
}

std::size_t Dataset::count_attacks() const {
    return static_cast<std::size_t>(std::count(labels_.begin(), labels_.end(), 1));
}

Dataset Dataset::subset(std::span<const std::size_t> indices) const {
    Labels labels(indices.size());
    for (std::size_t i = 0; i < indices.size(); ++i) labels[i] = labels_[indices[i]];
    return Dataset(features_.select_rows(indices), std::move(labels), names_);
}

std::uint64_t Dataset::fingerprint() const {
    Fnv1a h;
    for (const auto& n : names_) {
        h.update(n.data(), n.size());
        h.update_u64(n.size());
    }
    h.update_u64(features_.rows());
    h.update_u64(features_.cols());
    for (double v : features_.data()) h.update_f64(v);
    h.update(labels_.data(), labels_.size());
    return h.digest();
}

NormalizationParams minmax_fit(const Dataset& train) {
    if (train.n_samples() == 0) fail(ErrorCode::EmptyDataset, "minmax_fit: empty training set");
    const auto& x = train.features();
    NormalizationParams p;
    p.min.assign(x.cols(), 0.0);
    p.max.assign(x.cols(), 0.0);
    for (std::size_t j = 0; j < x.cols(); ++j) {
        p.min[j] = p.max[j] = x(0, j);
    }
    for (std::size_t i = 1; i < x.rows(); ++i) {
        for (std::size_t j = 0; j < x.cols(); ++j) {
            p.min[j] = std::min(p.min[j], x(i, j));
            p.max[j] = std::max(p.max[j], x(i, j));
        }
    }
    return p;
}

Matrix minmax_apply(const NormalizationParams& params, const Matrix& features) {
    if (params.min.size() != features.cols() || params.max.size() != features.cols()) {
        fail(ErrorCode::DimensionMismatch,
             "minmax_apply: params cover " + std::to_string(params.min.size()) +
                 " features, data has " + std::to_string(features.cols()));
    }
    Matrix out(features.rows(), features.cols());
    for (std::size_t i = 0; i < features.rows(); ++i) {
        for (std::size_t j = 0; j < features.cols(); ++j) {
            const double range = params.max[j] - params.min[j];
            double z = range > 0.0 ? (features(i, j) - params.min[j]) / range : 0.0;
            out(i, j) = std::clamp(z, 0.0, 1.0);
        }
    }
    return out;
}

Dataset minmax_apply(const NormalizationParams& params, const Dataset& data) {
    return Dataset(minmax_apply(params, data.features()), data.labels(), data.feature_names());
}

namespace {

std::pair<std::vector<std::size_t>, std::vector<std::size_t>> class_indices(const Labels& labels) {
    std::vector<std::size_t> normals, attacks;
    for (std::size_t i = 0; i < labels.size(); ++i) (labels[i] ? attacks : normals).push_back(i);
    return {std::move(normals), std::move(attacks)};
}

}  // namespace

SplitIndices stratified_split_indices(const Labels& labels, const SplitPlan& plan,
                                      std::size_t repetition_index) {
    auto [normals, attacks] = class_indices(labels);
    if (normals.empty() || attacks.empty()) {
        fail(ErrorCode::SingleClassDataset, "stratified_split: both classes must be present");
    }
    const std::size_t reps = plan.kfold >= 2 ? plan.kfold : plan.repetitions;
    if (repetition_index >= reps) {
        fail(ErrorCode::InvalidArgument, "stratified_split: repetition index out of range");
    }
    if (plan.kfold < 2 && !(plan.test_fraction > 0.0 && plan.test_fraction < 1.0)) {
        fail(ErrorCode::InvalidArgument, "stratified_split: test_fraction must lie in (0,1)");
    }

    std::vector<char> in_test(labels.size(), 0);
    std::uint64_t class_stream = 0;
    for (auto* group : {&normals, &attacks}) {
        // k-fold keeps one permutation per class across folds.
        const std::uint64_t seed = plan.kfold >= 2 ? derive_seed(plan.seed, 0xF01D, class_stream)
                                                   : derive_seed(plan.seed, repetition_index, class_stream);
        Rng rng(seed);
        std::shuffle(group->begin(), group->end(), rng);
        if (plan.kfold >= 2) {
            for (std::size_t p = 0; p < group->size(); ++p) {
                if (p % plan.kfold == repetition_index) in_test[(*group)[p]] = 1;
            }
        } else {
            const auto n_test = static_cast<std::size_t>(
                std::llround(plan.test_fraction * static_cast<double>(group->size())));
            for (std::size_t p = 0; p < n_test; ++p) in_test[(*group)[p]] = 1;
        }
        ++class_stream;
    }

    SplitIndices out;
    for (std::size_t i = 0; i < labels.size(); ++i) (in_test[i] ? out.test : out.train).push_back(i);
    return out;
}

std::pair<Dataset, Dataset> stratified_split(const Dataset& data, const SplitPlan& plan,
                                             std::size_t repetition_index) {
    auto idx = stratified_split_indices(data.labels(), plan, repetition_index);
    return {data.subset(idx.train), data.subset(idx.test)};
}

BalancedSets make_balanced_sets(const Dataset& train, std::size_t k, std::uint64_t seed,
                                bool partition_attacks) {
    if (k == 0) fail(ErrorCode::InvalidArgument, "make_balanced_sets: k must be >= 1");
    auto [normals, attacks] = class_indices(train.labels());
    if (normals.empty() || attacks.empty()) {
        fail(ErrorCode::SingleClassDataset, "make_balanced_sets: both classes must be present");
    }
    if (partition_attacks && attacks.size() < k) {
        fail(ErrorCode::InvalidArgument, "make_balanced_sets: fewer attack rows than branches");
    }

    Rng rng(seed);
    std::vector<std::vector<std::size_t>> attack_chunks;
    if (partition_attacks) {
        std::shuffle(attacks.begin(), attacks.end(), rng);
        const std::size_t base = attacks.size() / k, extra = attacks.size() % k;
        std::size_t pos = 0;
        for (std::size_t i = 0; i < k; ++i) {
            const std::size_t len = base + (i < extra ? 1 : 0);
            attack_chunks.emplace_back(attacks.begin() + pos, attacks.begin() + pos + len);
            pos += len;
        }
    } else {
        attack_chunks.assign(k, attacks);
    }

    std::size_t normals_needed = 0;
    for (const auto& c : attack_chunks) normals_needed += c.size();

    BalancedSets out;
    out.with_replacement = normals.size() < normals_needed;
    std::shuffle(normals.begin(), normals.end(), rng);

    std::size_t pos = 0;
    for (std::size_t i = 0; i < k; ++i) {
        const auto& chunk = attack_chunks[i];
        std::vector<std::size_t> rows(chunk.begin(), chunk.end());
        if (!out.with_replacement) {
            rows.insert(rows.end(), normals.begin() + pos, normals.begin() + pos + chunk.size());
            pos += chunk.size();
        } else if (normals.size() >= chunk.size()) {
            // Distinct within a set, overlapping across sets.
            std::vector<std::size_t> pool = normals;
            std::shuffle(pool.begin(), pool.end(), rng);
            rows.insert(rows.end(), pool.begin(), pool.begin() + chunk.size());
        } else {
            std::uniform_int_distribution<std::size_t> pick(0, normals.size() - 1);
            for (std::size_t r = 0; r < chunk.size(); ++r) rows.push_back(normals[pick(rng)]);
        }
        std::shuffle(rows.begin(), rows.end(), rng);
        out.sets.push_back(train.subset(rows));
    }
    out.discarded_normals = out.with_replacement ? 0 : normals.size() - pos;
    return out;
}

Dataset subsample_attacks(const Dataset& data, double ratio, std::uint64_t seed) {
    if (!(ratio > 0.0 && ratio <= 1.0)) {
        fail(ErrorCode::InvalidArgument, "subsample_attacks: ratio must lie in (0,1]");
    }
    auto [normals, attacks] = class_indices(data.labels());
    // The epsilon absorbs representation error such as 0.7 * 10 = 7.000000000000001.
    const auto keep = std::min<std::size_t>(
        attacks.size(),
        static_cast<std::size_t>(std::ceil(ratio * static_cast<double>(attacks.size()) - 1e-9)));
    if (keep == attacks.size()) return data;

    Rng rng(seed);
    std::shuffle(attacks.begin(), attacks.end(), rng);
    std::vector<char> kept(data.n_samples(), 0);
    for (auto i : normals) kept[i] = 1;
    for (std::size_t p = 0; p < keep; ++p) kept[attacks[p]] = 1;
    std::vector<std::size_t> rows;
    for (std::size_t i = 0; i < kept.size(); ++i) {
        if (kept[i]) rows.push_back(i);
    }
    return data.subset(rows);
}

std::string format_double(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

void write_delimited(std::ostream& out, const Dataset& data, char delimiter) {
    for (const auto& name : data.feature_names()) out << name << delimiter;
    out << "label\n";
    const auto& x = data.features();
    for (std::size_t i = 0; i < x.rows(); ++i) {
        for (std::size_t j = 0; j < x.cols(); ++j) out << format_double(x(i, j)) << delimiter;
        out << (data.labels()[i] ? kAttackLabel : kNormalLabel) << '\n';
    }
}

}  // namespace icsdet
