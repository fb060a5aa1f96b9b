#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "icsdet/matrix.hpp"

namespace icsdet {

using Labels = std::vector<std::uint8_t>;  // 1 = Attack, 0 = Normal

inline constexpr const char* kAttackLabel = "Attack";
inline constexpr const char* kNormalLabel = "Normal";

// Feature matrix + binary labels. Immutable after construction; the
// constructor validates finiteness, label domain and shape agreement.
class Dataset {
public:
    Dataset() = default;
    Dataset(Matrix features, Labels labels, std::vector<std::string> feature_names);

    const Matrix& features() const noexcept { return features_; }
    const Labels& labels() const noexcept { return labels_; }
    const std::vector<std::string>& feature_names() const noexcept { return names_; }

    std::size_t n_samples() const noexcept { return labels_.size(); }
    std::size_t n_features() const noexcept { return features_.cols(); }
    std::size_t count_attacks() const;
    std::size_t count_normals() const { return n_samples() - count_attacks(); }

    Dataset subset(std::span<const std::size_t> indices) const;

    // Order-sensitive hash of names, features and labels.
    std::uint64_t fingerprint() const;

    bool operator==(const Dataset&) const = default;

private:
    Matrix features_;
    Labels labels_;
    std::vector<std::string> names_;
};

struct NormalizationParams {
    std::vector<double> min;
    std::vector<double> max;
};

NormalizationParams minmax_fit(const Dataset& train);
// (x - min) / (max - min) clipped to [0,1]; constant columns map to 0.
Matrix minmax_apply(const NormalizationParams& params, const Matrix& features);
Dataset minmax_apply(const NormalizationParams& params, const Dataset& data);

struct SplitPlan {
    std::uint64_t seed = 0;
    double test_fraction = 0.2;
    std::size_t repetitions = 10;
    // 0 = repeated stratified random splits; >= 2 = stratified k-fold with
    // that many folds (repetition i holds out fold i).
    std::size_t kfold = 0;
};

struct SplitIndices {
    std::vector<std::size_t> train;
    std::vector<std::size_t> test;
};

SplitIndices stratified_split_indices(const Labels& labels, const SplitPlan& plan,
                                      std::size_t repetition_index);
std::pair<Dataset, Dataset> stratified_split(const Dataset& data, const SplitPlan& plan,
                                             std::size_t repetition_index);

struct BalancedSets {
    std::vector<Dataset> sets;
    bool with_replacement = false;
    std::size_t discarded_normals = 0;
};

BalancedSets make_balanced_sets(const Dataset& train, std::size_t k, std::uint64_t seed,
                                bool partition_attacks = false);

// Keeps ceil(ratio * attacks) attack rows chosen uniformly without
// replacement and every normal row; original row order is preserved.
Dataset subsample_attacks(const Dataset& data, double ratio, std::uint64_t seed);

// Header line "name1,...,label" followed by one row per sample; numbers are
// written in shortest round-trip form, labels as Attack/Normal.
void write_delimited(std::ostream& out, const Dataset& data, char delimiter = ',');

std::string format_double(double v);

}  // namespace icsdet
