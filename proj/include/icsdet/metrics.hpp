#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace icsdet {

// Attack is the positive class.
struct ConfusionMatrix {
    std::size_t tp = 0;
    std::size_t fp = 0;
    std::size_t fn = 0;
    std::size_t tn = 0;

    std::size_t total() const noexcept { return tp + fp + fn + tn; }
    bool operator==(const ConfusionMatrix&) const = default;
};

struct Scores {
    double acc = 0.0;
    double prec = 0.0;
    double rec = 0.0;
    double f1 = 0.0;

    bool operator==(const Scores&) const = default;
};

struct MeanStd {
    double mean = 0.0;
    double std = 0.0;  // sample standard deviation, 0 for a single entry
};

struct ScoreSummary {
    MeanStd acc, prec, rec, f1;
    std::size_t runs = 0;
};

ConfusionMatrix confusion(std::span<const std::uint8_t> predicted, std::span<const std::uint8_t> truth);
// Any 0/0 ratio evaluates to 0.
Scores compute(const ConfusionMatrix& cm);
MeanStd mean_std(std::span<const double> values);
ScoreSummary aggregate(std::span<const Scores> runs);

}  // namespace icsdet
