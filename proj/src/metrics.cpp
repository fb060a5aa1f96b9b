#include "icsdet/metrics.hpp"

#include <cmath>
#include <string>

#include "icsdet/error.hpp"

namespace icsdet {

namespace {
double ratio(double num, double den) { return den > 0.0 ? num / den : 0.0; }
}  // namespace

ConfusionMatrix confusion(std::span<const std::uint8_t> predicted, std::span<const std::uint8_t> truth) {
    if (predicted.size() != truth.size()) {
        fail(ErrorCode::LengthMismatch, "confusion: " + std::to_string(predicted.size()) +
                                            " predictions vs " + std::to_string(truth.size()) +
                                            " labels");
    }
    ConfusionMatrix cm;
    for (std::size_t i = 0; i < truth.size(); ++i) {
        if (predicted[i] > 1 || truth[i] > 1) {
            fail(ErrorCode::InvalidArgument, "confusion: values must be binary");
        }
        if (predicted[i]) {
            truth[i] ? ++cm.tp : ++cm.fp;
        } else {
            truth[i] ? ++cm.fn : ++cm.tn;
        }
    }
    return cm;
}

Scores compute(const ConfusionMatrix& cm) {
    if (cm.total() == 0) fail(ErrorCode::EmptyMatrix, "compute: confusion matrix is empty");
    const auto tp = static_cast<double>(cm.tp), fp = static_cast<double>(cm.fp);
    const auto fn = static_cast<double>(cm.fn), tn = static_cast<double>(cm.tn);
    Scores s;
    s.acc = (tp + tn) / static_cast<double>(cm.total());
    s.prec = ratio(tp, tp + fp);
    s.rec = ratio(tp, tp + fn);
    s.f1 = ratio(2.0 * tp, 2.0 * tp + fn + fp);
    return s;
}

MeanStd mean_std(std::span<const double> values) {
    if (values.empty()) fail(ErrorCode::Empty, "aggregate: no entries");
    double sum = 0.0;
    for (double v : values) sum += v;
    MeanStd out;
    out.mean = sum / static_cast<double>(values.size());
    if (values.size() > 1) {
        double ss = 0.0;
        for (double v : values) ss += (v - out.mean) * (v - out.mean);
        out.std = std::sqrt(ss / static_cast<double>(values.size() - 1));
    }
    return out;
}

ScoreSummary aggregate(std::span<const Scores> runs) {
    if (runs.empty()) fail(ErrorCode::Empty, "aggregate: no entries");
    std::vector<double> acc, prec, rec, f1;
    for (const auto& s : runs) {
        acc.push_back(s.acc);
        prec.push_back(s.prec);
        rec.push_back(s.rec);
        f1.push_back(s.f1);
    }
    return {mean_std(acc), mean_std(prec), mean_std(rec), mean_std(f1), runs.size()};
}

}  // namespace icsdet
