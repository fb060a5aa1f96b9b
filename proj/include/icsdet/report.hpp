#pragma once

#include <cstdint>
#include <string>
#include <string_view>

#include "icsdet/ensemble.hpp"

namespace icsdet {

enum class Metric { Acc, Prec, Rec, F1 };

std::string_view metric_name(Metric metric);
double metric_value(const Scores& scores, Metric metric);
MeanStd metric_summary(const ScoreSummary& summary, Metric metric);

// "# icsdet seed=<n> config_hash=<16 hex digits>" followed by a newline.
std::string provenance_header(std::uint64_t seed, std::uint64_t config_hash);
std::string hex64(std::uint64_t v);

// One row per (repetition, ratio, method): method,ratio,repetition,acc,prec,rec,f1.
std::string runs_csv(const ExperimentReport& report);
std::string runs_json(const ExperimentReport& report);

// Rows are ratios, columns are methods, cells are the mean of `metric`.
std::string sweep_table_csv(const ExperimentReport& report, Metric metric);

// Rows are methods, columns are the mean acc, prec, rec and f1 at `ratio`.
std::string compare_csv(const ExperimentReport& report, double ratio);
std::string compare_json(const ExperimentReport& report, double ratio);

// With `training` set, the balanced-set bookkeeping of the trained model is
// included as well.
std::string evaluation_json(const Evaluation& evaluation, std::string_view method, double ratio,
                            std::uint64_t seed, std::uint64_t config_hash,
                            const Provenance* training = nullptr);

}  // namespace icsdet
