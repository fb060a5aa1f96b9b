#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "icsdet/dataset.hpp"
#include "icsdet/ensemble.hpp"
#include "icsdet/ingest.hpp"

namespace icsdet {

std::vector<double> default_ratios();  // 0.1, 0.2, ..., 1.0

// Everything the train/eval/sweep/compare commands need. Exactly one of
// `dataset` and `scenario` names the data source.
struct RunConfig {
    std::string dataset;
    std::string scenario;
    IngestOptions ingest;
    PipelineConfig pipeline;
    SplitPlan plan;
    std::vector<double> ratios = default_ratios();
    std::vector<Method> methods = all_methods();
    BaselineOptions baselines;
    std::size_t threads = 1;
    std::string out = ".";
    std::string model;  // defaults to <out>/model.icsd
};

struct SimulateArgs {
    std::string scenario;
    std::optional<std::uint64_t> seed;
    std::optional<std::uint64_t> horizon;
    std::string out;  // output CSV path
};

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, std::string_view text);

Dataset load_source(const RunConfig& config);
std::string model_path(const RunConfig& config);
// Ratio the single-model commands train at: the only --ratios entry, else 1.0.
double single_ratio(const RunConfig& config);

// Each command returns the paths it wrote, in a fixed order.
std::vector<std::string> cmd_simulate(const SimulateArgs& args);
std::vector<std::string> cmd_ingest(const RunConfig& config);
std::vector<std::string> cmd_train(const RunConfig& config);
std::vector<std::string> cmd_eval(const RunConfig& config);
std::vector<std::string> cmd_sweep(const RunConfig& config);
std::vector<std::string> cmd_compare(const RunConfig& config);

}  // namespace icsdet
