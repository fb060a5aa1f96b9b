#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "icsdet/dataset.hpp"

namespace icsdet {

enum class FeatureKind { Numeric, Nominal };

struct FeatureSpec {
    std::string name;
    FeatureKind kind = FeatureKind::Numeric;
    std::vector<std::string> levels;  // declaration order, nominal only
};

struct DataSchema {
    std::vector<FeatureSpec> features;
    std::string label_column;
    std::vector<std::string> label_levels;  // declared (ARFF) or first-seen order
    std::string positive_label = kAttackLabel;
};

using Cell = std::variant<double, std::string>;

// One row per sample: feature cells in schema order followed by the label.
struct RawTable {
    DataSchema schema;
    std::vector<std::vector<Cell>> rows;
};

struct IngestOptions {
    // Empty selects the last ARFF attribute, or "label" for delimited text.
    std::string label_column;
    std::string positive_label = kAttackLabel;
    std::vector<std::string> drop_columns;
    // Rows holding '?' (or empty cells in delimited text) are dropped instead
    // of rejected.
    bool drop_missing = false;
    char delimiter = ',';
};

RawTable parse_arff(std::string_view text, const IngestOptions& options = {});
RawTable parse_delimited(std::string_view text, const IngestOptions& options = {});

// One-hot expands nominal features (columns named "name=level") and maps
// the positive label to 1, anything else to 0.
Dataset to_dataset(const RawTable& table);

std::string read_file(const std::string& path);
// Dispatches on extension: ".arff" goes to parse_arff, anything else to
// parse_delimited.
Dataset load_dataset(const std::string& path, const IngestOptions& options = {});

}  // namespace icsdet
