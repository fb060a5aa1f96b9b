#include "icsdet/ingest.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "icsdet/error.hpp"

namespace icsdet {

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return s;
}

std::string lower(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

std::string unquote(std::string_view s) {
    s = trim(s);
    if (s.size() >= 2 && (s.front() == '\'' || s.front() == '"') && s.back() == s.front()) {
        s = s.substr(1, s.size() - 2);
    }
    return std::string(s);
}

// Splits on the delimiter, honouring single/double quotes; fields are
// trimmed and unquoted.
std::vector<std::string> split_fields(std::string_view line, char delimiter) {
    std::vector<std::string> fields;
    std::string current;
    char quote = 0;
    for (char c : line) {
        if (quote) {
            current.push_back(c);
            if (c == quote) quote = 0;
        } else if (c == '\'' || c == '"') {
            quote = c;
            current.push_back(c);
        } else if (c == delimiter) {
            fields.push_back(unquote(current));
            current.clear();
        } else {
            current.push_back(c);
        }
    }
    fields.push_back(unquote(current));
    return fields;
}

// Line iterator that tracks 1-based line numbers and strips '\r'.
class LineReader {
public:
    explicit LineReader(std::string_view text) : text_(text) {}

    bool next(std::string_view& line) {
        if (pos_ >= text_.size()) return false;
        auto end = text_.find('\n', pos_);
        if (end == std::string_view::npos) end = text_.size();
        line = text_.substr(pos_, end - pos_);
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        pos_ = end + 1;
        ++line_no_;
        return true;
    }

    std::size_t line_no() const noexcept { return line_no_; }

private:
    std::string_view text_;
    std::size_t pos_ = 0;
    std::size_t line_no_ = 0;
};

double parse_number(std::string_view token, std::size_t line, std::size_t column) {
    token = trim(token);
    if (!token.empty() && token.front() == '+') token.remove_prefix(1);
    double v = 0.0;
    auto res = std::from_chars(token.data(), token.data() + token.size(), v);
    if (token.empty() || res.ec != std::errc() || res.ptr != token.data() + token.size() ||
        !std::isfinite(v)) {
        fail(ErrorCode::UnparseableNumeric, "line " + std::to_string(line) + ", column " +
                                                std::to_string(column) + ": cannot parse '" +
                                                std::string(token) + "' as a finite number");
    }
    return v;
}

bool is_missing(std::string_view token) {
    token = trim(token);
    return token == "?" || token.empty();
}

struct ColumnPlan {
    std::vector<FeatureSpec> columns;  // every source column
    std::size_t label_index = 0;
    std::vector<char> dropped;         // per source column
};

ColumnPlan plan_columns(std::vector<FeatureSpec> columns, const IngestOptions& options,
                        const std::string& default_label) {
    ColumnPlan plan;
    plan.columns = std::move(columns);
    const std::string label = options.label_column.empty() ? default_label : options.label_column;
    auto it = std::find_if(plan.columns.begin(), plan.columns.end(),
                           [&](const FeatureSpec& f) { return f.name == label; });
    if (it == plan.columns.end()) {
        fail(ErrorCode::MissingLabelColumn, "label column '" + label + "' not found");
    }
    plan.label_index = static_cast<std::size_t>(it - plan.columns.begin());
    plan.dropped.assign(plan.columns.size(), 0);
    for (const auto& name : options.drop_columns) {
        auto d = std::find_if(plan.columns.begin(), plan.columns.end(),
                              [&](const FeatureSpec& f) { return f.name == name; });
        if (d == plan.columns.end()) {
            fail(ErrorCode::InvalidArgument, "cannot drop unknown column '" + name + "'");
        }
        if (d == it) fail(ErrorCode::InvalidArgument, "cannot drop the label column");
        plan.dropped[static_cast<std::size_t>(d - plan.columns.begin())] = 1;
    }
    return plan;
}

DataSchema schema_from_plan(const ColumnPlan& plan, const IngestOptions& options) {
    DataSchema schema;
    for (std::size_t c = 0; c < plan.columns.size(); ++c) {
        if (c != plan.label_index && !plan.dropped[c]) schema.features.push_back(plan.columns[c]);
    }
    for (std::size_t a = 0; a < schema.features.size(); ++a) {
        for (std::size_t b = a + 1; b < schema.features.size(); ++b) {
            if (schema.features[a].name == schema.features[b].name) {
                fail(ErrorCode::InvalidArgument,
                     "duplicate feature name '" + schema.features[a].name + "'");
            }
        }
    }
    const auto& label = plan.columns[plan.label_index];
    schema.label_column = label.name;
    schema.label_levels = label.levels;
    schema.positive_label = options.positive_label;
    return schema;
}

// Converts one split line into a RawTable row; returns false when the row
// holds a missing value and missing rows are being dropped.
bool convert_row(const std::vector<std::string>& fields, const ColumnPlan& plan,
                 const IngestOptions& options, std::size_t line, RawTable& table) {
    if (fields.size() != plan.columns.size()) {
        fail(ErrorCode::ArityMismatch, "line " + std::to_string(line) + ": expected " +
                                           std::to_string(plan.columns.size()) + " values, found " +
                                           std::to_string(fields.size()));
    }
    std::vector<Cell> row;
    row.reserve(table.schema.features.size() + 1);
    for (std::size_t c = 0; c < fields.size(); ++c) {
        if (plan.dropped[c] || c == plan.label_index) continue;
        const auto& spec = plan.columns[c];
        if (is_missing(fields[c])) {
            if (options.drop_missing) return false;
            fail(ErrorCode::MissingValue, "line " + std::to_string(line) + ", column " +
                                              std::to_string(c + 1) + ": missing value");
        }
        if (spec.kind == FeatureKind::Numeric) {
            row.emplace_back(parse_number(fields[c], line, c + 1));
        } else {
            if (std::find(spec.levels.begin(), spec.levels.end(), fields[c]) == spec.levels.end()) {
                fail(ErrorCode::UnknownNominal, "line " + std::to_string(line) + ", column " +
                                                    std::to_string(c + 1) + ": '" + fields[c] +
                                                    "' is not a declared level of '" + spec.name +
                                                    "'");
            }
            row.emplace_back(fields[c]);
        }
    }
    const auto& label = fields[plan.label_index];
    if (is_missing(label)) {
        if (options.drop_missing) return false;
        fail(ErrorCode::MissingValue, "line " + std::to_string(line) + ": missing label");
    }
    auto& levels = table.schema.label_levels;
    const auto& label_spec = plan.columns[plan.label_index];
    if (label_spec.kind == FeatureKind::Nominal) {
        if (std::find(levels.begin(), levels.end(), label) == levels.end()) {
            fail(ErrorCode::UnknownNominal, "line " + std::to_string(line) + ": label '" + label +
                                                "' is not a declared level");
        }
    } else if (std::find(levels.begin(), levels.end(), label) == levels.end()) {
        levels.push_back(label);
    }
    row.emplace_back(label);
    table.rows.push_back(std::move(row));
    return true;
}

FeatureSpec parse_attribute(std::string_view rest, std::size_t line) {
    rest = trim(rest);
    FeatureSpec spec;
    std::size_t name_end;
    if (!rest.empty() && (rest.front() == '\'' || rest.front() == '"')) {
        name_end = rest.find(rest.front(), 1);
        if (name_end == std::string_view::npos) {
            fail(ErrorCode::MissingSection, "line " + std::to_string(line) + ": unterminated quote");
        }
        spec.name = std::string(rest.substr(1, name_end - 1));
        ++name_end;
    } else {
        name_end = 0;
        while (name_end < rest.size() && !std::isspace(static_cast<unsigned char>(rest[name_end])) &&
               rest[name_end] != '{') {
            ++name_end;
        }
        spec.name = std::string(rest.substr(0, name_end));
    }
    auto type = trim(rest.substr(name_end));
    if (spec.name.empty() || type.empty()) {
        fail(ErrorCode::MissingSection, "line " + std::to_string(line) + ": malformed @attribute");
    }
    if (type.front() == '{') {
        auto close = type.rfind('}');
        if (close == std::string_view::npos) {
            fail(ErrorCode::MissingSection,
                 "line " + std::to_string(line) + ": unterminated nominal declaration");
        }
        spec.kind = FeatureKind::Nominal;
        for (auto& level : split_fields(type.substr(1, close - 1), ',')) {
            if (!level.empty()) spec.levels.push_back(std::move(level));
        }
        return spec;
    }
    const auto t = lower(type);
    if (t == "numeric" || t == "real" || t == "integer") {
        spec.kind = FeatureKind::Numeric;
        return spec;
    }
    fail(ErrorCode::UnsupportedAttribute, "line " + std::to_string(line) + ": attribute '" +
                                              spec.name + "' has unsupported type '" +
                                              std::string(type) +
                                              "' (only numeric and nominal are supported)");
}

bool starts_with_keyword(std::string_view line, std::string_view keyword) {
    if (line.size() < keyword.size()) return false;
    if (lower(line.substr(0, keyword.size())) != keyword) return false;
    return line.size() == keyword.size() ||
           std::isspace(static_cast<unsigned char>(line[keyword.size()]));
}

}  // namespace

RawTable parse_arff(std::string_view text, const IngestOptions& options) {
    LineReader reader(text);
    std::string_view raw;
    std::vector<FeatureSpec> attributes;
    bool saw_relation = false, saw_data = false;

    while (reader.next(raw)) {
        auto line = trim(raw);
        if (line.empty() || line.front() == '%') continue;
        if (starts_with_keyword(line, "@relation")) {
            saw_relation = true;
        } else if (starts_with_keyword(line, "@attribute")) {
            attributes.push_back(parse_attribute(line.substr(10), reader.line_no()));
        } else if (starts_with_keyword(line, "@data")) {
            saw_data = true;
            break;
        } else {
            fail(ErrorCode::MissingSection, "line " + std::to_string(reader.line_no()) +
                                                ": unexpected header content before @data");
        }
    }
    if (!saw_relation) fail(ErrorCode::MissingSection, "ARFF input has no @relation");
    if (attributes.empty()) fail(ErrorCode::MissingSection, "ARFF input has no @attribute");
    if (!saw_data) fail(ErrorCode::MissingSection, "ARFF input has no @data section");

    const std::string last = attributes.back().name;
    auto plan = plan_columns(std::move(attributes), options, last);
    RawTable table;
    table.schema = schema_from_plan(plan, options);
    while (reader.next(raw)) {
        auto line = trim(raw);
        if (line.empty() || line.front() == '%') continue;
        if (line.front() == '{') {
            fail(ErrorCode::UnsupportedAttribute,
                 "line " + std::to_string(reader.line_no()) + ": sparse ARFF rows are not supported");
        }
        convert_row(split_fields(line, ','), plan, options, reader.line_no(), table);
    }
    return table;
}

namespace {

// Lines starting with '#' carry provenance headers written by the tools.
bool is_blank_or_comment(std::string_view line) {
    const auto t = trim(line);
    return t.empty() || t.front() == '#';
}

}  // namespace

RawTable parse_delimited(std::string_view text, const IngestOptions& options) {
    LineReader reader(text);
    std::string_view raw;
    std::vector<FeatureSpec> columns;
    while (reader.next(raw)) {
        if (is_blank_or_comment(raw)) continue;
        for (auto& name : split_fields(raw, options.delimiter)) {
            columns.push_back(FeatureSpec{std::move(name), FeatureKind::Numeric, {}});
        }
        break;
    }
    if (columns.empty()) fail(ErrorCode::MissingSection, "delimited input has no header line");

    IngestOptions opts = options;
    if (opts.label_column.empty()) opts.label_column = "label";
    auto plan = plan_columns(std::move(columns), opts, opts.label_column);
    RawTable table;
    table.schema = schema_from_plan(plan, opts);
    while (reader.next(raw)) {
        if (is_blank_or_comment(raw)) continue;
        convert_row(split_fields(raw, opts.delimiter), plan, opts, reader.line_no(), table);
    }
    return table;
}

Dataset to_dataset(const RawTable& table) {
    if (table.rows.empty()) fail(ErrorCode::EmptyTable, "to_dataset: table has no rows");
    const auto& schema = table.schema;

    std::vector<std::string> observed;
    for (const auto& row : table.rows) {
        const auto& label = std::get<std::string>(row.back());
        if (std::find(observed.begin(), observed.end(), label) == observed.end()) {
            observed.push_back(label);
            if (observed.size() > 2) {
                fail(ErrorCode::NonBinaryLabel, "label column '" + schema.label_column +
                                                    "' holds more than two distinct values");
            }
        }
    }
    const bool positive_known =
        std::find(observed.begin(), observed.end(), schema.positive_label) != observed.end() ||
        std::find(schema.label_levels.begin(), schema.label_levels.end(), schema.positive_label) !=
            schema.label_levels.end();
    if (!positive_known) {
        fail(ErrorCode::InvalidArgument, "positive label '" + schema.positive_label +
                                             "' does not occur in column '" + schema.label_column +
                                             "'");
    }

    std::vector<std::string> names;
    for (const auto& f : schema.features) {
        if (f.kind == FeatureKind::Numeric) {
            names.push_back(f.name);
        } else {
            if (f.levels.empty()) {
                fail(ErrorCode::InvalidArgument, "nominal feature '" + f.name + "' has no levels");
            }
            for (const auto& level : f.levels) names.push_back(f.name + "=" + level);
        }
    }

    Matrix x(table.rows.size(), names.size());
    Labels y(table.rows.size());
    for (std::size_t i = 0; i < table.rows.size(); ++i) {
        const auto& row = table.rows[i];
        if (row.size() != schema.features.size() + 1) {
            fail(ErrorCode::ArityMismatch, "to_dataset: row " + std::to_string(i) + " has wrong arity");
        }
        std::size_t col = 0;
        for (std::size_t f = 0; f < schema.features.size(); ++f) {
            const auto& spec = schema.features[f];
            if (spec.kind == FeatureKind::Numeric) {
                x(i, col++) = std::get<double>(row[f]);
            } else {
                const auto& value = std::get<std::string>(row[f]);
                for (const auto& level : spec.levels) x(i, col++) = level == value ? 1.0 : 0.0;
            }
        }
        y[i] = std::get<std::string>(row.back()) == schema.positive_label ? 1 : 0;
    }
    return Dataset(std::move(x), std::move(y), std::move(names));
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(ErrorCode::FileNotFound, "cannot open '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

Dataset load_dataset(const std::string& path, const IngestOptions& options) {
    const auto text = read_file(path);
    const bool arff = path.size() >= 5 && lower(path.substr(path.size() - 5)) == ".arff";
    return to_dataset(arff ? parse_arff(text, options) : parse_delimited(text, options));
}

}  // namespace icsdet
