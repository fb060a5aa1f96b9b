#include "icsdet/report.hpp"

#include <cstdio>
#include <sstream>

#include "json.hpp"

namespace icsdet {

using nlohmann::ordered_json;

std::string_view metric_name(Metric metric) {
    switch (metric) {
        case Metric::Acc: return "acc";
        case Metric::Prec: return "prec";
        case Metric::Rec: return "rec";
        case Metric::F1: return "f1";
    }
    return "f1";
}

double metric_value(const Scores& s, Metric metric) {
    switch (metric) {
        case Metric::Acc: return s.acc;
        case Metric::Prec: return s.prec;
        case Metric::Rec: return s.rec;
        case Metric::F1: return s.f1;
    }
    return s.f1;
}

MeanStd metric_summary(const ScoreSummary& s, Metric metric) {
    switch (metric) {
        case Metric::Acc: return s.acc;
        case Metric::Prec: return s.prec;
        case Metric::Rec: return s.rec;
        case Metric::F1: return s.f1;
    }
    return s.f1;
}

std::string hex64(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

std::string provenance_header(std::uint64_t seed, std::uint64_t config_hash) {
    return "# icsdet seed=" + std::to_string(seed) + " config_hash=" + hex64(config_hash) + "\n";
}

namespace {

constexpr Metric kMetrics[] = {Metric::Acc, Metric::Prec, Metric::Rec, Metric::F1};

std::string header_for(const ExperimentReport& report) {
    return provenance_header(report.config.seed, config_hash(report.config));
}

ordered_json meta_json(const ExperimentReport& report) {
    ordered_json j;
    j["seed"] = report.config.seed;
    j["config_hash"] = hex64(config_hash(report.config));
    j["config"] = ordered_json::parse(config_to_json(report.config));
    j["dataset_fingerprint"] = hex64(report.dataset_fingerprint);
    j["test_fraction"] = report.plan.test_fraction;
    j["repetitions"] = report.plan.repetitions;
    j["kfold"] = report.plan.kfold;
    return j;
}

}  // namespace

std::string runs_csv(const ExperimentReport& report) {
    std::ostringstream out;
    out << header_for(report) << "method,ratio,repetition,acc,prec,rec,f1\n";
    for (const auto& r : report.runs) {
        out << method_name(r.method) << ',' << format_double(r.ratio) << ',' << r.repetition;
        for (auto m : kMetrics) out << ',' << format_double(metric_value(r.scores, m));
        out << '\n';
    }
    return out.str();
}

std::string runs_json(const ExperimentReport& report) {
    auto j = meta_json(report);
    auto runs = ordered_json::array();
    for (const auto& r : report.runs) {
        ordered_json row;
        row["method"] = method_name(r.method);
        row["ratio"] = r.ratio;
        row["repetition"] = r.repetition;
        for (auto m : kMetrics) row[std::string(metric_name(m))] = metric_value(r.scores, m);
        row["tp"] = r.confusion.tp;
        row["fp"] = r.confusion.fp;
        row["fn"] = r.confusion.fn;
        row["tn"] = r.confusion.tn;
        runs.push_back(std::move(row));
    }
    j["runs"] = std::move(runs);
    return j.dump(2) + "\n";
}

std::string sweep_table_csv(const ExperimentReport& report, Metric metric) {
    std::ostringstream out;
    out << header_for(report) << "ratio";
    for (auto m : report.methods) out << ',' << method_name(m);
    out << '\n';
    for (double ratio : report.ratios) {
        out << format_double(ratio);
        for (auto m : report.methods) out << ',' << format_double(metric_summary(report.summary(m, ratio), metric).mean);
        out << '\n';
    }
    return out.str();
}

std::string compare_csv(const ExperimentReport& report, double ratio) {
    std::ostringstream out;
    out << header_for(report) << "method,acc,prec,rec,f1\n";
    for (auto m : report.methods) {
        const auto s = report.summary(m, ratio);
        out << method_name(m);
        for (auto metric : kMetrics) out << ',' << format_double(metric_summary(s, metric).mean);
        out << '\n';
    }
    return out.str();
}

std::string compare_json(const ExperimentReport& report, double ratio) {
    auto j = meta_json(report);
    j["ratio"] = ratio;
    auto rows = ordered_json::array();
    for (auto m : report.methods) {
        const auto s = report.summary(m, ratio);
        ordered_json row;
        row["method"] = method_name(m);
        row["runs"] = s.runs;
        for (auto metric : kMetrics) {
            const auto ms = metric_summary(s, metric);
            row[std::string(metric_name(metric))] = ordered_json{{"mean", ms.mean}, {"std", ms.std}};
        }
        rows.push_back(std::move(row));
    }
    j["methods"] = std::move(rows);
    return j.dump(2) + "\n";
}

std::string evaluation_json(const Evaluation& ev, std::string_view method, double ratio, std::uint64_t seed,
                            std::uint64_t hash, const Provenance* training) {
    ordered_json j;
    j["seed"] = seed;
    j["config_hash"] = hex64(hash);
    j["method"] = method;
    j["ratio"] = ratio;
    j["repetition"] = 0;
    for (auto m : kMetrics) j[std::string(metric_name(m))] = metric_value(ev.scores, m);
    j["tp"] = ev.confusion.tp;
    j["fp"] = ev.confusion.fp;
    j["fn"] = ev.confusion.fn;
    j["tn"] = ev.confusion.tn;
    j["test_fingerprint"] = hex64(ev.test_fingerprint);
    if (training) {
        j["train_rows"] = training->train_rows;
        j["train_fingerprint"] = hex64(training->train_fingerprint);
        j["balanced_with_replacement"] = training->balanced_with_replacement;
        j["discarded_normals"] = training->discarded_normals;
    }
    return j.dump(2) + "\n";
}

}  // namespace icsdet
