#include "icsdet/commands.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

#include "icsdet/error.hpp"
#include "icsdet/report.hpp"
#include "icsdet/serialize.hpp"
#include "icsdet/simulator.hpp"

namespace icsdet {

namespace fs = std::filesystem;

std::vector<double> default_ratios() {
    std::vector<double> r;
    for (int i = 1; i <= 10; ++i) r.push_back(i / 10.0);
    return r;
}

std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(ErrorCode::FileNotFound, "cannot open '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void write_text_file(const std::string& path, std::string_view text) {
    const fs::path p(path);
    if (p.has_parent_path()) {
        std::error_code ec;
        fs::create_directories(p.parent_path(), ec);
        if (ec) fail(ErrorCode::Io, "cannot create directory '" + p.parent_path().string() + "'");
    }
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) fail(ErrorCode::Io, "cannot write '" + path + "'");
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    if (!out) fail(ErrorCode::Io, "write to '" + path + "' failed");
}

Dataset load_source(const RunConfig& config) {
    if (config.dataset.empty() == config.scenario.empty()) {
        fail(ErrorCode::ConfigParse, "exactly one of --dataset and --scenario is required");
    }
    if (!config.scenario.empty()) return generate_dataset(load_scenario(config.scenario));
    return load_dataset(config.dataset, config.ingest);
}

std::string model_path(const RunConfig& config) {
    if (!config.model.empty()) return config.model;
    return (fs::path(config.out) / "model.icsd").string();
}

double single_ratio(const RunConfig& config) {
    return config.ratios.size() == 1 ? config.ratios.front() : 1.0;
}

namespace {

std::string out_file(const RunConfig& config, const std::string& name) {
    return (fs::path(config.out) / name).string();
}

void check_ratio(double r) {
    if (!(r > 0.0 && r <= 1.0)) fail(ErrorCode::InvalidArgument, "ratios must lie in (0,1]");
}

}  // namespace

std::vector<std::string> cmd_simulate(const SimulateArgs& args) {
    if (args.out.empty()) fail(ErrorCode::ConfigParse, "simulate needs --out");
    auto scenario = load_scenario(args.scenario);
    if (args.seed) scenario.seed = *args.seed;
    if (args.horizon) scenario.horizon = *args.horizon;
    const auto data = generate_dataset(scenario);

    const auto text = format_scenario(scenario);
    Fnv1a h;
    h.update(text.data(), text.size());
    std::ostringstream out;
    out << provenance_header(scenario.seed, h.digest());
    write_delimited(out, data);
    write_text_file(args.out, out.str());
    return {args.out};
}

std::vector<std::string> cmd_ingest(const RunConfig& config) {
    const auto data = load_source(config);
    std::ostringstream csv;
    csv << provenance_header(config.pipeline.seed, config_hash(config.pipeline));
    write_delimited(csv, data);
    const auto csv_path = out_file(config, "dataset.csv");
    write_text_file(csv_path, csv.str());

    std::ostringstream summary;
    summary << provenance_header(config.pipeline.seed, config_hash(config.pipeline)) << "rows,features,attacks,normals,fingerprint\n"
            << data.n_samples() << ',' << data.n_features() << ',' << data.count_attacks() << ','
            << data.count_normals() << ',' << hex64(data.fingerprint()) << '\n';
    const auto summary_path = out_file(config, "ingest_summary.csv");
    write_text_file(summary_path, summary.str());
    return {csv_path, summary_path};
}

std::vector<std::string> cmd_train(const RunConfig& config) {
    const double ratio = single_ratio(config);
    check_ratio(ratio);
    const auto data = load_source(config);
    const auto cell = prepare_cell(data, config.plan, config.pipeline, 0, ratio);
    const auto model = train_pipeline(cell.train, cell.config);
    const auto path = model_path(config);
    const auto bytes = serialize_ensemble(model);
    write_text_file(path, bytes);

    const auto ev = evaluate(model, cell.test);
    const auto report_path = out_file(config, "train_report.json");
    write_text_file(report_path, evaluation_json(ev, method_name(Method::Proposed), ratio, config.pipeline.seed,
                                                 config_hash(config.pipeline), &model.provenance));
    return {path, report_path};
}

std::vector<std::string> cmd_eval(const RunConfig& config) {
    const auto model = deserialize_ensemble(read_text_file(model_path(config)));
    const auto data = load_source(config);
    if (data.n_features() != model.input_dim()) {
        fail(ErrorCode::DimensionMismatch, "dataset has " + std::to_string(data.n_features()) +
                                               " features, model expects " + std::to_string(model.input_dim()));
    }
    // Same test side the model was held out from at training time.
    auto [train, test] = stratified_split(data, config.plan, 0);
    const auto ev = evaluate(model, test);
    const auto report_path = out_file(config, "eval_report.json");
    write_text_file(report_path, evaluation_json(ev, method_name(Method::Proposed), single_ratio(config),
                                                 config.pipeline.seed, config_hash(config.pipeline)));
    return {report_path};
}

namespace {

ExperimentReport run_configured(const RunConfig& config, const std::vector<double>& ratios) {
    const auto data = load_source(config);
    ExperimentOptions opts;
    opts.ratios = ratios;
    opts.methods = config.methods;
    opts.baselines = config.baselines;
    opts.threads = config.threads;
    return run_experiment(data, config.plan, config.pipeline, opts);
}

}  // namespace

std::vector<std::string> cmd_sweep(const RunConfig& config) {
    const auto report = run_configured(config, config.ratios);
    std::vector<std::string> written;
    for (auto metric : {Metric::Acc, Metric::Prec, Metric::Rec, Metric::F1}) {
        const auto path = out_file(config, "sweep_" + std::string(metric_name(metric)) + ".csv");
        write_text_file(path, sweep_table_csv(report, metric));
        written.push_back(path);
    }
    written.push_back(out_file(config, "runs.csv"));
    write_text_file(written.back(), runs_csv(report));
    written.push_back(out_file(config, "runs.json"));
    write_text_file(written.back(), runs_json(report));
    return written;
}

std::vector<std::string> cmd_compare(const RunConfig& config) {
    const double ratio = single_ratio(config);
    check_ratio(ratio);
    const auto report = run_configured(config, {ratio});
    std::vector<std::string> written{out_file(config, "compare.csv"), out_file(config, "compare.json"),
                                     out_file(config, "runs.csv")};
    write_text_file(written[0], compare_csv(report, ratio));
    write_text_file(written[1], compare_json(report, ratio));
    write_text_file(written[2], runs_csv(report));
    return written;
}

}  // namespace icsdet
