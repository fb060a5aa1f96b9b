#include "doctest.h"

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "helpers.hpp"
#include "icsdet/commands.hpp"
#include "icsdet/report.hpp"

using namespace icsdet;
namespace fs = std::filesystem;

namespace {

const char* kScenario =
    "name = tiny\nseed = 5\nhorizon = 1200\nf = 2\nfdi.min_fraction = 0.2\nfdi.max_fraction = 0.4\n"
    "dos.p_loss = 0.8\n"
    "episode = 100 160 fdi\nepisode = 400 460 dos\nepisode = 700 760 fdi\nepisode = 1000 1060 dos\n";

struct Workspace {
    fs::path dir;

    explicit Workspace(const std::string& name) : dir(fs::temp_directory_path() / ("icsdet_cli_" + name)) {
        fs::remove_all(dir);
        fs::create_directories(dir);
        write_text_file((dir / "tiny.scenario").string(), kScenario);
        write_text_file((dir / "fast.json").string(), R"({"epochs": 2, "branches": 2})");
    }
    ~Workspace() { fs::remove_all(dir); }

    std::string path(const std::string& name) const { return (dir / name).string(); }

    RunConfig config(const std::string& out) const {
        RunConfig c;
        c.scenario = path("tiny.scenario");
        c.pipeline = config_from_json(read_text_file(path("fast.json")));
        c.pipeline.seed = 11;
        c.plan.seed = 11;
        c.plan.repetitions = 2;
        c.baselines.forest_trees = 5;
        c.baselines.adaboost_rounds = 5;
        c.out = path(out);
        return c;
    }
};

std::vector<std::string> data_lines(const std::string& text) {
    std::vector<std::string> out;
    std::istringstream in(text);
    for (std::string line; std::getline(in, line);) {
        if (!line.empty() && line[0] != '#') out.push_back(line);
    }
    return out;
}

int run_cli(const std::string& args, const std::string& err_file) {
    const std::string cmd = std::string(ICSDET_CLI_PATH) + " " + args + " >/dev/null 2>" + err_file;
    return std::system(cmd.c_str());
}

}  // namespace

TEST_CASE("simulate is reproducible and leaves its input alone") {
    Workspace ws("simulate");
    const auto before = read_text_file(ws.path("tiny.scenario"));
    SimulateArgs args{ws.path("tiny.scenario"), std::nullopt, std::nullopt, ws.path("a.csv")};
    cmd_simulate(args);
    args.out = ws.path("b.csv");
    cmd_simulate(args);
    const auto a = read_text_file(ws.path("a.csv"));
    CHECK(a == read_text_file(ws.path("b.csv")));
    CHECK(a.rfind("# icsdet seed=5 config_hash=", 0) == 0);
    CHECK(read_text_file(ws.path("tiny.scenario")) == before);
    CHECK(data_lines(a).size() == 1201);

    args.seed = 6;
    args.out = ws.path("c.csv");
    cmd_simulate(args);
    CHECK(read_text_file(ws.path("c.csv")) != a);
}

TEST_CASE("ingest exports the dataset and a summary") {
    Workspace ws("ingest");
    SimulateArgs args{ws.path("tiny.scenario"), std::nullopt, std::nullopt, ws.path("d.csv")};
    cmd_simulate(args);
    RunConfig c;
    c.dataset = ws.path("d.csv");
    c.out = ws.path("out");
    auto written = cmd_ingest(c);
    REQUIRE(written.size() == 2);
    auto summary = data_lines(read_text_file(written[1]));
    REQUIRE(summary.size() == 2);
    CHECK(summary[1].rfind("1200,9,240,960,", 0) == 0);
    CHECK(data_lines(read_text_file(written[0])) == data_lines(read_text_file(ws.path("d.csv"))));
}

TEST_CASE("sweep emits one ratio-by-method table per metric") {
    Workspace ws("sweep");
    auto c = ws.config("out");
    c.ratios = {1.0};
    c.methods = {Method::Proposed};
    c.plan.repetitions = 1;
    auto written = cmd_sweep(c);
    REQUIRE(written.size() == 6);
    for (const char* m : {"acc", "prec", "rec", "f1"}) {
        auto lines = data_lines(read_text_file(ws.path(std::string("out/sweep_") + m + ".csv")));
        REQUIRE(lines.size() == 2);
        CHECK(lines[0] == "ratio,proposed");
        CHECK(lines[1].rfind("1,", 0) == 0);
    }
    auto runs = data_lines(read_text_file(ws.path("out/runs.csv")));
    CHECK(runs[0] == "method,ratio,repetition,acc,prec,rec,f1");
    CHECK(runs.size() == 2);
}

TEST_CASE("compare lists every method and re-runs bit-identically") {
    Workspace ws("compare");
    auto c = ws.config("one");
    cmd_compare(c);
    auto lines = data_lines(read_text_file(ws.path("one/compare.csv")));
    REQUIRE(lines.size() == 6);
    CHECK(lines[0] == "method,acc,prec,rec,f1");
    const char* names[] = {"proposed", "dt", "rf", "adaboost", "dnn"};
    for (int i = 0; i < 5; ++i) CHECK(lines[i + 1].rfind(std::string(names[i]) + ",", 0) == 0);

    c.out = ws.path("two");
    cmd_compare(c);
    for (const char* f : {"compare.csv", "compare.json", "runs.csv"}) {
        CHECK(read_text_file(ws.path(std::string("one/") + f)) == read_text_file(ws.path(std::string("two/") + f)));
    }
    const auto header = provenance_header(11, config_hash(c.pipeline));
    CHECK(read_text_file(ws.path("one/compare.csv")).rfind(header, 0) == 0);
}

TEST_CASE("train then eval reproduces the compare row") {
    Workspace ws("consistency");
    auto c = ws.config("model");
    c.plan.repetitions = 1;
    c.ratios = {1.0};
    cmd_train(c);
    auto eval_out = cmd_eval(c);
    const auto train_report = read_text_file(ws.path("model/train_report.json"));
    const auto eval_report = read_text_file(eval_out[0]);
    // The train report is the eval report plus the balanced-set bookkeeping.
    CHECK(train_report.substr(0, train_report.find(",\n  \"train_rows\"")) ==
          eval_report.substr(0, eval_report.rfind("\n}")));
    CHECK(train_report.find("\"discarded_normals\": ") != std::string::npos);

    c.methods = {Method::Proposed};
    c.out = ws.path("cmp");
    cmd_compare(c);
    auto row = data_lines(read_text_file(ws.path("cmp/runs.csv")))[1];

    std::ostringstream expect;
    auto json_value = [&](const std::string& key) {
        const auto at = eval_report.find("\"" + key + "\": ");
        REQUIRE(at != std::string::npos);
        const auto start = at + key.size() + 4;
        return std::stod(eval_report.substr(start, eval_report.find_first_of(",\n", start) - start));
    };
    expect << "proposed,1,0," << format_double(json_value("acc")) << ',' << format_double(json_value("prec")) << ','
           << format_double(json_value("rec")) << ',' << format_double(json_value("f1"));
    CHECK(row == expect.str());

    // Saved models are themselves reproducible.
    const auto model_a = read_text_file(model_path(ws.config("model")));
    auto again = ws.config("model2");
    again.plan.repetitions = 1;
    again.ratios = {1.0};
    cmd_train(again);
    CHECK(read_text_file(model_path(again)) == model_a);
}

TEST_CASE("a run config needs exactly one data source") {
    Workspace ws("source");
    RunConfig c;
    CHECK(error_of([&] { load_source(c); }) == ErrorCode::ConfigParse);
    c.scenario = ws.path("tiny.scenario");
    c.dataset = ws.path("x.csv");
    CHECK(error_of([&] { load_source(c); }) == ErrorCode::ConfigParse);
    c.dataset.clear();
    CHECK(load_source(c).n_samples() == 1200);
}

TEST_CASE("cli reports failures on one machine-readable line") {
    Workspace ws("errors");
    const auto err = ws.path("err.txt");
    auto first_line = [&] {
        auto text = read_text_file(err);
        CHECK(std::count(text.begin(), text.end(), '\n') == 1);
        return text.substr(0, text.find('\n'));
    };

    CHECK(run_cli("simulate --scenario " + ws.path("missing.scenario") + " --out " + ws.path("x.csv"), err) != 0);
    CHECK(first_line().rfind("error: FileNotFound: ", 0) == 0);

    write_text_file(ws.path("bad.json"), R"({"epochz": 1})");
    CHECK(run_cli("train --scenario " + ws.path("tiny.scenario") + " --config " + ws.path("bad.json") + " --out " +
                      ws.path("o"),
                  err) != 0);
    CHECK(first_line().rfind("error: ConfigParse: ", 0) == 0);

    CHECK(run_cli("sweep --scenario " + ws.path("tiny.scenario") + " --methods svm --out " + ws.path("o"), err) != 0);
    CHECK(first_line().rfind("error: ConfigParse: ", 0) == 0);

    CHECK(run_cli("simulate --scenario " + ws.path("tiny.scenario") + " --seed 3 --out " + ws.path("ok.csv"), err) == 0);
    CHECK(read_text_file(ws.path("ok.csv")).rfind("# icsdet seed=3 ", 0) == 0);
}
