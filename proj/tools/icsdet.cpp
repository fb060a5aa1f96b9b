#include <cstdio>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "icsdet/commands.hpp"
#include "icsdet/error.hpp"

namespace {

using namespace icsdet;

struct Flags {
    std::uint64_t seed = 0;
    bool seed_set = false;
    std::string config_file;
    std::string fusion_mode;
    std::size_t branches = 0;
    bool partition_attacks = false;
    std::vector<double> ratios;
    std::vector<std::string> methods;
    std::size_t epochs = 0;
    std::size_t repetitions = 0;
    std::size_t kfold = 0;
    std::string drop_columns;
};

void add_data_options(CLI::App* cmd, RunConfig& cfg, Flags& f) {
    cmd->add_option("--dataset", cfg.dataset, "ARFF or delimited dataset file");
    cmd->add_option("--scenario", cfg.scenario, "simulator scenario file");
    cmd->add_option("--label-column", cfg.ingest.label_column, "label attribute name");
    cmd->add_option("--positive-label", cfg.ingest.positive_label, "label value treated as attack");
    cmd->add_option("--drop-columns", f.drop_columns, "comma-separated attributes to ignore");
    cmd->add_flag("--drop-missing", cfg.ingest.drop_missing, "drop rows with missing values");
    cmd->add_option("--seed", f.seed, "master seed")->each([&f](const std::string&) { f.seed_set = true; });
    cmd->add_option("--config", f.config_file, "JSON pipeline config");
    cmd->add_option("--out", cfg.out, "output directory");
}

void add_pipeline_options(CLI::App* cmd, RunConfig& cfg, Flags& f) {
    cmd->add_option("--fusion-mode", f.fusion_mode, "hidden | hidden_plus_prob | prob_only");
    cmd->add_option("--branches", f.branches, "number of ensemble branches");
    cmd->add_flag("--partition-attacks", f.partition_attacks, "give each branch a disjoint attack share");
    cmd->add_option("--epochs", f.epochs, "training epochs");
    cmd->add_option("--ratios", f.ratios, "comma-separated imbalance ratios")->delimiter(',');
    cmd->add_option("--repetitions", f.repetitions, "repeated stratified splits");
    cmd->add_option("--kfold", f.kfold, "use k-fold splits instead of repeated splits");
    cmd->add_option("--threads", cfg.threads, "parallel experiment cells");
    cmd->add_option("--model", cfg.model, "model file");
}

void finish(RunConfig& cfg, const Flags& f) {
    if (!f.config_file.empty()) cfg.pipeline = config_from_json(read_text_file(f.config_file), cfg.pipeline);
    if (f.seed_set) cfg.pipeline.seed = f.seed;
    if (!f.fusion_mode.empty()) cfg.pipeline.fusion_mode = parse_fusion_mode(f.fusion_mode);
    if (f.branches != 0) cfg.pipeline.branches = f.branches;
    if (f.partition_attacks) cfg.pipeline.partition_attacks = true;
    if (f.epochs != 0) cfg.pipeline.epochs = f.epochs;
    if (!f.ratios.empty()) cfg.ratios = f.ratios;
    if (!f.methods.empty()) {
        cfg.methods.clear();
        for (const auto& m : f.methods) cfg.methods.push_back(parse_method(m));
    }
    if (f.repetitions != 0) cfg.plan.repetitions = f.repetitions;
    if (f.kfold != 0) cfg.plan.kfold = f.kfold;
    cfg.plan.seed = cfg.pipeline.seed;
    std::string rest = f.drop_columns;
    while (!rest.empty()) {
        const auto comma = rest.find(',');
        cfg.ingest.drop_columns.push_back(rest.substr(0, comma));
        rest = comma == std::string::npos ? "" : rest.substr(comma + 1);
    }
    validate(cfg.pipeline);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"icsdet: ensemble attack detection for ICS telemetry"};
    app.require_subcommand(1);

    SimulateArgs sim;
    std::uint64_t sim_seed = 0, sim_horizon = 0;
    auto* simulate = app.add_subcommand("simulate", "generate a labelled dataset from a scenario file");
    simulate->add_option("--scenario", sim.scenario, "scenario file")->required();
    auto* seed_opt = simulate->add_option("--seed", sim_seed, "override the scenario seed");
    auto* horizon_opt = simulate->add_option("--horizon", sim_horizon, "override the scenario horizon");
    simulate->add_option("--out", sim.out, "output CSV path")->required();

    RunConfig cfg;
    Flags flags;
    auto* ingest = app.add_subcommand("ingest", "load a dataset and export it as CSV with a summary");
    add_data_options(ingest, cfg, flags);

    std::vector<CLI::App*> run_cmds;
    for (auto [name, help] : {std::pair{"train", "train the ensemble pipeline and save the model"},
                              std::pair{"eval", "score a saved model on the held-out split"},
                              std::pair{"sweep", "imbalance-ratio sweep tables, one per metric"},
                              std::pair{"compare", "method comparison table at one ratio"}}) {
        auto* cmd = app.add_subcommand(name, help);
        add_data_options(cmd, cfg, flags);
        add_pipeline_options(cmd, cfg, flags);
        if (std::string(name) == "sweep" || std::string(name) == "compare") {
            cmd->add_option("--methods", flags.methods, "proposed,dt,rf,adaboost,dnn")->delimiter(',');
        }
        run_cmds.push_back(cmd);
    }

    CLI11_PARSE(app, argc, argv);

    try {
        std::vector<std::string> written;
        if (simulate->parsed()) {
            if (seed_opt->count() > 0) sim.seed = sim_seed;
            if (horizon_opt->count() > 0) sim.horizon = sim_horizon;
            written = cmd_simulate(sim);
        } else {
            finish(cfg, flags);
            if (ingest->parsed()) written = cmd_ingest(cfg);
            else if (run_cmds[0]->parsed()) written = cmd_train(cfg);
            else if (run_cmds[1]->parsed()) written = cmd_eval(cfg);
            else if (run_cmds[2]->parsed()) written = cmd_sweep(cfg);
            else written = cmd_compare(cfg);
        }
        for (const auto& path : written) std::cout << path << '\n';
    } catch (const Error& e) {
        std::fprintf(stderr, "error: %s: %s\n", std::string(error_code_name(e.code())).c_str(), e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: Io: %s\n", e.what());
        return 2;
    }
    return 0;
}
