// judgebias CLI: stages of the bias-evaluation pipeline as subcommands.
// Exit codes: 0 success, 1 runtime failure, 2 usage error.

#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "judgebias/commands.hpp"

namespace {

using judgebias::commands::MakeFixturesOptions;
using judgebias::config::RunConfig;

RunConfig load_run_config(const std::string& path, const std::string& output_dir_override) {
    RunConfig cfg = RunConfig::from_file(path);
    if (!output_dir_override.empty()) cfg.output_dir = output_dir_override;
    return cfg;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Bias evaluation and debiasing toolkit for LLM judges"};
    app.require_subcommand(1);

    std::string config_path;
    std::string output_dir_override;
    MakeFixturesOptions fx;
    std::vector<std::string> record_files;

    auto add_config_flag = [&](CLI::App* sub) {
        sub->add_option("-c,--config", config_path, "Run configuration (JSON)")->required();
        sub->add_option("-o,--output-dir", output_dir_override,
                        "Override the config's output directory");
    };

    auto* make_fixtures =
        app.add_subcommand("make-fixtures", "Generate the synthetic fixture corpus");
    make_fixtures->add_option("--out", fx.out_path, "Output JSONL path");
    make_fixtures->add_option("--count", fx.count, "Number of instances");
    make_fixtures->add_option("--seed", fx.seed, "Generator seed");
    make_fixtures->add_option("--marker-correlation", fx.marker_correlation,
                              "Probability of spurious style markers on the chosen response");

    auto* inject = app.add_subcommand("inject", "Sample base pairs and inject biases");
    add_config_flag(inject);
    auto* filter = app.add_subcommand("filter", "Consistency-filter injected instances");
    add_config_flag(filter);
    auto* evaluate = app.add_subcommand("evaluate", "Judge original and injected views");
    add_config_flag(evaluate);
    auto* report = app.add_subcommand("report", "Summarize records into the BSR table");
    add_config_flag(report);
    report->add_option("records", record_files, "Record files (default: all in output dir)");
    auto* augment = app.add_subcommand("augment", "Build bias-augmented preference data");
    add_config_flag(augment);
    auto* train_toy = app.add_subcommand("train-toy", "Train the toy scorer or policy");
    add_config_flag(train_toy);
    app.add_subcommand("gradcheck", "Check analytic gradients against finite differences");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (make_fixtures->parsed()) return judgebias::commands::cmd_make_fixtures(fx);
        if (app.got_subcommand("gradcheck"))
            return judgebias::commands::cmd_gradcheck(std::cout);

        RunConfig cfg = load_run_config(config_path, output_dir_override);
        if (inject->parsed()) return judgebias::commands::cmd_inject(cfg);
        if (filter->parsed()) return judgebias::commands::cmd_filter(cfg);
        if (evaluate->parsed()) return judgebias::commands::cmd_evaluate(cfg);
        if (report->parsed()) return judgebias::commands::cmd_report(cfg, record_files);
        if (augment->parsed()) return judgebias::commands::cmd_augment(cfg);
        if (train_toy->parsed()) return judgebias::commands::cmd_train_toy(cfg);
    } catch (const judgebias::config::UsageError& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 2;
}
