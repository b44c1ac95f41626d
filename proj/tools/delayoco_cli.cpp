#include "delayoco/commands.hpp"

#include "CLI11.hpp"

#include <iostream>

using namespace delayoco;

int main(int argc, char **argv) {
    CLI::App app{"delayoco: online convex optimization with delayed feedback"};
    app.require_subcommand(1);

    std::string config_path;
    std::uint64_t seed = 0;
    std::string out;
    int threads = 0;
    bool audit = false, svg = false;
    std::vector<std::string> inputs;

    auto common = [&](CLI::App *sub) {
        sub->add_option("--config", config_path, "experiment config (YAML)")
            ->check(CLI::ExistingFile);
        sub->add_option("--seed", seed, "override the config seed");
        sub->add_option("--out", out, "output directory");
        sub->add_option("--threads", threads, "worker threads")->check(CLI::PositiveNumber);
        sub->add_flag("--audit", audit, "online-vs-offline dual checks");
        sub->add_flag("--svg", svg, "also write SVG charts");
    };
    auto *verify = app.add_subcommand("verify", "identity and invariant suites");
    auto *run = app.add_subcommand("run", "single episode");
    auto *sweep = app.add_subcommand("sweep", "regret over a T grid and seeds");
    auto *report = app.add_subcommand("report", "plot data from sweep tables");
    for (auto *s : {verify, run, sweep, report})
        common(s);
    report->add_option("inputs", inputs, "table_*.csv or plot-data CSVs")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp &e) {
        return app.exit(e);
    } catch (const CLI::ParseError &e) {
        app.exit(e);
        return commands::ConfigError;
    }

    commands::Options opt;
    auto set = [&](CLI::App *sub) {
        if (sub->count("--seed"))
            opt.seed = seed;
        if (sub->count("--out"))
            opt.out = out;
        if (sub->count("--threads"))
            opt.threads = threads;
        opt.audit = audit;
        opt.svg = svg;
    };

    try {
        if (*report) {
            set(report);
            return commands::cmd_report(inputs, opt, std::cout);
        }
        CLI::App *sub = *verify ? verify : *run ? run : sweep;
        set(sub);
        config::ExperimentConfig cfg =
            config_path.empty() ? config::default_config() : config::load_config(config_path);
        if (*verify)
            return commands::cmd_verify(cfg, opt, std::cout);
        if (*run)
            return commands::cmd_run(cfg, opt, std::cout);
        return commands::cmd_sweep(cfg, opt, std::cout);
    } catch (const ValidationError &e) {
        std::cerr << "error: " << e.what() << '\n';
        return commands::ConfigError;
    } catch (const CheckFailure &e) {
        std::cerr << "check failed: " << e.what() << '\n';
        return commands::CheckFailed;
    } catch (const std::exception &e) {
        std::cerr << "error: " << e.what() << '\n';
        return commands::CheckFailed;
    }
}
