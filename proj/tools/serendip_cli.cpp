#include <CLI11.hpp>

#include <iostream>

#include "serendip/runner.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitError = 1;
constexpr int kExitConfig = 2;
constexpr int kExitTransport = 3;

int cmd_run(const std::string& config_path, const std::string& out_dir,
            bool offline, int parallelism) {
    try {
        const auto config = serendip::runner::RunConfig::load(config_path);
        const auto problems = serendip::runner::validate(config);
        if (!problems.empty()) {
            for (const auto& p : problems) std::cerr << "config error: " << p << "\n";
            return kExitConfig;
        }

        serendip::runner::RunOptions options;
        options.offline = offline;
        if (!out_dir.empty()) options.output_dir = out_dir;
        if (parallelism > 0) options.parallelism = parallelism;

        const auto result = serendip::runner::run(config, options);
        std::cout << result.report.to_table()
                  << "\nartifacts written to " << result.run_dir.string() << "\n";
        return kExitOk;
    } catch (const serendip::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const serendip::TransportError& e) {
        std::cerr << "transport error: " << e.what() << "\n";
        return kExitTransport;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitError;
    }
}

int cmd_validate(const std::string& config_path) {
    try {
        const auto config = serendip::runner::RunConfig::load(config_path);
        const auto problems = serendip::runner::validate(config);
        if (problems.empty()) {
            std::cout << "ok\n";
            return kExitOk;
        }
        for (const auto& p : problems) std::cout << "error: " << p << "\n";
        return kExitConfig;
    } catch (const serendip::ConfigError& e) {
        std::cout << "error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitError;
    }
}

int cmd_report(const std::string& report_path, const std::string& out_path) {
    try {
        const std::string table =
            serendip::runner::render_report_table(report_path);
        if (out_path.empty()) {
            std::cout << table;
        } else {
            std::ofstream out(out_path, std::ios::binary);
            if (!out) {
                std::cerr << "error: cannot write " << out_path << "\n";
                return kExitError;
            }
            out << table;
        }
        return kExitOk;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitError;
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Serendipity evaluation toolkit: proxy metrics, LLM raters, "
                 "ensembles, and their meta-evaluation against user ratings"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_dir;
    bool offline = false;
    int parallelism = 0;

    auto* run = app.add_subcommand("run", "Execute a configured experiment");
    run->add_option("--config", config_path, "Run configuration (JSON)")
        ->required();
    run->add_option("--out", out_dir, "Run directory (overrides output_dir)");
    run->add_flag("--offline", offline,
                  "Forbid network access; needs mocks or a warm cache");
    run->add_option("--parallelism", parallelism,
                    "Concurrent LLM requests (overrides config)");

    auto* validate = app.add_subcommand("validate",
                                        "Check a configuration without running");
    validate->add_option("--config", config_path, "Run configuration (JSON)")
        ->required();

    std::string report_path;
    std::string report_out;
    auto* report = app.add_subcommand("report",
                                      "Re-render the table from a report.json");
    report->add_option("--report", report_path, "Path to report.json")->required();
    report->add_option("--out", report_out, "Write the table here instead of stdout");

    CLI11_PARSE(app, argc, argv);

    if (run->parsed()) return cmd_run(config_path, out_dir, offline, parallelism);
    if (validate->parsed()) return cmd_validate(config_path);
    return cmd_report(report_path, report_out);
}
