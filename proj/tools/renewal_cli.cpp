#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "acceptance.hpp"
#include "renewal/harness.hpp"

namespace {

int run_suite(const std::string& suite, std::optional<std::uint64_t> seed, int jobs) {
    acceptance::SuiteOptions options;
    if (seed) options.seed = *seed;
    options.jobs = jobs;
    const auto results =
        suite == "acceptance" ? acceptance::run_acceptance(options) : acceptance::run_invariants(options);
    int failed = 0;
    for (const auto& r : results) {
        std::cout << acceptance::format_line(r) << '\n';
        if (!r.passed) ++failed;
    }
    std::cout << (results.size() - static_cast<std::size_t>(failed)) << "/" << results.size() << " " << suite
              << " checks passed\n";
    return failed == 0 ? 0 : 2;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Drift-plus-penalty simulators for renewal systems, with LP benchmarks"};
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::string out_dir;
    std::string format;
    int jobs = 0;
    std::string suite;
    app.add_option("--config", config_path, "Experiment config (JSON)")->check(CLI::ExistingFile);
    app.add_option("--seed", seed, "Override the master seed");
    app.add_option("--out", out_dir, "Output directory (overrides the config)");
    app.add_option("--format", format, "Output format")->check(CLI::IsMember({"csv", "json"}));
    app.add_option("--jobs", jobs, "Replication workers (1 = serial, 0 = all cores)")->check(CLI::NonNegativeNumber);
    app.add_option("--suite", suite, "Run a built-in suite instead of a config")
        ->check(CLI::IsMember({"acceptance", "invariants"}));
    CLI11_PARSE(app, argc, argv);

    try {
        if (!suite.empty()) return run_suite(suite, seed, jobs);
        if (config_path.empty()) {
            std::cerr << "error: either --config or --suite is required\n" << app.help();
            return 1;
        }
        renewal::ExperimentConfig cfg = renewal::load_config(config_path);
        if (seed) cfg.seed = *seed;
        if (!out_dir.empty()) cfg.output = out_dir;
        if (!format.empty()) cfg.format = renewal::parse_format(format);
        renewal::RunOptions options;
        options.jobs = jobs;
        const renewal::RunSummary summary = renewal::run_experiment(cfg, options);
        std::cout << renewal::to_csv(summary.summary_table());
        if (summary.oracle) std::cout << "# oracle: " << summary.oracle_label << " = " << *summary.oracle << '\n';
        std::cout << "# " << summary.runs.size() << " runs in " << summary.wall_seconds << " s";
        if (!cfg.output.empty()) std::cout << "; outputs in " << cfg.output;
        std::cout << '\n';
        return 0;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}
