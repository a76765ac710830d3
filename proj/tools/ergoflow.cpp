#include <cstdlib>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "ergoflow/runner.hpp"

namespace {

std::string fixture_dir()
{
    if (const char* d = std::getenv("ERGOFLOW_FIXTURES"); d && *d)
        return d;
    return ERGOFLOW_CONFIG_DIR;
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"ergoflow: polynomial ergodic averages of flows"};
    app.require_subcommand(1);

    std::string config;
    ergoflow::RunOptions opts;
    auto* run = app.add_subcommand("run", "run every plan of a config and write curves, reports and a manifest");
    run->add_option("config", config, "experiment config (JSON)")->required();
    run->add_option("--threads", opts.threads, "plans evaluated concurrently")->check(CLI::PositiveNumber);
    run->add_option("--out", opts.out_dir, "output directory");

    std::string oracle_config;
    auto* oracle = app.add_subcommand("oracle-compare", "compare a config against its registered oracle");
    oracle->add_option("config", oracle_config, "experiment config (JSON)")->required();

    auto* list = app.add_subcommand("list-fixtures", "list bundled configs");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : ergoflow::exit_config_error;
    }

    try {
        if (*run)
            return ergoflow::run(config, opts);
        if (*oracle)
            return ergoflow::oracle_compare(oracle_config);
        if (*list) {
            for (const auto& [name, desc] : ergoflow::list_fixtures(fixture_dir()))
                std::cout << name << (desc.empty() ? "" : "  " + desc) << "\n";
            return 0;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return ergoflow::exit_plan_error;
    }
    return 0;
}
