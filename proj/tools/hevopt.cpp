#include <cstdio>
#include <exception>
#include <string>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "hevopt/commands.hpp"
#include "hevopt/errors.hpp"
#include "hevopt/scenario.hpp"

namespace cli = hevopt::cli;

namespace {

enum Exit { ok = 0, validation = 2, infeasible = 3, io = 4 };

int report(int code, const std::exception& e)
{
    fmt::print(stderr, "hevopt: {}\n", e.what());
    return code;
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Plug-in series hybrid energy analysis and CS optimization"};
    app.require_subcommand(1);

    std::string scenario_path;
    cli::Overrides overrides;
    std::string out_dir;
    double grid_step = 0.0;
    std::uint64_t seed = 0;
    std::string strategy = "rule";

    auto common = [&](CLI::App* sub) {
        sub->add_option("--scenario", scenario_path, "scenario file")->required();
        sub->add_option("--out", out_dir, "output directory (overrides [output] dir)");
        sub->add_option("--grid-step", grid_step, "DP SOC grid step, %")->check(CLI::PositiveNumber);
        sub->add_option("--seed", seed, "seed for the randomized synthetic cycle");
    };

    auto* analyze = app.add_subcommand("analyze", "wheel-power metrics of the scenario cycle");
    auto* simulate = app.add_subcommand("simulate", "run the rule strategy or the DP on the CS phase");
    auto* compare = app.add_subcommand("compare", "UF-weighted report for both strategies");
    auto* obd = app.add_subcommand("obd", "DP with and without on-board diagnostic events");
    for (auto* sub : {analyze, simulate, compare, obd}) {
        common(sub);
    }
    simulate->add_option("--strategy", strategy, "rule or dp")
        ->check(CLI::IsMember({"rule", "dp"}));

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? Exit::ok : Exit::validation;
    }

    auto given = [](const CLI::App* sub, const char* name) { return sub && sub->count(name) > 0; };
    CLI::App* active = app.get_subcommands().front();
    if (given(active, "--out")) {
        overrides.out_dir = out_dir;
    }
    if (given(active, "--grid-step")) {
        overrides.grid_step = grid_step;
    }
    if (given(active, "--seed")) {
        overrides.seed = seed;
    }

    try {
        auto s = cli::load_scenario(scenario_path);
        cli::apply(s, overrides);
        std::vector<std::filesystem::path> written;
        if (active == analyze) {
            written = cli::cmd_analyze(s);
        } else if (active == simulate) {
            written = cli::cmd_simulate(s, strategy == "dp" ? cli::Strategy::dp : cli::Strategy::rule);
        } else if (active == compare) {
            written = cli::cmd_compare(s);
        } else {
            written = cli::cmd_obd(s);
        }
        for (const auto& p : written) {
            fmt::print(stderr, "wrote {}\n", p.string());
        }
        return Exit::ok;
    } catch (const hevopt::InfeasibleError& e) {
        return report(Exit::infeasible, e);
    } catch (const hevopt::EnvelopeError& e) {
        return report(Exit::infeasible, e);
    } catch (const hevopt::InfeasibleRegionError& e) {
        return report(Exit::infeasible, e);
    } catch (const hevopt::IoError& e) {
        return report(Exit::io, e);
    } catch (const hevopt::Error& e) {
        return report(Exit::validation, e);
    } catch (const std::filesystem::filesystem_error& e) {
        return report(Exit::io, e);
    } catch (const std::exception& e) {
        return report(Exit::validation, e);
    }
}
