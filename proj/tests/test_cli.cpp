#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <sys/wait.h>

#include "hevopt/commands.hpp"
#include "hevopt/errors.hpp"
#include "hevopt/scenario.hpp"
#include "support.hpp"

using namespace hevopt;
using namespace hevopt::cli;
namespace fs = std::filesystem;

namespace {

const fs::path kRoot = HEVOPT_SOURCE_DIR;

Scenario parse(const std::string& text)
{
    std::istringstream in(text);
    return parse_scenario(in, kRoot / "scenarios");
}

fs::path scratch(const std::string& name)
{
    const auto p = fs::temp_directory_path() / ("hevopt_test_cli_" + name);
    fs::remove_all(p);
    return p;
}

std::string slurp(const fs::path& p)
{
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

int run(const std::string& args)
{
    const std::string cmd = std::string(HEVOPT_CLI) + " " + args + " 2>/dev/null";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

Scenario shipped(const std::string& file, const fs::path& out)
{
    auto s = load_scenario(kRoot / "scenarios" / file);
    s.out_dir = out;
    return s;
}

}  // namespace

TEST_CASE("scenario parsing")
{
    SUBCASE("defaults")
    {
        const auto s = parse("");
        CHECK(s.cycle_source == "synthetic");
        CHECK(s.laps == 1);
        CHECK_FALSE(s.uf.has_value());
        CHECK(s.dp.grid_step == 0.005);
        CHECK(s.out_dir == kRoot / "scenarios" / "out");
    }
    SUBCASE("values, comments and paths")
    {
        const auto s = parse("; note\n[cycle]\nsource = ../data/steady_20mps.csv\nlaps = 2\n"
                             "[battery]\nocv = 0:330, 100:360\n[dp]\nterminal = level:13.5\nobd = yes\n"
                             "deltas = 0.1, 0.2\n[accounting]\nuf = 0.25\n");
        CHECK(s.laps == 2);
        CHECK(s.resolve(s.cycle_source) == kRoot / "scenarios" / ".." / "data" / "steady_20mps.csv");
        CHECK(s.model.battery.ocv_curve.size() == 2);
        CHECK(s.model.battery.ocv(50.0) == doctest::Approx(345.0));
        CHECK(s.dp.terminal.kind == dpopt::TerminalKind::at_least_level);
        CHECK(s.dp.terminal.level == 13.5);
        CHECK(s.dp.obd_enabled);
        CHECK(s.dp_deltas == std::vector<double>{0.1, 0.2});
        CHECK(*s.uf == 0.25);
    }
    SUBCASE("rejections")
    {
        CHECK_THROWS_AS(parse("[nope]\nx = 1\n"), ValidationError);
        CHECK_THROWS_AS(parse("[cycle]\nlapz = 1\n"), ValidationError);
        CHECK_THROWS_AS(parse("[cycle]\nlaps = two\n"), ValidationError);
        CHECK_THROWS_AS(parse("[cycle]\nlaps = 1.5\n"), ValidationError);
        CHECK_THROWS_AS(parse("[dp]\nterminal = never\n"), ValidationError);
        CHECK_THROWS_AS(parse("[calibration]\nsource = metrics\n"), ValidationError);
        CHECK_THROWS_AS(parse("[cycle\n"), ParseError);
        CHECK_THROWS_AS(load_scenario(kRoot / "scenarios" / "missing.ini"), IoError);
    }
    SUBCASE("build_setup checks values")
    {
        CHECK_THROWS_AS(build_setup(parse("[accounting]\nuf = 1.5\n")), ValidationError);
        CHECK_THROWS_AS(build_setup(parse("[cycle]\nlaps = 0\n")), ValidationError);
        CHECK_THROWS_AS(build_setup(parse("[dp]\ngrid_step = 0.003\n")), DomainError);
    }
}

TEST_CASE("overrides")
{
    auto s = parse("");
    apply(s, {fs::path("/tmp/x"), 0.01, 7});
    CHECK(s.out_dir == "/tmp/x");
    CHECK(s.dp.grid_step == 0.01);
    CHECK(s.cycle_seed == 7);
}

TEST_CASE("analyze: steady cycle metrics and published calibration")
{
    const auto setup = build_setup(shipped("steady_analyze.ini", scratch("a")));
    const auto r = analyze(setup);
    CHECK(r.distance_km == doctest::Approx(2.0));
    CHECK(r.metrics.positive_propulsion_energy == doctest::Approx(118.67).epsilon(1e-4));
    CHECK(r.metrics.peak_power == doctest::Approx(8.544).epsilon(1e-4));
    CHECK(r.metrics.avg_positive_power == doctest::Approx(8.544).epsilon(1e-4));
    CHECK(r.metrics.percent_idle == 0.0);
    REQUIRE(r.calibration.has_value());
    CHECK(std::abs(r.calibration->energy_delta_pct() - 15.85) < 0.01);
    CHECK(std::abs(r.calibration->power_delta_pct() - 16.60) < 0.01);
}

TEST_CASE("analyze: zero-length cycle")
{
    const auto dir = scratch("zero");
    fs::create_directories(dir);
    std::ofstream(dir / "idle.csv") << "t_s,v_mps\n0,0\n10,0\n";
    std::ofstream(dir / "s.ini") << "[cycle]\nsource = idle.csv\n";
    CHECK_THROWS_AS(analyze(build_setup(load_scenario(dir / "s.ini"))), ValidationError);
    CHECK(run("analyze --scenario " + (dir / "s.ini").string()) == 2);
}

TEST_CASE("simulate")
{
    SUBCASE("rule, high initial SOC: no fuel")
    {
        auto s = parse("[rule]\ninitial_soc = 90\n");
        s.out_dir = scratch("rule_cd");
        const auto files = cmd_simulate(s, Strategy::rule);
        CHECK(files.size() == 3);
        const auto text = slurp(s.out_dir / "rule_energy.txt");
        CHECK(text.find("fuel_kwh = 0.000000") != std::string::npos);
        const auto plot = slurp(s.out_dir / "rule_plot.csv");
        CHECK(plot.rfind("t_s,v_mps,soc_pct\n", 0) == 0);
    }
    SUBCASE("dp on the shipped scenario")
    {
        const auto s = shipped("three_lap.ini", scratch("dp"));
        const auto setup = build_setup(s);
        const auto rule = ems::simulate_rule_based(setup.cycle, setup.model, setup.rule, setup.calibration);
        const auto run = run_dp(setup, rule);
        CHECK(support::rel_diff(run.trajectory.fuel_kwh, run.policy.cost_at(0, run.entry_soc)) < 0.005);
        CHECK(run.energy.fuel_kwh <= rule.energy.fuel_kwh * 1.005);
        CHECK(run.energy.cd_distance_km == rule.energy.cd_distance_km);
        const auto files = cmd_simulate(s, Strategy::dp);
        CHECK(files.size() == 4);
        CHECK(fs::exists(s.out_dir / "dp_trajectory.csv"));
    }
    SUBCASE("dp without a CS phase is infeasible")
    {
        auto s = parse("[rule]\ninitial_soc = 90\n");
        s.out_dir = scratch("dp_cd");
        CHECK_THROWS_AS(cmd_simulate(s, Strategy::dp), InfeasibleError);
    }
}

TEST_CASE("compare")
{
    SUBCASE("identical strategies give identical rows")
    {
        ems::EnergyResult e;
        e.ec_cd_dc = 170.0;
        e.ec_cs_fuel = 590.0;
        const auto r = make_compare(e, e, 0.6, 0.83);
        CHECK(accounting::uf_csv_row("x", r.rule) == accounting::uf_csv_row("x", r.dp));
    }
    SUBCASE("uf = 0 leaves the CS channel only")
    {
        ems::EnergyResult rule;
        rule.ec_cd_dc = 170.0;
        rule.ec_cs_fuel = 590.0;
        ems::EnergyResult dp = rule;
        dp.ec_cs_fuel = 390.0;
        const auto r = make_compare(rule, dp, 0.0, 0.83);
        CHECK(r.rule.weighted_total == 590.0);
        CHECK(r.dp.weighted_total == 390.0);
    }
    SUBCASE("shipped scenario report adds up")
    {
        const auto s = shipped("three_lap.ini", scratch("cmp"));
        cmd_compare(s);
        std::istringstream csv(slurp(s.out_dir / "compare.csv"));
        std::string line;
        std::getline(csv, line);
        CHECK(line == accounting::uf_csv_header());
        int rows = 0;
        while (std::getline(csv, line)) {
            std::vector<double> v;
            std::stringstream ss(line.substr(line.find(',') + 1));
            for (std::string f; std::getline(ss, f, ',');) {
                v.push_back(std::stod(f));
            }
            REQUIRE(v.size() == 6);
            CHECK(std::abs(v[5] - (v[3] + v[4])) < 2e-4);
            ++rows;
        }
        CHECK(rows == 2);
    }
    SUBCASE("needs a utility factor")
    {
        auto s = shipped("three_lap.ini", scratch("cmp_nouf"));
        s.uf.reset();
        CHECK_THROWS_AS(cmd_compare(s), ValidationError);
    }
}

TEST_CASE("obd")
{
    SUBCASE("zero event energy: no increase")
    {
        auto s = shipped("obd_single_lap.ini", scratch("obd0"));
        s.dp.obd_energy_kwh = 0.0;
        cmd_obd(s);
        const auto text = slurp(s.out_dir / "obd_report.txt");
        CHECK(text.find("increase_pct = 0.0000\n") != std::string::npos);
    }
    SUBCASE("published constants")
    {
        const auto s = shipped("obd_single_lap.ini", scratch("obd"));
        const auto files = cmd_obd(s);
        CHECK(files.size() == 2);
        const auto text = slurp(s.out_dir / "obd_report.txt");
        CHECK(text.find("soc_drain_per_event_pct = 0.026296") != std::string::npos);
        CHECK(slurp(s.out_dir / "obd_plot.csv").rfind("t_s,v_mps,soc_without_pct,soc_with_pct\n", 0) == 0);
    }
}

TEST_CASE("command line exit codes")
{
    const auto sc = kRoot / "scenarios";
    const auto out = scratch("exit");
    CHECK(run("analyze --scenario " + (sc / "steady_analyze.ini").string() + " --out " + out.string()) == 0);
    CHECK(fs::exists(out / "analyze.txt"));
    CHECK(run("analyze --scenario " + (sc / "nope.ini").string()) == 4);
    CHECK(run("simulate --scenario " + (sc / "three_lap.ini").string() + " --strategy bogus") == 2);
    CHECK(run("frobnicate") == 2);
    CHECK(run("") == 2);

    const auto dir = scratch("exit_bad");
    fs::create_directories(dir);
    std::ofstream(dir / "bad.ini") << "[cycle]\nlapz = 3\n";
    CHECK(run("analyze --scenario " + (dir / "bad.ini").string()) == 2);

    // one lap from the default 90 % never reaches CS
    CHECK(run("simulate --strategy dp --scenario " + (sc / "obd_single_lap.ini").string() + " --out " +
              (dir / "o").string()) == 3);

    // output directory below a regular file
    std::ofstream(dir / "file") << "x";
    CHECK(run("analyze --scenario " + (sc / "steady_analyze.ini").string() + " --out " + (dir / "file" / "x").string()) ==
          4);
}
