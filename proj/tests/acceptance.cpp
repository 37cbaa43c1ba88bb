// Acceptance gate: one PASS/FAIL line per criterion, nonzero exit on any FAIL.

#include <fmt/core.h>

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <sys/wait.h>
#include <vector>

#include "hevopt/accounting.hpp"
#include "hevopt/commands.hpp"
#include "hevopt/dpopt.hpp"
#include "hevopt/dynamics.hpp"
#include "hevopt/ems.hpp"
#include "hevopt/errors.hpp"
#include "hevopt/powertrain.hpp"
#include "hevopt/scenario.hpp"
#include "support.hpp"

using namespace hevopt;
namespace fs = std::filesystem;

namespace {

const fs::path kRoot = HEVOPT_SOURCE_DIR;

struct Outcome {
    bool ok = true;
    std::string detail;

    void require(bool cond, const std::string& what)
    {
        if (!cond) {
            ok = false;
            detail += (detail.empty() ? "" : "; ") + what;
        }
    }
};

int failures = 0;

void criterion(int id, const char* title, double limit_s, const std::function<Outcome()>& body)
{
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
        o = body();
    } catch (const std::exception& e) {
        o.ok = false;
        o.detail = std::string("exception: ") + e.what();
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (secs > limit_s) {
        o.require(false, fmt::format("runtime {:.2f} s over {:.0f} s", secs, limit_s));
    }
    if (!o.ok) {
        ++failures;
    }
    fmt::print("{} {:2d} {} ({:.2f} s){}{}\n", o.ok ? "PASS" : "FAIL", id, title, secs, o.detail.empty() ? "" : ": ",
               o.detail);
    std::fflush(stdout);
}

cli::Setup shipped_setup(const std::string& file)
{
    return cli::build_setup(cli::load_scenario(kRoot / "scenarios" / file));
}

std::string slurp(const fs::path& p)
{
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

int run_cli(const std::string& args)
{
    const std::string cmd = std::string(HEVOPT_CLI) + " " + args + " 2>/dev/null";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

int main()
{
    criterion(1, "weighted channel totals", 1.0, [] {
        Outcome o;
        const auto a = accounting::channel_totals(274.90, 194.30);
        const auto b = accounting::channel_totals(274.90, 160.59);
        o.require(std::abs(a.weighted_total - 469.20) <= 0.01, fmt::format("total {:.4f}", a.weighted_total));
        o.require(std::abs(b.weighted_total - 435.49) <= 0.01, fmt::format("total {:.4f}", b.weighted_total));
        o.detail = o.ok ? fmt::format("{:.2f}, {:.2f} Wh/km", a.weighted_total, b.weighted_total) : o.detail;
        return o;
    });

    criterion(2, "calibration factor", 1.0, [] {
        Outcome o;
        const auto c = accounting::calibration_factor({223.75, 112.50, 14.04, 10.55}, {259.21, 96.96, 16.37, 10.55});
        o.require(std::abs(c.energy_delta_pct() - 15.85) <= 0.01, fmt::format("energy {:.4f} %", c.energy_delta_pct()));
        o.require(std::abs(c.power_delta_pct() - 16.60) <= 0.01, fmt::format("power {:.4f} %", c.power_delta_pct()));
        o.detail = o.ok ? fmt::format("+{:.2f} %, +{:.2f} %", c.energy_delta_pct(), c.power_delta_pct()) : o.detail;
        return o;
    });

    criterion(3, "charging efficiency", 1.0, [] {
        Outcome o;
        const double a = accounting::ac_from_dc(83.0, 0.83);
        const double b = accounting::ac_from_dc(161.27, 0.83);
        o.require(std::abs(a - 100.0) <= 1e-12, fmt::format("83 -> {:.15g}", a));
        o.require(std::abs(b - 194.30) <= 0.01, fmt::format("161.27 -> {:.4f}", b));
        o.detail = o.ok ? fmt::format("{:.2f}, {:.2f} Wh/km", a, b) : o.detail;
        return o;
    });

    criterion(4, "OBD constants and study", 10.0, [] {
        Outcome o;
        const auto setup = shipped_setup("obd_single_lap.ini");
        const double x0 = cli::load_scenario(kRoot / "scenarios" / "obd_single_lap.ini").dp_initial_soc;
        o.require(std::abs(setup.dp.obd_drain() - 0.0263) <= 1e-4, fmt::format("drain {:.6f} %", setup.dp.obd_drain()));

        const auto d = dpopt::build_demand(setup.cycle, setup.model, setup.calibration, setup.dp.dt, x0);
        auto zero = setup.dp;
        zero.obd_energy_kwh = 0.0;
        const auto z = dpopt::obd_study(d, zero, x0);
        o.require(z.increase_pct == 0.0, fmt::format("zero-penalty increase {:.6g} %", z.increase_pct));

        const auto st = dpopt::obd_study(d, setup.dp, x0);
        o.require(st.increase_pct > 0.0 && st.increase_pct < 5.0,
                  fmt::format("increase {:.2f} % ({} events), needs (0, 5)", st.increase_pct, st.events));
        if (o.ok) {
            o.detail = fmt::format("drain {:.4f} %, increase {:.2f} %", setup.dp.obd_drain(), st.increase_pct);
        }
        return o;
    });

    criterion(5, "DP against brute force, 50 instances", 60.0, [] {
        Outcome o;
        const auto cfg = support::default_dp();
        int used = 0;
        double worst = 0.0;
        std::vector<std::uint64_t> misses;
        for (std::uint64_t seed = 1; used < 50 && seed < 1000; ++seed) {
            const auto in = support::random_instance(seed);
            dpopt::BruteForceResult bf;
            try {
                bf = dpopt::brute_force(in.demand, cfg, in.initial_soc);
            } catch (const InfeasibleError&) {
                continue;
            }
            ++used;
            const auto tr = dpopt::rollout(dpopt::solve(in.demand, cfg, in.initial_soc), in.demand, cfg, in.initial_soc);
            const double err = bf.cost_kwh > 0.0 ? support::rel_diff(tr.fuel_kwh, bf.cost_kwh)
                                                 : (tr.fuel_kwh == 0.0 ? 0.0 : 1.0);
            worst = std::max(worst, err);
            if (err > 0.005) {
                misses.push_back(seed);
            }
        }
        o.require(used == 50, fmt::format("only {} feasible instances", used));
        for (auto s : misses) {
            o.require(false, fmt::format("seed {} off", s));
        }
        if (o.ok) {
            o.detail = fmt::format("worst relative error {:.2e}", worst);
        }
        return o;
    });

    criterion(6, "DP dominance over the rule on 10 CS scenarios", 60.0, [] {
        Outcome o;
        ems::VehicleModel model;
        const auto base = support::default_dp();
        // decision 2 is the rule's 20 kW point
        const auto rule_point = support::synthetic_genset().point_for_power(2400.0, 20.0);
        const double table_kw = base.decisions[2].delta_soc / 100.0 * base.capacity_kwh * 3600.0 / base.dt;
        o.require(std::abs(table_kw - rule_point.electrical_power) < 0.01 &&
                      std::abs(base.decisions[2].efficiency - rule_point.combined_efficiency) < 0.01,
                  fmt::format("decision 2 is {:.4f} kW at {:.4f} %, rule point {:.4f} kW at {:.4f} %", table_kw,
                              base.decisions[2].efficiency, rule_point.electrical_power,
                              rule_point.combined_efficiency));
        double worst = -1.0;
        for (std::uint64_t seed = 1; seed <= 10; ++seed) {
            const auto c = cycle::synthetic_cycle({seed, 22.55, {}});
            const auto d = dpopt::build_demand(c, model, 1.0, base.dt, 14.0);
            const auto rule = dpopt::rule_on_demand(d, base, 2, 14.0, 17.0, 14.0, 10.0);
            auto cfg = base;
            cfg.terminal = {dpopt::TerminalKind::at_least_level, std::min(14.0, rule.soc.back())};
            const auto dp = dpopt::rollout(dpopt::solve(d, cfg, 14.0), d, cfg, 14.0);
            const double ratio = dp.fuel_kwh / rule.fuel_kwh - 1.0;
            worst = std::max(worst, ratio);
            o.require(dp.fuel_kwh <= rule.fuel_kwh * 1.005,
                      fmt::format("seed {}: dp {:.4f} vs rule {:.4f} kWh", seed, dp.fuel_kwh, rule.fuel_kwh));
        }
        if (o.ok) {
            o.detail = fmt::format("largest dp/rule - 1 = {:+.2f} %", worst * 100.0);
        }
        return o;
    });

    criterion(7, "rule invariants on the shipped three-lap run", 30.0, [] {
        Outcome o;
        const auto setup = shipped_setup("three_lap.ini");
        const auto r = ems::simulate_rule_based(setup.cycle, setup.model, setup.rule, setup.calibration);
        const auto& tr = r.trace;
        int transitions = 0;
        double q = 0.0;
        for (std::size_t k = 1; k < tr.size(); ++k) {
            q = std::max(q, std::abs(tr[k].soc - tr[k - 1].soc));
            transitions += tr[k].mode != tr[k - 1].mode;
        }
        o.require(transitions == 1, fmt::format("{} mode transitions", transitions));
        const auto sw = ems::genset_transitions(tr);
        for (std::size_t i = 1; i < sw.size(); ++i) {
            o.require(sw[i] - sw[i - 1] >= 10.0 - 1e-9, fmt::format("gen-set switches at {} and {} s", sw[i - 1], sw[i]));
        }
        for (const auto& rec : tr) {
            if (rec.mode == ems::Mode::charge_sustaining && (rec.soc < 12.0 - q || rec.soc > 17.0 + q)) {
                o.require(false, fmt::format("CS SOC {:.4f} at {} s", rec.soc, rec.t));
                break;
            }
        }
        const double fin = r.energy.final_soc;
        o.require(fin > 14.0 && fin <= 17.0, fmt::format("rule final SOC {:.4f}", fin));

        const auto dp = cli::run_dp(setup, r);
        const double quantum = setup.dp.max_delta();
        const double dp_fin = dp.trajectory.soc.back();
        o.require(std::abs(dp_fin - 14.0) <= quantum, fmt::format("DP final SOC {:.4f}", dp_fin));
        if (o.ok) {
            o.detail = fmt::format("rule ends {:.2f} %, DP ends {:.2f} %, {} gen-set switches", fin, dp_fin, sw.size());
        }
        return o;
    });

    criterion(8, "physics suites", 30.0, [] {
        Outcome o;
        std::mt19937_64 rng(8);

        // kinetic energy audit on a lossless vehicle
        dynamics::VehicleParams lossless;
        lossless.crr = 0.0;
        lossless.cda = 0.0;
        lossless.inertia_factor = 1.0;
        std::uniform_real_distribution<double> accel(0.2, 1.5);
        for (int trial = 0; trial < 20; ++trial) {
            const double v1 = 2.0 + trial;
            const double a = accel(rng);
            std::vector<double> v;
            for (int i = 0; i <= 30; ++i) {
                v.push_back(v1 + a * i);
            }
            const auto w = dynamics::wheel_power_series(lossless, support::make_cycle(v), 2800.0);
            double kwh = 0.0;
            for (std::size_t i = 1; i < w.size(); ++i) {
                kwh += 0.5 * (w[i].kw + w[i - 1].kw) * (w[i].t - w[i - 1].t) / 3600.0;
            }
            const double ke = 0.5 * 2800.0 * (v.back() * v.back() - v.front() * v.front()) / 3.6e6;
            o.require(support::rel_diff(kwh, ke) <= 1e-3, fmt::format("audit trial {} off", trial));
        }

        // battery: ohmic loss and SOC integral symmetry
        powertrain::BatteryParams flat;
        std::uniform_real_distribution<double> amp(-150.0, 150.0);
        for (int trial = 0; trial < 100; ++trial) {
            std::vector<powertrain::CurrentSample> cur;
            std::vector<powertrain::CurrentSample> neg;
            double chem = 0.0;
            double term = 0.0;
            for (int k = 0; k <= 60; ++k) {
                const double a = amp(rng);
                cur.push_back({static_cast<double>(k), a});
                neg.push_back({static_cast<double>(k), -a});
                chem += powertrain::battery_power(flat, 50.0, a);
                term += powertrain::terminal_power(flat, 50.0, a);
            }
            o.require(chem - term >= 0.0, fmt::format("negative round-trip loss, profile {}", trial));
            const double up = powertrain::integrate_soc(flat, 50.0, cur).soc;
            const double back = powertrain::integrate_soc(flat, up, neg).soc;
            o.require(std::abs(back - 50.0) <= 1e-9, fmt::format("antisymmetry {:.3e}, profile {}", back - 50.0, trial));
        }

        // merged gen-set map and exact node lookup
        const auto eng = powertrain::synthetic_engine_map();
        const auto gen = powertrain::synthetic_generator_map();
        const auto merged = powertrain::merge_gen_set(eng, gen, 2.7);
        for (std::size_t i = 0; i < merged.speed_axis().size(); ++i) {
            for (std::size_t j = 0; j < merged.torque_axis().size(); ++j) {
                const double s = merged.speed_axis()[i];
                const double t = merged.torque_axis()[j];
                if (merged.feasible(i, j)) {
                    const double g = gen.lookup(s * 2.7, t / 2.7);
                    o.require(merged.node(i, j) <= std::min(eng.node(i, j), g) + 1e-12,
                              fmt::format("merged node ({}, {}) above a factor", s, t));
                    o.require(merged.lookup(s, t) == merged.node(i, j), fmt::format("lookup at node ({}, {})", s, t));
                }
                if (eng.feasible(i, j)) {
                    o.require(eng.lookup(s, t) == eng.node(i, j), fmt::format("engine lookup at ({}, {})", s, t));
                }
            }
        }
        return o;
    });

    criterion(9, "grid convergence on the shipped scenario", 60.0, [] {
        Outcome o;
        auto setup = shipped_setup("three_lap.ini");
        const auto rule = ems::simulate_rule_based(setup.cycle, setup.model, setup.rule, setup.calibration);
        std::vector<double> cost;
        for (double step : {0.02, 0.01, 0.005}) {
            setup.dp.grid_step = step;
            const auto run = cli::run_dp(setup, rule);
            cost.push_back(run.policy.cost_at(0, run.entry_soc));
        }
        const double d1 = std::abs(cost[1] - cost[0]);
        const double d2 = std::abs(cost[2] - cost[1]);
        o.require(d2 < d1, fmt::format("differences {:.6f} then {:.6f}", d1, d2));
        o.detail = fmt::format("J = {:.6f}, {:.6f}, {:.6f} kWh", cost[0], cost[1], cost[2]) + (o.ok ? "" : "; " + o.detail);
        return o;
    });

    criterion(10, "repeated CLI runs are byte-identical", 120.0, [] {
        Outcome o;
        const auto sc = kRoot / "scenarios";
        const std::vector<std::pair<std::string, std::string>> runs{
            {"analyze", "steady_analyze.ini"},       {"analyze", "three_lap.ini"},
            {"simulate --strategy rule", "three_lap.ini"}, {"simulate --strategy dp", "three_lap.ini"},
            {"compare", "three_lap.ini"},            {"obd", "obd_single_lap.ini"},
        };
        const auto base = fs::temp_directory_path() / "hevopt_acceptance_det";
        fs::remove_all(base);
        std::size_t files = 0;
        for (std::size_t i = 0; i < runs.size(); ++i) {
            const auto [cmd, ini] = runs[i];
            fs::path dirs[2];
            for (int rep = 0; rep < 2; ++rep) {
                dirs[rep] = base / fmt::format("{}_{}", i, rep);
                const int rc = run_cli(cmd + " --scenario " + (sc / ini).string() + " --out " + dirs[rep].string());
                o.require(rc == 0, fmt::format("'{}' on {} exited {}", cmd, ini, rc));
            }
            if (!fs::exists(dirs[0])) {
                continue;
            }
            for (const auto& e : fs::directory_iterator(dirs[0])) {
                const auto other = dirs[1] / e.path().filename();
                o.require(fs::exists(other) && slurp(e.path()) == slurp(other),
                          fmt::format("'{}' {} differs", cmd, e.path().filename().string()));
                ++files;
            }
        }
        fs::remove_all(base);
        if (o.ok) {
            o.detail = fmt::format("{} commands, {} files compared", runs.size(), files);
        }
        return o;
    });

    fmt::print("{} of 10 criteria failed\n", failures);
    return failures == 0 ? 0 : 1;
}
