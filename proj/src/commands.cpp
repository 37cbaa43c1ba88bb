#include "hevopt/commands.hpp"

#include <cmath>
#include <algorithm>
#include <fstream>
#include <sstream>

#include <fmt/format.h>

#include "hevopt/dynamics.hpp"
#include "hevopt/errors.hpp"

namespace hevopt::cli {

namespace fs = std::filesystem;

namespace {

class Writer {
public:
    explicit Writer(fs::path dir) : dir_(std::move(dir))
    {
        std::error_code ec;
        fs::create_directories(dir_, ec);
        if (ec) {
            throw IoError(fmt::format("cannot create output directory {}: {}", dir_.string(), ec.message()));
        }
    }

    void put(const std::string& name, const std::string& body)
    {
        const fs::path path = dir_ / name;
        std::ofstream out(path, std::ios::binary);
        out << body;
        out.close();
        if (!out) {
            throw IoError(fmt::format("cannot write {}", path.string()));
        }
        written_.push_back(path);
    }

    std::vector<fs::path> written() const { return written_; }

private:
    fs::path dir_;
    std::vector<fs::path> written_;
};

std::string energy_text(const std::string& label, const ems::EnergyResult& e)
{
    std::string s = fmt::format("[{}]\n", label);
    s += fmt::format("cd_distance_km = {:.4f}\n", e.cd_distance_km);
    s += fmt::format("cs_distance_km = {:.4f}\n", e.cs_distance_km);
    s += fmt::format("cs_entry_time_s = {:.1f}\n", e.cs_entry_time);
    s += fmt::format("ec_cd_dc_wh_per_km = {:.4f}\n", e.ec_cd_dc);
    s += fmt::format("ec_cs_fuel_wh_per_km = {:.4f}\n", e.ec_cs_fuel);
    s += fmt::format("cd_dc_kwh = {:.6f}\n", e.cd_dc_kwh);
    s += fmt::format("fuel_kwh = {:.6f}\n", e.fuel_kwh);
    s += fmt::format("final_soc_pct = {:.4f}\n", e.final_soc);
    return s;
}

std::string uf_text(const std::string& label, const accounting::UfReport& r)
{
    std::ostringstream out;
    accounting::write_uf_report(out, label, r);
    return out.str();
}

void check_rule_trace(const ems::SimTrace& trace)
{
    for (const auto& r : trace) {
        if (!(r.soc >= 0.0 && r.soc <= 100.0)) {
            throw ValidationError(fmt::format("rule trace SOC {:.4f}% outside [0, 100] at t = {:.1f} s", r.soc, r.t));
        }
    }
}

void check_dp_trajectory(const dpopt::Trajectory& tr, const dpopt::DpConfig& cfg)
{
    for (double soc : tr.soc) {
        if (soc < cfg.soc_min - cfg.grid_step || soc > cfg.soc_max + cfg.grid_step) {
            throw ValidationError(fmt::format("DP trajectory SOC {:.4f}% outside [{}, {}] by more than the grid step",
                                              soc, cfg.soc_min, cfg.soc_max));
        }
    }
}

// Speed at time t by linear interpolation of the cycle.
double speed_at(const cycle::DriveCycle& c, double t)
{
    const auto s = c.samples();
    if (t <= s.front().t) {
        return s.front().v;
    }
    if (t >= s.back().t) {
        return s.back().v;
    }
    const auto it = std::upper_bound(s.begin(), s.end(), t, [](double x, const cycle::Sample& p) { return x < p.t; });
    const auto& b = *it;
    const auto& a = *(it - 1);
    return a.v + (b.v - a.v) * (t - a.t) / (b.t - a.t);
}

std::string dp_plot(const Setup& setup, const ems::SimResult& rule, const DpRun& run)
{
    std::string s = "t_s,v_mps,soc_pct\n";
    for (const auto& r : rule.trace) {
        if (r.t >= run.entry_time) {
            break;
        }
        s += fmt::format("{:.3f},{:.4f},{:.6f}\n", r.t, r.v, r.soc);
    }
    for (std::size_t k = 0; k < run.trajectory.soc.size(); ++k) {
        const double t = std::min(run.entry_time + static_cast<double>(k) * run.demand.dt, setup.cycle.duration());
        s += fmt::format("{:.3f},{:.4f},{:.6f}\n", t, speed_at(setup.cycle, t), run.trajectory.soc[k]);
    }
    return s;
}

std::string rule_plot(const ems::SimResult& rule)
{
    std::string s = "t_s,v_mps,soc_pct\n";
    for (const auto& r : rule.trace) {
        s += fmt::format("{:.3f},{:.4f},{:.6f}\n", r.t, r.v, r.soc);
    }
    return s;
}

std::string trajectory_csv(const DpRun& run)
{
    std::string s = "k,t_s,soc_pct,decision_label\n";
    const auto& tr = run.trajectory;
    for (std::size_t k = 0; k < tr.soc.size(); ++k) {
        const std::string label =
            k < tr.decisions.size() ? run.config.decisions[static_cast<std::size_t>(tr.decisions[k])].label : "";
        s += fmt::format("{},{:.3f},{:.6f},{}\n", k, run.entry_time + static_cast<double>(k) * run.demand.dt, tr.soc[k],
                         label);
    }
    return s;
}

double require_uf(const Scenario& s)
{
    if (!s.uf) {
        throw ValidationError("accounting.uf is required for this command");
    }
    return *s.uf;
}

}  // namespace

void apply(Scenario& s, const Overrides& o)
{
    if (o.out_dir) {
        s.out_dir = *o.out_dir;
    }
    if (o.grid_step) {
        s.dp.grid_step = *o.grid_step;
    }
    if (o.seed) {
        s.cycle_seed = *o.seed;
    }
}

AnalyzeReport analyze(const Setup& setup)
{
    const auto& c = setup.cycle;
    if (c.distance_km() <= 0.0) {
        throw ValidationError(fmt::format("cycle '{}' covers no distance", c.name()));
    }
    const auto& vp = setup.model.vehicle;
    auto power = dynamics::wheel_power_series(vp, c, vp.test_mass);
    for (auto& p : power) {
        p.kw *= setup.calibration;
    }
    std::vector<double> speeds;
    speeds.reserve(c.size());
    for (const auto& smp : c.samples()) {
        speeds.push_back(smp.v);
    }
    AnalyzeReport r;
    r.cycle_name = c.name();
    r.distance_km = c.distance_km();
    r.duration_s = c.duration();
    r.metrics = cycle::compute_metrics(power, speeds, c.distance_km(), vp.idle_speed);
    r.calibration = setup.calibration_report;
    return r;
}

DpRun run_dp(const Setup& setup, const ems::SimResult& rule)
{
    const auto& e = rule.energy;
    if (e.cs_entry_time < 0.0) {
        throw InfeasibleError("the rule run never enters charge sustaining; there is no CS phase to optimize");
    }
    double entry_soc = rule.trace.front().soc;
    for (const auto& r : rule.trace) {
        if (r.t > e.cs_entry_time + 1e-9) {
            break;
        }
        entry_soc = r.soc;
    }
    const auto cs = cycle::slice_cycle(setup.cycle, e.cs_entry_time, setup.cycle.duration());
    if (cs.duration() < setup.dp.dt) {
        throw InfeasibleError(fmt::format("CS phase lasts {:.1f} s, shorter than one decision interval", cs.duration()));
    }
    auto demand = dpopt::build_demand(cs, setup.model, setup.calibration, setup.dp.dt, entry_soc);
    auto policy = dpopt::solve(demand, setup.dp, entry_soc);
    auto traj = dpopt::rollout(policy, demand, setup.dp, entry_soc);
    check_dp_trajectory(traj, setup.dp);

    ems::EnergyResult energy = e;
    energy.cs_distance_km = demand.distance_km;
    energy.fuel_kwh = traj.fuel_kwh;
    energy.ec_cs_fuel = traj.cs_ec;
    energy.final_soc = traj.soc.back();
    return DpRun{e.cs_entry_time, entry_soc, std::move(demand), setup.dp, std::move(policy), std::move(traj), energy};
}

CompareReport make_compare(const ems::EnergyResult& rule, const ems::EnergyResult& dp, double uf,
                           double charging_efficiency)
{
    CompareReport r;
    r.rule_energy = rule;
    r.dp_energy = dp;
    r.rule = accounting::make_uf_report_dc(rule.ec_cd_dc, rule.ec_cs_fuel, uf, charging_efficiency);
    r.dp = accounting::make_uf_report_dc(dp.ec_cd_dc, dp.ec_cs_fuel, uf, charging_efficiency);
    return r;
}

std::vector<fs::path> cmd_analyze(const Scenario& s)
{
    const Setup setup = build_setup(s);
    const auto r = analyze(setup);

    std::string text = "[cycle]\n";
    text += fmt::format("name = {}\n", r.cycle_name);
    text += fmt::format("distance_km = {:.4f}\n", r.distance_km);
    text += fmt::format("duration_s = {:.1f}\n", r.duration_s);
    text += fmt::format("calibration_applied = {:.6f}\n", setup.calibration);
    text += "[metrics]\n";
    text += fmt::format("positive_propulsion_energy_wh_per_km = {:.2f}\n", r.metrics.positive_propulsion_energy);
    text += fmt::format("peak_power_kw = {:.3f}\n", r.metrics.peak_power);
    text += fmt::format("avg_positive_power_kw = {:.3f}\n", r.metrics.avg_positive_power);
    text += fmt::format("percent_idle = {:.2f}\n", r.metrics.percent_idle);
    if (r.calibration) {
        std::ostringstream out;
        accounting::write_calibration(out, *r.calibration);
        text += out.str();
    }

    const auto& vp = setup.model.vehicle;
    std::string csv = "t_s,v_mps,p_wheel_kw\n";
    const auto power = dynamics::wheel_power_series(vp, setup.cycle, vp.test_mass);
    for (std::size_t k = 0; k < power.size(); ++k) {
        csv += fmt::format("{:.3f},{:.4f},{:.6f}\n", power[k].t, setup.cycle[k].v, power[k].kw * setup.calibration);
    }

    Writer w(s.out_dir);
    w.put("analyze.txt", text);
    w.put("wheel_power.csv", csv);
    return w.written();
}

std::vector<fs::path> cmd_simulate(const Scenario& s, Strategy strategy)
{
    const Setup setup = build_setup(s);
    const auto rule = ems::simulate_rule_based(setup.cycle, setup.model, setup.rule, setup.calibration);
    check_rule_trace(rule.trace);
    Writer w(s.out_dir);
    if (strategy == Strategy::rule) {
        std::ostringstream trace;
        ems::write_trace(trace, rule.trace);
        w.put("rule_trace.csv", trace.str());
        w.put("rule_energy.txt", energy_text("rule", rule.energy));
        w.put("rule_plot.csv", rule_plot(rule));
        return w.written();
    }
    const DpRun run = run_dp(setup, rule);
    std::ostringstream policy;
    dpopt::write_policy(policy, run.policy, run.config);
    std::string energy = energy_text("dp", run.energy);
    energy += fmt::format("cs_entry_soc_pct = {:.4f}\n", run.entry_soc);
    energy += fmt::format("optimal_cost_kwh = {:.6f}\n", run.policy.cost_at(0, run.entry_soc));
    energy += fmt::format("genset_intervals = {}\n", run.trajectory.genset_intervals);
    w.put("dp_trajectory.csv", trajectory_csv(run));
    w.put("dp_policy.csv", policy.str());
    w.put("dp_energy.txt", energy);
    w.put("dp_plot.csv", dp_plot(setup, rule, run));
    return w.written();
}

std::vector<fs::path> cmd_compare(const Scenario& s)
{
    const double uf = require_uf(s);
    const Setup setup = build_setup(s);
    const auto rule = ems::simulate_rule_based(setup.cycle, setup.model, setup.rule, setup.calibration);
    check_rule_trace(rule.trace);
    const DpRun run = run_dp(setup, rule);
    const auto r = make_compare(rule.energy, run.energy, uf, s.charging_efficiency);

    std::string text = fmt::format("charging_efficiency = {:.4f}\n", s.charging_efficiency);
    text += energy_text("rule.energy", r.rule_energy);
    text += energy_text("dp.energy", r.dp_energy);
    text += uf_text("rule.uf", r.rule);
    text += uf_text("dp.uf", r.dp);
    const std::string csv = accounting::uf_csv_header() + "\n" + accounting::uf_csv_row("rule", r.rule) + "\n" +
                            accounting::uf_csv_row("dp", r.dp) + "\n";

    Writer w(s.out_dir);
    w.put("compare.txt", text);
    w.put("compare.csv", csv);
    return w.written();
}

std::vector<fs::path> cmd_obd(const Scenario& s)
{
    const Setup setup = build_setup(s);
    const auto d = dpopt::build_demand(setup.cycle, setup.model, setup.calibration, setup.dp.dt, s.dp_initial_soc);
    const auto st = dpopt::obd_study(d, setup.dp, s.dp_initial_soc);
    check_dp_trajectory(st.without, setup.dp);
    check_dp_trajectory(st.with, setup.dp);
    if (st.ec_with < st.ec_without * (1.0 - 0.005)) {
        throw ValidationError(fmt::format("OBD study: EC with OBD {:.4f} below EC without {:.4f}", st.ec_with,
                                          st.ec_without));
    }

    std::string text = "[obd]\n";
    text += "model = battery drain per null interval\n";
    text += fmt::format("energy_per_event_kwh = {:.6f}\n", setup.dp.obd_energy_kwh);
    text += fmt::format("soc_drain_per_event_pct = {:.6f}\n", setup.dp.obd_drain());
    text += fmt::format("intervals = {}\n", d.size());
    text += fmt::format("distance_km = {:.4f}\n", d.distance_km);
    text += fmt::format("ec_without_wh_per_km = {:.4f}\n", st.ec_without);
    text += fmt::format("ec_with_wh_per_km = {:.4f}\n", st.ec_with);
    text += fmt::format("increase_wh_per_km = {:.4f}\n", st.increase);
    text += fmt::format("increase_pct = {:.4f}\n", st.increase_pct);
    text += fmt::format("events = {}\n", st.events);

    std::string plot = "t_s,v_mps,soc_without_pct,soc_with_pct\n";
    for (std::size_t k = 0; k < st.with.soc.size(); ++k) {
        const double t = std::min(static_cast<double>(k) * d.dt, setup.cycle.duration());
        plot += fmt::format("{:.3f},{:.4f},{:.6f},{:.6f}\n", t, speed_at(setup.cycle, t), st.without.soc[k],
                            st.with.soc[k]);
    }

    Writer w(s.out_dir);
    w.put("obd_report.txt", text);
    w.put("obd_plot.csv", plot);
    return w.written();
}

}  // namespace hevopt::cli
