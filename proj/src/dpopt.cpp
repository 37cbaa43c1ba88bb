#include "hevopt/dpopt.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>

#include <fmt/format.h>

#include "hevopt/errors.hpp"

namespace hevopt::dpopt {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kEps = 1e-9;

// Successor SOC. Regeneration that would lift an idle interval past the
// window top is dropped rather than rejected.
double next_soc(const DpConfig& cfg, double soc, std::size_t a, double drain)
{
    const double u = cfg.decisions[a].delta_soc;
    const double obd = cfg.obd_enabled && u == 0.0 ? cfg.obd_drain() : 0.0;
    double next = soc + u - obd - drain;
    if (u == 0.0 && drain < 0.0 && next > cfg.soc_max) {
        next = std::max(cfg.soc_max, soc - obd);
    }
    return next;
}

// Charging is only offered while even the largest step stays below the top.
bool charge_blocked(const DpConfig& cfg, double soc)
{
    return soc + cfg.max_delta() >= cfg.soc_max;
}

bool inside(const DpConfig& cfg, double soc, double tol)
{
    return soc >= cfg.soc_min - tol && soc <= cfg.soc_max + tol;
}

std::size_t grid_nodes(const DpConfig& cfg)
{
    const double span = (cfg.soc_max - cfg.soc_min) / cfg.grid_step;
    return static_cast<std::size_t>(std::llround(span)) + 1;
}

struct Choice {
    int action = -1;
    double cost = kInf;
};

// Cheapest admissible action from `soc` at interval k, ties to the lowest index.
Choice best_action(const DpPolicy& p, const DpConfig& cfg, const std::vector<double>& stage, std::size_t k,
                   double soc, double drain)
{
    const bool blocked = charge_blocked(cfg, soc);
    Choice c;
    for (std::size_t a = 0; a < cfg.decisions.size(); ++a) {
        if (a > 0 && blocked) {
            break;
        }
        const double next = next_soc(cfg, soc, a, drain);
        if (!inside(cfg, next, kEps)) {
            continue;
        }
        const double value = stage[a] + p.cost_at(k + 1, next);
        if (c.action < 0 ? value < kInf : value < c.cost - 1e-12 * std::max(1.0, c.cost)) {
            c = {static_cast<int>(a), value};
        }
    }
    return c;
}

// Cost-to-go from the exact `soc` with `depth` intervals searched
// exhaustively before falling back to the interpolated value function.
Choice search(const DpPolicy& p, const DpConfig& cfg, const std::vector<double>& stage, const DemandProfile& d,
              std::size_t k, double soc, int depth)
{
    if (depth <= 1 || k + 1 >= d.size()) {
        return best_action(p, cfg, stage, k, soc, d.drain[k]);
    }
    const bool blocked = charge_blocked(cfg, soc);
    Choice c;
    for (std::size_t a = 0; a < cfg.decisions.size(); ++a) {
        if (a > 0 && blocked) {
            break;
        }
        const double next = next_soc(cfg, soc, a, d.drain[k]);
        if (!inside(cfg, next, kEps)) {
            continue;
        }
        const double value = stage[a] + search(p, cfg, stage, d, k + 1, next, depth - 1).cost;
        if (c.action < 0 ? value < kInf : value < c.cost - 1e-12 * std::max(1.0, c.cost)) {
            c = {static_cast<int>(a), value};
        }
    }
    return c;
}

std::vector<double> stage_costs(const DpConfig& cfg)
{
    std::vector<double> out(cfg.decisions.size());
    for (std::size_t a = 0; a < out.size(); ++a) {
        out[a] = cfg.stage_cost(a);
    }
    return out;
}

}  // namespace

void DpConfig::validate() const
{
    auto require = [](bool ok, const std::string& what) {
        if (!ok) {
            throw DomainError("dp config: " + what);
        }
    };
    require(dt > 0.0, "dt must be positive");
    require(soc_min < soc_max, "need soc_min < soc_max");
    require(soc_min >= 0.0 && soc_max <= 100.0, "SOC window must lie in [0, 100]");
    require(grid_step > 0.0, "grid_step must be positive");
    const double span = (soc_max - soc_min) / grid_step;
    require(std::abs(span - std::round(span)) < 1e-6, "grid_step must divide the SOC window");
    require(capacity_kwh > 0.0, "capacity must be positive");
    require(obd_energy_kwh >= 0.0, "OBD energy must be nonnegative");
    require(lookahead >= 0 && lookahead <= 4, "lookahead must lie in [0, 4]");
    require(!decisions.empty() && decisions.front().delta_soc == 0.0, "decision 0 must be the null decision");
    for (std::size_t a = 1; a < decisions.size(); ++a) {
        const auto& d = decisions[a];
        require(d.delta_soc > 0.0, fmt::format("decision '{}' must add SOC", d.label));
        require(d.efficiency > 0.0 && d.efficiency <= 100.0,
                fmt::format("decision '{}' efficiency must lie in (0, 100]", d.label));
        require(d.delta_soc <= delta_bound() + 1e-12,
                fmt::format("decision '{}' adds {}% per interval, above the gen-set bound {:.4f}%", d.label,
                            d.delta_soc, delta_bound()));
    }
    if (terminal.kind == TerminalKind::at_least_level) {
        require(terminal.level >= soc_min && terminal.level <= soc_max, "terminal level outside the window");
    }
}

double DpConfig::max_delta() const
{
    double m = 0.0;
    for (const auto& d : decisions) {
        m = std::max(m, d.delta_soc);
    }
    return m;
}

double DpConfig::stage_cost(std::size_t a) const
{
    const auto& d = decisions[a];
    if (d.delta_soc == 0.0) {
        return 0.0;
    }
    return d.delta_soc / 100.0 * capacity_kwh / (d.efficiency / 100.0);
}

double DpConfig::terminal_level(double initial_soc) const
{
    switch (terminal.kind) {
    case TerminalKind::at_least_initial:
        return initial_soc;
    case TerminalKind::at_least_soc_min:
        return soc_min;
    case TerminalKind::at_least_level:
        return terminal.level;
    }
    return initial_soc;
}

std::vector<Decision> decisions_from_genset(const powertrain::GenSet& genset, double engine_speed,
                                            const std::vector<double>& deltas, double capacity_kwh, double dt)
{
    std::vector<Decision> out{{0.0, 0.0, "off"}};
    for (double delta : deltas) {
        const double kw = delta / 100.0 * capacity_kwh * 3600.0 / dt;
        const auto point = genset.point_for_power(engine_speed, kw);
        out.push_back({delta, point.combined_efficiency, fmt::format("b{:.3f}", delta)});
    }
    return out;
}

DemandProfile build_demand(const cycle::DriveCycle& c, const ems::VehicleModel& model, double calibration,
                           double dt, double reference_soc)
{
    if (!(dt > 0.0)) {
        throw DomainError("decision interval must be positive");
    }
    const auto windows = static_cast<std::size_t>(std::floor(c.duration() / dt + 1e-9));
    if (windows == 0) {
        throw DomainError(fmt::format("cycle lasts {} s, shorter than one {} s decision interval", c.duration(), dt));
    }
    const auto loads = ems::motor_loads(model, c, calibration);
    const auto& bat = model.battery;
    const double ocv = bat.ocv(reference_soc);

    DemandProfile d;
    d.dt = dt;
    d.distance_km = c.distance_km();
    d.drain.assign(windows, 0.0);
    for (std::size_t k = 0; k < loads.size(); ++k) {
        const auto amps = powertrain::current_for_terminal_power(bat, reference_soc, loads[k].motor_elec_kw);
        if (!amps) {
            throw EnvelopeError(fmt::format("motor demand {:.2f} kW exceeds pack capability", loads[k].motor_elec_kw),
                                k + 1);
        }
        const double rate = -powertrain::soc_delta(bat, ocv * *amps, 1.0);  // % per second
        double t = c[k].t;
        const double end = c[k + 1].t;
        while (t < end) {
            const auto w = std::min(windows - 1, static_cast<std::size_t>(std::floor(t / dt + 1e-9)));
            const double boundary = w + 1 == windows ? end : std::min(end, (w + 1) * dt);
            d.drain[w] += rate * (boundary - t);
            t = boundary;
        }
    }
    return d;
}

DpPolicy::DpPolicy(double soc_min, double grid_step, std::size_t nodes, std::size_t intervals)
    : soc_min_(soc_min),
      step_(grid_step),
      nodes_(nodes),
      decision_(intervals, std::vector<int>(nodes, -1)),
      cost_(intervals + 1, std::vector<double>(nodes, kInf))
{
}

std::size_t DpPolicy::nearest(double soc) const
{
    const double p = std::round((soc - soc_min_) / step_);
    return static_cast<std::size_t>(std::clamp(p, 0.0, static_cast<double>(nodes_ - 1)));
}

double DpPolicy::cost_at(std::size_t k, double soc) const
{
    const double p = (soc - soc_min_) / step_;
    const double last = static_cast<double>(nodes_ - 1);
    if (p < -kEps || p > last + kEps) {
        return kInf;
    }
    if (k + 1 == cost_.size()) {
        return soc >= terminal_level_ - kEps ? 0.0 : kInf;
    }
    const double clamped = std::clamp(p, 0.0, last);
    const auto j = static_cast<std::size_t>(std::floor(clamped));
    const double frac = clamped - static_cast<double>(j);
    const auto& layer = cost_[k];
    if (frac < kEps || j + 1 >= nodes_) {
        return layer[j];
    }
    if (frac > 1.0 - kEps) {
        return layer[j + 1];
    }
    if (std::isinf(layer[j]) || std::isinf(layer[j + 1])) {
        return kInf;
    }
    return layer[j] + frac * (layer[j + 1] - layer[j]);
}

DpPolicy solve(const DemandProfile& d, const DpConfig& cfg, double initial_soc)
{
    cfg.validate();
    if (d.drain.empty()) {
        throw DomainError("demand profile is empty");
    }
    if (!inside(cfg, initial_soc, kEps)) {
        throw DomainError(fmt::format("initial SOC {} outside [{}, {}]", initial_soc, cfg.soc_min, cfg.soc_max));
    }
    const std::size_t n = d.size();
    const std::size_t nodes = grid_nodes(cfg);
    DpPolicy policy(cfg.soc_min, cfg.grid_step, nodes, n);
    auto& cost = policy.costs();
    auto& choice = policy.decisions();

    const double level = cfg.terminal_level(initial_soc);
    policy.set_terminal_level(level);
    for (std::size_t j = 0; j < nodes; ++j) {
        cost[n][j] = policy.soc_at(j) >= level - kEps ? 0.0 : kInf;
    }

    const auto stage = stage_costs(cfg);

    for (std::size_t k = n; k-- > 0;) {
        for (std::size_t j = 0; j < nodes; ++j) {
            const double soc = policy.soc_at(j);
            const auto [arg, best] = best_action(policy, cfg, stage, k, soc, d.drain[k]);
            cost[k][j] = best;
            choice[k][j] = arg;
        }
    }

    const auto start = policy.nearest(initial_soc);
    if (std::isinf(cost[0][start])) {
        std::size_t dead = 0;
        for (std::size_t k = 0; k <= n; ++k) {
            if (std::all_of(cost[k].begin(), cost[k].end(), [](double v) { return std::isinf(v); })) {
                dead = k;
            }
        }
        throw InfeasibleError(
            dead > 0 || std::all_of(cost[0].begin(), cost[0].end(), [](double v) { return std::isinf(v); })
                ? fmt::format("no feasible path from SOC {:.3f}%: every grid state is infeasible at interval {}",
                              initial_soc, dead)
                : fmt::format("no feasible path from SOC {:.3f}%: start state infeasible at interval 0",
                              initial_soc));
    }
    return policy;
}

Trajectory rollout(const DpPolicy& p, const DemandProfile& d, const DpConfig& cfg, double initial_soc)
{
    if (p.intervals() != d.size()) {
        throw DomainError("policy and demand profile lengths differ");
    }
    const double tol = cfg.grid_step;
    const auto stage = stage_costs(cfg);
    Trajectory tr;
    double soc = initial_soc;
    tr.soc.push_back(soc);
    for (std::size_t k = 0; k < d.size(); ++k) {
        const std::size_t j = p.nearest(soc);
        int a = cfg.lookahead > 0 ? search(p, cfg, stage, d, k, soc, cfg.lookahead).action : -1;
        if (a < 0) {
            a = p.decision(k, j);
        }
        if (a < 0) {
            // Nearest node is a dead end; fall back to the other bracketing node.
            const std::size_t other = soc >= p.soc_at(j) ? std::min(j + 1, p.nodes() - 1) : (j > 0 ? j - 1 : 0);
            a = p.decision(k, other);
        }
        if (a < 0) {
            throw InfeasibleError(fmt::format("rollout reached infeasible SOC {:.4f}% at interval {}", soc, k));
        }
        soc = next_soc(cfg, soc, static_cast<std::size_t>(a), d.drain[k]);
        if (!inside(cfg, soc, tol)) {
            throw InfeasibleError(fmt::format("rollout SOC {:.4f}% leaves [{}, {}] by more than the grid step at interval {}",
                                              soc, cfg.soc_min, cfg.soc_max, k + 1));
        }
        const auto& dec = cfg.decisions[static_cast<std::size_t>(a)];
        tr.fuel_kwh += cfg.stage_cost(static_cast<std::size_t>(a));
        tr.obd_events += cfg.obd_enabled && dec.delta_soc == 0.0 ? 1 : 0;
        tr.genset_intervals += dec.delta_soc > 0.0 ? 1 : 0;
        tr.decisions.push_back(a);
        tr.soc.push_back(soc);
    }
    const double level = cfg.terminal_level(initial_soc);
    if (soc < level - tol) {
        throw InfeasibleError(fmt::format("rollout ends at {:.4f}%, below the terminal level {:.4f}%", soc, level));
    }
    tr.cs_ec = d.distance_km > 0.0 ? tr.fuel_kwh * 1000.0 / d.distance_km : 0.0;
    return tr;
}

Trajectory rule_on_demand(const DemandProfile& d, const DpConfig& cfg, std::size_t on_decision, double soc_on,
                          double soc_off, double initial_soc, double min_dwell)
{
    cfg.validate();
    if (on_decision == 0 || on_decision >= cfg.decisions.size()) {
        throw DomainError("rule decision must be a charging decision of the table");
    }
    Trajectory tr;
    double soc = initial_soc;
    bool on = false;
    double last_switch = -kInf;
    tr.soc.push_back(soc);
    for (std::size_t k = 0; k < d.size(); ++k) {
        const double t = static_cast<double>(k) * d.dt;
        if (t - last_switch >= min_dwell) {
            if (!on && soc <= soc_on) {
                on = true;
                last_switch = t;
            } else if (on && soc >= soc_off) {
                on = false;
                last_switch = t;
            }
        }
        std::size_t a = on ? on_decision : 0;
        if (a != 0 && next_soc(cfg, soc, a, d.drain[k]) > cfg.soc_max + kEps) {
            a = 0;
        }
        soc = next_soc(cfg, soc, a, d.drain[k]);
        tr.fuel_kwh += cfg.stage_cost(a);
        tr.obd_events += cfg.obd_enabled && a == 0 ? 1 : 0;
        tr.genset_intervals += a != 0 ? 1 : 0;
        tr.decisions.push_back(static_cast<int>(a));
        tr.soc.push_back(soc);
    }
    tr.cs_ec = d.distance_km > 0.0 ? tr.fuel_kwh * 1000.0 / d.distance_km : 0.0;
    return tr;
}

ObdStudy obd_study(const DemandProfile& d, const DpConfig& cfg, double initial_soc)
{
    DpConfig off = cfg;
    off.obd_enabled = false;
    DpConfig on = cfg;
    on.obd_enabled = true;

    ObdStudy s;
    s.without = rollout(solve(d, off, initial_soc), d, off, initial_soc);
    s.with = rollout(solve(d, on, initial_soc), d, on, initial_soc);
    s.ec_without = s.without.cs_ec;
    s.ec_with = s.with.cs_ec;
    s.increase = s.ec_with - s.ec_without;
    s.increase_pct = s.ec_without > 0.0 ? s.increase / s.ec_without * 100.0 : 0.0;
    s.events = s.with.obd_events;
    return s;
}

void write_policy(std::ostream& out, const DpPolicy& p, const DpConfig& cfg)
{
    out << "k,soc_grid,decision_label,cost_to_go_kwh\n";
    for (std::size_t k = 0; k < p.intervals(); ++k) {
        for (std::size_t j = 0; j < p.nodes(); ++j) {
            const int a = p.decision(k, j);
            if (a < 0) {
                continue;
            }
            out << fmt::format("{},{:.4f},{},{:.9f}\n", k, p.soc_at(j), cfg.decisions[static_cast<std::size_t>(a)].label,
                               p.cost_to_go(k, j));
        }
    }
}

}  // namespace hevopt::dpopt
