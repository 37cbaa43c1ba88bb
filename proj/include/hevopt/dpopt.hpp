#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "hevopt/cycle.hpp"
#include "hevopt/ems.hpp"
#include "hevopt/powertrain.hpp"

namespace hevopt::dpopt {

/// One admissible charge action: SOC added per decision interval and the
/// fuel-to-electric efficiency of the gen-set point that produces it.
struct Decision {
    double delta_soc = 0.0;   // % per interval
    double efficiency = 0.0;  // %, ignored for the null decision
    std::string label;
};

enum class TerminalKind {
    at_least_initial,  // charge-sustaining neutrality
    at_least_soc_min,
    at_least_level,
};

struct TerminalRule {
    TerminalKind kind = TerminalKind::at_least_initial;
    double level = 0.0;  // used by at_least_level
};

struct DpConfig {
    double dt = 10.0;         // s per decision interval
    double soc_min = 12.0;    // %
    double soc_max = 17.0;    // %
    double grid_step = 0.005; // %
    /// decisions[0] must be the null decision (delta_soc == 0).
    std::vector<Decision> decisions;
    TerminalRule terminal;
    bool obd_enabled = false;
    double obd_energy_kwh = 0.00497;  // per event
    double capacity_kwh = 18.9;
    double genset_max_kw = 40.0;
    int lookahead = 2;  // rollout search depth, intervals

    void validate() const;
    /// SOC drained by one diagnostic event, %.
    double obd_drain() const { return obd_energy_kwh / capacity_kwh * 100.0; }
    double max_delta() const;
    /// Largest SOC step the gen-set can add in one interval, %.
    double delta_bound() const { return genset_max_kw * dt / (3600.0 * capacity_kwh) * 100.0; }
    /// Fuel burned by decision `a` over one interval, kWh.
    double stage_cost(std::size_t a) const;
    double terminal_level(double initial_soc) const;
};

/// Decision table: the null action followed by one entry per
/// `deltas` value, each priced at the gen-set point on `engine_speed` that
/// delivers the matching electrical power.
std::vector<Decision> decisions_from_genset(const powertrain::GenSet& genset, double engine_speed,
                                            const std::vector<double>& deltas, double capacity_kwh, double dt);

/// Exogenous SOC drain per decision interval.
struct DemandProfile {
    std::vector<double> drain;  // % per interval
    double dt = 10.0;
    double distance_km = 0.0;

    std::size_t size() const noexcept { return drain.size(); }
};

/// Pack chemistry energy needed to drive each `dt` window of `c`, as SOC %.
/// Open-circuit voltage is taken at `reference_soc`. A trailing partial
/// window is folded into the last full one.
DemandProfile build_demand(const cycle::DriveCycle& c, const ems::VehicleModel& model, double calibration,
                           double dt, double reference_soc);

class DpPolicy {
public:
    DpPolicy(double soc_min, double grid_step, std::size_t nodes, std::size_t intervals);

    std::size_t intervals() const noexcept { return decision_.size(); }
    std::size_t nodes() const noexcept { return nodes_; }
    double soc_at(std::size_t j) const { return soc_min_ + step_ * static_cast<double>(j); }
    std::size_t nearest(double soc) const;

    /// Chosen decision index, or -1 where no admissible action exists.
    int decision(std::size_t k, std::size_t j) const { return decision_[k][j]; }
    /// Optimal fuel to finish from (k, j), kWh; +inf when infeasible. k = N is terminal.
    double cost_to_go(std::size_t k, std::size_t j) const { return cost_[k][j]; }
    /// Linear interpolation of layer k; +inf if a bracketing node is
    /// infeasible. The terminal layer is evaluated exactly.
    double cost_at(std::size_t k, double soc) const;

    double terminal_level() const noexcept { return terminal_level_; }
    void set_terminal_level(double level) { terminal_level_ = level; }

    std::vector<std::vector<int>>& decisions() { return decision_; }
    std::vector<std::vector<double>>& costs() { return cost_; }

private:
    double soc_min_;
    double step_;
    std::size_t nodes_;
    double terminal_level_ = 0.0;
    std::vector<std::vector<int>> decision_;
    std::vector<std::vector<double>> cost_;
};

/// Backward dynamic programming over the SOC grid. Throws InfeasibleError
/// when no admissible path leaves `initial_soc`.
DpPolicy solve(const DemandProfile& d, const DpConfig& cfg, double initial_soc);

struct Trajectory {
    std::vector<double> soc;     // N + 1 interval boundaries
    std::vector<int> decisions;  // N
    double fuel_kwh = 0.0;
    double cs_ec = 0.0;          // Wh/km
    int obd_events = 0;
    int genset_intervals = 0;
};

/// Forward pass from `initial_soc`. With `cfg.lookahead` = h > 0 each step
/// searches the next h intervals exhaustively from the exact SOC and prices
/// the leaves with the interpolated cost-to-go; h = 0, or a search with no
/// admissible branch, uses the nearest grid state's stored decision.
Trajectory rollout(const DpPolicy& p, const DemandProfile& d, const DpConfig& cfg, double initial_soc);

struct BruteForceResult {
    double cost_kwh = 0.0;
    std::vector<int> decisions;
    int genset_intervals = 0;
};

/// Exhaustive search over every decision sequence with exact SOC
/// transitions. Ties go to the sequence with fewer gen-set intervals.
/// Refuses instances with more than 1e7 sequences.
BruteForceResult brute_force(const DemandProfile& d, const DpConfig& cfg, double initial_soc);

/// Hysteresis controller on the demand profile: switch decision `on_decision`
/// on at or below `soc_on`, off at or above `soc_off`, never charge past
/// `cfg.soc_max`. Same transition and cost model as the DP.
Trajectory rule_on_demand(const DemandProfile& d, const DpConfig& cfg, std::size_t on_decision, double soc_on,
                          double soc_off, double initial_soc, double min_dwell = 0.0);

struct ObdStudy {
    Trajectory without;
    Trajectory with;
    double ec_without = 0.0;  // Wh/km
    double ec_with = 0.0;     // Wh/km
    double increase = 0.0;    // Wh/km
    double increase_pct = 0.0;
    int events = 0;
};

/// Solves and rolls out the same demand with diagnostics off and on.
ObdStudy obd_study(const DemandProfile& d, const DpConfig& cfg, double initial_soc);

/// `k,soc_grid,decision_label,cost_to_go_kwh`; infeasible cells are skipped.
void write_policy(std::ostream& out, const DpPolicy& p, const DpConfig& cfg);

}  // namespace hevopt::dpopt
