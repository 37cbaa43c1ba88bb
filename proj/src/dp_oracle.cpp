#include <algorithm>
#include <cmath>
#include <limits>

#include <fmt/format.h>

#include "hevopt/dpopt.hpp"
#include "hevopt/errors.hpp"

namespace hevopt::dpopt {

namespace {

struct Search {
    const DemandProfile& d;
    const DpConfig& cfg;
    double level = 0.0;
    double top = 0.0;
    double drain_obd = 0.0;
    std::vector<double> fuel;  // kWh per decision

    std::vector<int> path;
    BruteForceResult best;
    bool found = false;

    void visit(std::size_t k, double soc, double cost, int on)
    {
        if (k == d.drain.size()) {
            if (soc < level - 1e-9) {
                return;
            }
            const bool better = !found || cost < best.cost_kwh - 1e-12 ||
                                (cost <= best.cost_kwh + 1e-12 && on < best.genset_intervals);
            if (better) {
                found = true;
                best.cost_kwh = cost;
                best.decisions = path;
                best.genset_intervals = on;
            }
            return;
        }
        for (std::size_t a = 0; a < cfg.decisions.size(); ++a) {
            const double add = cfg.decisions[a].delta_soc;
            if (add > 0.0 && soc + top >= cfg.soc_max) {
                continue;
            }
            double soc_next = soc - d.drain[k];
            if (add > 0.0) {
                soc_next += add;
            } else {
                soc_next -= drain_obd;
                if (d.drain[k] < 0.0 && soc_next > cfg.soc_max) {
                    soc_next = std::max(cfg.soc_max, soc - drain_obd);
                }
            }
            if (soc_next < cfg.soc_min - 1e-9 || soc_next > cfg.soc_max + 1e-9) {
                continue;
            }
            path.push_back(static_cast<int>(a));
            visit(k + 1, soc_next, cost + fuel[a], on + (add > 0.0 ? 1 : 0));
            path.pop_back();
        }
    }
};

}  // namespace

BruteForceResult brute_force(const DemandProfile& d, const DpConfig& cfg, double initial_soc)
{
    cfg.validate();
    const double sequences = std::pow(static_cast<double>(cfg.decisions.size()), static_cast<double>(d.size()));
    if (sequences > 1e7) {
        throw TooLargeError(fmt::format("{} decisions over {} intervals is {:.3g} sequences, above the 1e7 cap",
                                        cfg.decisions.size(), d.size(), sequences));
    }
    Search s{d, cfg, 0.0, 0.0, 0.0, {}, {}, {}, false};
    s.level = cfg.terminal_level(initial_soc);
    for (const auto& dec : cfg.decisions) {
        s.top = std::max(s.top, dec.delta_soc);
        // kWh of fuel = electrical kWh / efficiency fraction
        s.fuel.push_back(dec.delta_soc > 0.0 ? dec.delta_soc * cfg.capacity_kwh / dec.efficiency : 0.0);
    }
    s.drain_obd = cfg.obd_enabled ? cfg.obd_energy_kwh * 100.0 / cfg.capacity_kwh : 0.0;
    s.visit(0, initial_soc, 0.0, 0);
    if (!s.found) {
        throw InfeasibleError(fmt::format("no admissible decision sequence from SOC {:.3f}%", initial_soc));
    }
    return s.best;
}

}  // namespace hevopt::dpopt
