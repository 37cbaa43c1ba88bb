#include "hevopt/ems.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <ostream>

#include <fmt/format.h>

#include "hevopt/errors.hpp"

namespace hevopt::ems {

void VehicleModel::validate() const
{
    vehicle.validate();
    battery.validate();
    if (!(wheel_radius > 0.0) || !(gear_ratio > 0.0)) {
        throw DomainError("wheel radius and gear ratio must be positive");
    }
}

std::vector<IntervalLoad> motor_loads(const VehicleModel& model, const cycle::DriveCycle& c, double calibration)
{
    if (!(calibration > 0.0)) {
        throw DomainError(fmt::format("calibration must be positive, got {}", calibration));
    }
    const double mass = model.vehicle.test_mass;
    const auto force = dynamics::force_series(model.vehicle, c, mass);
    const auto& map = model.motor_map;
    const double rpm_per_mps = model.gear_ratio / model.wheel_radius * 60.0 / (2.0 * std::numbers::pi);

    std::vector<IntervalLoad> out(c.size() - 1);
    for (std::size_t k = 0; k + 1 < c.size(); ++k) {
        const auto& a = c[k];
        const auto& b = c[k + 1];
        IntervalLoad& L = out[k];
        L.dt = b.t - a.t;
        L.distance_km = 0.5 * (a.v + b.v) * L.dt / 1000.0;
        const double model_kw = 0.5 * (force[k] * a.v + force[k + 1] * b.v) / 1000.0;
        L.wheel_kw = model_kw * calibration;
        L.motor_speed = 0.5 * (a.v + b.v) * rpm_per_mps;
        const double torque_mag = std::abs(0.5 * (force[k] + force[k + 1])) * model.wheel_radius / model.gear_ratio;
        if (model_kw == 0.0) {
            continue;
        }
        const std::size_t step = k + 1;
        if (model_kw > 0.0) {
            L.motor_torque = torque_mag;
            if (!map.covers(L.motor_speed, L.motor_torque)) {
                throw EnvelopeError(fmt::format("traction demand {:.2f} kW at {:.0f} rpm / {:.1f} Nm outside motor map",
                                                L.wheel_kw, L.motor_speed, L.motor_torque),
                                    step);
            }
            L.motor_elec_kw = L.wheel_kw / (map.lookup(L.motor_speed, L.motor_torque) / 100.0);
        } else {
            const double limit = map.max_torque(L.motor_speed, -1.0);
            const double used = std::min(torque_mag, limit);
            const double share = torque_mag > 0.0 ? used / torque_mag : 0.0;
            L.motor_torque = -used;
            L.friction_kw = L.wheel_kw * (1.0 - share);
            if (used > 0.0) {
                L.motor_elec_kw = L.wheel_kw * share * map.lookup(L.motor_speed, L.motor_torque) / 100.0;
            }
        }
    }
    return out;
}

void RuleConfig::validate() const
{
    auto require = [](bool ok, const char* what) {
        if (!ok) {
            throw DomainError(fmt::format("rule config: {}", what));
        }
    };
    require(soc_low < cs_trigger && cs_trigger < soc_high, "need soc_low < cs_trigger < soc_high");
    require(soc_low >= 0.0 && soc_high <= 100.0, "SOC window must lie in [0, 100]");
    require(min_dwell >= 0.0, "min_dwell must be nonnegative");
    require(warmup >= 0.0, "warmup must be nonnegative");
    require(cranking_kw >= 0.0, "cranking power must be nonnegative");
    require(regen_current_limit > 0.0, "regen current limit must be positive");
    require(initial_soc >= 0.0 && initial_soc <= 100.0, "initial SOC must lie in [0, 100]");
    require(genset_point.electrical_power > 0.0, "gen-set electrical power must be positive");
    require(genset_point.combined_efficiency > 0.0 && genset_point.combined_efficiency <= 100.0,
            "gen-set efficiency must lie in (0, 100]");
}

SimResult simulate_rule_based(const cycle::DriveCycle& c, const VehicleModel& model, const RuleConfig& cfg,
                              double calibration)
{
    model.validate();
    cfg.validate();
    const auto loads = motor_loads(model, c, calibration);
    const auto& bat = model.battery;
    constexpr double kNever = -std::numeric_limits<double>::infinity();

    SimResult result;
    auto& trace = result.trace;
    auto& energy = result.energy;
    trace.reserve(c.size());

    double soc = cfg.initial_soc;
    Mode mode = soc <= cfg.cs_trigger ? Mode::charge_sustaining : Mode::charge_depleting;
    bool on = false;
    double last_switch = kNever;
    double started = kNever;
    if (mode == Mode::charge_sustaining) {
        energy.cs_entry_time = 0.0;
    }

    TraceRecord first;
    first.t = c[0].t;
    first.v = c[0].v;
    first.mode = mode;
    first.soc = soc;
    trace.push_back(first);

    double cd_wh = 0.0;
    double fuel_kwh = 0.0;
    for (std::size_t k = 1; k < c.size(); ++k) {
        const double t0 = c[k - 1].t;
        const IntervalLoad& load = loads[k - 1];

        if (mode == Mode::charge_depleting && soc <= cfg.cs_trigger) {
            mode = Mode::charge_sustaining;
            energy.cs_entry_time = t0;
        }
        if (mode == Mode::charge_sustaining && t0 - last_switch >= cfg.min_dwell) {
            if (!on && soc <= cfg.cs_trigger) {
                on = true;
                last_switch = started = t0;
            } else if (on && soc >= cfg.soc_high) {
                on = false;
                last_switch = t0;
            }
        }
        const bool warm = on && t0 - started >= cfg.warmup;

        TraceRecord r;
        r.t = c[k].t;
        r.v = c[k].v;
        r.mode = mode;
        r.genset_on = on;
        r.genset_warm = warm;
        r.p_wheel = load.wheel_kw;
        r.p_motor_elec = load.motor_elec_kw;
        r.p_genset_elec = warm ? cfg.genset_point.electrical_power : 0.0;
        r.p_crank = on && !warm ? cfg.cranking_kw : 0.0;

        auto solve = [&](double motor_kw) {
            const auto amps = powertrain::current_for_terminal_power(bat, soc, motor_kw + r.p_crank - r.p_genset_elec);
            if (!amps) {
                throw EnvelopeError(fmt::format("bus demand {:.2f} kW exceeds pack capability at SOC {:.2f}%",
                                                motor_kw + r.p_crank - r.p_genset_elec, soc),
                                    k);
            }
            return *amps;
        };
        if (mode == Mode::charge_sustaining && soc >= cfg.soc_high && r.p_motor_elec < 0.0) {
            r.p_motor_elec = 0.0;  // window top reached: friction brakes only
        }
        double amps = solve(r.p_motor_elec);
        if (amps < -cfg.regen_current_limit && r.p_motor_elec < 0.0) {
            // Keep the gen-set output and give up regeneration until the
            // charging current sits at the limit.
            const double at_limit = powertrain::terminal_power(bat, soc, -cfg.regen_current_limit);
            r.p_motor_elec = std::min(0.0, at_limit - r.p_crank + r.p_genset_elec);
            amps = solve(r.p_motor_elec);
        }
        r.i_batt = amps;

        const double ocv_w = bat.ocv(soc) * amps;
        const double dt = load.dt;
        soc += powertrain::soc_delta(bat, ocv_w, dt);
        if (soc <= 0.0) {
            throw InfeasibleError(fmt::format("battery empty at t = {:.1f} s ({})", r.t,
                                              mode == Mode::charge_depleting ? "before the CS trigger" : "in CS mode"));
        }
        r.soc = soc;
        r.fuel_energy_step = r.p_genset_elec * dt / 3600.0 / (cfg.genset_point.combined_efficiency / 100.0);
        fuel_kwh += r.fuel_energy_step;

        if (mode == Mode::charge_depleting) {
            cd_wh += ocv_w * dt / 3600.0;
            energy.cd_distance_km += load.distance_km;
        } else {
            energy.cs_distance_km += load.distance_km;
        }
        trace.push_back(r);
    }

    energy.final_soc = soc;
    energy.fuel_kwh = fuel_kwh;
    energy.cd_dc_kwh = cd_wh / 1000.0;
    energy.ec_cd_dc = energy.cd_distance_km > 0.0 ? cd_wh / energy.cd_distance_km : 0.0;
    energy.ec_cs_fuel = energy.cs_distance_km > 0.0 ? fuel_kwh * 1000.0 / energy.cs_distance_km : 0.0;
    return result;
}

std::vector<double> genset_transitions(const SimTrace& trace)
{
    std::vector<double> out;
    for (std::size_t k = 1; k < trace.size(); ++k) {
        if (trace[k].genset_on != trace[k - 1].genset_on) {
            // The switch happens at the start of interval k.
            out.push_back(trace[k - 1].t);
        }
    }
    return out;
}

const char* to_string(Mode m)
{
    return m == Mode::charge_depleting ? "CD" : "CS";
}

void write_trace(std::ostream& out, const SimTrace& trace)
{
    out << "t_s,v_mps,mode,genset_on,genset_warm,p_wheel_kw,p_motor_elec_kw,p_genset_elec_kw,p_crank_kw,"
           "i_batt_a,soc_pct,fuel_kwh\n";
    for (const auto& r : trace) {
        out << fmt::format("{:.3f},{:.4f},{},{},{},{:.6f},{:.6f},{:.6f},{:.6f},{:.6f},{:.9f},{:.9f}\n", r.t, r.v,
                           to_string(r.mode), r.genset_on ? 1 : 0, r.genset_warm ? 1 : 0, r.p_wheel, r.p_motor_elec,
                           r.p_genset_elec, r.p_crank, r.i_batt, r.soc, r.fuel_energy_step);
    }
}

}  // namespace hevopt::ems
