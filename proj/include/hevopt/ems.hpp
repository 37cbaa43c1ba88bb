#pragma once

#include <iosfwd>
#include <vector>

#include "hevopt/cycle.hpp"
#include "hevopt/dynamics.hpp"
#include "hevopt/powertrain.hpp"

namespace hevopt::ems {

/// Everything between the wheels and the battery terminals.
struct VehicleModel {
    dynamics::VehicleParams vehicle;
    double wheel_radius = 0.33;  // m
    double gear_ratio = 7.82;    // motor turns per wheel turn
    powertrain::EfficiencyMap motor_map = powertrain::synthetic_motor_map();
    powertrain::BatteryParams battery;

    void validate() const;
};

/// Traction load over one sample interval of a cycle.
struct IntervalLoad {
    double dt = 0.0;             // s
    double distance_km = 0.0;
    double wheel_kw = 0.0;       // calibrated, mean over the interval
    double motor_speed = 0.0;    // rpm
    double motor_torque = 0.0;   // Nm, uncalibrated model torque
    double motor_elec_kw = 0.0;  // bus-side motor power, negative when regenerating
    double friction_kw = 0.0;    // braking power not recovered (<= 0)
};

/// Motor electrical demand for every sample interval of `c`. The
/// calibration factor scales power; efficiencies are read at the modeled
/// operating point. Regeneration beyond the motor envelope goes to the
/// friction brakes; traction beyond it throws EnvelopeError.
std::vector<IntervalLoad> motor_loads(const VehicleModel& model, const cycle::DriveCycle& c, double calibration);

struct RuleConfig {
    double soc_high = 17.0;    // %
    double soc_low = 12.0;     // %
    double cs_trigger = 14.0;  // %
    double min_dwell = 10.0;   // s between gen-set on/off changes
    double warmup = 20.0;      // s of zero output after each start
    double cranking_kw = 2.0;  // drawn from the pack while warming up
    powertrain::GenSetPoint genset_point{2400.0, 88.0, 30.0, 20.0};
    double regen_current_limit = 150.0;  // A, total charging current
    double initial_soc = 90.0;           // %

    void validate() const;
};

enum class Mode { charge_depleting, charge_sustaining };

struct TraceRecord {
    double t = 0.0;
    double v = 0.0;
    Mode mode = Mode::charge_depleting;
    bool genset_on = false;
    bool genset_warm = false;
    double p_wheel = 0.0;        // kW
    double p_motor_elec = 0.0;   // kW
    double p_genset_elec = 0.0;  // kW
    double p_crank = 0.0;        // kW
    double i_batt = 0.0;         // A
    double soc = 0.0;            // %
    double fuel_energy_step = 0.0;  // kWh
};

/// Record 0 is the initial state. Record k > 0 holds the powers applied over
/// [t[k-1], t[k]] and the SOC reached at t[k].
using SimTrace = std::vector<TraceRecord>;

struct EnergyResult {
    double ec_cd_dc = 0.0;    // Wh/km, pack energy over the CD distance
    double ec_cs_fuel = 0.0;  // Wh/km, fuel energy over the CS distance
    double cd_distance_km = 0.0;
    double cs_distance_km = 0.0;
    double final_soc = 0.0;
    double fuel_kwh = 0.0;
    double cd_dc_kwh = 0.0;
    double cs_entry_time = -1.0;  // s; negative when CS never starts
};

struct SimResult {
    SimTrace trace;
    EnergyResult energy;
};

/// Charge-depleting / charge-sustaining rule strategy over a whole cycle.
/// Throws InfeasibleError if the pack empties and EnvelopeError when a step
/// asks more than the motor or pack can give.
SimResult simulate_rule_based(const cycle::DriveCycle& c, const VehicleModel& model, const RuleConfig& cfg,
                              double calibration = 1.0);

/// Gen-set on/off instants, in time order.
std::vector<double> genset_transitions(const SimTrace& trace);

void write_trace(std::ostream& out, const SimTrace& trace);

const char* to_string(Mode m);

}  // namespace hevopt::ems
