#pragma once

#include <cmath>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace hevopt::powertrain {

/// Diesel lower heating value, 42.6 MJ/kg expressed in kWh/g.
inline constexpr double kDieselLhv = 0.011833;

/// Shaft power in W for torque in Nm and speed in rpm.
double shaft_power_w(double torque_nm, double speed_rpm);

// Component efficiencies from characterization measurements, in percent.
// A result above 100 % means the data breaks the second law and is
// reported, not clamped.
double motor_efficiency(double torque_nm, double speed_rpm, double volts, double amps);
double engine_efficiency(double bsfc_g_per_kwh, double lhv_kwh_per_g = kDieselLhv);
double generator_efficiency(double volts, double amps, double torque_nm, double speed_rpm);

/// Speed x torque efficiency grid. Nodes outside the component's operating
/// envelope are stored as infeasible.
class EfficiencyMap {
public:
    /// `values` is speed-major: values[i * torque_axis.size() + j]. Use
    /// `std::nullopt` for infeasible nodes.
    EfficiencyMap(std::vector<double> speed_axis, std::vector<double> torque_axis,
                  std::vector<std::optional<double>> values, std::string label = {});

    std::span<const double> speed_axis() const noexcept { return speed_; }
    std::span<const double> torque_axis() const noexcept { return torque_; }
    const std::string& label() const noexcept { return label_; }

    bool feasible(std::size_t i, std::size_t j) const { return !std::isnan(node(i, j)); }
    /// Stored node value; NaN when infeasible.
    double node(std::size_t i, std::size_t j) const { return values_[i * torque_.size() + j]; }
    std::size_t feasible_count() const;

    /// Bilinear interpolation. Throws RangeError outside the axis box and
    /// InfeasibleRegionError when a node with nonzero weight is infeasible.
    double lookup(double speed_rpm, double torque_nm) const;

    /// True when `lookup` would succeed.
    bool covers(double speed_rpm, double torque_nm) const;

    /// Largest torque magnitude reachable from zero torque at this speed
    /// without touching an infeasible node, in the direction of `sign`.
    double max_torque(double speed_rpm, double sign) const;

private:
    std::vector<double> speed_;
    std::vector<double> torque_;
    std::vector<double> values_;
    std::string label_;
};

inline double map_lookup(const EfficiencyMap& map, double speed_rpm, double torque_nm)
{
    return map.lookup(speed_rpm, torque_nm);
}

/// Combined engine x generator map on the engine's axes. The generator turns
/// at engine speed x belt_ratio and sees engine torque / belt_ratio.
EfficiencyMap merge_gen_set(const EfficiencyMap& engine, const EfficiencyMap& generator, double belt_ratio,
                            double belt_efficiency = 1.0);

/// Matrix text format: first row torque axis, first column speed axis,
/// empty cell = infeasible, `#` lines ignored.
EfficiencyMap load_map(std::istream& in, std::string label = {});
EfficiencyMap load_map_file(const std::filesystem::path& path);
void write_map(std::ostream& out, const EfficiencyMap& map);

enum class MachineKind { motor, generator };

struct CharacterizationRow {
    double speed_rpm = 0.0;
    double torque_nm = 0.0;
    double volts = 0.0;
    double amps = 0.0;
};

/// Parses `omega_rpm,T_Nm,V_volts,I_amps` rows (header optional).
std::vector<CharacterizationRow> load_characterization(std::istream& in);

/// One node per row; axes are the distinct speeds and torques seen.
/// Combinations without a row are infeasible.
EfficiencyMap map_from_characterization(std::span<const CharacterizationRow> rows, MachineKind kind,
                                        std::string label = {});

struct SyntheticMotorSpec {
    double peak_efficiency = 94.0;  // %
    double peak_power_kw = 120.0;
    double peak_torque_nm = 350.0;
    double max_speed_rpm = 12000.0;
};

struct SyntheticEngineSpec {
    double peak_efficiency = 36.0;  // %
    double peak_power_kw = 48.0;
    double peak_torque_nm = 180.0;
    double lhv = kDieselLhv;
};

struct SyntheticGeneratorSpec {
    double peak_efficiency = 92.0;  // %
    double peak_power_kw = 50.0;
};

// Smooth stand-in maps; all labels start with "synthetic".
EfficiencyMap synthetic_motor_map(const SyntheticMotorSpec& spec = {});
EfficiencyMap synthetic_engine_map(const SyntheticEngineSpec& spec = {});
EfficiencyMap synthetic_generator_map(const SyntheticGeneratorSpec& spec = {});

struct GenSetPoint {
    double engine_speed = 0.0;         // rpm
    double engine_torque = 0.0;        // Nm
    double combined_efficiency = 0.0;  // %, fuel -> electrical
    double electrical_power = 0.0;     // kW
};

/// Engine + generator pair coupled by a belt.
class GenSet {
public:
    GenSet(EfficiencyMap engine, EfficiencyMap generator, double belt_ratio, double belt_efficiency = 1.0);

    const EfficiencyMap& engine() const noexcept { return engine_; }
    const EfficiencyMap& generator() const noexcept { return generator_; }
    const EfficiencyMap& merged() const noexcept { return merged_; }
    double belt_ratio() const noexcept { return belt_ratio_; }

    GenSetPoint point_at(double engine_speed, double engine_torque) const;

    /// Operating point at `engine_speed` that delivers `electrical_kw`.
    /// Throws DomainError when the speed line cannot deliver that power.
    GenSetPoint point_for_power(double engine_speed, double electrical_kw) const;

private:
    EfficiencyMap engine_;
    EfficiencyMap generator_;
    double belt_ratio_;
    double belt_efficiency_;
    EfficiencyMap merged_;
};

/// Internal-resistance pack model. The open-circuit voltage is a table over
/// SOC with linear interpolation. Current is positive when discharging.
struct BatteryParams {
    double capacity_kwh = 18.9;
    double r_internal = 0.1;  // ohm
    std::vector<std::pair<double, double>> ocv_curve{{0.0, 340.0}, {100.0, 340.0}};  // (SOC %, V)

    void validate() const;
    double ocv(double soc) const;
};

/// Pack power in kW: R*I^2 + V_oc*I.
double battery_power(const BatteryParams& b, double soc, double amps);

/// Power at the pack terminals in kW: V_oc*I - R*I^2.
double terminal_power(const BatteryParams& b, double soc, double amps);

/// Current that delivers `terminal_kw` at the terminals (root with the
/// smaller magnitude). Empty when the demand exceeds what the pack can
/// supply (negative discriminant).
std::optional<double> current_for_terminal_power(const BatteryParams& b, double soc, double terminal_kw);

/// SOC change in percent for chemistry power `ocv_power_w` held for `dt` s.
double soc_delta(const BatteryParams& b, double ocv_power_w, double dt);

struct CurrentSample {
    double t = 0.0;     // s
    double amps = 0.0;  // discharge positive
};

struct SocResult {
    double soc = 0.0;
    bool clamped = false;
};

/// Coulomb-style SOC integration of V_oc*I with the trapezoid rule; the
/// result is clamped to [0, 100].
SocResult integrate_soc(const BatteryParams& b, double start_soc, std::span<const CurrentSample> current);

}  // namespace hevopt::powertrain
