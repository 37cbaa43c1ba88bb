#pragma once

#include <iosfwd>
#include <string>

#include "hevopt/cycle.hpp"

namespace hevopt::accounting {

/// Wall-plug energy for a DC quantity (Wh or Wh/km) at `charging_efficiency`.
double ac_from_dc(double dc, double charging_efficiency);

/// ec_cd * uf + ec_cs * (1 - uf).
double uf_weighted(double ec_cd, double ec_cs, double uf);

struct UfReport {
    double ec_cd_ac = 0.0;    // Wh/km
    double ec_cs_fuel = 0.0;  // Wh/km
    double uf = 0.0;
    double weighted_electric = 0.0;  // Wh/km
    double weighted_fuel = 0.0;      // Wh/km
    double weighted_total = 0.0;     // Wh/km

    /// Throws ValidationError if the total is not the channel sum.
    void check() const;
};

/// Two-channel report. The electric channel has no CS share and the fuel
/// channel no CD share.
UfReport make_uf_report(double ec_cd_ac, double ec_cs_fuel, double uf);

/// Same report from the pack-side CD consumption.
UfReport make_uf_report_dc(double ec_cd_dc, double ec_cs_fuel, double uf, double charging_efficiency);

/// Report from already-weighted channel values, as printed in summary tables.
UfReport channel_totals(double weighted_fuel, double weighted_electric);

struct Calibration {
    double energy_scale = 1.0;
    double power_ratio = 1.0;  // avg positive power, reported only
    cycle::CycleMetrics sim;
    cycle::CycleMetrics test;

    double energy_delta_pct() const { return (energy_scale - 1.0) * 100.0; }
    double power_delta_pct() const { return (power_ratio - 1.0) * 100.0; }
};

Calibration calibration_factor(const cycle::CycleMetrics& sim, const cycle::CycleMetrics& test);

void write_uf_report(std::ostream& out, const std::string& label, const UfReport& r);
std::string uf_csv_header();
std::string uf_csv_row(const std::string& label, const UfReport& r);

void write_calibration(std::ostream& out, const Calibration& c);

}  // namespace hevopt::accounting
