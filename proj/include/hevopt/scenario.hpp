#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "hevopt/accounting.hpp"
#include "hevopt/cycle.hpp"
#include "hevopt/dpopt.hpp"
#include "hevopt/ems.hpp"
#include "hevopt/powertrain.hpp"

namespace hevopt::cli {

enum class CalibrationSource { none, scale, metrics };

/// One run, as written in a scenario file. Relative paths are resolved
/// against the scenario file's directory.
struct Scenario {
    std::filesystem::path base_dir;

    // [cycle]
    std::string cycle_source = "synthetic";  // "synthetic" or a file path
    std::uint64_t cycle_seed = 0;
    double cycle_distance_km = 22.55;        // synthetic only
    int laps = 1;

    // [vehicle]
    ems::VehicleModel model;

    // [maps]; empty path selects the synthetic map
    std::string motor_map;
    std::string engine_map;
    std::string generator_map;
    double belt_ratio = 2.7;
    double genset_speed = 2400.0;  // rpm, shared by every gen-set point

    // [rule]
    ems::RuleConfig rule;
    double rule_genset_kw = 20.0;

    // [dp]
    dpopt::DpConfig dp;
    std::vector<double> dp_deltas{0.051, 0.294, 0.567};
    double dp_initial_soc = 14.0;  // used when the whole cycle is charge sustaining

    // [accounting]
    std::optional<double> uf;
    double charging_efficiency = 0.83;

    // [calibration]
    CalibrationSource calibration = CalibrationSource::none;
    double calibration_scale = 1.0;
    std::optional<cycle::CycleMetrics> sim_metrics;
    std::optional<cycle::CycleMetrics> test_metrics;

    // [output]
    std::filesystem::path out_dir = "out";

    std::filesystem::path resolve(const std::string& p) const;
};

/// Throws ParseError for malformed text and ValidationError for unknown
/// sections, unknown keys or bad values.
Scenario parse_scenario(std::istream& in, const std::filesystem::path& base_dir = {});
Scenario load_scenario(const std::filesystem::path& path);

/// Scenario turned into ready-to-run objects.
struct Setup {
    cycle::DriveCycle lap;
    cycle::DriveCycle cycle;
    ems::VehicleModel model;
    powertrain::GenSet genset;
    ems::RuleConfig rule;
    dpopt::DpConfig dp;
    double calibration = 1.0;
    std::optional<accounting::Calibration> calibration_report;
};

/// Loads every referenced file and checks every embedded config.
Setup build_setup(const Scenario& s);

}  // namespace hevopt::cli
