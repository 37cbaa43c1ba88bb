#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "hevopt/accounting.hpp"
#include "hevopt/dpopt.hpp"
#include "hevopt/ems.hpp"
#include "hevopt/scenario.hpp"

namespace hevopt::cli {

enum class Strategy { rule, dp };

/// Command-line values that take precedence over the scenario file.
struct Overrides {
    std::optional<std::filesystem::path> out_dir;
    std::optional<double> grid_step;
    std::optional<std::uint64_t> seed;
};

void apply(Scenario& s, const Overrides& o);

struct AnalyzeReport {
    std::string cycle_name;
    double distance_km = 0.0;
    double duration_s = 0.0;
    cycle::CycleMetrics metrics;
    std::optional<accounting::Calibration> calibration;
};

AnalyzeReport analyze(const Setup& setup);

/// Charge-sustaining part of a run: the DP takes over from the instant the
/// rule strategy enters CS.
struct DpRun {
    double entry_time = 0.0;
    double entry_soc = 0.0;
    dpopt::DemandProfile demand;
    dpopt::DpConfig config;
    dpopt::DpPolicy policy;
    dpopt::Trajectory trajectory;
    ems::EnergyResult energy;
};

/// Throws InfeasibleError when the run never reaches CS or the CS part is
/// shorter than one decision interval.
DpRun run_dp(const Setup& setup, const ems::SimResult& rule);

struct CompareReport {
    accounting::UfReport rule;
    accounting::UfReport dp;
    ems::EnergyResult rule_energy;
    ems::EnergyResult dp_energy;
};

CompareReport make_compare(const ems::EnergyResult& rule, const ems::EnergyResult& dp, double uf,
                           double charging_efficiency);

// Each command writes its data files under the scenario's output directory
// and returns the list of files written.
std::vector<std::filesystem::path> cmd_analyze(const Scenario& s);
std::vector<std::filesystem::path> cmd_simulate(const Scenario& s, Strategy strategy);
std::vector<std::filesystem::path> cmd_compare(const Scenario& s);
std::vector<std::filesystem::path> cmd_obd(const Scenario& s);

}  // namespace hevopt::cli
