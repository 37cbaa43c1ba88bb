#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace hevopt::cycle {

/// Speeds below this count as standing still (idle time, rolling-resistance gate).
inline constexpr double kIdleSpeed = 0.1;  // m/s

struct Sample {
    double t = 0.0;      // s
    double v = 0.0;      // m/s
    double grade = 0.0;  // degrees
};

/// A validated, immutable speed/grade trace. Time starts at zero and is
/// strictly increasing; speeds are nonnegative.
class DriveCycle {
public:
    /// Throws ValidationError when an invariant does not hold.
    explicit DriveCycle(std::vector<Sample> samples, std::string name = {});

    std::span<const Sample> samples() const noexcept { return samples_; }
    std::size_t size() const noexcept { return samples_.size(); }
    const Sample& operator[](std::size_t i) const { return samples_[i]; }
    const std::string& name() const noexcept { return name_; }
    double duration() const noexcept { return samples_.back().t; }
    double distance_km() const noexcept { return distance_km_; }

private:
    std::vector<Sample> samples_;
    std::string name_;
    double distance_km_ = 0.0;
};

/// Trapezoidal integral of speed over time, in km.
double trapezoid_distance_km(std::span<const Sample> samples);

/// Parses the `t_s,v_mps[,grade_deg]` text format.
DriveCycle load_cycle(std::istream& in, std::string name = {});
DriveCycle load_cycle_file(const std::filesystem::path& path);
void write_cycle(std::ostream& out, const DriveCycle& c);

/// Concatenates `n` laps end to end. Each lap must end at the speed it
/// starts with; the shared boundary sample is emitted once.
DriveCycle repeat_cycle(const DriveCycle& c, int n);

/// Portion of `c` within [t_begin, t_end], rebased to start at zero.
/// Boundaries falling between samples are linearly interpolated.
DriveCycle slice_cycle(const DriveCycle& c, double t_begin, double t_end);

struct PowerSample {
    double t = 0.0;   // s
    double kw = 0.0;  // wheel power, kW (negative while braking)
};

struct CycleMetrics {
    double positive_propulsion_energy = 0.0;  // Wh/km
    double peak_power = 0.0;                  // kW
    double avg_positive_power = 0.0;          // kW
    double percent_idle = 0.0;                // %
};

/// Wheel-level characterization of a trace. Averages are time weighted:
/// each sample carries half of each adjacent interval.
CycleMetrics compute_metrics(std::span<const PowerSample> power, std::span<const double> speeds,
                             double distance_km, double idle_speed = kIdleSpeed);

struct SyntheticCycleOptions {
    /// 0 selects the canonical blended cycle; any other value draws a
    /// randomized variant of the same phase structure.
    std::uint64_t seed = 0;
    double target_distance_km = 22.55;
    std::string name;
};

/// Blended urban / highway / aggressive 1-Hz cycle that starts and ends at
/// rest, scaled so its distance equals `target_distance_km`.
DriveCycle synthetic_cycle(const SyntheticCycleOptions& opts = {});

}  // namespace hevopt::cycle
