#pragma once

#include <vector>

#include "hevopt/cycle.hpp"

namespace hevopt::dynamics {

/// Road-load parameters. Defaults are the test vehicle: 2100 kg curb,
/// 2800 kg with occupants and trailer, CdA 0.75 m^2, Crr 0.009.
struct VehicleParams {
    double mass = 2100.0;       // kg, curb
    double test_mass = 2800.0;  // kg, as driven
    double inertia_factor = 1.04;
    double cda = 0.75;          // m^2
    double crr = 0.009;
    double air_density = 1.20;  // kg/m^3
    double gravity = 9.81;      // N/kg
    double idle_speed = cycle::kIdleSpeed;

    /// Throws DomainError on an out-of-range field.
    void validate() const;
};

/// Force at the wheels needed to follow (v, accel) on `grade_deg`. Rolling
/// resistance only acts above the idle speed.
double tractive_force(const VehicleParams& p, double mass, double v, double accel, double grade_deg);

/// dv/dt at every sample: central differences inside, one-sided at the ends.
std::vector<double> acceleration_series(const cycle::DriveCycle& c);

/// Tractive force at every sample for the given mass.
std::vector<double> force_series(const VehicleParams& p, const cycle::DriveCycle& c, double mass);

/// Wheel power at every sample, kW. Braking samples stay negative.
std::vector<cycle::PowerSample> wheel_power_series(const VehicleParams& p, const cycle::DriveCycle& c,
                                                   double mass);

}  // namespace hevopt::dynamics
