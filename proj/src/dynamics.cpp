#include "hevopt/dynamics.hpp"

#include <cmath>
#include <numbers>

#include <fmt/format.h>

#include "hevopt/errors.hpp"

namespace hevopt::dynamics {

void VehicleParams::validate() const
{
    auto require = [](bool ok, const char* what) {
        if (!ok) {
            throw DomainError(fmt::format("vehicle: {}", what));
        }
    };
    require(mass > 0.0, "mass must be positive");
    require(test_mass >= mass, "test mass must be >= curb mass");
    require(inertia_factor >= 1.0, "rotating inertia factor must be >= 1");
    require(cda > 0.0, "CdA must be positive");
    require(crr > 0.0 && crr < 0.1, "Crr must lie in (0, 0.1)");
    require(air_density > 0.0, "air density must be positive");
    require(gravity > 0.0, "gravity must be positive");
    require(idle_speed >= 0.0, "idle speed must be nonnegative");
}

double tractive_force(const VehicleParams& p, double mass, double v, double accel, double grade_deg)
{
    if (!(v >= 0.0)) {
        throw DomainError(fmt::format("speed must be nonnegative, got {}", v));
    }
    if (!(mass > 0.0)) {
        throw DomainError(fmt::format("mass must be positive, got {}", mass));
    }
    const double grade = grade_deg * std::numbers::pi / 180.0;
    const double inertial = mass * p.inertia_factor * accel;
    const double climbing = mass * p.gravity * std::sin(grade);
    const double aero = 0.5 * p.air_density * p.cda * v * v;
    const double rolling = v > p.idle_speed ? mass * p.gravity * p.crr : 0.0;
    return inertial + climbing + aero + rolling;
}

std::vector<double> acceleration_series(const cycle::DriveCycle& c)
{
    const auto s = c.samples();
    const std::size_t n = s.size();
    std::vector<double> a(n);
    a.front() = (s[1].v - s[0].v) / (s[1].t - s[0].t);
    a.back() = (s[n - 1].v - s[n - 2].v) / (s[n - 1].t - s[n - 2].t);
    for (std::size_t i = 1; i + 1 < n; ++i) {
        a[i] = (s[i + 1].v - s[i - 1].v) / (s[i + 1].t - s[i - 1].t);
    }
    return a;
}

std::vector<double> force_series(const VehicleParams& p, const cycle::DriveCycle& c, double mass)
{
    const auto accel = acceleration_series(c);
    std::vector<double> f(c.size());
    for (std::size_t i = 0; i < c.size(); ++i) {
        f[i] = tractive_force(p, mass, c[i].v, accel[i], c[i].grade);
    }
    return f;
}

std::vector<cycle::PowerSample> wheel_power_series(const VehicleParams& p, const cycle::DriveCycle& c,
                                                   double mass)
{
    const auto f = force_series(p, c, mass);
    std::vector<cycle::PowerSample> out(c.size());
    for (std::size_t i = 0; i < c.size(); ++i) {
        out[i] = {c[i].t, f[i] * c[i].v / 1000.0};
    }
    return out;
}

}  // namespace hevopt::dynamics
