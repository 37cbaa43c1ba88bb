#include <doctest.h>

#include <cmath>
#include <random>

#include "hevopt/dynamics.hpp"
#include "hevopt/errors.hpp"
#include "support.hpp"

using namespace hevopt;
using namespace hevopt::dynamics;

namespace {

VehicleParams lossless()
{
    VehicleParams p;
    p.crr = 0.0;
    p.cda = 0.0;
    p.inertia_factor = 1.0;
    return p;
}

double trapezoid_kwh(const std::vector<cycle::PowerSample>& p, std::size_t a, std::size_t b)
{
    double e = 0.0;
    for (std::size_t i = a + 1; i <= b; ++i) {
        e += 0.5 * (p[i].kw + p[i - 1].kw) * (p[i].t - p[i - 1].t);
    }
    return e / 3600.0;
}

}  // namespace

TEST_CASE("tractive_force: steady 20 m/s at test mass")
{
    VehicleParams p;
    // aero 0.5*1.2*0.75*400 = 180, rolling 2800*9.81*0.009 = 247.212
    CHECK(tractive_force(p, 2800.0, 20.0, 0.0, 0.0) == doctest::Approx(427.212).epsilon(1e-12));
}

TEST_CASE("tractive_force: rest and grade")
{
    VehicleParams p;
    CHECK(tractive_force(p, 2800.0, 0.0, 0.0, 0.0) == 0.0);
    CHECK(tractive_force(p, 2800.0, 0.0, 0.0, 5.0) == doctest::Approx(2393.994).epsilon(1e-6));
    CHECK(tractive_force(p, 2800.0, 0.05, 0.0, 0.0) == doctest::Approx(0.5 * 1.2 * 0.75 * 0.05 * 0.05));  // below idle speed: aero only
}

TEST_CASE("tractive_force: domain errors")
{
    VehicleParams p;
    CHECK_THROWS_AS(tractive_force(p, 2800.0, -1.0, 0.0, 0.0), DomainError);
    CHECK_THROWS_AS(tractive_force(p, 0.0, 1.0, 0.0, 0.0), DomainError);
}

TEST_CASE("VehicleParams::validate")
{
    VehicleParams p;
    CHECK_NOTHROW(p.validate());
    p.test_mass = p.mass - 1.0;
    CHECK_THROWS_AS(p.validate(), DomainError);
    p = {};
    p.inertia_factor = 0.99;
    CHECK_THROWS_AS(p.validate(), DomainError);
    p = {};
    p.crr = 0.1;
    CHECK_THROWS_AS(p.validate(), DomainError);
}

TEST_CASE("wheel_power_series basics")
{
    VehicleParams p;
    const auto steady = wheel_power_series(p, support::make_cycle(std::vector<double>(50, 20.0)), 2800.0);
    for (const auto& s : steady) {
        CHECK(s.kw == doctest::Approx(8.54424).epsilon(1e-12));
    }
    const auto zero = wheel_power_series(p, support::make_cycle(std::vector<double>(10, 0.0)), 2800.0);
    for (const auto& s : zero) {
        CHECK(s.kw == 0.0);
    }
}

TEST_CASE("wheel_power_series: symmetric triangle on a lossless vehicle")
{
    std::vector<double> v;
    for (int i = 0; i <= 20; ++i) {
        v.push_back(i);
    }
    for (int i = 19; i >= 0; --i) {
        v.push_back(i);
    }
    const auto p = wheel_power_series(lossless(), support::make_cycle(v), 2800.0);
    double pos = 0.0;
    double neg = 0.0;
    for (std::size_t i = 1; i < p.size(); ++i) {
        const double e = 0.5 * (p[i].kw + p[i - 1].kw);
        (e >= 0.0 ? pos : neg) += e;
    }
    CHECK(support::rel_diff(pos, -neg) < 1e-9);
}

TEST_CASE("energy audit: integral of wheel power is the kinetic-energy change")
{
    const auto p = lossless();
    const double m = 2800.0;
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> accel(0.2, 1.5);
    for (int trial = 0; trial < 20; ++trial) {
        // smooth ramp: constant acceleration from v1 for 30 s
        const double v1 = 2.0 + trial;
        const double a = accel(rng);
        std::vector<double> v;
        for (int i = 0; i <= 30; ++i) {
            v.push_back(v1 + a * i);
        }
        const auto c = support::make_cycle(v);
        const auto w = wheel_power_series(p, c, m);
        const double ke_kwh = 0.5 * m * (v.back() * v.back() - v.front() * v.front()) / 3.6e6;
        CAPTURE(trial);
        CHECK(support::rel_diff(trapezoid_kwh(w, 0, w.size() - 1), ke_kwh) < 1e-3);
    }
}

TEST_CASE("monotone in mass, quadratic aero")
{
    VehicleParams p;
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> v(0.0, 40.0);
    std::uniform_real_distribution<double> a(0.0, 3.0);
    std::uniform_real_distribution<double> g(0.0, 8.0);
    for (int i = 0; i < 200; ++i) {
        const double vi = v(rng);
        const double ai = a(rng);
        const double gi = g(rng);
        CHECK(tractive_force(p, 2800.0, vi, ai, gi) >= tractive_force(p, 2100.0, vi, ai, gi));
    }
    VehicleParams q;
    q.crr = 0.0;
    for (double vi : {3.0, 11.0, 27.5}) {
        const double aero = 0.5 * q.air_density * q.cda * vi * vi;
        CHECK(tractive_force(q, 2800.0, 2 * vi, 0.0, 0.0) - tractive_force(q, 2800.0, vi, 0.0, 0.0) ==
              doctest::Approx(3.0 * aero).epsilon(1e-12));
    }
}
