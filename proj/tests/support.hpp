#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "hevopt/cycle.hpp"
#include "hevopt/dpopt.hpp"
#include "hevopt/powertrain.hpp"

namespace support {

inline double rel_diff(double a, double b)
{
    return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-300});
}

inline hevopt::cycle::DriveCycle make_cycle(const std::vector<double>& v, double dt = 1.0)
{
    std::vector<hevopt::cycle::Sample> s;
    for (std::size_t i = 0; i < v.size(); ++i) {
        s.push_back({static_cast<double>(i) * dt, v[i], 0.0});
    }
    return hevopt::cycle::DriveCycle(std::move(s), "test");
}

inline hevopt::powertrain::GenSet synthetic_genset()
{
    return {hevopt::powertrain::synthetic_engine_map(), hevopt::powertrain::synthetic_generator_map(), 2.7};
}

/// Null action plus the three default increments at 2400 rpm.
inline hevopt::dpopt::DpConfig default_dp()
{
    hevopt::dpopt::DpConfig cfg;
    cfg.decisions = hevopt::dpopt::decisions_from_genset(synthetic_genset(), 2400.0, {0.051, 0.294, 0.567}, 18.9, 10.0);
    return cfg;
}

struct Instance {
    hevopt::dpopt::DemandProfile demand;
    double initial_soc = 14.0;
};

/// Random CS instance: N in [4, 10], drain ~ U(0, 0.35) %, start ~ U(12.5, 15.5) %.
inline Instance random_instance(std::uint64_t seed)
{
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<int> nd(4, 10);
    std::uniform_real_distribution<double> dd(0.0, 0.35);
    std::uniform_real_distribution<double> s0(12.5, 15.5);
    Instance in;
    in.demand.dt = 10.0;
    in.demand.distance_km = 1.0;
    const int n = nd(rng);
    for (int i = 0; i < n; ++i) {
        in.demand.drain.push_back(dd(rng));
    }
    in.initial_soc = s0(rng);
    return in;
}

}  // namespace support
