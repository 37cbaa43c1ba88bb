#include "hevopt/accounting.hpp"

#include <cmath>
#include <ostream>

#include <fmt/format.h>

#include "hevopt/errors.hpp"

namespace hevopt::accounting {

double ac_from_dc(double dc, double charging_efficiency)
{
    if (!(charging_efficiency > 0.0 && charging_efficiency <= 1.0)) {
        throw DomainError(fmt::format("charging efficiency must lie in (0, 1], got {}", charging_efficiency));
    }
    return dc / charging_efficiency;
}

double uf_weighted(double ec_cd, double ec_cs, double uf)
{
    if (!(uf >= 0.0 && uf <= 1.0)) {
        throw DomainError(fmt::format("utility factor must lie in [0, 1], got {}", uf));
    }
    if (!(ec_cd >= 0.0) || !(ec_cs >= 0.0)) {
        throw DomainError("energy consumption values must be nonnegative");
    }
    return ec_cd * uf + ec_cs * (1.0 - uf);
}

void UfReport::check() const
{
    const double sum = weighted_electric + weighted_fuel;
    if (std::abs(weighted_total - sum) > 1e-9 * std::max(1.0, std::abs(sum))) {
        throw ValidationError(fmt::format("UF report total {} is not the channel sum {}", weighted_total, sum));
    }
    if (!(uf >= 0.0 && uf <= 1.0)) {
        throw ValidationError("UF report carries a utility factor outside [0, 1]");
    }
}

UfReport make_uf_report(double ec_cd_ac, double ec_cs_fuel, double uf)
{
    UfReport r;
    r.ec_cd_ac = ec_cd_ac;
    r.ec_cs_fuel = ec_cs_fuel;
    r.uf = uf;
    r.weighted_electric = uf_weighted(ec_cd_ac, 0.0, uf);
    r.weighted_fuel = uf_weighted(0.0, ec_cs_fuel, uf);
    r.weighted_total = r.weighted_electric + r.weighted_fuel;
    r.check();
    return r;
}

UfReport make_uf_report_dc(double ec_cd_dc, double ec_cs_fuel, double uf, double charging_efficiency)
{
    return make_uf_report(ac_from_dc(ec_cd_dc, charging_efficiency), ec_cs_fuel, uf);
}

UfReport channel_totals(double weighted_fuel, double weighted_electric)
{
    if (!(weighted_fuel >= 0.0) || !(weighted_electric >= 0.0)) {
        throw DomainError("channel values must be nonnegative");
    }
    UfReport r;
    r.uf = 0.0;
    r.weighted_fuel = weighted_fuel;
    r.weighted_electric = weighted_electric;
    r.weighted_total = weighted_fuel + weighted_electric;
    r.check();
    return r;
}

Calibration calibration_factor(const cycle::CycleMetrics& sim, const cycle::CycleMetrics& test)
{
    if (!(sim.positive_propulsion_energy > 0.0)) {
        throw DomainError("simulated positive propulsion energy must be positive");
    }
    Calibration c;
    c.sim = sim;
    c.test = test;
    c.energy_scale = test.positive_propulsion_energy / sim.positive_propulsion_energy;
    if (!(c.energy_scale > 0.0)) {
        throw DomainError("test positive propulsion energy must be positive");
    }
    c.power_ratio = sim.avg_positive_power > 0.0 ? test.avg_positive_power / sim.avg_positive_power : 0.0;
    return c;
}

void write_uf_report(std::ostream& out, const std::string& label, const UfReport& r)
{
    r.check();
    out << fmt::format("[{}]\n", label);
    out << fmt::format("uf = {:.4f}\n", r.uf);
    out << fmt::format("ec_cd_ac_wh_per_km = {:.2f}\n", r.ec_cd_ac);
    out << fmt::format("ec_cs_fuel_wh_per_km = {:.2f}\n", r.ec_cs_fuel);
    out << fmt::format("weighted_fuel_wh_per_km = {:.2f}\n", r.weighted_fuel);
    out << fmt::format("weighted_electric_ac_wh_per_km = {:.2f}\n", r.weighted_electric);
    out << fmt::format("weighted_total_wh_per_km = {:.2f}\n", r.weighted_total);
}

std::string uf_csv_header()
{
    return "label,uf,ec_cd_ac,ec_cs_fuel,weighted_fuel,weighted_electric,weighted_total";
}

std::string uf_csv_row(const std::string& label, const UfReport& r)
{
    r.check();
    return fmt::format("{},{:.4f},{:.4f},{:.4f},{:.4f},{:.4f},{:.4f}", label, r.uf, r.ec_cd_ac, r.ec_cs_fuel,
                       r.weighted_fuel, r.weighted_electric, r.weighted_total);
}

void write_calibration(std::ostream& out, const Calibration& c)
{
    out << "[calibration]\n";
    out << fmt::format("sim_energy_wh_per_km = {:.2f}\n", c.sim.positive_propulsion_energy);
    out << fmt::format("test_energy_wh_per_km = {:.2f}\n", c.test.positive_propulsion_energy);
    out << fmt::format("energy_scale = {:.6f}\n", c.energy_scale);
    out << fmt::format("energy_delta_pct = {:.2f}\n", c.energy_delta_pct());
    out << fmt::format("sim_avg_positive_kw = {:.2f}\n", c.sim.avg_positive_power);
    out << fmt::format("test_avg_positive_kw = {:.2f}\n", c.test.avg_positive_power);
    out << fmt::format("avg_power_delta_pct = {:.2f}\n", c.power_delta_pct());
}

}  // namespace hevopt::accounting
