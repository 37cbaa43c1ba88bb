#include "hevopt/powertrain.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <istream>
#include <limits>
#include <numbers>
#include <ostream>
#include <string_view>

#include <fmt/format.h>

#include "hevopt/errors.hpp"

namespace hevopt::powertrain {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string_view trim(std::string_view s)
{
    const auto ws = " \t\r\n";
    const auto b = s.find_first_not_of(ws);
    if (b == std::string_view::npos) {
        return {};
    }
    return s.substr(b, s.find_last_not_of(ws) - b + 1);
}

std::vector<std::string_view> split_csv(std::string_view line)
{
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const auto comma = line.find(',', start);
        out.push_back(trim(line.substr(start, comma == std::string_view::npos ? line.npos : comma - start)));
        if (comma == std::string_view::npos) {
            break;
        }
        start = comma + 1;
    }
    return out;
}

std::optional<double> to_number(std::string_view field)
{
    double value = 0.0;
    const auto* end = field.data() + field.size();
    const auto [ptr, ec] = std::from_chars(field.data(), end, value);
    if (field.empty() || ec != std::errc{} || ptr != end || !std::isfinite(value)) {
        return std::nullopt;
    }
    return value;
}

double number_or_throw(std::string_view field, std::size_t line)
{
    if (auto v = to_number(field)) {
        return *v;
    }
    throw ParseError(fmt::format("not a number: '{}'", field), line);
}

void check_axis(const std::vector<double>& axis, const char* name)
{
    if (axis.size() < 2) {
        throw ValidationError(fmt::format("{} axis needs at least 2 points", name));
    }
    for (std::size_t i = 1; i < axis.size(); ++i) {
        if (!(axis[i] > axis[i - 1])) {
            throw ValidationError(fmt::format("{} axis not strictly ascending at index {}", name, i));
        }
    }
}

// Cell index and fractional position of x on a strictly ascending axis.
// x equal to an interior node lands on the left edge of the next cell.
std::pair<std::size_t, double> locate(std::span<const double> axis, double x)
{
    auto it = std::upper_bound(axis.begin(), axis.end(), x);
    std::size_t i = it == axis.begin() ? 0 : static_cast<std::size_t>(it - axis.begin()) - 1;
    i = std::min(i, axis.size() - 2);
    return {i, (x - axis[i]) / (axis[i + 1] - axis[i])};
}

}  // namespace

double shaft_power_w(double torque_nm, double speed_rpm)
{
    return torque_nm * speed_rpm * 2.0 * std::numbers::pi / 60.0;
}

double motor_efficiency(double torque_nm, double speed_rpm, double volts, double amps)
{
    const double electrical = volts * amps;
    if (!(electrical > 0.0)) {
        throw DomainError(fmt::format("motor electrical input must be positive, got {} W", electrical));
    }
    const double mechanical = shaft_power_w(torque_nm, speed_rpm);
    if (mechanical < 0.0) {
        throw DomainError("motor characterization must be in the motoring quadrant");
    }
    const double eta = mechanical / electrical * 100.0;
    if (eta > 100.0) {
        throw CharacterizationError(fmt::format(
            "motor efficiency {:.3f}% at {} rpm / {} Nm exceeds 100%", eta, speed_rpm, torque_nm));
    }
    return eta;
}

double engine_efficiency(double bsfc_g_per_kwh, double lhv_kwh_per_g)
{
    if (!(bsfc_g_per_kwh > 0.0) || !(lhv_kwh_per_g > 0.0)) {
        throw DomainError("BSFC and LHV must be positive");
    }
    const double eta = 100.0 / (bsfc_g_per_kwh * lhv_kwh_per_g);
    if (eta > 100.0 * (1.0 + 1e-12)) {
        throw CharacterizationError(fmt::format("engine efficiency {:.3f}% exceeds 100%", eta));
    }
    return eta;
}

double generator_efficiency(double volts, double amps, double torque_nm, double speed_rpm)
{
    const double mechanical = shaft_power_w(torque_nm, speed_rpm);
    if (!(mechanical > 0.0)) {
        throw DomainError(fmt::format("generator mechanical input must be positive, got {} W", mechanical));
    }
    const double eta = volts * amps / mechanical * 100.0;
    if (eta > 100.0) {
        throw CharacterizationError(fmt::format(
            "generator efficiency {:.3f}% at {} rpm / {} Nm exceeds 100%", eta, speed_rpm, torque_nm));
    }
    return eta;
}

EfficiencyMap::EfficiencyMap(std::vector<double> speed_axis, std::vector<double> torque_axis,
                             std::vector<std::optional<double>> values, std::string label)
    : speed_(std::move(speed_axis)), torque_(std::move(torque_axis)), label_(std::move(label))
{
    check_axis(speed_, "speed");
    check_axis(torque_, "torque");
    if (values.size() != speed_.size() * torque_.size()) {
        throw ValidationError(fmt::format("map '{}' has {} values for a {}x{} grid", label_, values.size(),
                                          speed_.size(), torque_.size()));
    }
    values_.reserve(values.size());
    for (std::size_t k = 0; k < values.size(); ++k) {
        const auto& v = values[k];
        if (v && !(*v > 0.0 && *v <= 100.0)) {
            throw ValidationError(fmt::format("map '{}' node ({}, {}) = {} outside (0, 100]", label_,
                                              speed_[k / torque_.size()], torque_[k % torque_.size()], *v));
        }
        values_.push_back(v ? *v : kNaN);
    }
}

std::size_t EfficiencyMap::feasible_count() const
{
    return static_cast<std::size_t>(std::count_if(values_.begin(), values_.end(), [](double v) { return !std::isnan(v); }));
}

double EfficiencyMap::lookup(double speed_rpm, double torque_nm) const
{
    if (!(speed_rpm >= speed_.front() && speed_rpm <= speed_.back() && torque_nm >= torque_.front() &&
          torque_nm <= torque_.back())) {
        throw RangeError(fmt::format("map '{}': ({} rpm, {} Nm) outside [{}, {}] x [{}, {}]", label_, speed_rpm,
                                     torque_nm, speed_.front(), speed_.back(), torque_.front(), torque_.back()));
    }
    const auto [i, ws] = locate(speed_, speed_rpm);
    const auto [j, wt] = locate(torque_, torque_nm);
    const double weights[4] = {(1 - ws) * (1 - wt), ws * (1 - wt), (1 - ws) * wt, ws * wt};
    const std::size_t rows[4] = {i, i + 1, i, i + 1};
    const std::size_t cols[4] = {j, j, j + 1, j + 1};
    double sum = 0.0;
    for (int k = 0; k < 4; ++k) {
        if (weights[k] == 0.0) {
            continue;
        }
        const double v = node(rows[k], cols[k]);
        if (std::isnan(v)) {
            throw InfeasibleRegionError(fmt::format("map '{}': ({} rpm, {} Nm) touches infeasible node ({}, {})",
                                                    label_, speed_rpm, torque_nm, speed_[rows[k]],
                                                    torque_[cols[k]]));
        }
        sum += weights[k] * v;
    }
    return sum;
}

bool EfficiencyMap::covers(double speed_rpm, double torque_nm) const
{
    if (!(speed_rpm >= speed_.front() && speed_rpm <= speed_.back() && torque_nm >= torque_.front() &&
          torque_nm <= torque_.back())) {
        return false;
    }
    const auto [i, ws] = locate(speed_, speed_rpm);
    const auto [j, wt] = locate(torque_, torque_nm);
    auto ok = [&](std::size_t r, std::size_t c, double w) { return w == 0.0 || feasible(r, c); };
    return ok(i, j, (1 - ws) * (1 - wt)) && ok(i + 1, j, ws * (1 - wt)) && ok(i, j + 1, (1 - ws) * wt) &&
           ok(i + 1, j + 1, ws * wt);
}

double EfficiencyMap::max_torque(double speed_rpm, double sign) const
{
    if (!(speed_rpm >= speed_.front() && speed_rpm <= speed_.back())) {
        return 0.0;
    }
    const auto [i, ws] = locate(speed_, speed_rpm);
    auto column_ok = [&](std::size_t j) {
        return (ws == 1.0 || feasible(i, j)) && (ws == 0.0 || feasible(i + 1, j));
    };
    const std::size_t n = torque_.size();
    double best = 0.0;
    if (sign >= 0.0) {
        if (torque_.back() <= 0.0) {
            return 0.0;
        }
        auto first = static_cast<std::size_t>(std::lower_bound(torque_.begin(), torque_.end(), 0.0) - torque_.begin());
        if (torque_[first] > 0.0 && first > 0 && !column_ok(first - 1)) {
            return 0.0;
        }
        for (std::size_t j = first; j < n && column_ok(j); ++j) {
            best = torque_[j];
        }
    } else {
        if (torque_.front() >= 0.0) {
            return 0.0;
        }
        auto first = static_cast<std::size_t>(std::upper_bound(torque_.begin(), torque_.end(), 0.0) - torque_.begin());
        // first is the first node > 0; walk downward from the node at or below 0.
        std::size_t j = first - 1;
        if (torque_[j] < 0.0 && first < n && !column_ok(first)) {
            return 0.0;
        }
        while (column_ok(j)) {
            best = -torque_[j];
            if (j == 0) {
                break;
            }
            --j;
        }
    }
    return best;
}

EfficiencyMap merge_gen_set(const EfficiencyMap& engine, const EfficiencyMap& generator, double belt_ratio,
                            double belt_efficiency)
{
    if (!(belt_ratio > 0.0)) {
        throw DomainError(fmt::format("belt ratio must be positive, got {}", belt_ratio));
    }
    if (!(belt_efficiency > 0.0 && belt_efficiency <= 1.0)) {
        throw DomainError(fmt::format("belt efficiency must lie in (0, 1], got {}", belt_efficiency));
    }
    const auto speeds = engine.speed_axis();
    const auto torques = engine.torque_axis();
    std::vector<std::optional<double>> values;
    values.reserve(speeds.size() * torques.size());
    std::size_t feasible = 0;
    for (std::size_t i = 0; i < speeds.size(); ++i) {
        for (std::size_t j = 0; j < torques.size(); ++j) {
            const double gen_speed = speeds[i] * belt_ratio;
            const double gen_torque = torques[j] / belt_ratio;
            if (!engine.feasible(i, j) || !generator.covers(gen_speed, gen_torque)) {
                values.emplace_back();
                continue;
            }
            values.emplace_back(engine.node(i, j) * generator.lookup(gen_speed, gen_torque) / 100.0 *
                                belt_efficiency);
            ++feasible;
        }
    }
    if (feasible == 0) {
        throw DomainError(
            fmt::format("engine map '{}' and generator map '{}' share no feasible operating point", engine.label(),
                        generator.label()));
    }
    return EfficiencyMap({speeds.begin(), speeds.end()}, {torques.begin(), torques.end()}, std::move(values),
                         "gen-set(" + engine.label() + " x " + generator.label() + ")");
}

EfficiencyMap load_map(std::istream& in, std::string label)
{
    std::vector<double> torque_axis;
    std::vector<double> speed_axis;
    std::vector<std::optional<double>> values;
    std::string raw;
    std::size_t line_no = 0;
    while (std::getline(in, raw)) {
        ++line_no;
        const auto line = trim(raw);
        if (line.empty() || line.front() == '#') {
            continue;
        }
        const auto fields = split_csv(line);
        if (torque_axis.empty()) {
            if (fields.size() < 3) {
                throw ParseError("header row needs a corner cell and at least 2 torque values", line_no);
            }
            for (std::size_t k = 1; k < fields.size(); ++k) {
                torque_axis.push_back(number_or_throw(fields[k], line_no));
            }
            continue;
        }
        if (fields.size() != torque_axis.size() + 1) {
            throw ParseError(
                fmt::format("expected {} fields, got {}", torque_axis.size() + 1, fields.size()), line_no);
        }
        speed_axis.push_back(number_or_throw(fields[0], line_no));
        for (std::size_t k = 1; k < fields.size(); ++k) {
            if (fields[k].empty()) {
                values.emplace_back();
            } else {
                values.emplace_back(number_or_throw(fields[k], line_no));
            }
        }
    }
    if (torque_axis.empty()) {
        throw ParseError("empty map file", line_no);
    }
    return EfficiencyMap(std::move(speed_axis), std::move(torque_axis), std::move(values), std::move(label));
}

EfficiencyMap load_map_file(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) {
        throw IoError(fmt::format("cannot open map file '{}'", path.string()));
    }
    try {
        return load_map(in, path.stem().string());
    } catch (const ParseError& e) {
        throw ParseError(fmt::format("{}: {}", path.string(), e.what()), 0);
    }
}

void write_map(std::ostream& out, const EfficiencyMap& map)
{
    out << "rpm/Nm";
    for (double t : map.torque_axis()) {
        out << fmt::format(",{:g}", t);
    }
    out << '\n';
    const auto speeds = map.speed_axis();
    for (std::size_t i = 0; i < speeds.size(); ++i) {
        out << fmt::format("{:g}", speeds[i]);
        for (std::size_t j = 0; j < map.torque_axis().size(); ++j) {
            out << ',';
            if (map.feasible(i, j)) {
                out << fmt::format("{:.6f}", map.node(i, j));
            }
        }
        out << '\n';
    }
}

std::vector<CharacterizationRow> load_characterization(std::istream& in)
{
    std::vector<CharacterizationRow> rows;
    std::string raw;
    std::size_t line_no = 0;
    bool first = true;
    while (std::getline(in, raw)) {
        ++line_no;
        const auto line = trim(raw);
        if (line.empty() || line.front() == '#') {
            continue;
        }
        const auto fields = split_csv(line);
        if (first) {
            first = false;
            if (fields.size() == 4 && fields[0] == "omega_rpm" && fields[1] == "T_Nm" && fields[2] == "V_volts" &&
                fields[3] == "I_amps") {
                continue;
            }
        }
        if (fields.size() != 4) {
            throw ParseError(fmt::format("expected 4 fields, got {}", fields.size()), line_no);
        }
        rows.push_back({number_or_throw(fields[0], line_no), number_or_throw(fields[1], line_no),
                        number_or_throw(fields[2], line_no), number_or_throw(fields[3], line_no)});
    }
    return rows;
}

EfficiencyMap map_from_characterization(std::span<const CharacterizationRow> rows, MachineKind kind,
                                        std::string label)
{
    std::vector<double> speeds;
    std::vector<double> torques;
    for (const auto& r : rows) {
        speeds.push_back(r.speed_rpm);
        torques.push_back(r.torque_nm);
    }
    std::sort(speeds.begin(), speeds.end());
    speeds.erase(std::unique(speeds.begin(), speeds.end()), speeds.end());
    std::sort(torques.begin(), torques.end());
    torques.erase(std::unique(torques.begin(), torques.end()), torques.end());

    std::vector<std::optional<double>> values(speeds.size() * torques.size());
    for (const auto& r : rows) {
        const auto i = static_cast<std::size_t>(std::lower_bound(speeds.begin(), speeds.end(), r.speed_rpm) - speeds.begin());
        const auto j = static_cast<std::size_t>(std::lower_bound(torques.begin(), torques.end(), r.torque_nm) - torques.begin());
        auto& slot = values[i * torques.size() + j];
        if (slot) {
            throw ValidationError(
                fmt::format("duplicate characterization point ({} rpm, {} Nm)", r.speed_rpm, r.torque_nm));
        }
        const double eta = kind == MachineKind::motor
                               ? motor_efficiency(r.torque_nm, r.speed_rpm, r.volts, r.amps)
                               : generator_efficiency(r.volts, r.amps, r.torque_nm, r.speed_rpm);
        // Zero-output points carry no usable efficiency.
        if (eta > 0.0) {
            slot = eta;
        }
    }
    return EfficiencyMap(std::move(speeds), std::move(torques), std::move(values), std::move(label));
}

namespace {

std::vector<double> axis(double lo, double hi, double step)
{
    std::vector<double> out;
    const auto n = static_cast<int>(std::lround((hi - lo) / step));
    for (int k = 0; k <= n; ++k) {
        out.push_back(lo + step * k);
    }
    return out;
}

}  // namespace

EfficiencyMap synthetic_motor_map(const SyntheticMotorSpec& spec)
{
    const auto speeds = axis(0.0, spec.max_speed_rpm, 500.0);
    const auto torques = axis(-400.0, 400.0, 20.0);
    std::vector<std::optional<double>> values;
    for (double s : speeds) {
        for (double t : torques) {
            const double kw = shaft_power_w(std::abs(t), s) / 1000.0;
            if (std::abs(t) > spec.peak_torque_nm || kw > spec.peak_power_kw) {
                values.emplace_back();
                continue;
            }
            const double x = (s - 0.375 * spec.max_speed_rpm) / (0.5 * spec.max_speed_rpm);
            const double y = (std::abs(t) - 110.0) / 300.0;
            double eta = spec.peak_efficiency - 14.0 * x * x - 12.0 * y * y - 30.0 * std::exp(-kw / 2.5);
            values.emplace_back(std::clamp(eta, 40.0, spec.peak_efficiency));
        }
    }
    return EfficiencyMap(speeds, torques, std::move(values), "synthetic-motor");
}

EfficiencyMap synthetic_engine_map(const SyntheticEngineSpec& spec)
{
    const auto speeds = axis(1000.0, 3600.0, 200.0);
    const auto torques = axis(0.0, 200.0, 10.0);
    const double bsfc_best = 100.0 / (spec.peak_efficiency * spec.lhv);
    std::vector<std::optional<double>> values;
    for (double s : speeds) {
        for (double t : torques) {
            const double kw = shaft_power_w(t, s) / 1000.0;
            if (t > spec.peak_torque_nm || kw > spec.peak_power_kw) {
                values.emplace_back();
                continue;
            }
            const double x = (s - 2200.0) / 1600.0;
            const double y = (t - 150.0) / 150.0;
            const double shape = std::max((1.0 - 0.30 * x * x - 0.35 * y * y) * (1.0 - std::exp(-kw / 3.0)), 0.05);
            values.emplace_back(engine_efficiency(bsfc_best / shape, spec.lhv));
        }
    }
    return EfficiencyMap(speeds, torques, std::move(values), "synthetic-engine");
}

EfficiencyMap synthetic_generator_map(const SyntheticGeneratorSpec& spec)
{
    const auto speeds = axis(0.0, 12000.0, 500.0);
    const auto torques = axis(0.0, 100.0, 5.0);
    std::vector<std::optional<double>> values;
    for (double s : speeds) {
        for (double t : torques) {
            const double kw = shaft_power_w(t, s) / 1000.0;
            if (kw > spec.peak_power_kw) {
                values.emplace_back();
                continue;
            }
            const double x = (s - 6000.0) / 6000.0;
            const double y = (t - 50.0) / 60.0;
            const double eta = (spec.peak_efficiency - 10.0 * x * x - 8.0 * y * y) * (1.0 - 0.5 * std::exp(-kw / 2.0));
            values.emplace_back(std::clamp(eta, 40.0, spec.peak_efficiency));
        }
    }
    return EfficiencyMap(speeds, torques, std::move(values), "synthetic-generator");
}

GenSet::GenSet(EfficiencyMap engine, EfficiencyMap generator, double belt_ratio, double belt_efficiency)
    : engine_(std::move(engine)),
      generator_(std::move(generator)),
      belt_ratio_(belt_ratio),
      belt_efficiency_(belt_efficiency),
      merged_(merge_gen_set(engine_, generator_, belt_ratio, belt_efficiency))
{
}

GenSetPoint GenSet::point_at(double engine_speed, double engine_torque) const
{
    const double gen_eta = generator_.lookup(engine_speed * belt_ratio_, engine_torque / belt_ratio_);
    GenSetPoint p;
    p.engine_speed = engine_speed;
    p.engine_torque = engine_torque;
    p.combined_efficiency = merged_.lookup(engine_speed, engine_torque);
    p.electrical_power = shaft_power_w(engine_torque, engine_speed) / 1000.0 * belt_efficiency_ * gen_eta / 100.0;
    return p;
}

GenSetPoint GenSet::point_for_power(double engine_speed, double electrical_kw) const
{
    if (!(electrical_kw > 0.0)) {
        throw DomainError("gen-set electrical power must be positive");
    }
    const double t_max = merged_.max_torque(engine_speed, 1.0);
    if (!(t_max > 0.0) || point_at(engine_speed, t_max).electrical_power < electrical_kw) {
        throw DomainError(
            fmt::format("gen-set cannot deliver {} kW at {} rpm", electrical_kw, engine_speed));
    }
    double lo = 0.0;
    double hi = t_max;
    for (int k = 0; k < 100 && hi - lo > 1e-12; ++k) {
        const double mid = 0.5 * (lo + hi);
        if (point_at(engine_speed, mid).electrical_power < electrical_kw) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    return point_at(engine_speed, hi);
}

void BatteryParams::validate() const
{
    if (!(capacity_kwh > 0.0)) {
        throw DomainError("battery capacity must be positive");
    }
    if (!(r_internal >= 0.0)) {
        throw DomainError("internal resistance must be nonnegative");
    }
    if (ocv_curve.empty()) {
        throw DomainError("open-circuit voltage curve is empty");
    }
    for (std::size_t k = 0; k < ocv_curve.size(); ++k) {
        if (!(ocv_curve[k].second > 0.0)) {
            throw DomainError("open-circuit voltages must be positive");
        }
        if (k > 0 && !(ocv_curve[k].first > ocv_curve[k - 1].first)) {
            throw DomainError("open-circuit voltage curve SOC points must ascend");
        }
        if (k > 0 && ocv_curve[k].second < ocv_curve[k - 1].second) {
            throw DomainError("open-circuit voltage must be nondecreasing in SOC");
        }
    }
}

double BatteryParams::ocv(double soc) const
{
    if (soc <= ocv_curve.front().first) {
        return ocv_curve.front().second;
    }
    if (soc >= ocv_curve.back().first) {
        return ocv_curve.back().second;
    }
    const auto it = std::upper_bound(ocv_curve.begin(), ocv_curve.end(), soc,
                                     [](double x, const auto& p) { return x < p.first; });
    const auto& hi = *it;
    const auto& lo = *(it - 1);
    return lo.second + (soc - lo.first) / (hi.first - lo.first) * (hi.second - lo.second);
}

double battery_power(const BatteryParams& b, double soc, double amps)
{
    if (!(soc >= 0.0 && soc <= 100.0)) {
        throw DomainError(fmt::format("SOC {} outside [0, 100]", soc));
    }
    return (b.r_internal * amps * amps + b.ocv(soc) * amps) / 1000.0;
}

double terminal_power(const BatteryParams& b, double soc, double amps)
{
    return (b.ocv(soc) * amps - b.r_internal * amps * amps) / 1000.0;
}

std::optional<double> current_for_terminal_power(const BatteryParams& b, double soc, double terminal_kw)
{
    const double p = terminal_kw * 1000.0;
    const double v = b.ocv(soc);
    if (b.r_internal == 0.0) {
        return p / v;
    }
    const double disc = v * v - 4.0 * b.r_internal * p;
    if (disc < 0.0) {
        return std::nullopt;
    }
    // Smaller-magnitude root of R*I^2 - V*I + P = 0, written without cancellation.
    return 2.0 * p / (v + std::sqrt(disc));
}

double soc_delta(const BatteryParams& b, double ocv_power_w, double dt)
{
    return -ocv_power_w * dt / (3.6e6 * b.capacity_kwh) * 100.0;
}

SocResult integrate_soc(const BatteryParams& b, double start_soc, std::span<const CurrentSample> current)
{
    if (!(start_soc >= 0.0 && start_soc <= 100.0)) {
        throw DomainError(fmt::format("start SOC {} outside [0, 100]", start_soc));
    }
    double soc = start_soc;
    for (std::size_t k = 1; k < current.size(); ++k) {
        const double dt = current[k].t - current[k - 1].t;
        const double amps = 0.5 * (current[k].amps + current[k - 1].amps);
        soc += soc_delta(b, b.ocv(soc) * amps, dt);
    }
    SocResult r;
    r.clamped = soc < 0.0 || soc > 100.0;
    r.soc = std::clamp(soc, 0.0, 100.0);
    return r;
}

}  // namespace hevopt::powertrain
