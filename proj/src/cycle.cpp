#include "hevopt/cycle.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <numbers>
#include <ostream>
#include <random>
#include <string_view>

#include <fmt/format.h>

#include "hevopt/errors.hpp"

namespace hevopt::cycle {

namespace {

void validate(std::span<const Sample> samples)
{
    if (samples.size() < 2) {
        throw ValidationError("drive cycle needs at least 2 samples");
    }
    if (samples.front().t != 0.0) {
        throw ValidationError("drive cycle must start at t = 0");
    }
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const auto& s = samples[i];
        if (!std::isfinite(s.t) || !std::isfinite(s.v) || !std::isfinite(s.grade)) {
            throw ValidationError(fmt::format("sample {} is not finite", i));
        }
        if (s.v < 0.0) {
            throw ValidationError(fmt::format("negative speed {} at sample {}", s.v, i));
        }
        if (i > 0 && !(s.t > samples[i - 1].t)) {
            throw ValidationError(fmt::format("time not strictly increasing at sample {}", i));
        }
    }
}

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

double parse_number(std::string_view field, std::size_t line)
{
    double value = 0.0;
    const auto* end = field.data() + field.size();
    const auto [ptr, ec] = std::from_chars(field.data(), end, value);
    if (field.empty() || ec != std::errc{} || ptr != end || !std::isfinite(value)) {
        throw ParseError(fmt::format("not a number: '{}'", field), line);
    }
    return value;
}

}  // namespace

DriveCycle::DriveCycle(std::vector<Sample> samples, std::string name)
    : samples_(std::move(samples)), name_(std::move(name))
{
    validate(samples_);
    distance_km_ = trapezoid_distance_km(samples_);
}

double trapezoid_distance_km(std::span<const Sample> samples)
{
    double meters = 0.0;
    for (std::size_t i = 1; i < samples.size(); ++i) {
        meters += 0.5 * (samples[i].v + samples[i - 1].v) * (samples[i].t - samples[i - 1].t);
    }
    return meters / 1000.0;
}

DriveCycle load_cycle(std::istream& in, std::string name)
{
    std::vector<Sample> samples;
    std::string raw;
    std::size_t line_no = 0;
    std::size_t columns = 0;

    while (std::getline(in, raw)) {
        ++line_no;
        const auto line = trim(raw);
        if (line.empty() || line.front() == '#') {
            continue;
        }
        const auto fields = split_csv(line);
        if (columns == 0) {
            const bool two = fields.size() == 2 && fields[0] == "t_s" && fields[1] == "v_mps";
            const bool three = fields.size() == 3 && fields[0] == "t_s" && fields[1] == "v_mps" &&
                               fields[2] == "grade_deg";
            if (!two && !three) {
                throw ParseError("expected header 't_s,v_mps[,grade_deg]'", line_no);
            }
            columns = fields.size();
            continue;
        }
        if (fields.size() != columns) {
            throw ParseError(fmt::format("expected {} fields, got {}", columns, fields.size()), line_no);
        }
        Sample s;
        s.t = parse_number(fields[0], line_no);
        s.v = parse_number(fields[1], line_no);
        s.grade = columns == 3 ? parse_number(fields[2], line_no) : 0.0;
        if (s.v < 0.0) {
            throw ValidationError(fmt::format("negative speed {} (line {})", s.v, line_no));
        }
        if (!samples.empty() && !(s.t > samples.back().t)) {
            throw ValidationError(fmt::format("time not strictly increasing (line {})", line_no));
        }
        samples.push_back(s);
    }
    if (columns == 0) {
        throw ParseError("missing header", line_no);
    }
    if (samples.size() < 2) {
        throw ValidationError(fmt::format("cycle has {} samples, need at least 2", samples.size()));
    }
    // Traces logged with a nonzero clock start are rebased.
    const double t0 = samples.front().t;
    if (t0 != 0.0) {
        for (auto& s : samples) {
            s.t -= t0;
        }
    }
    return DriveCycle(std::move(samples), std::move(name));
}

DriveCycle load_cycle_file(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) {
        throw IoError(fmt::format("cannot open cycle file '{}'", path.string()));
    }
    try {
        return load_cycle(in, path.stem().string());
    } catch (const ParseError& e) {
        throw ParseError(fmt::format("{}: {}", path.string(), e.what()), 0);
    } catch (const ValidationError& e) {
        throw ValidationError(fmt::format("{}: {}", path.string(), e.what()));
    }
}

void write_cycle(std::ostream& out, const DriveCycle& c)
{
    out << "t_s,v_mps,grade_deg\n";
    for (const auto& s : c.samples()) {
        out << fmt::format("{:.6f},{:.6f},{:.6f}\n", s.t, s.v, s.grade);
    }
}

DriveCycle repeat_cycle(const DriveCycle& c, int n)
{
    if (n < 1) {
        throw DomainError(fmt::format("lap count must be >= 1, got {}", n));
    }
    const auto src = c.samples();
    if (n > 1 && src.front().v != src.back().v) {
        throw ValidationError("cycle does not end at its starting speed; laps cannot be joined");
    }
    std::vector<Sample> out;
    out.reserve(src.size() * static_cast<std::size_t>(n));
    const double lap = c.duration();
    for (int k = 0; k < n; ++k) {
        const double offset = lap * k;
        for (std::size_t i = (k == 0 ? 0 : 1); i < src.size(); ++i) {
            out.push_back({src[i].t + offset, src[i].v, src[i].grade});
        }
    }
    return DriveCycle(std::move(out), n == 1 ? c.name() : fmt::format("{}x{}", c.name(), n));
}

DriveCycle slice_cycle(const DriveCycle& c, double t_begin, double t_end)
{
    if (!(t_begin >= 0.0) || !(t_end <= c.duration()) || !(t_end > t_begin)) {
        throw DomainError(fmt::format("slice [{}, {}] outside cycle [0, {}]", t_begin, t_end, c.duration()));
    }
    const auto src = c.samples();
    auto at = [&](double t) {
        const auto it = std::lower_bound(src.begin(), src.end(), t,
                                         [](const Sample& s, double x) { return s.t < x; });
        if (it == src.begin()) {
            return *it;
        }
        if (it != src.end() && it->t == t) {
            return *it;
        }
        const auto& hi = *it;
        const auto& lo = *(it - 1);
        const double w = (t - lo.t) / (hi.t - lo.t);
        return Sample{t, lo.v + w * (hi.v - lo.v), lo.grade + w * (hi.grade - lo.grade)};
    };

    std::vector<Sample> out;
    out.push_back(at(t_begin));
    for (const auto& s : src) {
        if (s.t > t_begin && s.t < t_end) {
            out.push_back(s);
        }
    }
    out.push_back(at(t_end));
    for (auto& s : out) {
        s.t -= t_begin;
    }
    out.front().t = 0.0;
    return DriveCycle(std::move(out), c.name() + "-slice");
}

CycleMetrics compute_metrics(std::span<const PowerSample> power, std::span<const double> speeds,
                             double distance_km, double idle_speed)
{
    if (power.size() != speeds.size()) {
        throw ValidationError(
            fmt::format("power series has {} samples, speed series {}", power.size(), speeds.size()));
    }
    if (power.size() < 2) {
        throw ValidationError("metrics need at least 2 samples");
    }
    if (!(distance_km > 0.0)) {
        throw ValidationError("metrics need a positive distance");
    }

    const std::size_t n = power.size();
    auto weight = [&](std::size_t i) {
        double w = 0.0;
        if (i > 0) {
            w += 0.5 * (power[i].t - power[i - 1].t);
        }
        if (i + 1 < n) {
            w += 0.5 * (power[i + 1].t - power[i].t);
        }
        return w;
    };

    double positive_kws = 0.0;
    double peak = 0.0;
    double pos_weighted = 0.0;
    double pos_time = 0.0;
    double idle_time = 0.0;
    double total_time = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double w = weight(i);
        const double p = power[i].kw;
        if (p > 0.0) {
            positive_kws += p * w;
            pos_weighted += p * w;
            pos_time += w;
        }
        peak = std::max(peak, p);
        if (speeds[i] < idle_speed) {
            idle_time += w;
        }
        total_time += w;
    }

    CycleMetrics m;
    m.positive_propulsion_energy = positive_kws / 3.6 / distance_km;  // kW*s -> Wh
    m.peak_power = peak;
    m.avg_positive_power = pos_time > 0.0 ? pos_weighted / pos_time : 0.0;
    m.percent_idle = total_time > 0.0 ? idle_time / total_time * 100.0 : 0.0;
    return m;
}

namespace {

struct Trip {
    double peak;      // m/s
    double accel;     // m/s^2 below the knee speed
    double decel;     // m/s^2
    double cruise_s;  // s
    double idle_s;    // s after stopping
    double wobble;    // m/s amplitude while cruising
    double knee = 8.0;  // m/s; acceleration tapers above it, like a power-limited launch
};

void drive_trip(std::vector<double>& v, const Trip& trip)
{
    double speed = v.empty() ? 0.0 : v.back();
    while (speed < trip.peak) {
        const double a = trip.accel * std::min(1.0, trip.knee / std::max(speed, 1e-9));
        speed = std::min(trip.peak, speed + a);
        v.push_back(speed);
    }
    for (int k = 1; k <= static_cast<int>(trip.cruise_s); ++k) {
        speed = trip.peak + trip.wobble * std::sin(2.0 * std::numbers::pi * k / 40.0);
        v.push_back(speed);
    }
    while (speed > 0.0) {
        speed = std::max(0.0, speed - trip.decel);
        v.push_back(speed);
    }
    for (int k = 0; k < static_cast<int>(trip.idle_s); ++k) {
        v.push_back(0.0);
    }
}

std::vector<Trip> canonical_trips()
{
    return {
        // urban stop-and-go
        {11.0, 1.2, 1.3, 60, 9, 0.5},
        {15.0, 1.1, 1.4, 120, 10, 0.8},
        {9.0, 1.3, 1.2, 45, 8, 0.3},
        {19.0, 1.0, 1.3, 150, 12, 1.5},
        // aggressive city
        {18.0, 2.6, 2.8, 20, 6, 0.5},
        {15.0, 2.7, 3.0, 10, 6, 0.0},
        {22.0, 2.5, 2.7, 30, 8, 1.0},
        // aggressive highway
        {34.0, 2.7, 2.5, 50, 8, 2.0, 11.0},
        // steady highway
        {26.0, 0.9, 1.0, 150, 8, 2.0},
        // urban again
        {13.0, 1.2, 1.5, 90, 8, 0.5},
        {7.0, 1.2, 1.2, 40, 9, 0.3},
        {16.0, 1.1, 1.2, 130, 10, 1.0},
        {21.0, 1.0, 1.3, 160, 12, 2.0},
        {12.0, 1.2, 1.2, 30, 15, 0.0},
    };
}

std::vector<Trip> random_trips(std::mt19937_64& rng)
{
    auto uni = [&](double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); };
    auto count = [&](int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); };

    std::vector<Trip> trips;
    for (int k = count(5, 10); k > 0; --k) {
        trips.push_back({uni(8, 22), uni(1.0, 1.5), uni(1.1, 1.5), uni(5, 90), uni(8, 30), uni(0, 1.5)});
    }
    trips.push_back({uni(24, 29), uni(0.9, 1.2), uni(1.0, 1.3), uni(250, 450), uni(5, 15), uni(1, 2.5)});
    for (int k = count(2, 4); k > 0; --k) {
        trips.push_back({uni(14, 22), uni(2.0, 2.6), uni(2.2, 2.8), uni(5, 30), uni(5, 12), uni(0, 1)});
    }
    trips.push_back({uni(30, 35), uni(2.0, 2.5), uni(1.8, 2.3), uni(150, 300), uni(8, 15), uni(1, 2.5)});
    trips.push_back({uni(9, 14), uni(1.2, 1.4), uni(1.2, 1.4), uni(5, 30), uni(15, 25), 0.0});
    return trips;
}

}  // namespace

DriveCycle synthetic_cycle(const SyntheticCycleOptions& opts)
{
    if (!(opts.target_distance_km > 0.0)) {
        throw DomainError("synthetic cycle target distance must be positive");
    }
    std::vector<double> v(20, 0.0);  // lead-in idle
    auto to_samples = [&] {
        std::vector<Sample> out(v.size());
        for (std::size_t i = 0; i < v.size(); ++i) {
            out[i] = {static_cast<double>(i), v[i], 0.0};
        }
        return out;
    };
    if (opts.seed == 0) {
        for (const auto& trip : canonical_trips()) {
            drive_trip(v, trip);
        }
    } else {
        // Whole blocks until the target is covered, so the final scaling
        // only ever slows the trace down.
        std::mt19937_64 rng(opts.seed);
        do {
            for (const auto& trip : random_trips(rng)) {
                drive_trip(v, trip);
            }
        } while (trapezoid_distance_km(to_samples()) < opts.target_distance_km);
    }

    std::vector<Sample> samples = to_samples();
    const double scale = opts.target_distance_km / trapezoid_distance_km(samples);
    for (auto& s : samples) {
        s.v *= scale;
    }
    std::string name = opts.name;
    if (name.empty()) {
        name = opts.seed == 0 ? "synthetic-blend" : fmt::format("synthetic-blend-{}", opts.seed);
    }
    return DriveCycle(std::move(samples), std::move(name));
}

}  // namespace hevopt::cycle
