#include "hevopt/scenario.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <fmt/format.h>

#include "hevopt/errors.hpp"

namespace hevopt::cli {

namespace pt = boost::property_tree;

namespace {

const std::map<std::string, std::set<std::string>>& known_keys()
{
    static const std::map<std::string, std::set<std::string>> keys{
        {"cycle", {"source", "seed", "distance_km", "laps"}},
        {"vehicle",
         {"mass", "test_mass", "inertia_factor", "cda", "crr", "air_density", "gravity", "idle_speed",
          "wheel_radius", "gear_ratio"}},
        {"maps", {"motor", "engine", "generator", "belt_ratio", "genset_speed"}},
        {"battery", {"capacity_kwh", "r_internal", "ocv"}},
        {"rule",
         {"soc_high", "soc_low", "cs_trigger", "min_dwell", "warmup", "cranking_kw", "regen_current_limit",
          "initial_soc", "genset_kw"}},
        {"dp",
         {"dt", "soc_min", "soc_max", "grid_step", "deltas", "initial_soc", "terminal", "obd", "obd_energy_kwh",
          "genset_max_kw", "lookahead"}},
        {"accounting", {"uf", "charging_efficiency"}},
        {"calibration", {"source", "scale", "sim", "test"}},
        {"output", {"dir"}},
    };
    return keys;
}

std::string trim(std::string s)
{
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string::npos) {
        return {};
    }
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

double to_double(const std::string& key, const std::string& text)
{
    const std::string t = trim(text);
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
    if (ec != std::errc() || ptr != t.data() + t.size() || t.empty()) {
        throw ValidationError(fmt::format("{}: '{}' is not a number", key, text));
    }
    return v;
}

std::vector<double> to_list(const std::string& key, const std::string& text)
{
    std::vector<double> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        out.push_back(to_double(key, item));
    }
    if (out.empty()) {
        throw ValidationError(fmt::format("{}: empty list", key));
    }
    return out;
}

class Reader {
public:
    explicit Reader(const pt::ptree& tree) : tree_(tree) {}

    std::optional<std::string> text(const std::string& section, const std::string& key) const
    {
        const auto sec = tree_.get_child_optional(section);
        if (!sec) {
            return std::nullopt;
        }
        const auto v = sec->get_optional<std::string>(key);
        if (!v) {
            return std::nullopt;
        }
        return trim(*v);
    }

    void number(const std::string& section, const std::string& key, double& out) const
    {
        if (const auto v = text(section, key)) {
            out = to_double(section + "." + key, *v);
        }
    }

    void integer(const std::string& section, const std::string& key, int& out) const
    {
        double v = out;
        number(section, key, v);
        if (v != static_cast<int>(v)) {
            throw ValidationError(fmt::format("{}.{}: expected an integer", section, key));
        }
        out = static_cast<int>(v);
    }

    void word(const std::string& section, const std::string& key, std::string& out) const
    {
        if (const auto v = text(section, key)) {
            out = *v;
        }
    }

private:
    const pt::ptree& tree_;
};

cycle::CycleMetrics to_metrics(const std::string& key, const std::string& text)
{
    const auto v = to_list(key, text);
    if (v.size() != 4) {
        throw ValidationError(fmt::format("{}: expected energy, peak, avg positive power, idle %", key));
    }
    return {v[0], v[1], v[2], v[3]};
}

dpopt::TerminalRule to_terminal(const std::string& text)
{
    if (text == "initial") {
        return {dpopt::TerminalKind::at_least_initial, 0.0};
    }
    if (text == "soc_min") {
        return {dpopt::TerminalKind::at_least_soc_min, 0.0};
    }
    if (text.rfind("level:", 0) == 0) {
        return {dpopt::TerminalKind::at_least_level, to_double("dp.terminal", text.substr(6))};
    }
    throw ValidationError(fmt::format("dp.terminal: expected initial, soc_min or level:<pct>, got '{}'", text));
}

bool to_bool(const std::string& key, const std::string& text)
{
    if (text == "true" || text == "1" || text == "yes") {
        return true;
    }
    if (text == "false" || text == "0" || text == "no") {
        return false;
    }
    throw ValidationError(fmt::format("{}: expected true or false, got '{}'", key, text));
}

}  // namespace

std::filesystem::path Scenario::resolve(const std::string& p) const
{
    const std::filesystem::path path(p);
    return path.is_absolute() || base_dir.empty() ? path : base_dir / path;
}

Scenario parse_scenario(std::istream& in, const std::filesystem::path& base_dir)
{
    pt::ptree tree;
    try {
        pt::read_ini(in, tree);
    } catch (const pt::ini_parser_error& e) {
        throw ParseError("scenario: " + e.message(), e.line());
    }
    for (const auto& [section, body] : tree) {
        if (body.empty() && !body.data().empty()) {
            throw ValidationError(fmt::format("scenario: key '{}' outside any section", section));
        }
        const auto it = known_keys().find(section);
        if (it == known_keys().end()) {
            throw ValidationError(fmt::format("scenario: unknown section [{}]", section));
        }
        for (const auto& kv : body) {
            if (!it->second.count(kv.first)) {
                throw ValidationError(fmt::format("scenario: unknown key {}.{}", section, kv.first));
            }
        }
    }

    Reader r(tree);
    Scenario s;
    s.base_dir = base_dir;

    r.word("cycle", "source", s.cycle_source);
    if (const auto v = r.text("cycle", "seed")) {
        const double seed = to_double("cycle.seed", *v);
        if (seed < 0 || seed != static_cast<double>(static_cast<std::uint64_t>(seed))) {
            throw ValidationError("cycle.seed: expected a nonnegative integer");
        }
        s.cycle_seed = static_cast<std::uint64_t>(seed);
    }
    r.number("cycle", "distance_km", s.cycle_distance_km);
    r.integer("cycle", "laps", s.laps);

    auto& vp = s.model.vehicle;
    r.number("vehicle", "mass", vp.mass);
    r.number("vehicle", "test_mass", vp.test_mass);
    r.number("vehicle", "inertia_factor", vp.inertia_factor);
    r.number("vehicle", "cda", vp.cda);
    r.number("vehicle", "crr", vp.crr);
    r.number("vehicle", "air_density", vp.air_density);
    r.number("vehicle", "gravity", vp.gravity);
    r.number("vehicle", "idle_speed", vp.idle_speed);
    r.number("vehicle", "wheel_radius", s.model.wheel_radius);
    r.number("vehicle", "gear_ratio", s.model.gear_ratio);

    r.word("maps", "motor", s.motor_map);
    r.word("maps", "engine", s.engine_map);
    r.word("maps", "generator", s.generator_map);
    r.number("maps", "belt_ratio", s.belt_ratio);
    r.number("maps", "genset_speed", s.genset_speed);

    auto& bp = s.model.battery;
    r.number("battery", "capacity_kwh", bp.capacity_kwh);
    r.number("battery", "r_internal", bp.r_internal);
    if (const auto v = r.text("battery", "ocv")) {
        // soc:volts pairs separated by commas
        bp.ocv_curve.clear();
        std::stringstream ss(*v);
        std::string item;
        while (std::getline(ss, item, ',')) {
            const auto colon = item.find(':');
            if (colon == std::string::npos) {
                throw ValidationError(fmt::format("battery.ocv: '{}' is not soc:volts", trim(item)));
            }
            bp.ocv_curve.emplace_back(to_double("battery.ocv", item.substr(0, colon)),
                                      to_double("battery.ocv", item.substr(colon + 1)));
        }
    }

    auto& rc = s.rule;
    r.number("rule", "soc_high", rc.soc_high);
    r.number("rule", "soc_low", rc.soc_low);
    r.number("rule", "cs_trigger", rc.cs_trigger);
    r.number("rule", "min_dwell", rc.min_dwell);
    r.number("rule", "warmup", rc.warmup);
    r.number("rule", "cranking_kw", rc.cranking_kw);
    r.number("rule", "regen_current_limit", rc.regen_current_limit);
    r.number("rule", "initial_soc", rc.initial_soc);
    r.number("rule", "genset_kw", s.rule_genset_kw);

    auto& dp = s.dp;
    r.number("dp", "dt", dp.dt);
    r.number("dp", "soc_min", dp.soc_min);
    r.number("dp", "soc_max", dp.soc_max);
    r.number("dp", "grid_step", dp.grid_step);
    if (const auto v = r.text("dp", "deltas")) {
        s.dp_deltas = to_list("dp.deltas", *v);
    }
    r.number("dp", "initial_soc", s.dp_initial_soc);
    if (const auto v = r.text("dp", "terminal")) {
        dp.terminal = to_terminal(*v);
    }
    if (const auto v = r.text("dp", "obd")) {
        dp.obd_enabled = to_bool("dp.obd", *v);
    }
    r.number("dp", "obd_energy_kwh", dp.obd_energy_kwh);
    r.number("dp", "genset_max_kw", dp.genset_max_kw);
    r.integer("dp", "lookahead", dp.lookahead);

    if (const auto v = r.text("accounting", "uf")) {
        s.uf = to_double("accounting.uf", *v);
    }
    r.number("accounting", "charging_efficiency", s.charging_efficiency);

    if (const auto v = r.text("calibration", "source")) {
        if (*v == "none") {
            s.calibration = CalibrationSource::none;
        } else if (*v == "scale") {
            s.calibration = CalibrationSource::scale;
        } else if (*v == "metrics") {
            s.calibration = CalibrationSource::metrics;
        } else {
            throw ValidationError(fmt::format("calibration.source: expected none, scale or metrics, got '{}'", *v));
        }
    }
    r.number("calibration", "scale", s.calibration_scale);
    if (const auto v = r.text("calibration", "sim")) {
        s.sim_metrics = to_metrics("calibration.sim", *v);
    }
    if (const auto v = r.text("calibration", "test")) {
        s.test_metrics = to_metrics("calibration.test", *v);
    }
    if (s.calibration == CalibrationSource::metrics && (!s.sim_metrics || !s.test_metrics)) {
        throw ValidationError("calibration.source = metrics needs both calibration.sim and calibration.test");
    }

    if (const auto v = r.text("output", "dir")) {
        s.out_dir = s.resolve(*v);
    } else {
        s.out_dir = s.resolve("out");
    }
    return s;
}

Scenario load_scenario(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) {
        throw IoError(fmt::format("cannot open scenario {}", path.string()));
    }
    try {
        return parse_scenario(in, path.parent_path());
    } catch (const ParseError& e) {
        throw ParseError(fmt::format("{}: {}", path.string(), e.what()), 0);
    }
}

Setup build_setup(const Scenario& s)
{
    auto load_map_or = [&](const std::string& file, powertrain::EfficiencyMap fallback) {
        return file.empty() ? fallback : powertrain::load_map_file(s.resolve(file));
    };

    if (s.laps < 1) {
        throw ValidationError("cycle.laps must be at least 1");
    }
    cycle::DriveCycle lap = s.cycle_source == "synthetic"
                                ? cycle::synthetic_cycle({s.cycle_seed, s.cycle_distance_km, {}})
                                : cycle::load_cycle_file(s.resolve(s.cycle_source));
    cycle::DriveCycle full = cycle::repeat_cycle(lap, s.laps);

    ems::VehicleModel model = s.model;
    model.motor_map = load_map_or(s.motor_map, powertrain::synthetic_motor_map());
    model.validate();

    powertrain::GenSet genset(load_map_or(s.engine_map, powertrain::synthetic_engine_map()),
                              load_map_or(s.generator_map, powertrain::synthetic_generator_map()), s.belt_ratio);

    ems::RuleConfig rule = s.rule;
    rule.genset_point = genset.point_for_power(s.genset_speed, s.rule_genset_kw);
    rule.validate();

    dpopt::DpConfig dp = s.dp;
    dp.capacity_kwh = model.battery.capacity_kwh;
    dp.decisions = dpopt::decisions_from_genset(genset, s.genset_speed, s.dp_deltas, dp.capacity_kwh, dp.dt);
    dp.validate();

    if (s.uf && !(*s.uf >= 0.0 && *s.uf <= 1.0)) {
        throw ValidationError(fmt::format("accounting.uf must lie in [0, 1], got {}", *s.uf));
    }
    if (!(s.charging_efficiency > 0.0 && s.charging_efficiency <= 1.0)) {
        throw ValidationError("accounting.charging_efficiency must lie in (0, 1]");
    }

    double calibration = 1.0;
    std::optional<accounting::Calibration> report;
    switch (s.calibration) {
    case CalibrationSource::none:
        break;
    case CalibrationSource::scale:
        if (!(s.calibration_scale > 0.0)) {
            throw ValidationError("calibration.scale must be positive");
        }
        calibration = s.calibration_scale;
        break;
    case CalibrationSource::metrics:
        report = accounting::calibration_factor(*s.sim_metrics, *s.test_metrics);
        calibration = report->energy_scale;
        break;
    }
    if (!report && s.sim_metrics && s.test_metrics) {
        report = accounting::calibration_factor(*s.sim_metrics, *s.test_metrics);
    }

    return Setup{std::move(lap), std::move(full), std::move(model), std::move(genset), rule, std::move(dp),
                 calibration, report};
}

}  // namespace hevopt::cli
