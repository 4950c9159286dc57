#include "mitosc/config.hpp"

#include "mitosc/cap_matrix.hpp"
#include "mitosc/error.hpp"
#include "mitosc/integrator.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <sstream>

namespace mitosc {

std::string_view to_string(Topology t) noexcept { return t == Topology::DD ? "dd" : "dr"; }

std::string format_number(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

std::string format_coord_list(const std::vector<CellCoord>& cells) {
    std::string out;
    for (std::size_t k = 0; k < cells.size(); ++k) {
        if (k != 0) out += "; ";
        out += std::to_string(cells[k].x) + "," + std::to_string(cells[k].y);
    }
    return out.empty() ? "none" : out;
}

DDCellConfig SimConfig::dd_config() const { return {device1, device2, v_dd, cap, rhs_model}; }

DRConfig SimConfig::dr_config() const { return {device1, r_series, v_dd, cap, rhs_model}; }

IntegratorOptions SimConfig::integrator_options() const {
    IntegratorOptions o;
    o.locate_events = locate_events;
    o.event_tolerance = event_tolerance;
    return o;
}

namespace {

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

bool valid_name(std::string_view s) {
    return !s.empty() && std::all_of(s.begin(), s.end(), [](char c) {
        return (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '_';
    });
}

[[noreturn]] void bad_value(const std::string& key, const std::string& value, const char* expected) {
    throw ValidationError(key + ": cannot parse '" + value + "' as " + expected);
}

double parse_double(const std::string& key, const std::string& value) {
    double x = 0.0;
    const char* first = value.data();
    const char* last = value.data() + value.size();
    if (!value.empty() && value.front() == '+') ++first;
    const auto [ptr, ec] = std::from_chars(first, last, x);
    if (ec != std::errc() || ptr != last) bad_value(key, value, "a number");
    return x;
}

long long parse_integer(const std::string& key, const std::string& value) {
    long long x = 0;
    const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), x);
    if (ec != std::errc() || ptr != value.data() + value.size()) bad_value(key, value, "an integer");
    return x;
}

bool parse_bool(const std::string& key, const std::string& value) {
    if (value == "true") return true;
    if (value == "false") return false;
    bad_value(key, value, "true or false");
}

CellCoord parse_coord(const std::string& key, const std::string& value) {
    const auto comma = value.find(',');
    if (comma == std::string::npos) bad_value(key, value, "a coordinate x,y");
    const std::string xs = trim(std::string_view(value).substr(0, comma));
    const std::string ys = trim(std::string_view(value).substr(comma + 1));
    return {static_cast<int>(parse_integer(key, xs)), static_cast<int>(parse_integer(key, ys))};
}

std::vector<CellCoord> parse_coord_list(const std::string& key, const std::string& value) {
    std::vector<CellCoord> out;
    if (value == "none") return out;
    std::size_t start = 0;
    while (start <= value.size()) {
        const auto end = value.find(';', start);
        const std::string item = trim(std::string_view(value).substr(start, end - start));
        if (item.empty()) bad_value(key, value, "a ';'-separated list of x,y");
        out.push_back(parse_coord(key, item));
        if (end == std::string::npos) break;
        start = end + 1;
    }
    return out;
}

using Setter = std::function<void(SimConfig&, const std::string& key, const std::string& value)>;

template <typename T>
Setter number(T SimConfig::*field) {
    return [field](SimConfig& c, const std::string& k, const std::string& v) { c.*field = parse_double(k, v); };
}

const std::map<std::string, Setter>& setters() {
    static const std::map<std::string, Setter> table = [] {
        std::map<std::string, Setter> t;
        t["units.r0"] = [](SimConfig& c, auto& k, auto& v) { c.units.r0 = parse_double(k, v); };
        t["units.v0"] = [](SimConfig& c, auto& k, auto& v) { c.units.v0 = parse_double(k, v); };
        t["units.c0"] = [](SimConfig& c, auto& k, auto& v) { c.units.c0 = parse_double(k, v); };
        for (const int d : {1, 2}) {
            const std::string p = "device" + std::to_string(d) + ".";
            auto dev = [d](SimConfig& c) -> DeviceParams& { return d == 1 ? c.device1 : c.device2; };
            t[p + "r_high"] = [dev](SimConfig& c, auto& k, auto& v) { dev(c).r_high = parse_double(k, v); };
            t[p + "r_low"] = [dev](SimConfig& c, auto& k, auto& v) { dev(c).r_low = parse_double(k, v); };
            t[p + "v_low"] = [dev](SimConfig& c, auto& k, auto& v) { dev(c).v_low_threshold = parse_double(k, v); };
            t[p + "v_high"] = [dev](SimConfig& c, auto& k, auto& v) { dev(c).v_high_threshold = parse_double(k, v); };
        }
        t["cell.topology"] = [](SimConfig& c, auto& k, auto& v) {
            if (v == "dd") c.topology = Topology::DD;
            else if (v == "dr") c.topology = Topology::DR;
            else bad_value(k, v, "dd or dr");
        };
        t["cell.r_series"] = number(&SimConfig::r_series);
        t["cell.v_dd"] = number(&SimConfig::v_dd);
        t["cell.cap"] = number(&SimConfig::cap);
        t["cell.rhs"] = [](SimConfig& c, auto& k, auto& v) {
            const auto m = parse_rhs_model(v);
            if (!m) bad_value(k, v, "paper or exact");
            c.rhs_model = *m;
        };
        t["coupling.r_on"] = [](SimConfig& c, auto& k, auto& v) { c.coupling.r_on = parse_double(k, v); };
        t["coupling.r_off"] = [](SimConfig& c, auto& k, auto& v) { c.coupling.r_off = parse_double(k, v); };
        t["coupling.c_couple"] = [](SimConfig& c, auto& k, auto& v) { c.coupling.c_couple = parse_double(k, v); };
        t["lattice.width"] = [](SimConfig& c, auto& k, auto& v) { c.width = static_cast<int>(parse_integer(k, v)); };
        t["lattice.height"] = [](SimConfig& c, auto& k, auto& v) { c.height = static_cast<int>(parse_integer(k, v)); };
        t["lattice.boundary"] = [](SimConfig& c, auto& k, auto& v) {
            if (v == "open") c.boundary = Boundary::Open;
            else if (v == "periodic") c.boundary = Boundary::Periodic;
            else bad_value(k, v, "open or periodic");
        };
        t["lattice.default_edge"] = [](SimConfig& c, auto& k, auto& v) {
            if (v == "on") c.default_edge = EdgeMode::On;
            else if (v == "off") c.default_edge = EdgeMode::Off;
            else bad_value(k, v, "on or off");
        };
        t["sim.dt"] = number(&SimConfig::dt);
        t["sim.duration"] = number(&SimConfig::duration);
        t["sim.initial_v"] = number(&SimConfig::initial_v);
        t["sim.locate_events"] = [](SimConfig& c, auto& k, auto& v) { c.locate_events = parse_bool(k, v); };
        t["sim.event_tolerance"] = number(&SimConfig::event_tolerance);
        t["sim.seed"] = [](SimConfig& c, auto& k, auto& v) {
            const auto x = parse_integer(k, v);
            if (x < 0) bad_value(k, v, "a non-negative integer");
            c.seed = static_cast<std::uint64_t>(x);
        };
        t["scenario.template"] = [](SimConfig& c, auto&, auto& v) { c.scenario.template_name = v; };
        t["scenario.center"] = [](SimConfig& c, auto& k, auto& v) { c.scenario.center = parse_coord(k, v); };
        t["scenario.radius"] = [](SimConfig& c, auto& k, auto& v) { c.scenario.radius = parse_double(k, v); };
        t["scenario.seed_cell"] = [](SimConfig& c, auto& k, auto& v) {
            if (v == "none") c.scenario.seed.reset();
            else c.scenario.seed = parse_coord(k, v);
        };
        t["scenario.generation_period"] = [](SimConfig& c, auto& k, auto& v) {
            c.scenario.generation_period = parse_double(k, v);
        };
        t["scenario.alive"] = [](SimConfig& c, auto& k, auto& v) { c.scenario.alive = parse_coord_list(k, v); };
        t["scenario.reimpose_phases"] = [](SimConfig& c, auto& k, auto& v) {
            c.scenario.reimpose_phases = parse_bool(k, v);
        };
        t["output.dir"] = [](SimConfig& c, auto&, auto& v) { c.output.dir = v; };
        t["output.snapshot_cadence"] = [](SimConfig& c, auto& k, auto& v) {
            c.output.snapshot_cadence = parse_double(k, v);
        };
        t["output.trace_cadence"] = [](SimConfig& c, auto& k, auto& v) { c.output.trace_cadence = parse_double(k, v); };
        t["output.frame_stride"] = [](SimConfig& c, auto& k, auto& v) {
            const auto x = parse_integer(k, v);
            if (x < 1) bad_value(k, v, "an integer >= 1");
            c.output.frame_stride = static_cast<std::size_t>(x);
        };
        t["output.traced"] = [](SimConfig& c, auto& k, auto& v) { c.output.traced = parse_coord_list(k, v); };
        t["output.event_log"] = [](SimConfig& c, auto& k, auto& v) { c.output.event_log = parse_bool(k, v); };
        return t;
    }();
    return table;
}

void require(bool ok, const std::string& message) {
    if (!ok) throw ValidationError(message);
}

bool positive(double x) { return x > 0.0 && !std::isnan(x); }

void check_device(const DeviceParams& d, const std::string& p) {
    require(positive(d.r_low) && std::isfinite(d.r_low), p + "r_low must be finite and > 0");
    require(d.r_high > d.r_low, p + "r_high (" + format_number(d.r_high) + ") must be greater than " + p + "r_low (" +
                                    format_number(d.r_low) + ")");
    require(positive(d.v_low_threshold) && std::isfinite(d.v_low_threshold), p + "v_low must be finite and > 0");
    require(d.v_high_threshold > d.v_low_threshold && std::isfinite(d.v_high_threshold),
            p + "v_high (" + format_number(d.v_high_threshold) + ") must be greater than " + p + "v_low (" +
                format_number(d.v_low_threshold) + ")");
}

void check_in_grid(CellCoord c, const SimConfig& cfg, const std::string& key) {
    require(c.x >= 1 && c.y >= 1 && c.x <= cfg.width && c.y <= cfg.height,
            key + ": cell " + to_string(c) + " is outside the " + std::to_string(cfg.width) + "x" +
                std::to_string(cfg.height) + " grid");
}

void check_whole_steps(double span, double dt, const std::string& key) {
    const double ratio = span / dt;
    require(std::abs(ratio - std::round(ratio)) <= 1e-6,
            key + " (" + format_number(span) + ") must be a whole number of sim.dt steps");
}

bool is_template(const std::string& name) {
    return name == "none" || name == "vortex" || name == "wave" || name == "life" || name == "life-scripted";
}

}  // namespace

SimConfig template_defaults(const std::string& name) {
    SimConfig c;
    if (name == "none") return c;
    if (!is_template(name)) {
        throw ValidationError("scenario.template: unknown template '" + name +
                              "' (expected none, vortex, wave, life or life-scripted)");
    }
    c.scenario.template_name = name;
    if (name == "vortex") {
        c.duration = 10.0;
        c.output.snapshot_cadence = 0.05;
        c.output.traced = {{15, 15}, {1, 1}};
    } else if (name == "wave") {
        c.duration = 40.0;
        c.output.snapshot_cadence = 0.25;
        c.output.traced = {{15, 15}, {1, 1}, {2, 15}};
    } else if (name == "life") {
        c.duration = 6.0 * c.scenario.generation_period;
        c.output.snapshot_cadence = 0.25;
        c.output.traced = {{4, 4}, {1, 1}};
    } else {
        c.duration = 60.0;
        c.output.snapshot_cadence = 0.25;
        c.output.traced = {{1, 1}, {30, 30}};
    }
    return c;
}

SimConfig parse_config(std::string_view text) {
    std::vector<std::pair<std::string, std::string>> pairs;
    std::map<std::string, std::size_t> seen;
    std::string section;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const auto end = text.find('\n', pos);
        const std::string line = trim(text.substr(pos, end == std::string_view::npos ? std::string_view::npos : end - pos));
        ++line_no;
        pos = end == std::string_view::npos ? text.size() + 1 : end + 1;
        const std::string where = "line " + std::to_string(line_no) + ": ";
        if (line.empty() || line.front() == '#' || line.front() == ';') continue;
        if (line.front() == '[') {
            require(line.back() == ']', where + "unterminated section header");
            section = trim(std::string_view(line).substr(1, line.size() - 2));
            require(valid_name(section), where + "invalid section name '" + section + "'");
            continue;
        }
        const auto eq = line.find('=');
        require(eq != std::string::npos, where + "expected key = value");
        require(!section.empty(), where + "key outside of any [section]");
        const std::string key = trim(std::string_view(line).substr(0, eq));
        const std::string value = trim(std::string_view(line).substr(eq + 1));
        require(valid_name(key), where + "invalid key name '" + key + "'");
        const std::string path = section + "." + key;
        require(setters().count(path) == 1, where + "unknown key '" + path + "'");
        require(seen.count(path) == 0, where + "duplicate key '" + path + "'");
        require(!value.empty(), where + "empty value for '" + path + "'");
        seen[path] = pairs.size();
        pairs.emplace_back(path, value);
    }

    const auto tmpl = seen.count("scenario.template") ? pairs[seen["scenario.template"]].second : std::string("none");
    SimConfig cfg = template_defaults(tmpl);
    for (const auto& [path, value] : pairs) setters().at(path)(cfg, path, value);
    if (tmpl == "life" && seen.count("sim.duration") == 0) cfg.duration = 6.0 * cfg.scenario.generation_period;
    validate_config(cfg);
    return cfg;
}

void validate_config(const SimConfig& c) {
    require(positive(c.units.r0) && std::isfinite(c.units.r0), "units.r0 must be finite and > 0");
    require(positive(c.units.v0) && std::isfinite(c.units.v0), "units.v0 must be finite and > 0");
    require(positive(c.units.c0) && std::isfinite(c.units.c0), "units.c0 must be finite and > 0");
    check_device(c.device1, "device1.");
    check_device(c.device2, "device2.");
    require(positive(c.r_series) && std::isfinite(c.r_series), "cell.r_series must be finite and > 0");
    require(positive(c.v_dd) && std::isfinite(c.v_dd), "cell.v_dd must be finite and > 0");
    require(positive(c.cap) && std::isfinite(c.cap), "cell.cap must be finite and > 0");
    require(positive(c.coupling.r_on), "coupling.r_on must be > 0");
    require(c.coupling.r_off >= c.coupling.r_on,
            "coupling.r_off (" + format_number(c.coupling.r_off) + ") must be >= coupling.r_on (" +
                format_number(c.coupling.r_on) + ")");
    require(c.coupling.c_couple >= 0.0 && std::isfinite(c.coupling.c_couple),
            "coupling.c_couple must be finite and >= 0");
    require(c.width >= 1 && c.width <= 4096, "lattice.width must be in [1, 4096]");
    require(c.height >= 1 && c.height <= 4096, "lattice.height must be in [1, 4096]");
    require(positive(c.dt) && std::isfinite(c.dt), "sim.dt must be finite and > 0");
    require(c.duration >= 0.0 && std::isfinite(c.duration), "sim.duration must be finite and >= 0");
    check_whole_steps(c.duration, c.dt, "sim.duration");
    require(std::isfinite(c.initial_v), "sim.initial_v must be finite");
    require(positive(c.event_tolerance) && c.event_tolerance < c.dt, "sim.event_tolerance must be in (0, sim.dt)");

    if (c.topology == Topology::DR) {
        const double limit = cell_stability_limit(c.dr_config());
        require(c.dt < limit, "sim.dt (" + format_number(c.dt) + ") must be below the stability limit " +
                                  format_number(limit));
    } else {
        Lattice probe(c.width, c.height, c.dd_config(), c.coupling, c.boundary);
        const CapMatrix cap(probe);
        const double limit = network_stability_limit(probe, cap);
        require(c.dt < limit, "sim.dt (" + format_number(c.dt) + ") must be below the stability limit " +
                                  format_number(limit));
    }

    const auto& s = c.scenario;
    require(is_template(s.template_name), "scenario.template: unknown template '" + s.template_name + "'");
    require(s.radius >= 0.0 && std::isfinite(s.radius), "scenario.radius must be finite and >= 0");
    if (s.template_name == "vortex" || s.template_name == "wave") check_in_grid(s.center, c, "scenario.center");
    if (s.template_name == "wave" && s.seed) check_in_grid(*s.seed, c, "scenario.seed_cell");
    if (s.template_name == "life") {
        for (const auto a : s.alive) check_in_grid(a, c, "scenario.alive");
        require(positive(s.generation_period), "scenario.generation_period must be > 0");
        check_whole_steps(s.generation_period, c.dt, "scenario.generation_period");
        const double period = analytic_period(c.dd_config()).period;
        require(s.generation_period >= period, "scenario.generation_period (" + format_number(s.generation_period) +
                                                   ") must be at least one oscillation period (" +
                                                   format_number(period) + ")");
    }

    const auto& o = c.output;
    require(!o.dir.empty(), "output.dir must not be empty");
    require(o.snapshot_cadence >= 0.0 && std::isfinite(o.snapshot_cadence), "output.snapshot_cadence must be >= 0");
    if (o.snapshot_cadence > 0.0) {
        require(o.snapshot_cadence >= c.dt, "output.snapshot_cadence must be at least sim.dt");
        check_whole_steps(o.snapshot_cadence, c.dt, "output.snapshot_cadence");
    }
    require(positive(o.trace_cadence) && o.trace_cadence >= c.dt, "output.trace_cadence must be at least sim.dt");
    check_whole_steps(o.trace_cadence, c.dt, "output.trace_cadence");
    require(o.frame_stride >= 1, "output.frame_stride must be >= 1");
    if (c.topology == Topology::DD) {
        for (const auto t : o.traced) check_in_grid(t, c, "output.traced");
    }
}

std::string echo_config(const SimConfig& c) {
    std::ostringstream os;
    auto num = [](double x) { return format_number(x); };
    auto flag = [](bool b) { return b ? "true" : "false"; };
    os << "[units]\n"
       << "r0 = " << num(c.units.r0) << "\n"
       << "v0 = " << num(c.units.v0) << "\n"
       << "c0 = " << num(c.units.c0) << "\n";
    for (const int d : {1, 2}) {
        const auto& dev = d == 1 ? c.device1 : c.device2;
        os << "\n[device" << d << "]\n"
           << "r_high = " << num(dev.r_high) << "\n"
           << "r_low = " << num(dev.r_low) << "\n"
           << "v_low = " << num(dev.v_low_threshold) << "\n"
           << "v_high = " << num(dev.v_high_threshold) << "\n";
    }
    os << "\n[cell]\n"
       << "topology = " << to_string(c.topology) << "\n"
       << "r_series = " << num(c.r_series) << "\n"
       << "v_dd = " << num(c.v_dd) << "\n"
       << "cap = " << num(c.cap) << "\n"
       << "rhs = " << to_string(c.rhs_model) << "\n"
       << "\n[coupling]\n"
       << "r_on = " << num(c.coupling.r_on) << "\n"
       << "r_off = " << num(c.coupling.r_off) << "\n"
       << "c_couple = " << num(c.coupling.c_couple) << "\n"
       << "\n[lattice]\n"
       << "width = " << c.width << "\n"
       << "height = " << c.height << "\n"
       << "boundary = " << to_string(c.boundary) << "\n"
       << "default_edge = " << to_string(c.default_edge) << "\n"
       << "\n[sim]\n"
       << "dt = " << num(c.dt) << "\n"
       << "duration = " << num(c.duration) << "\n"
       << "initial_v = " << num(c.initial_v) << "\n"
       << "locate_events = " << flag(c.locate_events) << "\n"
       << "event_tolerance = " << num(c.event_tolerance) << "\n"
       << "seed = " << c.seed << "\n"
       << "\n[scenario]\n"
       << "template = " << c.scenario.template_name << "\n"
       << "center = " << c.scenario.center.x << "," << c.scenario.center.y << "\n"
       << "radius = " << num(c.scenario.radius) << "\n"
       << "seed_cell = "
       << (c.scenario.seed ? std::to_string(c.scenario.seed->x) + "," + std::to_string(c.scenario.seed->y) : "none")
       << "\n"
       << "generation_period = " << num(c.scenario.generation_period) << "\n"
       << "alive = " << format_coord_list(c.scenario.alive) << "\n"
       << "reimpose_phases = " << flag(c.scenario.reimpose_phases) << "\n"
       << "\n[output]\n"
       << "dir = " << c.output.dir << "\n"
       << "snapshot_cadence = " << num(c.output.snapshot_cadence) << "\n"
       << "trace_cadence = " << num(c.output.trace_cadence) << "\n"
       << "frame_stride = " << c.output.frame_stride << "\n"
       << "traced = " << format_coord_list(c.output.traced) << "\n"
       << "event_log = " << flag(c.output.event_log) << "\n";
    return os.str();
}

Scenario make_scenario(const SimConfig& c) {
    validate_config(c);
    const auto& s = c.scenario;
    Scenario sc;
    if (s.template_name == "vortex") sc = template_vortex(c.width, c.height, s.center, s.radius);
    else if (s.template_name == "wave") sc = template_wave(c.width, c.height, s.center, s.radius, s.seed);
    else if (s.template_name == "life") sc = template_life(CellList{s.alive}, s.generation_period, c.width, c.height);
    else if (s.template_name == "life-scripted") sc = template_life_scripted(c.width, c.height);
    else {
        sc.name = "grid";
        sc.default_edge_mode = c.default_edge;
    }
    if (sc.life) sc.life->reimpose_phases = s.reimpose_phases;
    sc.lattice.width = c.width;
    sc.lattice.height = c.height;
    sc.lattice.cell = c.dd_config();
    sc.lattice.coupling = c.coupling;
    sc.lattice.boundary = c.boundary;
    sc.initial.v0 = c.initial_v;
    sc.dt = c.dt;
    sc.duration = c.duration;
    sc.observers.clear();
    if (c.output.snapshot_cadence > 0.0) {
        sc.observers.push_back(
            {ObserverKind::Snapshot, c.output.snapshot_cadence * static_cast<double>(c.output.frame_stride), {}});
    }
    if (!c.output.traced.empty()) sc.observers.push_back({ObserverKind::CellTrace, c.output.trace_cadence, c.output.traced});
    if (c.output.event_log) sc.observers.push_back({ObserverKind::EventLog, c.dt, {}});
    sc.validate();
    return sc;
}

}  // namespace mitosc
