// mitosc: command-line front end.
//
//   mitosc check      self-oscillation diagnostics for the configured cell
//   mitosc cell       single-oscillator run
//   mitosc grid       network run without a template
//   mitosc scenario   named template (or the one in --config)
//   mitosc calibrate  physical capacitance for a target frequency
//
// Exit status: 0 success, 1 validation error, 2 runtime error. The last line on
// stdout is always a one-line JSON status.

#include "mitosc/calibrate.hpp"
#include "mitosc/config.hpp"
#include "mitosc/error.hpp"
#include "mitosc/output.hpp"
#include "mitosc/scenarios.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

using namespace mitosc;
using Json = nlohmann::ordered_json;

namespace {

struct Options {
    std::string command;
    std::string config_path;
    std::optional<double> dt;
    std::optional<double> duration;
    std::optional<std::string> out;
    std::optional<std::string> tmpl;
    std::optional<std::string> size;
    std::optional<std::string> rhs;
    std::optional<double> r0;
    double freq = 2e6;
};

void emit_status(const Json& status) { std::cout << status.dump() << std::endl; }

int fail(const std::string& command, const char* kind, const std::string& message, int code) {
    std::cerr << "error: " << message << "\n";
    emit_status({{"status", "error"}, {"command", command}, {"kind", kind}, {"message", message}});
    return code;
}

std::string read_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw ValidationError("cannot read config file '" + path + "'");
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

SimConfig load_config(const Options& o) {
    SimConfig cfg = o.config_path.empty() ? template_defaults(o.tmpl.value_or("none")) : parse_config(read_file(o.config_path));
    if (o.tmpl && !o.config_path.empty()) cfg.scenario.template_name = *o.tmpl;
    if (o.dt) cfg.dt = *o.dt;
    if (o.duration) cfg.duration = *o.duration;
    if (o.out) cfg.output.dir = *o.out;
    if (o.rhs) {
        const auto m = parse_rhs_model(*o.rhs);
        if (!m) throw ValidationError("--rhs: expected paper or exact, got '" + *o.rhs + "'");
        cfg.rhs_model = *m;
    }
    if (o.size) {
        int w = 0;
        int h = 0;
        char tail = 0;
        if (std::sscanf(o.size->c_str(), "%dx%d%c", &w, &h, &tail) != 2) {
            throw ValidationError("--size: expected WxH, got '" + *o.size + "'");
        }
        cfg.width = w;
        cfg.height = h;
        // Without a config file the template geometry follows the grid: disk and seed
        // stay centered, the radius keeps its 7/30 share, alive cells off the grid go,
        // and traced cells move with the landmark they were placed on.
        if (o.config_path.empty() && w > 0 && h > 0) {
            auto& s = cfg.scenario;
            const CellCoord old_center = s.center;
            const auto old_seed = s.seed;
            s.center = {(w + 1) / 2, (h + 1) / 2};
            s.radius = 7.0 * std::min(w, h) / 30.0;
            if (s.seed) s.seed = CellCoord{std::min(2, w), (h + 1) / 2};
            std::erase_if(s.alive, [&](CellCoord c) { return c.x > w || c.y > h; });
            std::vector<CellCoord> traced;
            for (CellCoord c : cfg.output.traced) {
                if (c == old_center) c = s.center;
                else if (old_seed && c == *old_seed) c = *s.seed;
                else c = {std::min(c.x, w), std::min(c.y, h)};
                if (std::find(traced.begin(), traced.end(), c) == traced.end()) traced.push_back(c);
            }
            cfg.output.traced = std::move(traced);
        }
    }
    validate_config(cfg);
    return cfg;
}

Json branch_json(const OscillationCheck& check) {
    auto branches = Json::array();
    for (const auto& b : check.branches) {
        branches.push_back({{"branch", b.label}, {"v_star", b.v_star}, {"exit_threshold", b.exit_threshold},
                            {"passes", b.passes}});
    }
    Json j{{"oscillates", check.oscillates}, {"branches", branches}};
    if (!check.oscillates) j["trapping_branch"] = check.trapping_branch();
    return j;
}

void print_check(const char* name, const OscillationCheck& check, std::optional<double> period) {
    std::cout << name << ": " << (check.oscillates ? "oscillates" : "does not oscillate") << "\n";
    for (const auto& b : check.branches) {
        std::cout << "  " << b.label << " branch: v* = " << format_number(b.v_star)
                  << ", exits at " << format_number(b.exit_threshold) << (b.passes ? "" : "  <- traps") << "\n";
    }
    if (period) std::cout << "  period = " << format_number(*period) << " t0\n";
}

Json check_json(const OscillationCheck& check, std::optional<double> period) {
    Json j = branch_json(check);
    j["period"] = period ? Json(*period) : Json(nullptr);
    return j;
}

template <class Config>
std::optional<double> period_if_oscillating(const Config& cfg, const OscillationCheck& check) {
    if (!check.oscillates) return std::nullopt;
    return analytic_period(cfg).period;
}

int run_check(const SimConfig& cfg) {
    const auto dd = cfg.dd_config();
    const auto dr = cfg.dr_config();
    // The R_S = 2 piecewise variant is the D-R circuit that does oscillate.
    auto demo = dr_demo_config();
    demo.device = cfg.device1;
    demo.v_dd = cfg.v_dd;
    demo.cap = cfg.cap;
    const auto dd_check = self_oscillation_check(dd);
    const auto dr_check = self_oscillation_check(dr);
    const auto demo_check = self_oscillation_check(demo);
    const auto dd_period = period_if_oscillating(dd, dd_check);
    const auto dr_period = period_if_oscillating(dr, dr_check);
    const auto demo_period = period_if_oscillating(demo, demo_check);
    print_check("D-D cell", dd_check, dd_period);
    const std::string dr_name = "D-R cell, R_S = " + format_number(dr.r_series);
    print_check(dr_name.c_str(), dr_check, dr_period);
    print_check("D-R demo, R_S = 2, paper rhs", demo_check, demo_period);
    Json status{{"status", "ok"}, {"command", "check"}, {"rhs", std::string(to_string(cfg.rhs_model))}};
    status["dd"] = check_json(dd_check, dd_period);
    status["dr"] = check_json(dr_check, dr_period);
    status["dr"]["r_series"] = dr.r_series;
    status["dr_demo"] = check_json(demo_check, demo_period);
    emit_status(status);
    return 0;
}

int run_cell(const SimConfig& cfg) {
    const auto t_start = std::chrono::steady_clock::now();
    CellSimOptions opts;
    opts.locate_events = cfg.locate_events;
    opts.event_tolerance = cfg.event_tolerance;
    opts.sample_stride = steps_for(cfg.output.trace_cadence, cfg.dt, "output.trace_cadence");
    const bool dd = cfg.topology == Topology::DD;
    const Trace trace = dd ? simulate_cell(cfg.dd_config(), consistent_state(cfg.dd_config(), cfg.initial_v), cfg.dt,
                                           cfg.duration, opts)
                           : simulate_cell(cfg.dr_config(), consistent_state(cfg.dr_config(), cfg.initial_v), cfg.dt,
                                           cfg.duration, opts);
    RunSummary summary = summarize_cell(trace, &cfg);
    summary.command = "cell";
    summary.scenario = dd ? "dd" : "dr";
    summary.config_echo = echo_config(cfg);
    summary.dt = cfg.dt;
    summary.duration = cfg.duration;
    write_cell_outputs(cfg.output.dir, trace, summary);
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
    write_timing(cfg.output.dir, wall);
    std::cout << "cell run: " << summary.event_count << " transitions, " << trace.size() << " samples -> "
              << cfg.output.dir << "\n";
    emit_status({{"status", "ok"},
                 {"command", "cell"},
                 {"out", cfg.output.dir},
                 {"events", summary.event_count},
                 {"mean_period", summary.periods[0].mean_period ? Json(*summary.periods[0].mean_period) : Json(nullptr)},
                 {"wall_clock_seconds", wall}});
    return 0;
}

int run_network(const SimConfig& cfg, const std::string& command) {
    const auto t_start = std::chrono::steady_clock::now();
    const Scenario sc = make_scenario(cfg);
    std::cout << command << ": " << sc.name << " on " << cfg.width << "x" << cfg.height << ", " << cfg.duration
              << " t0 at dt=" << format_number(cfg.dt) << "\n";
    const ScenarioResult result = run_scenario(sc, cfg.integrator_options());
    RunSummary summary = summarize_network(result.output, cfg.width, cfg.height, cfg.output.traced);
    summary.command = command;
    summary.scenario = sc.name;
    summary.config_echo = echo_config(cfg);
    summary.dt = cfg.dt;
    summary.duration = cfg.duration;
    summary.fired = result.fired;
    for (const auto& g : result.generations) {
        const auto count = [](const std::vector<char>& m) {
            return static_cast<std::size_t>(std::count(m.begin(), m.end(), char{1}));
        };
        summary.generations.push_back({g.index, g.t, count(g.classified), count(g.next), g.min_margin});
    }
    write_outputs(cfg.output.dir, result.output, summary, cfg.width, cfg.height);
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
    write_timing(cfg.output.dir, wall);
    std::cout << "  " << summary.event_count << " transitions, " << summary.frame_count << " frames, "
              << summary.silent_cells << " silent cells -> " << cfg.output.dir << "\n";
    emit_status({{"status", "ok"},
                 {"command", command},
                 {"scenario", sc.name},
                 {"out", cfg.output.dir},
                 {"events", summary.event_count},
                 {"frames", summary.frame_count},
                 {"silent_cells", summary.silent_cells},
                 {"wall_clock_seconds", wall}});
    return 0;
}

int run_calibrate(const SimConfig& cfg, const Options& o) {
    const double r0 = o.r0.value_or(cfg.units.r0);
    const Calibration c = cfg.topology == Topology::DD ? calibrate_physical(r0, o.freq, cfg.dd_config())
                                                       : calibrate_physical(r0, o.freq, cfg.dr_config());
    std::cout << "normalized period " << format_number(c.period_normalized) << " t0\n"
              << "C0 = " << format_number(c.c_phys_farad) << " F for R0 = " << format_number(c.r0_ohm)
              << " ohm at f = " << format_number(c.f_target_hz) << " Hz\n"
              << "re-simulated frequency " << format_number(c.f_check_hz) << " Hz\n";
    emit_status({{"status", "ok"},
                 {"command", "calibrate"},
                 {"r0_ohm", c.r0_ohm},
                 {"f_target_hz", c.f_target_hz},
                 {"period_normalized", c.period_normalized},
                 {"c_phys_farad", c.c_phys_farad},
                 {"f_check_hz", c.f_check_hz}});
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Networks of hysteretic MIT relaxation oscillators", "mitosc"};
    app.require_subcommand(0, 1);
    Options o;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", o.config_path, "Configuration file")->check(CLI::ExistingFile);
        sub->add_option("--dt", o.dt, "Time step in t0");
        sub->add_option("--duration", o.duration, "Simulated time in t0");
        sub->add_option("--out", o.out, "Output directory");
        sub->add_option("--rhs", o.rhs, "Right-hand side model: paper or exact");
    };
    auto* check = app.add_subcommand("check", "Self-oscillation diagnostics");
    add_common(check);
    auto* cell = app.add_subcommand("cell", "Single-oscillator run");
    add_common(cell);
    auto* grid = app.add_subcommand("grid", "Network run");
    add_common(grid);
    grid->add_option("--size", o.size, "Grid size WxH");
    auto* scenario = app.add_subcommand("scenario", "Named template run");
    add_common(scenario);
    scenario->add_option("--template", o.tmpl, "vortex, wave, life or life-scripted");
    scenario->add_option("--size", o.size, "Grid size WxH");
    auto* calibrate = app.add_subcommand("calibrate", "Physical capacitance for a target frequency");
    add_common(calibrate);
    calibrate->add_option("--r0", o.r0, "Load resistance R0 in ohm");
    calibrate->add_option("--freq", o.freq, "Target frequency in Hz");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        std::cout << app.help();
        emit_status({{"status", "ok"}, {"command", "help"}});
        return 0;
    } catch (const CLI::ParseError& e) {
        std::cerr << app.help();
        return fail("", "validation", e.what(), 1);
    }
    if (app.get_subcommands().empty()) {
        std::cerr << app.help();
        return fail("", "validation", "a subcommand is required", 1);
    }
    o.command = app.get_subcommands().front()->get_name();

    try {
        SimConfig cfg = load_config(o);
        if (o.command == "check") return run_check(cfg);
        if (o.command == "cell") return run_cell(cfg);
        if (o.command == "calibrate") return run_calibrate(cfg, o);
        if (o.command == "grid") {
            cfg.scenario.template_name = "none";
            return run_network(cfg, "grid");
        }
        if (cfg.scenario.template_name == "none") {
            throw ValidationError("scenario: name a template with --template or scenario.template");
        }
        return run_network(cfg, "scenario");
    } catch (const ValidationError& e) {
        return fail(o.command, "validation", e.what(), 1);
    } catch (const std::exception& e) {
        return fail(o.command, "runtime", e.what(), 2);
    }
}
