#include "mitosc/output.hpp"

#include "mitosc/error.hpp"

#include <json.hpp>

#include <algorithm>
#include <cstdio>
#include <fstream>

namespace mitosc {

namespace fs = std::filesystem;

namespace {

void append_number(std::string& out, double x) {
    char buf[40];
    const int n = std::snprintf(buf, sizeof buf, "%.17g", x);
    out.append(buf, static_cast<std::size_t>(n));
}

void write_file(const fs::path& path, const std::string& content) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw RuntimeError("cannot open " + path.string() + " for writing");
    f.write(content.data(), static_cast<std::streamsize>(content.size()));
    f.close();
    if (!f) throw RuntimeError("failed writing " + path.string());
}

void make_dirs(const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw RuntimeError("cannot create directory " + dir.string() + ": " + ec.message());
}

nlohmann::json coord_json(CellCoord c) { return nlohmann::json::array({c.x, c.y}); }

nlohmann::json optional_json(const std::optional<double>& x) {
    return x ? nlohmann::json(*x) : nlohmann::json(nullptr);
}

std::vector<NetworkEvent> as_network_events(const Trace& trace) {
    std::vector<NetworkEvent> out;
    out.reserve(trace.events.size());
    for (const auto& e : trace.events) out.push_back({e.t, 0, e.device, e.new_state});
    return out;
}

}  // namespace

std::uint64_t fnv1a64(std::string_view bytes) noexcept {
    std::uint64_t h = 14695981039346656037ULL;
    for (const unsigned char c : bytes) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

std::string hex64(std::uint64_t x) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(x));
    return buf;
}

std::string events_csv(std::span<const NetworkEvent> events, int width) {
    std::string out = "t,cell_x,cell_y,device,new_state\n";
    const auto w = static_cast<std::size_t>(width);
    for (const auto& e : events) {
        append_number(out, e.t);
        out += ',' + std::to_string(e.cell % w + 1) + ',' + std::to_string(e.cell / w + 1) + ',' +
               std::to_string(e.device) + ',' + (e.new_state == DeviceState::Metallic ? "1" : "0") + '\n';
    }
    return out;
}

std::string trace_csv(const Trace& trace) {
    std::string out = "t,v,state1,state2\n";
    for (std::size_t k = 0; k < trace.size(); ++k) {
        append_number(out, trace.t[k]);
        out += ',';
        append_number(out, trace.v[k]);
        out += trace.state1[k] == DeviceState::Metallic ? ",1," : ",0,";
        // D-R traces have no second device; its column stays empty.
        if (trace.two_devices) out += trace.state2[k] == DeviceState::Metallic ? '1' : '0';
        out += '\n';
    }
    return out;
}

std::string frame_csv(const Frame& frame, int width, int height) {
    std::string out;
    const auto w = static_cast<std::size_t>(width);
    for (int y = 0; y < height; ++y) {
        for (int x = 0; x < width; ++x) {
            if (x != 0) out += ',';
            append_number(out, frame.v[static_cast<std::size_t>(y) * w + static_cast<std::size_t>(x)]);
        }
        out += '\n';
    }
    return out;
}

std::string frame_filename(const Frame& frame) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "frame_%05zu_%.6f.csv", frame.index, frame.t);
    return buf;
}

RunSummary summarize_network(const RunOutput& out, int width, int height, std::span<const CellCoord> traced) {
    RunSummary s;
    s.steps = out.steps;
    s.width = width;
    s.height = height;
    s.event_count = out.events.size();
    s.event_digest = hex64(fnv1a64(events_csv(out.events, width)));
    s.max_residual = out.max_residual;
    s.frame_count = out.frames.size();

    const auto n = static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
    const auto series = extract_phases(out.events, n);
    auto index = [&](CellCoord c) {
        return static_cast<std::size_t>(c.y - 1) * static_cast<std::size_t>(width) + static_cast<std::size_t>(c.x - 1);
    };
    for (const auto c : traced) {
        const auto& p = series[index(c)];
        CellPeriod cp{c, p.onsets.size(), std::nullopt};
        if (p.onsets.size() >= 2) cp.mean_period = p.mean_period();
        s.periods.push_back(cp);
    }

    double t_lo = -1e300;
    double t_hi = 1e300;
    for (const auto& p : series) {
        if (p.onsets.size() < 2) {
            ++s.silent_cells;
            continue;
        }
        t_lo = std::max(t_lo, p.onsets.front());
        t_hi = std::min(t_hi, p.onsets.back());
    }
    if (s.silent_cells == 0 && n > 0 && t_lo <= t_hi) {
        std::vector<double> phases;
        phases.reserve(n);
        for (const auto& p : series) phases.push_back(p.phase_at(t_hi));
        s.order_time = t_hi;
        s.order_parameter = order_parameter(phases);
    }

    if (traced.size() >= 2) {
        const auto& a = series[index(traced[0])];
        const auto& b = series[index(traced[1])];
        for (const auto target : {PhaseRelation::InPhase, PhaseRelation::AntiPhase}) {
            LockSummary lock{traced[0], traced[1], target, 0.05 * kTwoPi, std::nullopt};
            if (a.onsets.size() >= 2) lock.result = sync_time(a, b, target, lock.tolerance);
            s.locks.push_back(lock);
        }
    }
    return s;
}

RunSummary summarize_cell(const Trace& trace, const SimConfig* config) {
    RunSummary s;
    s.steps = trace.size() == 0 ? 0 : trace.size() - 1;
    const auto events = as_network_events(trace);
    s.event_count = events.size();
    s.event_digest = hex64(fnv1a64(events_csv(events, 1)));
    const auto series = extract_phases(events, 1);
    CellPeriod cp{{1, 1}, series[0].onsets.size(), std::nullopt};
    if (series[0].onsets.size() >= 2) cp.mean_period = series[0].mean_period();
    else s.silent_cells = 1;
    s.periods.push_back(cp);
    if (config != nullptr) {
        const bool dd = config->topology == Topology::DD;
        const auto check = dd ? self_oscillation_check(config->dd_config()) : self_oscillation_check(config->dr_config());
        if (check.oscillates) {
            s.analytic_period = dd ? analytic_period(config->dd_config()).period : analytic_period(config->dr_config()).period;
        }
        if (series[0].onsets.size() >= 2) {
            s.supply_current = dd ? supply_current(trace, config->dd_config()) : supply_current(trace, config->dr_config());
        }
    }
    return s;
}

std::string summary_json(const RunSummary& s) {
    nlohmann::ordered_json j;
    j["command"] = s.command;
    j["scenario"] = s.scenario;
    j["dt"] = s.dt;
    j["duration"] = s.duration;
    j["steps"] = s.steps;
    j["grid"] = {s.width, s.height};
    j["event_count"] = s.event_count;
    j["event_digest"] = s.event_digest;
    j["max_solve_residual"] = s.max_residual;
    j["frame_count"] = s.frame_count;
    auto periods = nlohmann::ordered_json::array();
    for (const auto& p : s.periods) {
        periods.push_back({{"cell", coord_json(p.cell)}, {"onsets", p.onsets}, {"mean_period", optional_json(p.mean_period)}});
    }
    j["periods"] = periods;
    j["silent_cells"] = s.silent_cells;
    j["order_parameter"] = {{"t", optional_json(s.order_time)}, {"r", optional_json(s.order_parameter)}};
    auto locks = nlohmann::ordered_json::array();
    for (const auto& l : s.locks) {
        nlohmann::ordered_json lj;
        lj["reference"] = coord_json(l.reference);
        lj["other"] = coord_json(l.other);
        lj["target"] = l.target == PhaseRelation::InPhase ? "in-phase" : "anti-phase";
        lj["tolerance"] = l.tolerance;
        if (l.result) {
            lj["converged"] = l.result->converged;
            lj["cycles"] = l.result->cycles;
            lj["observed_cycles"] = l.result->observed;
        } else {
            lj["converged"] = nullptr;
        }
        locks.push_back(lj);
    }
    j["locks"] = locks;
    auto fired = nlohmann::ordered_json::array();
    for (const auto& f : s.fired) fired.push_back({{"t", f.t}, {"id", f.id}});
    j["fired_events"] = fired;
    auto gens = nlohmann::ordered_json::array();
    for (const auto& g : s.generations) {
        gens.push_back({{"index", g.index}, {"t", g.t}, {"alive", g.alive}, {"next_alive", g.next_alive},
                        {"min_margin", g.min_margin}});
    }
    j["generations"] = gens;
    j["analytic_period"] = optional_json(s.analytic_period);
    j["supply_current"] = optional_json(s.supply_current);
    j["config"] = s.config_echo;
    return j.dump(2) + "\n";
}

void write_outputs(const fs::path& dir, const RunOutput& out, const RunSummary& summary, int width, int height) {
    make_dirs(dir);
    if (out.event_log_requested) write_file(dir / "events.csv", events_csv(out.events, width));
    if (!out.traces.empty()) {
        make_dirs(dir / "traces");
        for (const auto& rec : out.traces) {
            const auto name = "trace_" + std::to_string(rec.cell.x) + "_" + std::to_string(rec.cell.y) + ".csv";
            write_file(dir / "traces" / name, trace_csv(rec.trace));
        }
    }
    if (!out.frames.empty()) {
        make_dirs(dir / "frames");
        for (const auto& f : out.frames) write_file(dir / "frames" / frame_filename(f), frame_csv(f, width, height));
    }
    write_file(dir / "summary.json", summary_json(summary));
}

void write_cell_outputs(const fs::path& dir, const Trace& trace, const RunSummary& summary) {
    make_dirs(dir);
    write_file(dir / "trace.csv", trace_csv(trace));
    write_file(dir / "events.csv", events_csv(as_network_events(trace), 1));
    write_file(dir / "summary.json", summary_json(summary));
}

void write_timing(const fs::path& dir, double wall_seconds) {
    make_dirs(dir);
    nlohmann::ordered_json j;
    j["wall_clock_seconds"] = wall_seconds;
    write_file(dir / "timing.json", j.dump(2) + "\n");
}

}  // namespace mitosc
