#include "mitosc/scenarios.hpp"

#include "mitosc/error.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <type_traits>

namespace mitosc {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

bool in_grid(CellCoord c, int width, int height) { return c.x >= 1 && c.y >= 1 && c.x <= width && c.y <= height; }

std::vector<char> region_mask(const Lattice& lattice, const Region& region) {
    std::vector<char> mask(lattice.cell_count(), 0);
    for (const auto i : region_cells(lattice, region)) mask[i] = 1;
    return mask;
}

}  // namespace

std::string describe(const Region& region) {
    return std::visit(Overloaded{
                          [](const Disk& d) {
                              std::ostringstream os;
                              os << "disk center " << to_string(d.center) << " radius " << d.radius;
                              return os.str();
                          },
                          [](const Rect& r) { return "rect " + to_string(r.lo) + ".." + to_string(r.hi); },
                          [](const CellList& l) { return "cell list of " + std::to_string(l.cells.size()); },
                          [](const WholeGrid&) { return std::string("whole grid"); },
                      },
                      region);
}

void validate_region(const Region& region, int width, int height) {
    std::visit(Overloaded{
                   [&](const Disk& d) {
                       if (!in_grid(d.center, width, height)) {
                           throw ValidationError("region outside grid: " + describe(region));
                       }
                       if (!std::isfinite(d.radius) || d.radius < 0.0) {
                           throw ValidationError("disk radius must be finite and >= 0");
                       }
                   },
                   [&](const Rect& r) {
                       if (!in_grid(r.lo, width, height) || !in_grid(r.hi, width, height)) {
                           throw ValidationError("region outside grid: " + describe(region));
                       }
                       if (r.lo.x > r.hi.x || r.lo.y > r.hi.y) {
                           throw ValidationError("rect corners out of order: " + describe(region));
                       }
                   },
                   [&](const CellList& l) {
                       for (const auto c : l.cells) {
                           if (!in_grid(c, width, height)) {
                               throw ValidationError("region cell " + to_string(c) + " outside grid");
                           }
                       }
                   },
                   [](const WholeGrid&) {},
               },
               region);
}

std::vector<std::size_t> region_cells(const Lattice& lattice, const Region& region) {
    validate_region(region, lattice.width(), lattice.height());
    std::vector<std::size_t> out;
    std::visit(Overloaded{
                   [&](const Disk& d) {
                       for (std::size_t i = 0; i < lattice.cell_count(); ++i) {
                           const auto c = lattice.coord(i);
                           const double dx = c.x - d.center.x;
                           const double dy = c.y - d.center.y;
                           if (dx * dx + dy * dy <= d.radius * d.radius) out.push_back(i);
                       }
                   },
                   [&](const Rect& r) {
                       for (int y = r.lo.y; y <= r.hi.y; ++y) {
                           for (int x = r.lo.x; x <= r.hi.x; ++x) out.push_back(lattice.index({x, y}));
                       }
                   },
                   [&](const CellList& l) {
                       for (const auto c : l.cells) out.push_back(lattice.index(c));
                       std::sort(out.begin(), out.end());
                       out.erase(std::unique(out.begin(), out.end()), out.end());
                   },
                   [&](const WholeGrid&) {
                       out.resize(lattice.cell_count());
                       for (std::size_t i = 0; i < out.size(); ++i) out[i] = i;
                   },
               },
               region);
    return out;
}

std::vector<std::size_t> region_edges(const Lattice& lattice, const Region& region) {
    const auto mask = region_mask(lattice, region);
    std::vector<std::size_t> out;
    for (std::size_t e = 0; e < lattice.edges().size(); ++e) {
        const auto& edge = lattice.edges()[e];
        if (mask[edge.a] && mask[edge.b]) out.push_back(e);
    }
    return out;
}

void reflect_cell(const DDCellConfig& cfg, NetworkState& state, std::size_t cell) {
    state.v[cell] = cfg.device2.v_low_threshold + cfg.device2.v_high_threshold - state.v[cell];
    std::swap(state.state1[cell], state.state2[cell]);
}

void apply_action(Lattice& lattice, NetworkState& state, const Action& action) {
    check_dimensions(lattice, state);
    std::visit(Overloaded{
                   [&](const SetEdgeModes& a) {
                       for (const auto e : region_edges(lattice, a.region)) lattice.set_edge_mode(e, a.mode);
                   },
                   [&](const SetCellVoltage& a) {
                       if (!std::isfinite(a.v)) throw ValidationError("set-voltage action needs a finite voltage");
                       for (const auto i : region_cells(lattice, a.region)) state.v[i] = a.v;
                   },
                   [&](const FlipPhase& a) {
                       for (const auto i : region_cells(lattice, a.region)) {
                           reflect_cell(lattice.cell_config(), state, i);
                       }
                   },
               },
               action);
}

void apply_event(Lattice& lattice, NetworkState& state, const Event& event) {
    apply_action(lattice, state, event.action);
}

void Scenario::validate() const {
    const int w = lattice.width;
    const int h = lattice.height;
    if (w < 1 || h < 1) throw ValidationError("scenario: lattice size must be at least 1x1");
    lattice.cell.validate();
    lattice.coupling.validate();
    if (!(dt > 0.0) || !std::isfinite(dt)) throw ValidationError("scenario: dt must be > 0");
    steps_for(duration, dt, "scenario duration");
    if (!(condition_cadence > 0.0)) throw ValidationError("scenario: condition cadence must be > 0");
    steps_for(condition_cadence, dt, "condition cadence");
    if (!std::isfinite(initial.v0)) throw ValidationError("scenario: initial v0 must be finite");
    for (const auto& r : edge_regions) validate_region(r.region, w, h);
    for (const auto& o : initial.offsets) {
        if (!in_grid(o.cell, w, h)) throw ValidationError("initial offset cell " + to_string(o.cell) + " outside grid");
    }
    for (const auto& o : initial.overrides) {
        if (!in_grid(o.cell, w, h)) {
            throw ValidationError("initial override cell " + to_string(o.cell) + " outside grid");
        }
    }
    for (const auto c : initial.reflected) {
        if (!in_grid(c, w, h)) throw ValidationError("reflected cell " + to_string(c) + " outside grid");
    }
    double last_time = -1.0;
    for (const auto& e : events) {
        std::visit(Overloaded{
                       [&](const AtTime& a) {
                           if (!std::isfinite(a.t) || a.t < 0.0) {
                               throw ValidationError("event '" + e.id + "': trigger time must be >= 0");
                           }
                           if (a.t < last_time) throw ValidationError("events must be sorted by trigger time");
                           last_time = a.t;
                       },
                       [&](const PhaseCondition& c) {
                           validate_region(c.region, w, h);
                           if (!(c.fraction >= 0.0 && c.fraction < 1.0)) {
                               throw ValidationError("event '" + e.id + "': condition fraction must be in [0, 1)");
                           }
                       },
                   },
                   e.trigger);
        std::visit([&](const auto& a) { validate_region(a.region, w, h); }, e.action);
    }
    if (life) {
        for (const auto c : life->initial_alive) {
            if (!in_grid(c, w, h)) throw ValidationError("alive cell " + to_string(c) + " outside grid");
        }
        const double period = analytic_period(lattice.cell).period;
        if (!(life->generation_period >= period)) {
            throw ValidationError("life: generation period " + std::to_string(life->generation_period) +
                                  " is shorter than one oscillation period (" + std::to_string(period) + ")");
        }
        steps_for(life->generation_period, dt, "life generation period");
    }
}

Lattice build_lattice(const Scenario& scenario) {
    const auto& spec = scenario.lattice;
    Lattice lattice(spec.width, spec.height, spec.cell, spec.coupling, spec.boundary);
    lattice.set_all_edge_modes(scenario.default_edge_mode);
    for (const auto& r : scenario.edge_regions) {
        for (const auto e : region_edges(lattice, r.region)) lattice.set_edge_mode(e, r.mode);
    }
    if (scenario.life) {
        std::vector<char> alive(lattice.cell_count(), 0);
        for (const auto c : scenario.life->initial_alive) alive[lattice.index(c)] = 1;
        for (std::size_t e = 0; e < lattice.edges().size(); ++e) {
            const auto& edge = lattice.edges()[e];
            lattice.set_edge_mode(e, alive[edge.a] || alive[edge.b] ? EdgeMode::Off : EdgeMode::On);
        }
    }
    return lattice;
}

NetworkState initial_state(const Scenario& scenario, const Lattice& lattice) {
    const auto& cfg = lattice.cell_config();
    NetworkState s = uniform_state(lattice, consistent_state(cfg, scenario.initial.v0));
    for (const auto& o : scenario.initial.offsets) s.v[lattice.index(o.cell)] += o.dv;
    for (const auto& o : scenario.initial.overrides) {
        const auto i = lattice.index(o.cell);
        const auto cs = consistent_state(cfg, o.v);
        s.v[i] = o.v;
        s.state1[i] = cs.state1;
        s.state2[i] = *cs.state2;
    }
    std::vector<CellCoord> flips = scenario.initial.reflected;
    if (scenario.life) flips.insert(flips.end(), scenario.life->initial_alive.begin(), scenario.life->initial_alive.end());
    std::vector<char> done(lattice.cell_count(), 0);
    for (const auto c : flips) {
        const auto i = lattice.index(c);
        if (done[i]) continue;
        done[i] = 1;
        reflect_cell(cfg, s, i);
    }
    return s;
}

Scenario template_vortex(int width, int height, CellCoord center, double radius) {
    Scenario sc;
    sc.name = "vortex";
    sc.lattice.width = width;
    sc.lattice.height = height;
    const Disk disk{center, radius};
    validate_region(disk, width, height);
    sc.edge_regions.push_back({disk, EdgeMode::Off});
    // A checkerboard of +-1 mV inside the disk breaks the in-phase symmetry toward
    // the anti-phase pattern that capacitive coupling favors.
    for (int y = 1; y <= height; ++y) {
        for (int x = 1; x <= width; ++x) {
            const double dx = x - center.x;
            const double dy = y - center.y;
            if (dx * dx + dy * dy <= radius * radius) {
                sc.initial.offsets.push_back({{x, y}, (x + y) % 2 == 0 ? 1e-3 : -1e-3});
            }
        }
    }
    sc.observers.push_back({ObserverKind::Snapshot, 0.05, {}});
    sc.observers.push_back({ObserverKind::CellTrace, 0.05, {center, {1, 1}}});
    sc.observers.push_back({ObserverKind::EventLog, 0.05, {}});
    sc.duration = 10.0;
    return sc;
}

Scenario template_wave(int width, int height, CellCoord center, double radius, std::optional<CellCoord> seed_cell) {
    Scenario sc;
    sc.name = "wave";
    sc.lattice.width = width;
    sc.lattice.height = height;
    const Disk disk{center, radius};
    validate_region(disk, width, height);
    sc.edge_regions.push_back({disk, EdgeMode::Off});
    if (seed_cell) {
        if (!in_grid(*seed_cell, width, height)) {
            throw ValidationError("seed cell " + to_string(*seed_cell) + " outside grid");
        }
        sc.initial.reflected.push_back(*seed_cell);
    }
    sc.observers.push_back({ObserverKind::Snapshot, 0.25, {}});
    std::vector<CellCoord> traced{center, {1, 1}};
    if (seed_cell) traced.push_back(*seed_cell);
    sc.observers.push_back({ObserverKind::CellTrace, 0.01, traced});
    sc.observers.push_back({ObserverKind::EventLog, 0.25, {}});
    sc.duration = 40.0;
    return sc;
}

Scenario template_life(const Region& alive_region, double generation_period, int width, int height) {
    Scenario sc;
    sc.name = "life";
    sc.lattice.width = width;
    sc.lattice.height = height;
    validate_region(alive_region, width, height);
    Lattice probe(width, height, sc.lattice.cell, sc.lattice.coupling);
    LifeSpec life;
    for (const auto i : region_cells(probe, alive_region)) life.initial_alive.push_back(probe.coord(i));
    if (life.initial_alive.empty() && !std::holds_alternative<CellList>(alive_region)) {
        throw ValidationError("life: alive region is empty");
    }
    life.generation_period = generation_period;
    sc.life = std::move(life);
    sc.observers.push_back({ObserverKind::Snapshot, 0.25, {}});
    sc.observers.push_back({ObserverKind::EventLog, 0.25, {}});
    sc.duration = 6.0 * generation_period;
    sc.validate();
    return sc;
}

Scenario template_life_scripted(int width, int height) {
    Scenario sc;
    sc.name = "life-scripted";
    sc.lattice.width = width;
    sc.lattice.height = height;
    sc.default_edge_mode = EdgeMode::Off;
    const int cluster = std::max(1, std::min(width, height) / 10);
    const Rect far{{std::max(1, width - 2 * cluster + 1), std::max(1, height - 2 * cluster + 1)}, {width, height}};
    for (int y = 1; y <= cluster; ++y) {
        for (int x = 1; x <= cluster; ++x) {
            if ((x + y) % 2 == 1) sc.initial.reflected.push_back({x, y});
        }
    }
    const Rect home{{1, 1}, {std::max(1, width / 3), std::max(1, height / 3)}};
    sc.events.push_back({"kill-bottom-left", PhaseCondition{far, 0.4}, SetEdgeModes{home, EdgeMode::On}});
    sc.observers.push_back({ObserverKind::Snapshot, 0.25, {}});
    sc.observers.push_back({ObserverKind::EventLog, 0.25, {}});
    sc.duration = 60.0;
    return sc;
}

Scenario template_by_name(const std::string& name) {
    if (name == "vortex") return template_vortex();
    if (name == "wave") return template_wave();
    if (name == "life") return template_life(Rect{{3, 3}, {5, 5}});
    if (name == "life-scripted") return template_life_scripted();
    throw ValidationError("unknown template '" + name + "' (expected vortex, wave, life or life-scripted)");
}

std::vector<char> conway_step(const std::vector<char>& alive, int width, int height) {
    const auto n = static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
    if (alive.size() != n) throw ValidationError("conway_step: mask size does not match the grid");
    std::vector<char> next(n, 0);
    for (int y = 0; y < height; ++y) {
        for (int x = 0; x < width; ++x) {
            int count = 0;
            for (int dy = -1; dy <= 1; ++dy) {
                for (int dx = -1; dx <= 1; ++dx) {
                    if (dx == 0 && dy == 0) continue;
                    const int xx = x + dx;
                    const int yy = y + dy;
                    if (xx < 0 || yy < 0 || xx >= width || yy >= height) continue;
                    count += alive[static_cast<std::size_t>(yy) * width + xx] ? 1 : 0;
                }
            }
            const std::size_t i = static_cast<std::size_t>(y) * width + x;
            next[i] = alive[i] ? (count == 2 || count == 3) : (count == 3);
        }
    }
    return next;
}

std::vector<std::optional<double>> off_neighbor_offsets(const Lattice& lattice,
                                                        std::span<const std::optional<double>> phases) {
    std::vector<std::optional<double>> out(lattice.cell_count());
    std::vector<double> nb;
    for (std::size_t i = 0; i < lattice.cell_count(); ++i) {
        if (!phases[i]) continue;
        nb.clear();
        bool complete = true;
        for (const auto& n : lattice.neighbors(i)) {
            if (lattice.edge_mode(n.edge) != EdgeMode::Off) continue;
            if (!phases[n.cell]) {
                complete = false;
                break;
            }
            nb.push_back(*phases[n.cell]);
        }
        if (!complete || nb.empty()) continue;
        out[i] = std::abs(wrap_phase(*phases[i] - circular_mean(nb)));
    }
    return out;
}

namespace {

class ScenarioDriver {
public:
    ScenarioDriver(const Scenario& scenario, NetworkSimulation& sim)
        : scenario_(scenario), sim_(sim), tracker_(sim.lattice().cell_count()),
          fired_flags_(scenario.events.size(), 0),
          condition_stride_(steps_for(scenario.condition_cadence, scenario.dt, "condition cadence")) {
        if (scenario.life) {
            generation_stride_ = steps_for(scenario.life->generation_period, scenario.dt, "life generation period");
            alive_.assign(sim.lattice().cell_count(), 0);
            for (const auto c : scenario.life->initial_alive) alive_[sim.lattice().index(c)] = 1;
        }
        // Timed events at t = 0 act on the initial state before anything is sampled.
        if (apply_timed(sim.state().t)) sim_.settle();
    }

    void operator()(NetworkSimulation& sim) {
        tracker_.update(sim.events());
        const std::size_t k = sim.steps_taken();
        const double t = sim.state().t;
        bool changed = apply_timed(t);
        if (k % condition_stride_ == 0) changed = apply_conditions(t) || changed;
        if (generation_stride_ != 0 && k % generation_stride_ == 0) {
            run_generation(t);
            changed = true;
        }
        if (changed) sim.settle();
    }

    std::vector<FiredEvent> fired;
    std::vector<Generation> generations;

private:
    bool apply_timed(double t) {
        bool any = false;
        const double slack = 0.5 * scenario_.dt;
        for (std::size_t e = 0; e < scenario_.events.size(); ++e) {
            const auto& ev = scenario_.events[e];
            const auto* at = std::get_if<AtTime>(&ev.trigger);
            if (fired_flags_[e] || at == nullptr || at->t > t + slack) continue;
            fire(e, t);
            any = true;
        }
        return any;
    }

    bool apply_conditions(double t) {
        bool any = false;
        std::optional<std::vector<std::optional<double>>> offsets;
        for (std::size_t e = 0; e < scenario_.events.size(); ++e) {
            const auto& ev = scenario_.events[e];
            const auto* cond = std::get_if<PhaseCondition>(&ev.trigger);
            if (fired_flags_[e] || cond == nullptr) continue;
            if (!offsets) offsets = off_neighbor_offsets(sim_.lattice(), tracker_.phases(t));
            const auto cells = region_cells(sim_.lattice(), cond->region);
            if (cells.empty()) continue;
            std::size_t anti = 0;
            for (const auto i : cells) {
                if ((*offsets)[i] && is_anti_phase(*(*offsets)[i])) ++anti;
            }
            if (static_cast<double>(anti) > cond->fraction * static_cast<double>(cells.size())) {
                fire(e, t);
                any = true;
                offsets.reset();
            }
        }
        return any;
    }

    void fire(std::size_t e, double t) {
        apply_event(sim_.lattice(), sim_.state(), scenario_.events[e]);
        fired_flags_[e] = 1;
        fired.push_back({t, scenario_.events[e].id});
    }

    void run_generation(double t) {
        Lattice& lattice = sim_.lattice();
        NetworkState& state = sim_.state();
        const auto& cfg = lattice.cell_config();
        const std::size_t n = lattice.cell_count();
        const auto phases = tracker_.phases(t);

        std::vector<double> dead_phases;
        for (std::size_t i = 0; i < n; ++i) {
            if (!alive_[i] && phases[i]) dead_phases.push_back(*phases[i]);
        }
        if (dead_phases.empty()) {
            for (const auto& p : phases) {
                if (p) dead_phases.push_back(*p);
            }
        }
        const double reference = circular_mean(dead_phases);

        Generation g{generations.size() + 1, t, std::vector<char>(n, 0), {}, kPi};
        std::vector<double> offset(n, 0.0);
        for (std::size_t i = 0; i < n; ++i) {
            if (!phases[i]) {
                g.min_margin = 0.0;
                continue;
            }
            offset[i] = std::abs(wrap_phase(*phases[i] - reference));
            g.classified[i] = is_anti_phase(offset[i]) ? 1 : 0;
            g.min_margin = std::min(g.min_margin, std::abs(offset[i] - kPi / 2.0));
        }
        g.next = conway_step(g.classified, lattice.width(), lattice.height());

        for (std::size_t e = 0; e < lattice.edges().size(); ++e) {
            const auto& edge = lattice.edges()[e];
            lattice.set_edge_mode(e, g.next[edge.a] || g.next[edge.b] ? EdgeMode::Off : EdgeMode::On);
        }

        if (scenario_.life->reimpose_phases) {
            // The dead cell closest to the reference phase defines the in-phase point.
            std::optional<std::size_t> anchor;
            for (std::size_t i = 0; i < n; ++i) {
                if (g.next[i] || g.classified[i] || !phases[i]) continue;
                if (!anchor || offset[i] < offset[*anchor]) anchor = i;
            }
            if (anchor) {
                const double v = state.v[*anchor];
                const auto s1 = state.state1[*anchor];
                const auto s2 = state.state2[*anchor];
                for (std::size_t i = 0; i < n; ++i) {
                    state.v[i] = v;
                    state.state1[i] = s1;
                    state.state2[i] = s2;
                    if (g.next[i]) reflect_cell(cfg, state, i);
                }
            }
        } else {
            for (std::size_t i = 0; i < n; ++i) {
                if (g.next[i] != g.classified[i]) reflect_cell(cfg, state, i);
            }
        }
        alive_ = g.next;
        generations.push_back(std::move(g));
    }

    const Scenario& scenario_;
    NetworkSimulation& sim_;
    OnsetTracker tracker_;
    std::vector<char> fired_flags_;
    std::size_t condition_stride_;
    std::size_t generation_stride_ = 0;
    std::vector<char> alive_;
};

}  // namespace

ScenarioResult run_scenario(const Scenario& scenario, const IntegratorOptions& options) {
    scenario.validate();
    Lattice lattice = build_lattice(scenario);
    NetworkState initial = initial_state(scenario, lattice);
    NetworkSimulation sim(std::move(lattice), std::move(initial), scenario.dt, options);
    ScenarioDriver driver(scenario, sim);
    ScenarioResult result;
    result.output = run(sim, scenario.duration, scenario.observers, [&](NetworkSimulation& s) { driver(s); });
    result.fired = std::move(driver.fired);
    result.generations = std::move(driver.generations);
    return result;
}

}  // namespace mitosc
