#include "mitosc/simulation.hpp"

#include "mitosc/error.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace mitosc {

NetworkSimulation::NetworkSimulation(Lattice lattice, NetworkState initial, double dt, IntegratorOptions options)
    : lattice_(std::make_unique<Lattice>(std::move(lattice))),
      cap_(std::make_unique<CapMatrix>(*lattice_)),
      integrator_(std::make_unique<NetworkIntegrator>(*lattice_, *cap_, dt, options)),
      state_(std::move(initial)),
      t0_(state_.t) {
    check_dimensions(*lattice_, state_);
    for (const double v : state_.v) {
        if (!std::isfinite(v)) throw ValidationError("network: initial voltages must be finite");
    }
    integrator_->settle(state_, &events_);
}

void NetworkSimulation::step() {
    integrator_->step(state_, &events_);
    ++steps_;
    state_.t = t0_ + static_cast<double>(steps_) * integrator_->dt();
}

void NetworkSimulation::step_partial(double h) {
    integrator_->step(state_, h, &events_);
}

std::size_t steps_for(double span, double dt, const char* what) {
    if (!(span >= 0.0) || !std::isfinite(span)) throw ValidationError(std::string(what) + " must be finite and >= 0");
    const double ratio = span / dt;
    const double k = std::round(ratio);
    if (std::abs(ratio - k) > 1e-6) {
        throw ValidationError(std::string(what) + "=" + std::to_string(span) + " is not a whole number of steps dt=" +
                              std::to_string(dt));
    }
    return static_cast<std::size_t>(k);
}

namespace {

double supply_current(const Lattice& lattice, const NetworkState& s) {
    const auto& cfg = lattice.cell_config();
    double total = 0.0;
    for (std::size_t i = 0; i < s.size(); ++i) {
        total += (cfg.v_dd - s.v[i]) * effective_conductances(s.state1[i], s.state2[i], cfg).g_top;
    }
    return total;
}

}  // namespace

RunOutput run(NetworkSimulation& sim, double duration, std::span<const ObserverSpec> observers,
              const StepHook& hook) {
    const double dt = sim.dt();
    const std::size_t total = steps_for(duration, dt, "duration");
    const Lattice& lattice = sim.lattice();

    struct Active {
        const ObserverSpec* spec;
        std::size_t stride;
        std::vector<std::size_t> cells;
        std::size_t first_trace;
    };
    RunOutput out;
    std::vector<Active> active;
    for (const auto& spec : observers) {
        if (spec.kind == ObserverKind::EventLog) {
            out.event_log_requested = true;
            continue;
        }
        if (!(spec.cadence > 0.0)) throw ValidationError("observer cadence must be positive");
        const std::size_t stride = steps_for(spec.cadence, dt, "observer cadence");
        if (stride == 0) throw ValidationError("observer cadence is shorter than dt");
        Active a{&spec, stride, {}, out.traces.size()};
        if (spec.kind == ObserverKind::CellTrace) {
            for (const auto c : spec.cells) {
                a.cells.push_back(lattice.index(c));
                CellTraceRecord rec{c, {}};
                rec.trace.two_devices = true;
                out.traces.push_back(std::move(rec));
            }
        }
        active.push_back(std::move(a));
    }

    const std::size_t events_before = sim.events().size();
    auto sample = [&](std::size_t k) {
        const auto& s = sim.state();
        for (const auto& a : active) {
            if (k % a.stride != 0) continue;
            switch (a.spec->kind) {
                case ObserverKind::Snapshot:
                    out.frames.push_back({out.frames.size(), s.t, s.v});
                    break;
                case ObserverKind::CellTrace:
                    for (std::size_t j = 0; j < a.cells.size(); ++j) {
                        auto& tr = out.traces[a.first_trace + j].trace;
                        const std::size_t i = a.cells[j];
                        tr.t.push_back(s.t);
                        tr.v.push_back(s.v[i]);
                        tr.state1.push_back(s.state1[i]);
                        tr.state2.push_back(s.state2[i]);
                    }
                    break;
                case ObserverKind::SupplyCurrent:
                    out.supply.push_back({s.t, supply_current(sim.lattice(), s)});
                    break;
                case ObserverKind::EventLog:
                    break;
            }
        }
    };

    sample(0);
    for (std::size_t k = 1; k <= total; ++k) {
        sim.step();
        if (hook) hook(sim);
        sample(k);
    }

    out.events.assign(sim.events().begin() + static_cast<std::ptrdiff_t>(events_before), sim.events().end());
    for (auto& rec : out.traces) {
        const std::size_t i = lattice.index(rec.cell);
        for (const auto& e : out.events) {
            if (e.cell == i) rec.trace.events.push_back({e.t, e.device, e.new_state});
        }
    }
    out.final_state = sim.state();
    out.max_residual = sim.max_residual();
    out.steps = total;
    return out;
}

RunOutput run(Lattice lattice, NetworkState initial, double dt, double duration,
              std::span<const ObserverSpec> observers, const StepHook& hook, const IntegratorOptions& options) {
    NetworkSimulation sim(std::move(lattice), std::move(initial), dt, options);
    return run(sim, duration, observers, hook);
}

}  // namespace mitosc
