#pragma once

// Owner of a running network: lattice, capacitance matrix, integrator, state and the
// transition log. run() drives it with observers at fixed cadences.

#include "mitosc/cap_matrix.hpp"
#include "mitosc/integrator.hpp"
#include "mitosc/lattice.hpp"

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <vector>

namespace mitosc {

enum class ObserverKind : std::uint8_t { Snapshot, CellTrace, SupplyCurrent, EventLog };

struct ObserverSpec {
    ObserverKind kind = ObserverKind::Snapshot;
    double cadence = 0.05;          // t0; must be a whole number of steps
    std::vector<CellCoord> cells;   // CellTrace only
};

struct Frame {
    std::size_t index;
    double t;
    std::vector<double> v;  // row-major, row = N_y
};

struct CellTraceRecord {
    CellCoord cell;
    Trace trace;
};

struct SupplySample {
    double t;
    double current;  // total current drawn from v_dd by all cells
};

struct RunOutput {
    NetworkState final_state;
    std::vector<Frame> frames;
    std::vector<CellTraceRecord> traces;
    std::vector<SupplySample> supply;
    std::vector<NetworkEvent> events;  // always complete; EventLog only controls output
    bool event_log_requested = false;
    double max_residual = 0.0;
    std::size_t steps = 0;
};

class NetworkSimulation {
public:
    NetworkSimulation(Lattice lattice, NetworkState initial, double dt, IntegratorOptions options = {});
    NetworkSimulation(const NetworkSimulation&) = delete;
    NetworkSimulation& operator=(const NetworkSimulation&) = delete;

    const Lattice& lattice() const noexcept { return *lattice_; }
    /// Edge modes may be changed between steps; capacitances are fixed.
    Lattice& lattice() noexcept { return *lattice_; }
    const CapMatrix& cap_matrix() const noexcept { return *cap_; }

    const NetworkState& state() const noexcept { return state_; }
    /// For actions applied between steps (voltage overrides, phase flips).
    NetworkState& state() noexcept { return state_; }

    double dt() const noexcept { return integrator_->dt(); }
    double start_time() const noexcept { return t0_; }
    std::size_t steps_taken() const noexcept { return steps_; }
    const std::vector<NetworkEvent>& events() const noexcept { return events_; }
    double max_residual() const noexcept { return integrator_->max_residual(); }

    void step();
    /// Final partial step of length h < dt.
    void step_partial(double h);
    /// Re-applies the hysteresis map after the state was edited between steps.
    void settle() { integrator_->settle(state_, &events_); }

private:
    std::unique_ptr<Lattice> lattice_;
    std::unique_ptr<CapMatrix> cap_;
    std::unique_ptr<NetworkIntegrator> integrator_;
    NetworkState state_;
    double t0_;
    std::size_t steps_ = 0;
    std::vector<NetworkEvent> events_;
};

/// Called after every step, before observers sample; actions applied here are atomic
/// with respect to the outputs.
using StepHook = std::function<void(NetworkSimulation&)>;

/// Number of steps of length dt in `span`; throws ValidationError unless it is a whole number.
std::size_t steps_for(double span, double dt, const char* what);

RunOutput run(Lattice lattice, NetworkState initial, double dt, double duration,
              std::span<const ObserverSpec> observers, const StepHook& hook = {},
              const IntegratorOptions& options = {});

/// Drives an existing simulation; used by scenario drivers that set up the simulation first.
RunOutput run(NetworkSimulation& sim, double duration, std::span<const ObserverSpec> observers,
              const StepHook& hook = {});

}  // namespace mitosc
