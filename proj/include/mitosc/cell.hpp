#pragma once

// Single-oscillator circuits.
//
//   D-R: MIT device between v_dd and the node, linear resistor from node to ground.
//   D-D: device1 between v_dd and the node, device2 from node to ground.
//
// The node carries capacitance `cap` to ground. Time is in t0 = R0*C0.

#include "mitosc/device.hpp"
#include "mitosc/error.hpp"

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace mitosc {

/// PaperPiecewise keeps only the dominant conductance of each branch
/// (the insulating leak is dropped); Exact uses every element's actual state.
enum class RhsModel : std::uint8_t { PaperPiecewise, Exact };

std::string_view to_string(RhsModel m) noexcept;
/// Accepts "paper" or "exact".
std::optional<RhsModel> parse_rhs_model(std::string_view text) noexcept;

struct DRConfig {
    DeviceParams device{};
    double r_series = 1.0;
    double v_dd = 3.0;
    double cap = 1.0;
    RhsModel rhs_model = RhsModel::Exact;

    void validate() const;
};

/// R_S = 2 R0 with the piecewise right-hand side: the D-R configuration that self-oscillates.
DRConfig dr_demo_config();

struct DDCellConfig {
    DeviceParams device1{};
    DeviceParams device2{};
    double v_dd = 3.0;
    double cap = 1.0;
    RhsModel rhs_model = RhsModel::Exact;

    void validate() const;
};

struct CellState {
    double v = 0.0;
    DeviceState state1 = DeviceState::Metallic;
    std::optional<DeviceState> state2;  // empty for D-R
    double t = 0.0;
};

struct TransitionEvent {
    double t;
    int device;  // 1 = top, 2 = bottom
    DeviceState new_state;
};

struct Trace {
    std::vector<double> t;
    std::vector<double> v;
    std::vector<DeviceState> state1;
    std::vector<DeviceState> state2;  // empty for D-R traces
    std::vector<TransitionEvent> events;

    bool two_devices = false;  // D-D trace; state2 is filled

    std::size_t size() const noexcept { return t.size(); }
};

/// Conductances from v_dd to the node (top) and from the node to ground (bottom)
/// that the selected right-hand-side model uses for a given device configuration.
struct BranchConductances {
    double g_top;
    double g_bottom;
};

BranchConductances effective_conductances(DeviceState state, const DRConfig& cfg) noexcept;
BranchConductances effective_conductances(DeviceState state1, DeviceState state2, const DDCellConfig& cfg) noexcept;

double dr_rhs(double v, DeviceState state, const DRConfig& cfg) noexcept;
double dd_rhs(double v, DeviceState state1, DeviceState state2, const DDCellConfig& cfg) noexcept;

struct BranchFixedPoint {
    std::string label;
    double v_star;
    bool stable_within_branch;  // true when the branch settles at v_star instead of switching
};

std::vector<BranchFixedPoint> fixed_points(const DRConfig& cfg);
std::vector<BranchFixedPoint> fixed_points(const DDCellConfig& cfg);

struct BranchDiagnostic {
    std::string label;
    double v_star;
    double exit_threshold;  // node voltage at which the branch switches
    bool passes;
};

struct OscillationCheck {
    bool oscillates = false;
    std::vector<BranchDiagnostic> branches;

    /// Label of the first failing branch, empty when the circuit oscillates.
    std::string trapping_branch() const;
};

OscillationCheck self_oscillation_check(const DRConfig& cfg);
OscillationCheck self_oscillation_check(const DDCellConfig& cfg);

/// Thrown by analytic_period() and friends when some branch settles before switching.
class NonOscillatingError : public ValidationError {
public:
    NonOscillatingError(std::string branch, const std::string& message)
        : ValidationError(message), branch_(std::move(branch)) {}

    const std::string& branch() const noexcept { return branch_; }

private:
    std::string branch_;
};

struct PeriodBreakdown {
    double t_charge;
    double t_discharge;
    double period;
};

PeriodBreakdown analytic_period(const DRConfig& cfg);
PeriodBreakdown analytic_period(const DDCellConfig& cfg);

/// Point on the limit cycle a fraction `phase` (in cycles, wrapped to [0,1)) past the
/// charging onset (top device switching to metallic). t of the result is 0.
CellState cycle_state_at_phase(const DRConfig& cfg, double phase);
CellState cycle_state_at_phase(const DDCellConfig& cfg, double phase);

/// Device states the hysteresis map assigns to node voltage v. Inside the window
/// the charging configuration is chosen (top metallic, bottom insulating).
CellState consistent_state(const DRConfig& cfg, double v);
CellState consistent_state(const DDCellConfig& cfg, double v);

struct CellSimOptions {
    bool locate_events = true;       // bisection on threshold crossings; off = toggle at step end
    double event_tolerance = 1e-12;  // bracket width in t0
    std::size_t sample_stride = 1;   // record every n-th step
};

/// Largest dt for which an explicit step is stable on the stiffest branch: 2*cap/g_max.
double cell_stability_limit(const DRConfig& cfg) noexcept;
double cell_stability_limit(const DDCellConfig& cfg) noexcept;

/// Integrates the piecewise-linear circuit exactly on each branch and locates
/// threshold crossings by bisection on the closed-form branch solution.
Trace simulate_cell(const DRConfig& cfg, const CellState& initial, double dt, double duration,
                    const CellSimOptions& options = {});
Trace simulate_cell(const DDCellConfig& cfg, const CellState& initial, double dt, double duration,
                    const CellSimOptions& options = {});

}  // namespace mitosc
