#pragma once

// Declarative network experiments: coupling templates, initial conditions, timed and
// phase-conditioned reconfiguration events, and a Conway-rule driver that maps
// alive/dead cells onto capacitive/resistive coupling.

#include "mitosc/analysis.hpp"
#include "mitosc/simulation.hpp"

#include <cstddef>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace mitosc {

struct Disk {
    CellCoord center{15, 15};
    double radius = 7.0;  // Euclidean, inclusive
};

/// Inclusive corner-to-corner rectangle.
struct Rect {
    CellCoord lo{1, 1};
    CellCoord hi{1, 1};
};

struct CellList {
    std::vector<CellCoord> cells;
};

struct WholeGrid {};

using Region = std::variant<Disk, Rect, CellList, WholeGrid>;

std::string describe(const Region& region);

/// Throws ValidationError when the region references cells outside the grid.
void validate_region(const Region& region, int width, int height);
/// Member cell indices in ascending order.
std::vector<std::size_t> region_cells(const Lattice& lattice, const Region& region);
/// Edges with both endpoints in the region.
std::vector<std::size_t> region_edges(const Lattice& lattice, const Region& region);

struct AtTime {
    double t = 0.0;
};

/// Holds when more than `fraction` of the region's cells are anti-phase with their
/// Off-edge neighbors. Evaluated at the scenario's condition cadence.
struct PhaseCondition {
    Region region;
    double fraction = 0.9;
};

using Trigger = std::variant<AtTime, PhaseCondition>;

struct SetEdgeModes {
    Region region;
    EdgeMode mode = EdgeMode::On;
};

struct SetCellVoltage {
    Region region;
    double v = 1.5;
};

/// v -> v_l + v_h - v with the two device states exchanged: the anti-phase point of
/// the symmetric D-D cycle.
struct FlipPhase {
    Region region;
};

using Action = std::variant<SetEdgeModes, SetCellVoltage, FlipPhase>;

struct Event {
    std::string id;
    Trigger trigger;
    Action action;
};

void apply_action(Lattice& lattice, NetworkState& state, const Action& action);
void apply_event(Lattice& lattice, NetworkState& state, const Event& event);

/// Reflection used by FlipPhase, in place.
void reflect_cell(const DDCellConfig& cfg, NetworkState& state, std::size_t cell);

struct LatticeSpec {
    int width = 30;
    int height = 30;
    DDCellConfig cell{};
    CouplingParams coupling{};
    Boundary boundary = Boundary::Open;
};

struct RegionEdgeMode {
    Region region;
    EdgeMode mode;
};

struct CellOffset {
    CellCoord cell;
    double dv;
};

struct CellVoltage {
    CellCoord cell;
    double v;
};

/// Every cell starts at `v0` with the charging device configuration. Offsets keep the
/// device states; overrides take the states the hysteresis map assigns; reflected
/// cells are flipped last.
struct InitialCondition {
    double v0 = 1.5;
    std::vector<CellOffset> offsets;
    std::vector<CellVoltage> overrides;
    std::vector<CellCoord> reflected;
};

struct LifeSpec {
    std::vector<CellCoord> initial_alive;
    double generation_period = 4.0;
    /// Resets every cell to the exact in-phase / anti-phase point of a reference
    /// dead cell at each generation, so classification margins do not erode.
    bool reimpose_phases = true;
};

struct Scenario {
    std::string name = "custom";
    LatticeSpec lattice;
    EdgeMode default_edge_mode = EdgeMode::On;
    std::vector<RegionEdgeMode> edge_regions;  // applied in order
    InitialCondition initial;
    std::vector<Event> events;
    std::vector<ObserverSpec> observers;
    double duration = 10.0;
    double dt = 1e-3;
    double condition_cadence = 0.05;
    std::optional<LifeSpec> life;

    /// Throws ValidationError for out-of-range regions, bad timing or unsorted events.
    void validate() const;
};

Lattice build_lattice(const Scenario& scenario);
NetworkState initial_state(const Scenario& scenario, const Lattice& lattice);

Scenario template_vortex(int width = 30, int height = 30, CellCoord center = {15, 15}, double radius = 7.0);
/// Pass std::nullopt as seed for the unperturbed metastable network.
Scenario template_wave(int width = 30, int height = 30, CellCoord center = {15, 15}, double radius = 7.0,
                       std::optional<CellCoord> seed_cell = CellCoord{2, 15});
Scenario template_life(const Region& alive_region, double generation_period = 4.0, int width = 30,
                       int height = 30);
/// Timed/conditional narrative: a capacitive grid relaxes from a bottom-left cluster;
/// when the top-right corner turns anti-phase the cluster is switched back to resistive.
Scenario template_life_scripted(int width = 30, int height = 30);
/// "vortex", "wave", "life" or "life-scripted" with default arguments.
Scenario template_by_name(const std::string& name);

/// Conway rules on the Moore neighborhood with dead cells beyond the border.
std::vector<char> conway_step(const std::vector<char>& alive, int width, int height);

/// |wrap(phi_i - mean phase of the Off-edge neighbors)| per cell; empty for cells
/// without Off edges or with an undefined phase.
std::vector<std::optional<double>> off_neighbor_offsets(const Lattice& lattice,
                                                        std::span<const std::optional<double>> phases);
inline bool is_anti_phase(double offset) noexcept { return offset > kPi / 2.0; }

struct FiredEvent {
    double t;
    std::string id;
};

struct Generation {
    std::size_t index;
    double t;
    std::vector<char> classified;  // alive mask read from the phases
    std::vector<char> next;        // after the Conway rule
    double min_margin;             // smallest distance of any cell's offset from pi/2
};

struct ScenarioResult {
    RunOutput output;
    std::vector<FiredEvent> fired;
    std::vector<Generation> generations;
};

ScenarioResult run_scenario(const Scenario& scenario, const IntegratorOptions& options = {});

}  // namespace mitosc
