#pragma once

// Run configuration and its plain-text file format.
//
// Grammar (a strict INI subset):
//   file    := { line }
//   line    := blank | comment | section | pair
//   comment := ("#" | ";") anything          full-line only
//   section := "[" name "]"
//   pair    := name "=" value                inside a section
//   name    := [a-z0-9_]+
// Every section and key must be known; duplicates are rejected. Numbers use C
// floating-point syntax (including "inf"), coordinates are "x,y", coordinate lists
// separate entries with ";".

#include "mitosc/cell.hpp"
#include "mitosc/lattice.hpp"
#include "mitosc/scenarios.hpp"

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace mitosc {

struct UnitSystem {
    double r0 = 1000.0;  // ohm
    double v0 = 1.0;     // volt
    double c0 = 1e-9;    // farad

    bool operator==(const UnitSystem&) const = default;
};

enum class Topology : std::uint8_t { DD, DR };

struct ScenarioConfig {
    std::string template_name = "none";  // none | vortex | wave | life | life-scripted
    CellCoord center{15, 15};
    double radius = 7.0;
    std::optional<CellCoord> seed = CellCoord{2, 15};  // wave only
    double generation_period = 4.0;                    // life only
    std::vector<CellCoord> alive{{3, 3}, {4, 3}, {5, 3}, {3, 4}, {4, 4}, {5, 4}, {3, 5}, {4, 5}, {5, 5}};
    bool reimpose_phases = true;

    bool operator==(const ScenarioConfig&) const = default;
};

struct OutputConfig {
    std::string dir = "out";
    double snapshot_cadence = 0.05;  // t0; 0 disables frames
    double trace_cadence = 0.01;     // t0
    std::size_t frame_stride = 1;    // keep every n-th frame
    std::vector<CellCoord> traced{{1, 1}};
    bool event_log = true;

    bool operator==(const OutputConfig&) const = default;
};

struct SimConfig {
    UnitSystem units;
    DeviceParams device1;
    DeviceParams device2;
    Topology topology = Topology::DD;
    double r_series = 1.0;  // D-R only
    double v_dd = 3.0;
    double cap = 1.0;
    RhsModel rhs_model = RhsModel::Exact;
    CouplingParams coupling;
    int width = 30;
    int height = 30;
    Boundary boundary = Boundary::Open;
    EdgeMode default_edge = EdgeMode::On;
    double dt = 1e-3;
    double duration = 10.0;
    double initial_v = 1.5;
    bool locate_events = true;
    double event_tolerance = 1e-12;
    std::uint64_t seed = 0;  // reserved; every default is deterministic
    ScenarioConfig scenario;
    OutputConfig output;

    DDCellConfig dd_config() const;
    DRConfig dr_config() const;
    IntegratorOptions integrator_options() const;

    bool operator==(const SimConfig&) const = default;
};

/// Validated configuration. Keys left out take the defaults above, except that
/// sim.duration and output.snapshot_cadence follow the selected template when absent.
/// Throws ValidationError naming the offending key path.
SimConfig parse_config(std::string_view text);

/// Canonical text of every key, 17 significant digits; parse_config(echo_config(c)) == c.
std::string echo_config(const SimConfig& config);

/// Throws ValidationError naming the offending key path.
void validate_config(const SimConfig& config);

/// Defaults for the named template (duration, cadence, sizes).
SimConfig template_defaults(const std::string& template_name);

/// Scenario described by the configuration (a plain grid when no template is named).
Scenario make_scenario(const SimConfig& config);

std::string_view to_string(Topology t) noexcept;
std::string format_number(double x);
std::string format_coord_list(const std::vector<CellCoord>& cells);

}  // namespace mitosc
