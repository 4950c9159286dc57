#pragma once

// CSV/JSON serialization of runs and the run summary.
//
// Layout of an output directory:
//   summary.json                     run summary (deterministic)
//   timing.json                      wall-clock seconds (differs between reruns)
//   events.csv                       t,cell_x,cell_y,device,new_state
//   traces/trace_<x>_<y>.csv         t,v,state1,state2
//   frames/frame_<index>_<t>.csv     voltage map, one row per N_y, one column per N_x
//
// Numbers are written with 17 significant digits; device states as 0 (insulating)
// or 1 (metallic).

#include "mitosc/analysis.hpp"
#include "mitosc/config.hpp"
#include "mitosc/scenarios.hpp"
#include "mitosc/simulation.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace mitosc {

struct CellPeriod {
    CellCoord cell;
    std::size_t onsets = 0;
    std::optional<double> mean_period;
};

struct LockSummary {
    CellCoord reference;
    CellCoord other;
    PhaseRelation target;
    double tolerance;
    std::optional<SyncResult> result;  // empty when the reference does not oscillate
};

struct GenerationSummary {
    std::size_t index;
    double t;
    std::size_t alive;
    std::size_t next_alive;
    double min_margin;
};

struct RunSummary {
    std::string command;
    std::string scenario;
    std::string config_echo;
    double dt = 0.0;
    double duration = 0.0;
    std::size_t steps = 0;
    int width = 1;
    int height = 1;
    std::size_t event_count = 0;
    std::string event_digest;  // FNV-1a 64 of the events CSV text
    double max_residual = 0.0;
    std::size_t frame_count = 0;
    std::vector<CellPeriod> periods;
    std::optional<double> order_time;
    std::optional<double> order_parameter;
    std::size_t silent_cells = 0;  // cells with fewer than two charging onsets
    std::vector<LockSummary> locks;
    std::vector<FiredEvent> fired;
    std::vector<GenerationSummary> generations;
    std::optional<double> analytic_period;  // from the configuration, cell runs only
    std::optional<double> supply_current;   // cell runs only
};

std::string events_csv(std::span<const NetworkEvent> events, int width);
std::string trace_csv(const Trace& trace);
std::string frame_csv(const Frame& frame, int width, int height);
std::string frame_filename(const Frame& frame);
std::uint64_t fnv1a64(std::string_view bytes) noexcept;
std::string hex64(std::uint64_t x);

/// Metrics of a network run; every value can be recomputed from the CSV files.
RunSummary summarize_network(const RunOutput& out, int width, int height, std::span<const CellCoord> traced);
/// Metrics of a single-cell run; supply_current and analytic_period are filled when defined.
RunSummary summarize_cell(const Trace& trace, const SimConfig* config);

std::string summary_json(const RunSummary& summary);

/// Writes every artifact of a network run. Throws RuntimeError with the path on I/O failure.
void write_outputs(const std::filesystem::path& dir, const RunOutput& out, const RunSummary& summary, int width,
                   int height);
/// Single-cell run: trace.csv, events.csv and summary.json.
void write_cell_outputs(const std::filesystem::path& dir, const Trace& trace, const RunSummary& summary);
void write_timing(const std::filesystem::path& dir, double wall_seconds);

}  // namespace mitosc
