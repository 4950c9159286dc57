#pragma once

// Phase extraction and collective metrics.
//
// The phase of a cell is defined by its charging onsets (top device switching to
// metallic): phi(t) = 2*pi*(t - t_last)/(t_next - t_last), linear between onsets.

#include "mitosc/cell.hpp"
#include "mitosc/integrator.hpp"
#include "mitosc/lattice.hpp"

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace mitosc {

inline constexpr double kTwoPi = 6.283185307179586476925286766559;
inline constexpr double kPi = 3.1415926535897932384626433832795;

/// Wraps to (-pi, pi].
double wrap_phase(double x) noexcept;

struct PhaseSeries {
    std::vector<double> onsets;  // strictly increasing

    /// True for onsets.front() <= t <= onsets.back() with at least two onsets.
    bool defined_at(double t) const noexcept;
    /// Phase in [0, 2pi); throws AnalysisError outside the defined range.
    double phase_at(double t) const;
    std::optional<double> try_phase_at(double t) const noexcept;
    /// Uses only onsets at or before t, extrapolating with the last full period.
    std::optional<double> causal_phase_at(double t) const noexcept;

    std::vector<double> periods() const;
    /// Throws AnalysisError with fewer than two onsets.
    double mean_period() const;
};

/// Throws AnalysisError when the trace has fewer than two charging onsets.
PhaseSeries extract_phase(const Trace& trace);
PhaseSeries extract_phase(std::span<const NetworkEvent> events, std::size_t cell);
/// One series per cell, without the two-onset requirement.
std::vector<PhaseSeries> extract_phases(std::span<const NetworkEvent> events, std::size_t cell_count);

/// Incremental per-cell onset bookkeeping for drivers that classify phases while a
/// network is running. Only the last two onsets of each cell are kept.
class OnsetTracker {
public:
    explicit OnsetTracker(std::size_t cell_count);

    /// Consumes events[consumed()..] and remembers how far it got.
    void update(std::span<const NetworkEvent> events);
    std::size_t consumed() const noexcept { return consumed_; }

    /// Phase extrapolated from the last full period; empty before the second onset.
    std::optional<double> phase(std::size_t cell, double t) const noexcept;
    std::vector<std::optional<double>> phases(double t) const;

private:
    std::vector<double> last_;
    std::vector<double> previous_;
    std::vector<std::uint32_t> count_;
    std::size_t consumed_ = 0;
};

/// a(t) - b(t) wrapped to (-pi, pi]; throws AnalysisError when either is undefined at t.
double phase_difference(const PhaseSeries& a, const PhaseSeries& b, double t);

struct PhaseMap {
    int width = 0;
    int height = 0;
    std::vector<double> values;  // row-major, [0, 2pi)

    double at(CellCoord c) const { return values.at(static_cast<std::size_t>(c.y - 1) * width + (c.x - 1)); }
};

PhaseMap phase_map(std::span<const PhaseSeries> series, int width, int height, double t);

/// |mean(exp(i*phi))| in [0, 1]; throws ValidationError for an empty input.
double order_parameter(std::span<const double> phases);
double order_parameter(const PhaseMap& map);
double circular_mean(std::span<const double> phases);

enum class PhaseRelation : std::uint8_t { InPhase, AntiPhase };

/// Distance of a phase difference from the target relation, in [0, pi].
double relation_error(double delta, PhaseRelation target) noexcept;

struct SyncResult {
    bool converged = false;
    std::size_t cycles = 0;     // reference cycles before the relation held for 3 consecutive cycles
    std::size_t observed = 0;   // reference cycles with a defined phase difference
};

/// Evaluated at the onsets of `reference`. Throws AnalysisError when the reference
/// does not oscillate (fewer than two onsets).
SyncResult sync_time(const PhaseSeries& reference, const PhaseSeries& other, PhaseRelation target, double tol);
SyncResult sync_time(const PhaseSeries& reference, std::span<const PhaseSeries> region, PhaseRelation target,
                     double tol);

/// Time-averaged current drawn from v_dd, (v_dd - v)*g_top, over [first, last] charging
/// onset of the trace. Throws AnalysisError when the trace covers less than one period.
double supply_current(const Trace& trace, const DDCellConfig& cfg);
double supply_current(const Trace& trace, const DRConfig& cfg);
double supply_current(const Trace& trace, const DDCellConfig& cfg, double t_begin, double t_end);
double supply_current(const Trace& trace, const DRConfig& cfg, double t_begin, double t_end);

/// Total phase circulation around a closed loop of 4-adjacent cells, in turns.
/// Throws ValidationError for open or non-adjacent paths.
int phase_winding(const PhaseMap& map, std::span<const CellCoord> loop);

/// Phase differences unwrapped along a sequence (no jumps larger than pi).
std::vector<double> unwrap(std::span<const double> wrapped);

}  // namespace mitosc
