#include "mitosc/calibrate.hpp"

#include "mitosc/analysis.hpp"
#include "mitosc/error.hpp"

#include <algorithm>
#include <cmath>

namespace mitosc {

namespace {

template <typename Config>
Calibration calibrate_impl(double r0, double f, const Config& cfg) {
    if (!(r0 > 0.0) || !std::isfinite(r0)) throw ValidationError("calibration: R0 must be finite and > 0");
    if (!(f > 0.0) || !std::isfinite(f)) throw ValidationError("calibration: target frequency must be finite and > 0");
    const double pn = analytic_period(cfg).period;
    // Periods are measured in t0 = R0*C0, so P_n*R0*C0 = 1/f fixes C0; the node carries cap*C0.
    const double c_phys = 1.0 / (f * pn * r0);

    const double dt = std::min(1e-3 * cfg.cap, 0.5 * cell_stability_limit(cfg));
    const double span = std::ceil(12.0 * pn / dt) * dt;
    const auto start = cycle_state_at_phase(cfg, 0.0);
    const auto trace = simulate_cell(cfg, start, dt, span);
    const double measured = extract_phase(trace).mean_period();
    return {r0, f, pn, c_phys, measured, 1.0 / (measured * r0 * c_phys)};
}

}  // namespace

Calibration calibrate_physical(double r0_ohm, double f_target_hz, const DDCellConfig& cfg) {
    return calibrate_impl(r0_ohm, f_target_hz, cfg);
}

Calibration calibrate_physical(double r0_ohm, double f_target_hz, const DRConfig& cfg) {
    return calibrate_impl(r0_ohm, f_target_hz, cfg);
}

}  // namespace mitosc
