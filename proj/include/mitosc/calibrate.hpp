#pragma once

// Mapping of the normalized oscillator onto physical units: with the load resistance
// R0 fixed, the capacitance that makes the oscillator run at a target frequency.

#include "mitosc/cell.hpp"

namespace mitosc {

struct Calibration {
    double r0_ohm;
    double f_target_hz;
    double period_normalized;   // in t0
    double c_phys_farad;        // C0 such that P_n * R0 * C0 = 1/f
    double period_simulated;    // re-simulated period in t0
    double f_check_hz;          // 1 / (period_simulated * R0 * C0)
};

/// Throws NonOscillatingError for a configuration that does not self-oscillate and
/// ValidationError for non-positive R0 or frequency.
Calibration calibrate_physical(double r0_ohm, double f_target_hz, const DDCellConfig& cfg);
Calibration calibrate_physical(double r0_ohm, double f_target_hz, const DRConfig& cfg);

}  // namespace mitosc
