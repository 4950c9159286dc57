#pragma once

// Two-state hysteretic metal-insulator-transition (MIT) device.
//
// All quantities are normalized: resistances in R0, voltages in V0,
// currents in I0 = V0/R0.

#include <cstdint>
#include <string_view>

namespace mitosc {

enum class DeviceState : std::uint8_t { Insulating = 0, Metallic = 1 };

constexpr DeviceState toggled(DeviceState s) noexcept {
    return s == DeviceState::Metallic ? DeviceState::Insulating : DeviceState::Metallic;
}

std::string_view to_string(DeviceState s) noexcept;

struct DeviceParams {
    double r_high = 2.73;            // insulating branch
    double r_low = 0.67;             // metallic branch
    double v_low_threshold = 1.0;    // metallic -> insulating at or below
    double v_high_threshold = 2.0;   // insulating -> metallic at or above

    /// Throws ValidationError unless r_high > r_low > 0 and 0 < v_low < v_high.
    /// r_high may be +infinity (no insulating leak).
    void validate() const;

    double g_insulating() const noexcept { return 1.0 / r_high; }
    double g_metallic() const noexcept { return 1.0 / r_low; }

    bool operator==(const DeviceParams&) const = default;
};

inline double conductance(DeviceState s, const DeviceParams& p) noexcept {
    return s == DeviceState::Metallic ? p.g_metallic() : p.g_insulating();
}

/// Threshold map with memory inside the hysteresis window. Comparisons are inclusive.
inline DeviceState transition(DeviceState s, double v_device, const DeviceParams& p) noexcept {
    if (s == DeviceState::Insulating) {
        return v_device >= p.v_high_threshold ? DeviceState::Metallic : s;
    }
    return v_device <= p.v_low_threshold ? DeviceState::Insulating : s;
}

inline double device_current(DeviceState s, double v_device, const DeviceParams& p) noexcept {
    return v_device * conductance(s, p);
}

}  // namespace mitosc
