#include "mitosc/device.hpp"

#include "mitosc/error.hpp"

#include <cmath>
#include <string>

namespace mitosc {

std::string_view to_string(DeviceState s) noexcept {
    return s == DeviceState::Metallic ? "metallic" : "insulating";
}

void DeviceParams::validate() const {
    if (std::isnan(r_low) || std::isnan(r_high) || !(r_low > 0.0) || !std::isfinite(r_low)) {
        throw ValidationError("device: r_low must be finite and > 0 (got " + std::to_string(r_low) + ")");
    }
    if (!(r_high > r_low)) {
        throw ValidationError("device: r_high must exceed r_low (r_high=" + std::to_string(r_high) +
                              ", r_low=" + std::to_string(r_low) + ")");
    }
    if (!std::isfinite(v_low_threshold) || !std::isfinite(v_high_threshold) || !(v_low_threshold > 0.0)) {
        throw ValidationError("device: v_low must be finite and > 0 (got " + std::to_string(v_low_threshold) + ")");
    }
    if (!(v_low_threshold < v_high_threshold)) {
        throw ValidationError("device: v_low must be below v_high (v_low=" + std::to_string(v_low_threshold) +
                              ", v_high=" + std::to_string(v_high_threshold) + ")");
    }
}

}  // namespace mitosc
