#pragma once

// Event-detecting explicit integrator for M*v' = f(v, states).
//
// Between device transitions the network is linear, v' = B v + b, and one
// fourth-order Runge-Kutta step of length s equals the Taylor polynomial
//   v(s) = v + s w1 + s^2/2 w2 + s^3/6 w3 + s^4/24 w4,
//   w1 = M^{-1} f(v),  w(k+1) = M^{-1} J w(k)  (J: conductance part of f).
// The four solves per step give the whole polynomial, so threshold crossings inside
// a step are bracketed by bisection on it without further solves.

#include "mitosc/cap_matrix.hpp"
#include "mitosc/lattice.hpp"

#include <cstddef>
#include <vector>

namespace mitosc {

struct IntegratorOptions {
    bool locate_events = true;          // false: toggle devices at the end of the step
    double event_tolerance = 1e-12;     // crossing bracket width, t0
    double residual_tolerance = 1e-10;  // relative residual allowed for each solve
};

struct NetworkEvent {
    double t;
    std::size_t cell;
    int device;  // 1 = top, 2 = bottom
    DeviceState new_state;
};

/// 2*lambda_min(M)/g_max: explicit steps must stay below this.
double network_stability_limit(const Lattice& lattice, const CapMatrix& cap);

class NetworkIntegrator {
public:
    /// Throws ValidationError when dt is not below network_stability_limit().
    NetworkIntegrator(const Lattice& lattice, const CapMatrix& cap, double dt, IntegratorOptions options = {});

    double dt() const noexcept { return dt_; }
    const IntegratorOptions& options() const noexcept { return options_; }

    /// Advances by dt (or by h <= dt) and appends device transitions to `events`.
    void step(NetworkState& state, std::vector<NetworkEvent>* events = nullptr);
    void step(NetworkState& state, double h, std::vector<NetworkEvent>* events);

    /// Applies the hysteresis map to every device at the current voltages.
    void settle(NetworkState& state, std::vector<NetworkEvent>* events = nullptr) const {
        settle(state, state.t, events);
    }

    double max_residual() const noexcept { return max_residual_; }
    std::size_t solve_count() const noexcept { return solves_; }

private:
    void taylor_coefficients(const NetworkState& state);
    void solve_checked(std::span<const double> rhs, std::span<double> out);
    void apply_conductance(const NetworkState& state, std::span<const double> x, std::span<double> out) const;
    double poly(std::size_t i, double s) const noexcept {
        return v0_[i] + s * (w_[0][i] + s / 2.0 * (w_[1][i] + s / 3.0 * (w_[2][i] + s / 4.0 * w_[3][i])));
    }
    bool fires(const NetworkState& state, std::size_t i, double v) const noexcept;
    void settle(NetworkState& state, double t, std::vector<NetworkEvent>* events) const;

    const Lattice& lattice_;
    const CapMatrix& cap_;
    double dt_;
    IntegratorOptions options_;
    std::vector<double> v0_;
    std::vector<double> w_[4];
    std::vector<double> rhs_;
    std::vector<std::size_t> firing_;
    double max_residual_ = 0.0;
    std::size_t solves_ = 0;
};

/// One step from `state` without keeping an integrator around.
NetworkState network_step(const Lattice& lattice, const CapMatrix& cap, const NetworkState& state, double dt,
                          std::vector<NetworkEvent>* events = nullptr, IntegratorOptions options = {});

}  // namespace mitosc
