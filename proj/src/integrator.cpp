#include "mitosc/integrator.hpp"

#include "mitosc/error.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace mitosc {

double network_stability_limit(const Lattice& lattice, const CapMatrix& cap) {
    const double g_max = lattice.max_row_conductance();
    return 2.0 * cap.min_eigenvalue_bound() / g_max;
}

NetworkIntegrator::NetworkIntegrator(const Lattice& lattice, const CapMatrix& cap, double dt, IntegratorOptions options)
    : lattice_(lattice), cap_(cap), dt_(dt), options_(options) {
    if (cap.size() != lattice.cell_count()) throw ValidationError("integrator: cap matrix does not match lattice");
    if (!(dt > 0.0) || !std::isfinite(dt)) throw ValidationError("integrator: dt must be positive");
    const double limit = network_stability_limit(lattice, cap);
    if (!(dt < limit)) {
        throw ValidationError("integrator: dt=" + std::to_string(dt) + " is not below the stability bound " +
                              std::to_string(limit));
    }
    if (!(options.event_tolerance > 0.0)) throw ValidationError("integrator: event_tolerance must be positive");
    const std::size_t n = lattice.cell_count();
    v0_.resize(n);
    for (auto& w : w_) w.resize(n);
    rhs_.resize(n);
}

void NetworkIntegrator::solve_checked(std::span<const double> rhs, std::span<double> out) {
    cap_.solve(rhs, out);
    ++solves_;
    const double r = cap_.relative_residual(out, rhs);
    max_residual_ = std::max(max_residual_, r);
    if (!(r <= options_.residual_tolerance)) {
        throw RuntimeError("integrator: solve residual " + std::to_string(r) + " above tolerance");
    }
}

void NetworkIntegrator::apply_conductance(const NetworkState& state, std::span<const double> x,
                                          std::span<double> out) const {
    const auto& cfg = lattice_.cell_config();
    for (std::size_t i = 0; i < x.size(); ++i) {
        const auto g = effective_conductances(state.state1[i], state.state2[i], cfg);
        double f = -x[i] * (g.g_top + g.g_bottom);
        for (const auto& nb : lattice_.neighbors(i)) {
            const double gc = lattice_.edge_conductance(nb.edge);
            if (gc != 0.0) f += (x[nb.cell] - x[i]) * gc;
        }
        out[i] = f;
    }
}

void NetworkIntegrator::taylor_coefficients(const NetworkState& state) {
    v0_ = state.v;
    network_rhs(lattice_, state.v, state.state1, state.state2, rhs_);
    solve_checked(rhs_, w_[0]);
    for (int k = 1; k < 4; ++k) {
        apply_conductance(state, w_[k - 1], rhs_);
        solve_checked(rhs_, w_[k]);
    }
}

bool NetworkIntegrator::fires(const NetworkState& state, std::size_t i, double v) const noexcept {
    const auto& cfg = lattice_.cell_config();
    return transition(state.state1[i], cfg.v_dd - v, cfg.device1) != state.state1[i] ||
           transition(state.state2[i], v, cfg.device2) != state.state2[i];
}

void NetworkIntegrator::settle(NetworkState& state, double t, std::vector<NetworkEvent>* events) const {
    const auto& cfg = lattice_.cell_config();
    for (std::size_t i = 0; i < state.size(); ++i) {
        const DeviceState n1 = transition(state.state1[i], cfg.v_dd - state.v[i], cfg.device1);
        const DeviceState n2 = transition(state.state2[i], state.v[i], cfg.device2);
        if (n1 != state.state1[i]) {
            state.state1[i] = n1;
            if (events) events->push_back({t, i, 1, n1});
        }
        if (n2 != state.state2[i]) {
            state.state2[i] = n2;
            if (events) events->push_back({t, i, 2, n2});
        }
    }
}

void NetworkIntegrator::step(NetworkState& state, std::vector<NetworkEvent>* events) { step(state, dt_, events); }

void NetworkIntegrator::step(NetworkState& state, double h, std::vector<NetworkEvent>* events) {
    check_dimensions(lattice_, state);
    if (!(h > 0.0) || h > dt_ * (1.0 + 1e-12)) throw ValidationError("integrator: step length must be in (0, dt]");
    const std::size_t n = state.size();
    const double t_begin = state.t;
    const double t_end = t_begin + h;
    double elapsed = 0.0;
    settle(state, t_begin, events);

    for (int guard = 0;; ++guard) {
        if (guard > 1'000'000) throw RuntimeError("integrator: too many transitions within one step");
        const double remaining = h - elapsed;
        taylor_coefficients(state);

        firing_.clear();
        for (std::size_t i = 0; i < n; ++i) {
            const double v_end = poly(i, remaining);
            if (!std::isfinite(v_end)) {
                throw RuntimeError("integrator: non-finite voltage at cell " + to_string(lattice_.coord(i)) +
                                   ", t=" + std::to_string(t_begin + elapsed));
            }
            if (fires(state, i, v_end)) firing_.push_back(i);
        }
        if (firing_.empty() || !options_.locate_events) {
            for (std::size_t i = 0; i < n; ++i) state.v[i] = poly(i, remaining);
            if (!firing_.empty()) settle(state, t_end, events);
            break;
        }

        double first = remaining;
        for (const std::size_t i : firing_) {
            double lo = 0.0;
            double hi = remaining;
            while (hi - lo > options_.event_tolerance) {
                const double mid = 0.5 * (lo + hi);
                if (mid <= lo || mid >= hi) break;
                if (fires(state, i, poly(i, mid))) hi = mid;
                else lo = mid;
            }
            first = std::min(first, hi);
        }
        for (std::size_t i = 0; i < n; ++i) state.v[i] = poly(i, first);
        if (first >= remaining) {
            settle(state, t_end, events);
            break;
        }
        elapsed += first;
        settle(state, t_begin + elapsed, events);
    }
    state.t = t_end;
}

NetworkState network_step(const Lattice& lattice, const CapMatrix& cap, const NetworkState& state, double dt,
                          std::vector<NetworkEvent>* events, IntegratorOptions options) {
    NetworkIntegrator integrator(lattice, cap, dt, options);
    NetworkState next = state;
    integrator.step(next, events);
    return next;
}

}  // namespace mitosc
