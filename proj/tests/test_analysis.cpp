#include "mitosc/analysis.hpp"
#include "mitosc/simulation.hpp"

#include <doctest.h>

#include <cmath>
#include <limits>
#include <random>
#include <vector>

using namespace mitosc;

namespace {

// Average top-branch current of one relaxation segment v(t) = vs + (a - vs) exp(-t/tau),
// integrated in closed form over [0, T].
double segment_charge(double g_top, double v_dd, double vs, double a, double tau, double T) {
    return g_top * ((v_dd - vs) * T - (a - vs) * tau * (1.0 - std::exp(-T / tau)));
}

PhaseMap synthetic_vortex(int w, int h, double cx, double cy) {
    PhaseMap m{w, h, {}};
    for (int y = 1; y <= h; ++y) {
        for (int x = 1; x <= w; ++x) {
            double a = std::atan2(y - cy, x - cx);
            if (a < 0) a += kTwoPi;
            m.values.push_back(a);
        }
    }
    return m;
}

}  // namespace

TEST_CASE("property: wrap_phase lands in (-pi, pi] and preserves the angle") {
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> u(-100.0, 100.0);
    for (int k = 0; k < 10000; ++k) {
        const double x = u(rng);
        const double w = wrap_phase(x);
        REQUIRE(w > -kPi);
        REQUIRE(w <= kPi);
        CHECK(std::cos(w) == doctest::Approx(std::cos(x)).epsilon(1e-9));
        CHECK(std::sin(w) == doctest::Approx(std::sin(x)).epsilon(1e-9));
    }
    CHECK(wrap_phase(kPi) == doctest::Approx(kPi));
    CHECK(wrap_phase(-kPi) == doctest::Approx(kPi));
}

TEST_CASE("phase series interpolation") {
    const PhaseSeries p{{1.0, 2.0, 4.0}};
    CHECK_FALSE(p.defined_at(0.5));
    CHECK(p.defined_at(1.0));
    CHECK(p.defined_at(4.0));
    CHECK(p.phase_at(1.5) == doctest::Approx(kPi));
    CHECK(p.phase_at(3.0) == doctest::Approx(kPi));
    CHECK(p.phase_at(2.0) == doctest::Approx(0.0));
    CHECK_THROWS_AS(p.phase_at(5.0), AnalysisError);
    CHECK_FALSE(p.try_phase_at(0.0).has_value());
    CHECK(p.periods() == std::vector<double>{1.0, 2.0});
    CHECK(p.mean_period() == doctest::Approx(1.5));
    CHECK(*p.causal_phase_at(5.0) == doctest::Approx(kPi));
    CHECK_THROWS_AS(PhaseSeries{{1.0}}.mean_period(), AnalysisError);
}

TEST_CASE("phases of uncoupled cells") {
    DDCellConfig cfg;
    const auto tr = simulate_cell(cfg, consistent_state(cfg, 1.5), 1e-3, 20.0);
    const auto p = extract_phase(tr);
    for (const double period : p.periods()) CHECK(period == doctest::Approx(analytic_period(cfg).period).epsilon(1e-6));
    const auto flat = simulate_cell(cfg, consistent_state(cfg, 1.5), 1e-3, 0.5);
    CHECK_THROWS_AS(extract_phase(flat), AnalysisError);

    CouplingParams open;
    open.r_on = std::numeric_limits<double>::infinity();
    open.r_off = open.r_on;
    open.c_couple = 0.0;
    Lattice lat(3, 1, cfg, open);
    auto init = uniform_state(lat, cycle_state_at_phase(cfg, 0.0));
    const auto flipped = cycle_state_at_phase(cfg, 0.5);
    init.v[2] = flipped.v;
    init.state1[2] = flipped.state1;
    init.state2[2] = *flipped.state2;
    const auto out = run(std::move(lat), init, 1e-3, 12.0, {});
    const auto series = extract_phases(out.events, 3);
    for (double t = 3.0; t < 9.0; t += 0.37) {
        CHECK(phase_difference(series[0], series[1], t) == doctest::Approx(0.0).epsilon(1e-9));
        CHECK(std::abs(phase_difference(series[0], series[2], t)) == doctest::Approx(kPi).epsilon(1e-6));
    }
    CHECK_THROWS_AS(phase_difference(series[0], series[1], 100.0), AnalysisError);

    OnsetTracker tracker(3);
    tracker.update(out.events);
    CHECK(tracker.consumed() == out.events.size());
    for (std::size_t c = 0; c < 3; ++c) {
        const double t = series[c].onsets.back() + 0.1;
        CHECK(*tracker.phase(c, t) == doctest::Approx(*series[c].causal_phase_at(t)));
    }
    CHECK_FALSE(OnsetTracker(2).phase(0, 1.0).has_value());
}

TEST_CASE("order parameter") {
    CHECK(order_parameter(std::vector<double>(10, 1.3)) == doctest::Approx(1.0));
    std::vector<double> split(6, 0.4);
    for (std::size_t k = 3; k < 6; ++k) split[k] += kPi;
    CHECK(order_parameter(split) == doctest::Approx(0.0).epsilon(1e-12));
    CHECK_THROWS_AS(order_parameter(std::vector<double>{}), ValidationError);

    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> u(0.0, kTwoPi);
    for (int k = 0; k < 200; ++k) {
        std::vector<double> phases(1 + k % 17);
        for (auto& p : phases) p = u(rng);
        const double r = order_parameter(phases);
        CHECK(r >= 0.0);
        CHECK(r <= 1.0);
        const double shift = u(rng);
        auto rotated = phases;
        for (auto& p : rotated) p = std::fmod(p + shift, kTwoPi);
        CHECK(order_parameter(rotated) == doctest::Approx(r).epsilon(1e-9));
    }
    CHECK(circular_mean(std::vector<double>{0.1, 0.3}) == doctest::Approx(0.2));
    CHECK(relation_error(kPi, PhaseRelation::AntiPhase) == doctest::Approx(0.0));
    CHECK(relation_error(-kPi + 0.1, PhaseRelation::AntiPhase) == doctest::Approx(0.1));
    CHECK(relation_error(0.2, PhaseRelation::InPhase) == doctest::Approx(0.2));
}

TEST_CASE("sync time") {
    const PhaseSeries a{{0, 1, 2, 3, 4, 5, 6}};
    const auto locked = sync_time(a, a, PhaseRelation::InPhase, 0.05 * kTwoPi);
    CHECK(locked.converged);
    CHECK(locked.cycles == 0);
    const PhaseSeries half{{0.5, 1.5, 2.5, 3.5, 4.5, 5.5, 6.5}};
    CHECK_FALSE(sync_time(a, half, PhaseRelation::InPhase, 0.05 * kTwoPi).converged);
    CHECK(sync_time(a, half, PhaseRelation::AntiPhase, 0.05 * kTwoPi).converged);
    // first defined at t = 1, inside tolerance from t = 3 on: two cycles after the first observation
    const PhaseSeries drift{{0.1, 1.25, 2.4, 3.5, 4.5, 5.5, 6.5, 7.5}};
    const auto late = sync_time(a, drift, PhaseRelation::AntiPhase, 0.05 * kTwoPi);
    CHECK(late.converged);
    CHECK(late.cycles == 2);
    CHECK_THROWS_AS(sync_time(PhaseSeries{{1.0}}, a, PhaseRelation::InPhase, 0.1), AnalysisError);
    const std::vector<PhaseSeries> region{a, a};
    CHECK(sync_time(a, region, PhaseRelation::InPhase, 0.1).converged);
}

TEST_CASE("supply current against closed-form segment integrals") {
    const double gm = 1.0 / 0.67;
    const double gi = 1.0 / 2.73;

    DDCellConfig dd;
    const auto p = analytic_period(dd);
    const double tau = 1.0 / (gm + gi);
    const double up = 3.0 * gm / (gm + gi);
    const double down = 3.0 * gi / (gm + gi);
    const double oracle_dd = (segment_charge(gm, 3.0, up, 1.0, tau, p.t_charge) +
                              segment_charge(gi, 3.0, down, 2.0, tau, p.t_discharge)) / p.period;
    const auto tr = simulate_cell(dd, consistent_state(dd, 1.5), 1e-3, 40.0);
    const double measured_dd = supply_current(tr, dd);
    CHECK(measured_dd > 0.0);
    CHECK(measured_dd == doctest::Approx(oracle_dd).epsilon(1e-5));

    const auto demo = dr_demo_config();
    const auto q = analytic_period(demo);
    const double g_demo = gm + 1.0 / demo.r_series;
    const double oracle_dr = segment_charge(gm, 3.0, 3.0 * gm / g_demo, 1.0, 1.0 / g_demo, q.t_charge) / q.period;
    const auto tr_dr = simulate_cell(demo, consistent_state(demo, 1.5), 1e-3, 40.0);
    CHECK(supply_current(tr_dr, demo) == doctest::Approx(oracle_dr).epsilon(1e-5));

    DDCellConfig paper;
    paper.rhs_model = RhsModel::PaperPiecewise;
    const auto tr_paper = simulate_cell(paper, consistent_state(paper, 1.5), 1e-3, 40.0);
    CHECK(supply_current(tr_paper, paper) == doctest::Approx(1.0 / analytic_period(paper).period).epsilon(1e-5));

    // with the leak dropped, an insulating top device carries nothing
    DRConfig off = demo;
    Trace idle;
    for (int k = 0; k <= 10; ++k) {
        idle.t.push_back(0.1 * k);
        idle.v.push_back(0.5);
        idle.state1.push_back(DeviceState::Insulating);
    }
    CHECK(supply_current(idle, off, 0.0, 1.0) == 0.0);
    CHECK_THROWS_AS(supply_current(idle, off), AnalysisError);
}

TEST_CASE("phase winding") {
    const std::vector<CellCoord> loop{{4, 4}, {5, 4}, {6, 4}, {6, 5}, {6, 6}, {5, 6}, {4, 6}, {4, 5}};
    PhaseMap flat{9, 9, std::vector<double>(81, 2.0)};
    CHECK(phase_winding(flat, loop) == 0);
    CHECK(phase_winding(synthetic_vortex(9, 9, 5.0, 5.0), loop) == 1);
    std::vector<CellCoord> reversed(loop.rbegin(), loop.rend());
    CHECK(phase_winding(synthetic_vortex(9, 9, 5.0, 5.0), reversed) == -1);
    CHECK(phase_winding(synthetic_vortex(9, 9, 2.0, 2.0), loop) == 0);
    const std::vector<CellCoord> gap{{4, 4}, {6, 4}, {6, 6}, {4, 6}};
    CHECK_THROWS_AS(phase_winding(flat, gap), ValidationError);
    const std::vector<CellCoord> tiny{{1, 1}, {2, 1}};
    CHECK_THROWS_AS(phase_winding(flat, tiny), ValidationError);
}

TEST_CASE("unwrap removes jumps larger than pi") {
    const std::vector<double> wrapped{3.0, -3.0, -2.9, 3.1};
    const auto u = unwrap(wrapped);
    REQUIRE(u.size() == 4);
    for (std::size_t k = 1; k < u.size(); ++k) CHECK(std::abs(u[k] - u[k - 1]) <= kPi);
    CHECK(u[1] == doctest::Approx(-3.0 + kTwoPi));
}

TEST_CASE("phase map layout") {
    const std::vector<PhaseSeries> series{{{0.0, 1.0}}, {{0.25, 1.25}}, {{0.5, 1.5}}, {{0.75, 1.75}}};
    const auto m = phase_map(series, 2, 2, 1.0);
    CHECK(m.at({1, 1}) == doctest::Approx(0.0));
    CHECK(m.at({2, 1}) == doctest::Approx(0.75 * kTwoPi));
    CHECK(m.at({1, 2}) == doctest::Approx(0.5 * kTwoPi));
    CHECK(order_parameter(m) == doctest::Approx(0.0).epsilon(1e-12));
}
