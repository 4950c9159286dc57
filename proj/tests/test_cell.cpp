#include "mitosc/analysis.hpp"
#include "mitosc/cell.hpp"

#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

using namespace mitosc;

namespace {

const DeviceParams kDevice{};

DDCellConfig dd(RhsModel m) {
    DDCellConfig c;
    c.rhs_model = m;
    return c;
}

DRConfig dr(double r_series, RhsModel m) {
    DRConfig c;
    c.r_series = r_series;
    c.rhs_model = m;
    return c;
}

// Segment time of an exponential relaxation toward v_star from a to b at rate g/c.
double segment(double g, double cap, double v_star, double a, double b) {
    return cap / g * std::log((v_star - a) / (v_star - b));
}

// Brute-force RK4 with crossing interpolation; independent of the library integrator.
double brute_force_period(double g1m, double g1i, double g2m, double g2i, double v_dd, double h, int cycles) {
    double v = 1.5;
    bool top = true;  // charging configuration
    bool bottom = false;
    auto f = [&](double x) { return (v_dd - x) * (top ? g1m : g1i) - x * (bottom ? g2m : g2i); };
    std::vector<double> onsets;
    double t = 0.0;
    while (static_cast<int>(onsets.size()) <= cycles) {
        const double k1 = f(v);
        const double k2 = f(v + h / 2 * k1);
        const double k3 = f(v + h / 2 * k2);
        const double k4 = f(v + h * k3);
        const double next = v + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4);
        if (top && !bottom && next >= 2.0) {
            top = false;
            bottom = true;
            t += h * (2.0 - v) / (next - v);
            v = 2.0;
            continue;
        }
        if (!top && bottom && next <= 1.0) {
            top = true;
            bottom = false;
            t += h * (v - 1.0) / (v - next);
            v = 1.0;
            onsets.push_back(t);
            continue;
        }
        v = next;
        t += h;
    }
    return (onsets.back() - onsets.front()) / (onsets.size() - 1);
}

}  // namespace

TEST_CASE("D-R right-hand side examples") {
    CHECK(dr_rhs(1.0, DeviceState::Insulating, dr(1.0, RhsModel::PaperPiecewise)) == doctest::Approx(-1.0));
    CHECK(dr_rhs(2.0, DeviceState::Metallic, dr(1.0, RhsModel::PaperPiecewise)) ==
          doctest::Approx(1.0 / 0.67 - 2.0));
    CHECK(dr_rhs(1.0, DeviceState::Insulating, dr(1.0, RhsModel::Exact)) == doctest::Approx(2.0 / 2.73 - 1.0));
}

TEST_CASE("D-D right-hand side examples") {
    const auto paper = dd(RhsModel::PaperPiecewise);
    const auto exact = dd(RhsModel::Exact);
    CHECK(dd_rhs(1.0, DeviceState::Metallic, DeviceState::Insulating, paper) == doctest::Approx(2.0 / 0.67));
    CHECK(dd_rhs(0.0, DeviceState::Insulating, DeviceState::Metallic, paper) == 0.0);
    CHECK(dd_rhs(2.0, DeviceState::Metallic, DeviceState::Insulating, exact) ==
          doctest::Approx(1.0 / 0.67 - 2.0 / 2.73));
    // same-state combinations fall back to the full expression
    CHECK(dd_rhs(1.5, DeviceState::Metallic, DeviceState::Metallic, paper) ==
          doctest::Approx(dd_rhs(1.5, DeviceState::Metallic, DeviceState::Metallic, exact)));
}

TEST_CASE("fixed points per branch") {
    const auto find = [](const std::vector<BranchFixedPoint>& fps, const std::string& label) {
        for (const auto& f : fps) {
            if (f.label == label) return f.v_star;
        }
        FAIL("missing branch " << label);
        return 0.0;
    };
    const double gm = 1.0 / 0.67;
    const double gi = 1.0 / 2.73;
    CHECK(find(fixed_points(dr(1.0, RhsModel::PaperPiecewise)), "metallic") == doctest::Approx(3 * gm / (gm + 1)));
    CHECK(find(fixed_points(dr(1.0, RhsModel::PaperPiecewise)), "metallic") == doctest::Approx(1.796).epsilon(1e-3));
    CHECK(find(fixed_points(dd(RhsModel::PaperPiecewise)), "charging") == doctest::Approx(3.0));
    CHECK(find(fixed_points(dd(RhsModel::PaperPiecewise)), "discharging") == doctest::Approx(0.0));
    CHECK(find(fixed_points(dd(RhsModel::Exact)), "charging") == doctest::Approx(3 * gm / (gm + gi)));
    CHECK(find(fixed_points(dd(RhsModel::Exact)), "charging") == doctest::Approx(2.409).epsilon(1e-3));
    CHECK(find(fixed_points(dd(RhsModel::Exact)), "discharging") == doctest::Approx(3 * gi / (gi + gm)));
}

TEST_CASE("self-oscillation check") {
    CHECK(self_oscillation_check(dd(RhsModel::PaperPiecewise)).oscillates);
    CHECK(self_oscillation_check(dd(RhsModel::Exact)).oscillates);
    const auto unit = self_oscillation_check(dr(1.0, RhsModel::PaperPiecewise));
    CHECK_FALSE(unit.oscillates);
    CHECK(unit.trapping_branch() == "metallic");
    CHECK(self_oscillation_check(dr_demo_config()).oscillates);
    CHECK(self_oscillation_check(dd(RhsModel::Exact)).trapping_branch().empty());
    CHECK_THROWS_AS(analytic_period(dr(1.0, RhsModel::PaperPiecewise)), NonOscillatingError);
    try {
        analytic_period(dr(1.0, RhsModel::PaperPiecewise));
    } catch (const NonOscillatingError& e) {
        CHECK(e.branch() == "metallic");
    }
}

TEST_CASE("analytic period against the closed form") {
    const auto p = analytic_period(dd(RhsModel::PaperPiecewise));
    CHECK(p.t_charge == doctest::Approx(0.67 * std::log(2.0)));
    CHECK(p.t_discharge == doctest::Approx(0.67 * std::log(2.0)));
    CHECK(p.period == doctest::Approx(0.9288).epsilon(1e-4));

    const double gm = 1.0 / 0.67;
    const double gi = 1.0 / 2.73;
    const double up = 3 * gm / (gm + gi);
    const double down = 3 * gi / (gi + gm);
    const auto e = analytic_period(dd(RhsModel::Exact));
    CHECK(e.t_charge == doctest::Approx(segment(gm + gi, 1.0, up, 1.0, 2.0)));
    CHECK(e.t_discharge == doctest::Approx(segment(gm + gi, 1.0, down, 2.0, 1.0)));
    CHECK(e.period == doctest::Approx(brute_force_period(gm, gi, gm, gi, 3.0, 1e-5, 4)).epsilon(1e-4));

    auto c2 = dd(RhsModel::Exact);
    c2.cap = 2.5;
    CHECK(analytic_period(c2).period == doctest::Approx(2.5 * e.period));
}

TEST_CASE("simulated period matches the oracle") {
    for (const auto m : {RhsModel::PaperPiecewise, RhsModel::Exact}) {
        const auto cfg = dd(m);
        const auto tr = simulate_cell(cfg, consistent_state(cfg, 1.5), 1e-3, 30.0);
        const double measured = extract_phase(tr).mean_period();
        CHECK(std::abs(measured / analytic_period(cfg).period - 1.0) < 1e-6);
    }
    const auto demo = dr_demo_config();
    const auto tr = simulate_cell(demo, consistent_state(demo, 1.5), 1e-3, 30.0);
    CHECK(extract_phase(tr).mean_period() == doctest::Approx(analytic_period(demo).period).epsilon(1e-6));
}

TEST_CASE("non-oscillating D-R settles at the metallic fixed point") {
    const auto cfg = dr(1.0, RhsModel::PaperPiecewise);
    const auto tr = simulate_cell(cfg, consistent_state(cfg, 1.5), 1e-3, 40.0);
    CHECK(tr.v.back() == doctest::Approx(3 * (1 / 0.67) / (1 / 0.67 + 1)).epsilon(1e-9));
    CHECK(tr.events.empty());
    CHECK(tr.state1.back() == DeviceState::Metallic);
}

TEST_CASE("zero-duration run keeps only the initial sample") {
    const auto cfg = dd(RhsModel::Exact);
    const auto tr = simulate_cell(cfg, consistent_state(cfg, 1.5), 1e-3, 0.0);
    REQUIRE(tr.size() == 1);
    CHECK(tr.v[0] == 1.5);
    CHECK(tr.t[0] == 0.0);
}

TEST_CASE("simulate_cell rejects bad steps") {
    const auto cfg = dd(RhsModel::Exact);
    const auto init = consistent_state(cfg, 1.5);
    CHECK_THROWS_AS(simulate_cell(cfg, init, 0.0, 1.0), ValidationError);
    CHECK_THROWS_AS(simulate_cell(cfg, init, 2.0 * cell_stability_limit(cfg), 1.0), ValidationError);
    CHECK_THROWS_AS(simulate_cell(cfg, init, 1e-3, -1.0), ValidationError);
    auto bad = init;
    bad.v = std::nan("");
    CHECK_THROWS_AS(simulate_cell(cfg, bad, 1e-3, 1.0), ValidationError);
}

TEST_CASE("property: complementary pair, bounded orbit, increasing samples") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> start(0.2, 2.8);
    for (int trial = 0; trial < 20; ++trial) {
        for (const auto m : {RhsModel::PaperPiecewise, RhsModel::Exact}) {
            const auto cfg = dd(m);
            const auto tr = simulate_cell(cfg, consistent_state(cfg, start(rng)), 1e-3, 8.0);
            REQUIRE(!tr.events.empty());
            const double period = analytic_period(cfg).period;
            for (std::size_t k = 0; k < tr.size(); ++k) {
                if (k > 0) REQUIRE(tr.t[k] > tr.t[k - 1]);
                CHECK(tr.v[k] >= 0.0);
                CHECK(tr.v[k] <= cfg.v_dd);
                if (tr.t[k] > tr.events.front().t) REQUIRE(tr.state1[k] != tr.state2[k]);
                if (tr.t[k] > tr.events.front().t + period) {
                    REQUIRE(tr.v[k] >= kDevice.v_low_threshold - 1e-9);
                    REQUIRE(tr.v[k] <= kDevice.v_high_threshold + 1e-9);
                }
            }
        }
    }
}

TEST_CASE("property: without event location each toggle lags by less than one step") {
    const auto cfg = dd(RhsModel::Exact);
    const double exact = analytic_period(cfg).period;
    for (const double dt : {4e-3, 2e-3, 1e-3, 5e-4}) {
        CellSimOptions opt;
        opt.locate_events = false;
        const auto tr = simulate_cell(cfg, consistent_state(cfg, 1.5), dt, 40.0, opt);
        const auto periods = extract_phase(tr).periods();
        for (const double p : periods) {
            CHECK(p > exact - 2.0 * dt);
            CHECK(p < exact + 2.0 * dt);
        }
    }
}

TEST_CASE("cycle state at phase lies on the limit cycle") {
    const auto cfg = dd(RhsModel::Exact);
    const auto zero = cycle_state_at_phase(cfg, 0.0);
    CHECK(zero.v == doctest::Approx(1.0));
    CHECK(zero.state1 == DeviceState::Metallic);
    CHECK(zero.state2 == DeviceState::Insulating);
    const auto p = analytic_period(cfg);
    const auto turn = cycle_state_at_phase(cfg, p.t_charge / p.period);
    CHECK(turn.v == doctest::Approx(2.0));
    const auto half = cycle_state_at_phase(cfg, 0.5);
    CHECK(half.v == doctest::Approx(3.0 - cycle_state_at_phase(cfg, 0.0).v));
}
