#include "mitosc/device.hpp"
#include "mitosc/error.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <vector>

using namespace mitosc;

TEST_CASE("conductance of each state") {
    DeviceParams p;
    CHECK(conductance(DeviceState::Metallic, p) == doctest::Approx(1.4925).epsilon(1e-4));
    CHECK(conductance(DeviceState::Insulating, p) == doctest::Approx(0.3663).epsilon(1e-4));
    p.r_low = 1.0;
    CHECK(conductance(DeviceState::Metallic, p) == 1.0);
}

TEST_CASE("threshold map examples") {
    const DeviceParams p;
    CHECK(transition(DeviceState::Insulating, 2.0, p) == DeviceState::Metallic);
    CHECK(transition(DeviceState::Metallic, 1.5, p) == DeviceState::Metallic);
    CHECK(transition(DeviceState::Metallic, 1.0, p) == DeviceState::Insulating);
    CHECK(transition(DeviceState::Insulating, 1.999999, p) == DeviceState::Insulating);
}

TEST_CASE("device current is Ohmic") {
    DeviceParams p;
    CHECK(device_current(DeviceState::Metallic, 1.0, p) == doctest::Approx(1.4925).epsilon(1e-4));
    CHECK(device_current(DeviceState::Insulating, 0.0, p) == 0.0);
    CHECK(device_current(DeviceState::Insulating, 2.73, p) == doctest::Approx(1.0));
}

TEST_CASE("parameter validation") {
    DeviceParams p;
    CHECK_NOTHROW(p.validate());
    p.r_high = std::numeric_limits<double>::infinity();
    CHECK_NOTHROW(p.validate());
    p = {};
    p.r_low = 3.0;
    CHECK_THROWS_AS(p.validate(), ValidationError);
    p = {};
    p.v_low_threshold = 2.5;
    CHECK_THROWS_AS(p.validate(), ValidationError);
    p = {};
    p.r_low = 0.0;
    CHECK_THROWS_AS(p.validate(), ValidationError);
    p = {};
    p.v_low_threshold = std::nan("");
    CHECK_THROWS_AS(p.validate(), ValidationError);
}

TEST_CASE("property: hysteresis memory, idempotence and monotone switching") {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> vl(0.1, 2.0);
    std::uniform_real_distribution<double> width(0.05, 2.0);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (int trial = 0; trial < 2000; ++trial) {
        DeviceParams p;
        p.v_low_threshold = vl(rng);
        p.v_high_threshold = p.v_low_threshold + width(rng);
        const double lo = p.v_low_threshold;
        const double hi = p.v_high_threshold;
        const double inside = lo + (hi - lo) * (0.001 + 0.998 * unit(rng));
        for (const auto s : {DeviceState::Insulating, DeviceState::Metallic}) {
            CHECK(transition(s, inside, p) == s);
            const double v = 3.0 * hi * unit(rng);
            CHECK(transition(transition(s, v, p), v, p) == transition(s, v, p));
        }
        const double v = 3.0 * hi * unit(rng);
        const double up = v + unit(rng);
        if (transition(DeviceState::Insulating, v, p) == DeviceState::Metallic) {
            CHECK(transition(DeviceState::Insulating, up, p) == DeviceState::Metallic);
        }
        const double down = std::max(0.0, v - unit(rng));
        if (transition(DeviceState::Metallic, v, p) == DeviceState::Insulating) {
            CHECK(transition(DeviceState::Metallic, down, p) == DeviceState::Insulating);
        }
    }
}

TEST_CASE("property: I-V sweep traces a hysteresis loop") {
    const DeviceParams p;
    const int n = 3000;
    const double v_max = p.v_high_threshold + 0.5;
    std::vector<double> up(n + 1);
    std::vector<double> down(n + 1);
    auto s = DeviceState::Insulating;
    for (int k = 0; k <= n; ++k) {
        const double v = v_max * k / n;
        s = transition(s, v, p);
        up[k] = device_current(s, v, p);
    }
    for (int k = n; k >= 0; --k) {
        const double v = v_max * k / n;
        s = transition(s, v, p);
        down[k] = device_current(s, v, p);
    }
    int inside = 0;
    int differ_inside = 0;
    for (int k = 0; k <= n; ++k) {
        const double v = v_max * k / n;
        if (v > p.v_low_threshold && v < p.v_high_threshold) {
            ++inside;
            differ_inside += up[k] != down[k];
        } else {
            CHECK(up[k] == down[k]);
        }
    }
    CHECK(inside > 0);
    CHECK(differ_inside == inside);
}
