#include "mitosc/cell.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace mitosc {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// D-R and D-D share one shape: a top device from v_dd to the node and either a
// bottom device or a linear resistor from the node to ground.
struct Circuit {
    const DeviceParams* top;
    const DeviceParams* bottom;  // nullptr: linear resistor g_series
    double g_series;
    double v_dd;
    double cap;
    RhsModel model;

    bool dual() const { return bottom != nullptr; }

    BranchConductances conductances(DeviceState s1, DeviceState s2) const {
        using enum DeviceState;
        if (!dual()) {
            if (model == RhsModel::PaperPiecewise) {
                return {s1 == Metallic ? top->g_metallic() : 0.0, g_series};
            }
            return {conductance(s1, *top), g_series};
        }
        if (model == RhsModel::PaperPiecewise) {
            if (s1 == Metallic && s2 == Insulating) return {top->g_metallic(), 0.0};
            if (s1 == Insulating && s2 == Metallic) return {0.0, bottom->g_metallic()};
        }
        return {conductance(s1, *top), conductance(s2, *bottom)};
    }

    std::string label(DeviceState s1, DeviceState s2) const {
        using enum DeviceState;
        if (!dual()) return s1 == Metallic ? "metallic" : "insulating";
        if (s1 == Metallic && s2 == Insulating) return "charging";
        if (s1 == Insulating && s2 == Metallic) return "discharging";
        return s1 == Metallic ? "both-metallic" : "both-insulating";
    }

    // Node voltage at which each device leaves its current state, and the direction.
    // Top device sees v_dd - v, bottom device sees v.
    struct Level {
        double v;
        bool rising;
        int device;
    };

    void levels(DeviceState s1, DeviceState s2, std::vector<Level>& out) const {
        out.clear();
        if (s1 == DeviceState::Metallic) {
            out.push_back({v_dd - top->v_low_threshold, true, 1});
        } else {
            out.push_back({v_dd - top->v_high_threshold, false, 1});
        }
        if (dual()) {
            if (s2 == DeviceState::Insulating) {
                out.push_back({bottom->v_high_threshold, true, 2});
            } else {
                out.push_back({bottom->v_low_threshold, false, 2});
            }
        }
    }

    // Open interval of node voltages in which no device of this configuration switches.
    std::pair<double, double> region(DeviceState s1, DeviceState s2) const {
        std::vector<Level> lv;
        levels(s1, s2, lv);
        double lo = -kInf;
        double hi = kInf;
        for (const auto& l : lv) {
            if (l.rising) hi = std::min(hi, l.v);
            else lo = std::max(lo, l.v);
        }
        return {lo, hi};
    }

    DeviceState next1(DeviceState s1, double v) const { return transition(s1, v_dd - v, *top); }
    DeviceState next2(DeviceState s2, double v) const {
        return dual() ? transition(s2, v, *bottom) : s2;
    }
    bool fires(double v, DeviceState s1, DeviceState s2) const {
        return next1(s1, v) != s1 || next2(s2, v) != s2;
    }

    double g_max() const {
        return top->g_metallic() + (dual() ? bottom->g_metallic() : g_series);
    }

    // Exact solution of the linear branch after time tau.
    double advance(double v, DeviceState s1, DeviceState s2, double tau) const {
        const auto g = conductances(s1, s2);
        const double gs = g.g_top + g.g_bottom;
        if (gs <= 0.0) return v;
        const double v_star = v_dd * g.g_top / gs;
        return v + (v_star - v) * -std::expm1(-gs * tau / cap);
    }
};

Circuit make_circuit(const DRConfig& cfg) {
    return {&cfg.device, nullptr, 1.0 / cfg.r_series, cfg.v_dd, cfg.cap, cfg.rhs_model};
}

Circuit make_circuit(const DDCellConfig& cfg) {
    return {&cfg.device1, &cfg.device2, 0.0, cfg.v_dd, cfg.cap, cfg.rhs_model};
}

double fixed_point(const Circuit& c, DeviceState s1, DeviceState s2) {
    const auto g = c.conductances(s1, s2);
    const double gs = g.g_top + g.g_bottom;
    if (gs <= 0.0) return std::numeric_limits<double>::quiet_NaN();
    return c.v_dd * g.g_top / gs;
}

struct BranchSpec {
    DeviceState s1;
    DeviceState s2;
};

BranchSpec charging_branch() { return {DeviceState::Metallic, DeviceState::Insulating}; }
BranchSpec discharging_branch() { return {DeviceState::Insulating, DeviceState::Metallic}; }

std::vector<BranchFixedPoint> fixed_points_impl(const Circuit& c) {
    std::vector<BranchFixedPoint> out;
    for (const auto b : {charging_branch(), discharging_branch()}) {
        const double v_star = fixed_point(c, b.s1, b.s2);
        const auto [lo, hi] = c.region(b.s1, b.s2);
        const bool stable = std::isnan(v_star) || (v_star >= lo && v_star <= hi);
        out.push_back({c.label(b.s1, b.s2), v_star, stable});
    }
    return out;
}

OscillationCheck check_impl(const Circuit& c) {
    OscillationCheck check;
    const auto up = charging_branch();
    const auto down = discharging_branch();
    const double v_up = c.region(up.s1, up.s2).second;
    const double v_down = c.region(down.s1, down.s2).first;
    const double up_star = fixed_point(c, up.s1, up.s2);
    const double down_star = fixed_point(c, down.s1, down.s2);
    check.branches.push_back({c.label(up.s1, up.s2), up_star, v_up, up_star > v_up});
    check.branches.push_back({c.label(down.s1, down.s2), down_star, v_down, down_star < v_down});
    check.oscillates = check.branches[0].passes && check.branches[1].passes;
    return check;
}

struct Segment {
    DeviceState s1;
    DeviceState s2;
    double v_start;
    double v_end;
    double duration;
    bool rising;
    bool charging_onset;  // the top device switched to metallic when this segment began
};

[[noreturn]] void throw_trapped(const Circuit& c, DeviceState s1, DeviceState s2, double v_star) {
    std::ostringstream msg;
    msg << "circuit does not self-oscillate: " << c.label(s1, s2) << " branch settles at v*="
        << v_star << " before reaching its switching threshold";
    throw NonOscillatingError(c.label(s1, s2), msg.str());
}

// Follows the branch sequence from the charging configuration until it repeats and
// returns the closed cycle.
std::vector<Segment> limit_cycle(const Circuit& c) {
    const auto start = charging_branch();
    const auto down = discharging_branch();
    DeviceState s1 = start.s1;
    DeviceState s2 = c.dual() ? start.s2 : DeviceState::Insulating;
    double v = c.region(down.s1, down.s2).first;
    if (!std::isfinite(v)) v = 0.0;
    bool onset = true;

    std::vector<Segment> path;
    std::vector<Circuit::Level> lv;
    for (int iter = 0; iter < 64; ++iter) {
        for (std::size_t j = 0; j < path.size(); ++j) {
            const auto& seg = path[j];
            if (seg.s1 == s1 && seg.s2 == s2 &&
                std::abs(seg.v_start - v) <= 1e-12 * std::max(1.0, std::abs(v))) {
                return {path.begin() + static_cast<std::ptrdiff_t>(j), path.end()};
            }
        }
        const auto g = c.conductances(s1, s2);
        const double gs = g.g_top + g.g_bottom;
        const double v_star = fixed_point(c, s1, s2);
        if (gs <= 0.0 || v_star == v) throw_trapped(c, s1, s2, v_star);
        const bool rising = v_star > v;
        c.levels(s1, s2, lv);
        double exit = rising ? kInf : -kInf;
        for (const auto& l : lv) {
            if (l.rising != rising) continue;
            exit = rising ? std::min(exit, l.v) : std::max(exit, l.v);
        }
        if (rising ? !(v_star > exit) : !(v_star < exit)) throw_trapped(c, s1, s2, v_star);
        const double duration = (c.cap / gs) * std::log((v_star - v) / (v_star - exit));
        path.push_back({s1, s2, v, exit, duration, rising, onset});

        onset = false;
        for (const auto& l : lv) {
            if (l.rising != rising) continue;
            if (std::abs(l.v - exit) > 1e-12 * std::max(1.0, std::abs(exit))) continue;
            if (l.device == 1) {
                s1 = toggled(s1);
                onset = onset || s1 == DeviceState::Metallic;
            } else {
                s2 = toggled(s2);
            }
        }
        v = exit;
    }
    throw NonOscillatingError(c.label(s1, s2), "branch sequence does not close into a cycle");
}

PeriodBreakdown period_impl(const Circuit& c) {
    PeriodBreakdown p{0.0, 0.0, 0.0};
    for (const auto& seg : limit_cycle(c)) {
        (seg.rising ? p.t_charge : p.t_discharge) += seg.duration;
    }
    p.period = p.t_charge + p.t_discharge;
    return p;
}

CellState cycle_state_impl(const Circuit& c, double phase) {
    auto cycle = limit_cycle(c);
    const auto it = std::find_if(cycle.begin(), cycle.end(), [](const Segment& s) { return s.charging_onset; });
    if (it != cycle.end()) std::rotate(cycle.begin(), it, cycle.end());

    double period = 0.0;
    for (const auto& seg : cycle) period += seg.duration;
    double frac = phase - std::floor(phase);
    double remaining = frac * period;
    for (const auto& seg : cycle) {
        if (remaining < seg.duration) {
            CellState st;
            st.v = c.advance(seg.v_start, seg.s1, seg.s2, remaining);
            st.state1 = seg.s1;
            if (c.dual()) st.state2 = seg.s2;
            return st;
        }
        remaining -= seg.duration;
    }
    CellState st;
    st.v = cycle.front().v_start;
    st.state1 = cycle.front().s1;
    if (c.dual()) st.state2 = cycle.front().s2;
    return st;
}

CellState consistent_impl(const Circuit& c, double v) {
    CellState st;
    st.v = v;
    const double v_top = c.v_dd - v;
    if (v_top >= c.top->v_high_threshold) st.state1 = DeviceState::Metallic;
    else if (v_top <= c.top->v_low_threshold) st.state1 = DeviceState::Insulating;
    else st.state1 = DeviceState::Metallic;
    if (c.dual()) {
        if (v >= c.bottom->v_high_threshold) st.state2 = DeviceState::Metallic;
        else if (v <= c.bottom->v_low_threshold) st.state2 = DeviceState::Insulating;
        else st.state2 = DeviceState::Insulating;
    }
    return st;
}

Trace simulate_impl(const Circuit& c, const CellState& initial, double dt, double duration,
                    const CellSimOptions& opt) {
    if (!(dt > 0.0) || !std::isfinite(dt)) throw ValidationError("simulate_cell: dt must be positive");
    const double limit = 2.0 * c.cap / c.g_max();
    if (!(dt < limit)) {
        throw ValidationError("simulate_cell: dt=" + std::to_string(dt) + " is not below the stability bound " +
                              std::to_string(limit));
    }
    if (!(duration >= 0.0) || !std::isfinite(duration)) {
        throw ValidationError("simulate_cell: duration must be finite and >= 0");
    }
    if (!std::isfinite(initial.v) || !std::isfinite(initial.t)) {
        throw ValidationError("simulate_cell: initial state is not finite");
    }
    if (c.dual() && !initial.state2) throw ValidationError("simulate_cell: D-D initial state needs state2");
    if (!(opt.event_tolerance > 0.0)) throw ValidationError("simulate_cell: event_tolerance must be positive");

    Trace trace;
    trace.two_devices = c.dual();
    const std::size_t stride = std::max<std::size_t>(1, opt.sample_stride);

    double v = initial.v;
    DeviceState s1 = initial.state1;
    DeviceState s2 = initial.state2.value_or(DeviceState::Insulating);

    auto settle = [&](double t) {
        const DeviceState n1 = c.next1(s1, v);
        const DeviceState n2 = c.next2(s2, v);
        if (n1 != s1) trace.events.push_back({t, 1, n1});
        if (n2 != s2) trace.events.push_back({t, 2, n2});
        s1 = n1;
        s2 = n2;
    };
    auto record = [&](double t) {
        trace.t.push_back(t);
        trace.v.push_back(v);
        trace.state1.push_back(s1);
        if (c.dual()) trace.state2.push_back(s2);
    };

    const double t0 = initial.t;
    settle(t0);
    record(t0);

    const auto full_steps = static_cast<std::size_t>(std::floor(duration / dt + 1e-9));
    const double tail = duration - static_cast<double>(full_steps) * dt;
    const std::size_t steps = full_steps + (tail > 1e-12 * dt ? 1 : 0);

    for (std::size_t k = 1; k <= steps; ++k) {
        const double t_begin = t0 + static_cast<double>(k - 1) * dt;
        const double t_end = k <= full_steps ? t0 + static_cast<double>(k) * dt : t0 + duration;
        const double h = t_end - t_begin;
        double elapsed = 0.0;
        for (;;) {
            const double remaining = h - elapsed;
            const double v_end = c.advance(v, s1, s2, remaining);
            if (!std::isfinite(v_end)) throw RuntimeError("simulate_cell: non-finite voltage");
            if (!c.fires(v_end, s1, s2)) {
                v = v_end;
                break;
            }
            if (!opt.locate_events) {
                v = v_end;
                settle(t_end);
                break;
            }
            double lo = 0.0;
            double hi = remaining;
            while (hi - lo > opt.event_tolerance) {
                const double mid = 0.5 * (lo + hi);
                if (mid <= lo || mid >= hi) break;
                if (c.fires(c.advance(v, s1, s2, mid), s1, s2)) hi = mid;
                else lo = mid;
            }
            v = c.advance(v, s1, s2, hi);
            if (hi >= remaining) {
                settle(t_end);
                break;
            }
            elapsed += hi;
            settle(t_begin + elapsed);
        }
        if (k % stride == 0 || k == steps) record(t_end);
    }
    return trace;
}

}  // namespace

std::string_view to_string(RhsModel m) noexcept {
    return m == RhsModel::PaperPiecewise ? "paper" : "exact";
}

std::optional<RhsModel> parse_rhs_model(std::string_view text) noexcept {
    if (text == "paper") return RhsModel::PaperPiecewise;
    if (text == "exact") return RhsModel::Exact;
    return std::nullopt;
}

void DRConfig::validate() const {
    device.validate();
    if (!(r_series > 0.0) || !std::isfinite(r_series)) throw ValidationError("cell: r_series must be finite and > 0");
    if (!(cap > 0.0) || !std::isfinite(cap)) throw ValidationError("cell: cap must be finite and > 0");
    if (!(v_dd > 0.0) || !std::isfinite(v_dd)) throw ValidationError("cell: v_dd must be finite and > 0");
}

void DDCellConfig::validate() const {
    device1.validate();
    device2.validate();
    if (!(cap > 0.0) || !std::isfinite(cap)) throw ValidationError("cell: cap must be finite and > 0");
    if (!(v_dd > 0.0) || !std::isfinite(v_dd)) throw ValidationError("cell: v_dd must be finite and > 0");
}

DRConfig dr_demo_config() {
    DRConfig cfg;
    cfg.r_series = 2.0;
    cfg.rhs_model = RhsModel::PaperPiecewise;
    return cfg;
}

BranchConductances effective_conductances(DeviceState state, const DRConfig& cfg) noexcept {
    return make_circuit(cfg).conductances(state, DeviceState::Insulating);
}

BranchConductances effective_conductances(DeviceState state1, DeviceState state2, const DDCellConfig& cfg) noexcept {
    return make_circuit(cfg).conductances(state1, state2);
}

double dr_rhs(double v, DeviceState state, const DRConfig& cfg) noexcept {
    const auto g = effective_conductances(state, cfg);
    return ((cfg.v_dd - v) * g.g_top - v * g.g_bottom) / cfg.cap;
}

double dd_rhs(double v, DeviceState state1, DeviceState state2, const DDCellConfig& cfg) noexcept {
    const auto g = effective_conductances(state1, state2, cfg);
    return ((cfg.v_dd - v) * g.g_top - v * g.g_bottom) / cfg.cap;
}

std::vector<BranchFixedPoint> fixed_points(const DRConfig& cfg) {
    cfg.validate();
    return fixed_points_impl(make_circuit(cfg));
}

std::vector<BranchFixedPoint> fixed_points(const DDCellConfig& cfg) {
    cfg.validate();
    return fixed_points_impl(make_circuit(cfg));
}

std::string OscillationCheck::trapping_branch() const {
    for (const auto& b : branches) {
        if (!b.passes) return b.label;
    }
    return {};
}

OscillationCheck self_oscillation_check(const DRConfig& cfg) {
    cfg.validate();
    return check_impl(make_circuit(cfg));
}

OscillationCheck self_oscillation_check(const DDCellConfig& cfg) {
    cfg.validate();
    return check_impl(make_circuit(cfg));
}

PeriodBreakdown analytic_period(const DRConfig& cfg) {
    cfg.validate();
    return period_impl(make_circuit(cfg));
}

PeriodBreakdown analytic_period(const DDCellConfig& cfg) {
    cfg.validate();
    return period_impl(make_circuit(cfg));
}

CellState cycle_state_at_phase(const DRConfig& cfg, double phase) {
    cfg.validate();
    return cycle_state_impl(make_circuit(cfg), phase);
}

CellState cycle_state_at_phase(const DDCellConfig& cfg, double phase) {
    cfg.validate();
    return cycle_state_impl(make_circuit(cfg), phase);
}

CellState consistent_state(const DRConfig& cfg, double v) { return consistent_impl(make_circuit(cfg), v); }

CellState consistent_state(const DDCellConfig& cfg, double v) { return consistent_impl(make_circuit(cfg), v); }

double cell_stability_limit(const DRConfig& cfg) noexcept { return 2.0 * cfg.cap / make_circuit(cfg).g_max(); }

double cell_stability_limit(const DDCellConfig& cfg) noexcept { return 2.0 * cfg.cap / make_circuit(cfg).g_max(); }

Trace simulate_cell(const DRConfig& cfg, const CellState& initial, double dt, double duration,
                    const CellSimOptions& options) {
    cfg.validate();
    return simulate_impl(make_circuit(cfg), initial, dt, duration, options);
}

Trace simulate_cell(const DDCellConfig& cfg, const CellState& initial, double dt, double duration,
                    const CellSimOptions& options) {
    cfg.validate();
    return simulate_impl(make_circuit(cfg), initial, dt, duration, options);
}

}  // namespace mitosc
