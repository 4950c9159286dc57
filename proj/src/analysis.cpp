#include "mitosc/analysis.hpp"

#include "mitosc/error.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>

namespace mitosc {

double wrap_phase(double x) noexcept {
    double r = std::remainder(x, kTwoPi);  // [-pi, pi]
    if (r <= -kPi) r += kTwoPi;
    return r;
}

bool PhaseSeries::defined_at(double t) const noexcept {
    return onsets.size() >= 2 && t >= onsets.front() && t <= onsets.back();
}

std::optional<double> PhaseSeries::try_phase_at(double t) const noexcept {
    if (!defined_at(t)) return std::nullopt;
    if (t == onsets.back()) return 0.0;
    const auto it = std::upper_bound(onsets.begin(), onsets.end(), t);
    const double next = *it;
    const double last = *(it - 1);
    const double phi = kTwoPi * (t - last) / (next - last);
    return phi < kTwoPi ? phi : 0.0;
}

double PhaseSeries::phase_at(double t) const {
    const auto phi = try_phase_at(t);
    if (!phi) throw AnalysisError("phase undefined at t=" + std::to_string(t));
    return *phi;
}

std::optional<double> PhaseSeries::causal_phase_at(double t) const noexcept {
    const auto it = std::upper_bound(onsets.begin(), onsets.end(), t);
    const auto known = static_cast<std::size_t>(it - onsets.begin());
    if (known < 2) return std::nullopt;
    const double last = onsets[known - 1];
    const double period = last - onsets[known - 2];
    return std::fmod(kTwoPi * (t - last) / period, kTwoPi);
}

std::vector<double> PhaseSeries::periods() const {
    std::vector<double> p;
    for (std::size_t k = 1; k < onsets.size(); ++k) p.push_back(onsets[k] - onsets[k - 1]);
    return p;
}

double PhaseSeries::mean_period() const {
    if (onsets.size() < 2) throw AnalysisError("mean period needs at least two onsets");
    return (onsets.back() - onsets.front()) / static_cast<double>(onsets.size() - 1);
}

PhaseSeries extract_phase(const Trace& trace) {
    PhaseSeries s;
    for (const auto& e : trace.events) {
        if (e.device == 1 && e.new_state == DeviceState::Metallic) s.onsets.push_back(e.t);
    }
    if (s.onsets.size() < 2) {
        throw AnalysisError("trace has " + std::to_string(s.onsets.size()) + " charging onsets, need at least 2");
    }
    return s;
}

PhaseSeries extract_phase(std::span<const NetworkEvent> events, std::size_t cell) {
    PhaseSeries s;
    for (const auto& e : events) {
        if (e.cell == cell && e.device == 1 && e.new_state == DeviceState::Metallic) s.onsets.push_back(e.t);
    }
    if (s.onsets.size() < 2) {
        throw AnalysisError("cell " + std::to_string(cell) + " has " + std::to_string(s.onsets.size()) +
                            " charging onsets, need at least 2");
    }
    return s;
}

std::vector<PhaseSeries> extract_phases(std::span<const NetworkEvent> events, std::size_t cell_count) {
    std::vector<PhaseSeries> out(cell_count);
    for (const auto& e : events) {
        if (e.device == 1 && e.new_state == DeviceState::Metallic && e.cell < cell_count) {
            out[e.cell].onsets.push_back(e.t);
        }
    }
    return out;
}

OnsetTracker::OnsetTracker(std::size_t cell_count)
    : last_(cell_count, 0.0), previous_(cell_count, 0.0), count_(cell_count, 0) {}

void OnsetTracker::update(std::span<const NetworkEvent> events) {
    for (; consumed_ < events.size(); ++consumed_) {
        const auto& e = events[consumed_];
        if (e.device != 1 || e.new_state != DeviceState::Metallic || e.cell >= last_.size()) continue;
        previous_[e.cell] = last_[e.cell];
        last_[e.cell] = e.t;
        if (count_[e.cell] < 2) ++count_[e.cell];
    }
}

std::optional<double> OnsetTracker::phase(std::size_t cell, double t) const noexcept {
    if (count_[cell] < 2 || t < last_[cell]) return std::nullopt;
    const double period = last_[cell] - previous_[cell];
    return std::fmod(kTwoPi * (t - last_[cell]) / period, kTwoPi);
}

std::vector<std::optional<double>> OnsetTracker::phases(double t) const {
    std::vector<std::optional<double>> out(last_.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = phase(i, t);
    return out;
}

double phase_difference(const PhaseSeries& a, const PhaseSeries& b, double t) {
    return wrap_phase(a.phase_at(t) - b.phase_at(t));
}

PhaseMap phase_map(std::span<const PhaseSeries> series, int width, int height, double t) {
    const auto n = static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
    if (series.size() != n) throw ValidationError("phase map: series count does not match grid");
    PhaseMap map{width, height, {}};
    map.values.reserve(n);
    for (const auto& s : series) map.values.push_back(s.phase_at(t));
    return map;
}

double order_parameter(std::span<const double> phases) {
    if (phases.empty()) throw ValidationError("order parameter of an empty phase set");
    double c = 0.0;
    double s = 0.0;
    for (const double p : phases) {
        c += std::cos(p);
        s += std::sin(p);
    }
    const double r = std::hypot(c, s) / static_cast<double>(phases.size());
    return std::clamp(r, 0.0, 1.0);
}

double order_parameter(const PhaseMap& map) { return order_parameter(map.values); }

double circular_mean(std::span<const double> phases) {
    double c = 0.0;
    double s = 0.0;
    for (const double p : phases) {
        c += std::cos(p);
        s += std::sin(p);
    }
    return std::atan2(s, c);
}

double relation_error(double delta, PhaseRelation target) noexcept {
    const double d = std::abs(wrap_phase(delta));
    return target == PhaseRelation::InPhase ? d : kPi - d;
}

namespace {

SyncResult sync_impl(const PhaseSeries& reference, std::size_t members,
                     const std::function<std::optional<double>(std::size_t, double)>& phase_of,
                     PhaseRelation target, double tol) {
    if (reference.onsets.size() < 2) throw AnalysisError("sync_time: reference cell does not oscillate");
    constexpr std::size_t kHold = 3;
    std::vector<int> ok;  // per reference onset with defined phases: 1 within tol, 0 outside
    for (const double t : reference.onsets) {
        bool defined = true;
        bool within = true;
        for (std::size_t m = 0; m < members; ++m) {
            const auto phi = phase_of(m, t);
            if (!phi) {
                defined = false;
                break;
            }
            if (!(relation_error(*phi, target) < tol)) within = false;
        }
        if (!defined) {
            if (!ok.empty()) break;
            continue;
        }
        ok.push_back(within ? 1 : 0);
    }
    SyncResult result;
    result.observed = ok.size();
    for (std::size_t k = 0; k + kHold <= ok.size(); ++k) {
        if (std::all_of(ok.begin() + static_cast<std::ptrdiff_t>(k),
                        ok.begin() + static_cast<std::ptrdiff_t>(k + kHold), [](int x) { return x == 1; })) {
            result.converged = true;
            result.cycles = k;
            return result;
        }
    }
    result.cycles = ok.size();
    return result;
}

}  // namespace

SyncResult sync_time(const PhaseSeries& reference, const PhaseSeries& other, PhaseRelation target, double tol) {
    // At a reference onset the reference phase is 0, so the difference is the other phase.
    return sync_impl(reference, 1, [&](std::size_t, double t) { return other.try_phase_at(t); }, target, tol);
}

SyncResult sync_time(const PhaseSeries& reference, std::span<const PhaseSeries> region, PhaseRelation target,
                     double tol) {
    return sync_impl(reference, region.size(), [&](std::size_t m, double t) { return region[m].try_phase_at(t); },
                     target, tol);
}

namespace {

template <typename TopConductance>
double supply_impl(const Trace& trace, double v_dd, double t_begin, double t_end, TopConductance&& g_top) {
    if (trace.size() < 2) throw AnalysisError("supply current: trace too short");
    if (!(t_end > t_begin)) throw AnalysisError("supply current: empty averaging window");
    double integral = 0.0;
    std::size_t ev = 0;
    while (ev < trace.events.size() && trace.events[ev].t <= trace.t[0]) ++ev;
    for (std::size_t k = 0; k + 1 < trace.size(); ++k) {
        const double ta = trace.t[k];
        const double tb = trace.t[k + 1];
        const double va = trace.v[k];
        const double vb = trace.v[k + 1];
        DeviceState s1 = trace.state1[k];
        DeviceState s2 = trace.two_devices ? trace.state2[k] : DeviceState::Insulating;
        auto v_at = [&](double t) { return va + (vb - va) * (t - ta) / (tb - ta); };
        auto piece = [&](double lo, double hi) {
            lo = std::max(lo, t_begin);
            hi = std::min(hi, t_end);
            if (hi <= lo) return;
            const double g = g_top(s1, s2);
            integral += 0.5 * g * ((v_dd - v_at(lo)) + (v_dd - v_at(hi))) * (hi - lo);
        };
        double cursor = ta;
        while (ev < trace.events.size() && trace.events[ev].t <= tb) {
            const auto& e = trace.events[ev];
            piece(cursor, e.t);
            cursor = e.t;
            if (e.device == 1) s1 = e.new_state;
            else s2 = e.new_state;
            ++ev;
        }
        piece(cursor, tb);
    }
    return integral / (t_end - t_begin);
}

std::pair<double, double> onset_window(const Trace& trace) {
    const auto series = extract_phase(trace);
    return {series.onsets.front(), series.onsets.back()};
}

}  // namespace

double supply_current(const Trace& trace, const DDCellConfig& cfg, double t_begin, double t_end) {
    return supply_impl(trace, cfg.v_dd, t_begin, t_end, [&](DeviceState s1, DeviceState s2) {
        return effective_conductances(s1, s2, cfg).g_top;
    });
}

double supply_current(const Trace& trace, const DRConfig& cfg, double t_begin, double t_end) {
    return supply_impl(trace, cfg.v_dd, t_begin, t_end,
                       [&](DeviceState s1, DeviceState) { return effective_conductances(s1, cfg).g_top; });
}

double supply_current(const Trace& trace, const DDCellConfig& cfg) {
    const auto [a, b] = onset_window(trace);
    return supply_current(trace, cfg, a, b);
}

double supply_current(const Trace& trace, const DRConfig& cfg) {
    const auto [a, b] = onset_window(trace);
    return supply_current(trace, cfg, a, b);
}

int phase_winding(const PhaseMap& map, std::span<const CellCoord> loop) {
    if (loop.size() < 4) throw ValidationError("phase winding: a closed grid loop needs at least 4 cells");
    auto adjacent = [](CellCoord p, CellCoord q) { return std::abs(p.x - q.x) + std::abs(p.y - q.y) == 1; };
    double total = 0.0;
    for (std::size_t k = 0; k < loop.size(); ++k) {
        const CellCoord a = loop[k];
        const CellCoord b = loop[(k + 1) % loop.size()];
        if (a.x < 1 || a.y < 1 || a.x > map.width || a.y > map.height) {
            throw ValidationError("phase winding: cell " + to_string(a) + " outside the map");
        }
        if (!adjacent(a, b)) {
            throw ValidationError("phase winding: path is not closed (" + to_string(a) + " -> " + to_string(b) + ")");
        }
        total += wrap_phase(map.at(b) - map.at(a));
    }
    return static_cast<int>(std::lround(total / kTwoPi));
}

std::vector<double> unwrap(std::span<const double> wrapped) {
    std::vector<double> out;
    out.reserve(wrapped.size());
    for (const double x : wrapped) {
        if (out.empty()) out.push_back(x);
        else out.push_back(out.back() + wrap_phase(x - out.back()));
    }
    return out;
}

}  // namespace mitosc
