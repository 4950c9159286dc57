#include "mitosc/lattice.hpp"

#include "mitosc/error.hpp"

#include <algorithm>
#include <cmath>

namespace mitosc {

std::string_view to_string(EdgeMode m) noexcept { return m == EdgeMode::On ? "on" : "off"; }

std::string_view to_string(Boundary b) noexcept { return b == Boundary::Open ? "open" : "periodic"; }

std::string to_string(CellCoord c) { return "(" + std::to_string(c.x) + "," + std::to_string(c.y) + ")"; }

void CouplingParams::validate() const {
    if (std::isnan(r_on) || !(r_on > 0.0)) throw ValidationError("coupling: r_on must be > 0");
    if (std::isnan(r_off) || !(r_off >= r_on)) {
        throw ValidationError("coupling: r_off must be >= r_on (r_on=" + std::to_string(r_on) +
                              ", r_off=" + std::to_string(r_off) + ")");
    }
    if (!std::isfinite(c_couple) || c_couple < 0.0) throw ValidationError("coupling: c_couple must be finite and >= 0");
}

Lattice::Lattice(int width, int height, DDCellConfig cell, CouplingParams coupling, Boundary boundary)
    : width_(width), height_(height), cell_(cell), coupling_(coupling), boundary_(boundary) {
    if (width < 1 || height < 1) {
        throw ValidationError("lattice: width and height must be >= 1 (got " + std::to_string(width) + "x" +
                              std::to_string(height) + ")");
    }
    cell_.validate();
    coupling_.validate();
    g_on_ = coupling_.g_on();
    g_off_ = coupling_.g_off();

    // Wrapping a dimension of size 2 would duplicate the edge, so periodic
    // boundaries only close dimensions of at least 3 cells.
    const bool wrap_x = boundary == Boundary::Periodic && width >= 3;
    const bool wrap_y = boundary == Boundary::Periodic && height >= 3;
    auto add = [&](std::size_t i, std::size_t j) { edges_.push_back({std::min(i, j), std::max(i, j)}); };
    const auto w = static_cast<std::size_t>(width);
    for (int y = 0; y < height; ++y) {
        for (int x = 0; x < width; ++x) {
            const std::size_t i = static_cast<std::size_t>(y) * w + x;
            if (x + 1 < width) add(i, i + 1);
            else if (wrap_x) add(i, i + 1 - w);
            if (y + 1 < height) add(i, i + w);
            else if (wrap_y) add(i, static_cast<std::size_t>(x));
        }
    }
    std::sort(edges_.begin(), edges_.end(), [](const Edge& l, const Edge& r) {
        return l.a != r.a ? l.a < r.a : l.b < r.b;
    });
    modes_.assign(edges_.size(), EdgeMode::On);

    const std::size_t n = cell_count();
    std::vector<std::vector<Neighbor>> lists(n);
    for (std::size_t e = 0; e < edges_.size(); ++e) {
        lists[edges_[e].a].push_back({edges_[e].b, e});
        lists[edges_[e].b].push_back({edges_[e].a, e});
    }
    adj_offsets_.reserve(n + 1);
    adj_offsets_.push_back(0);
    for (auto& l : lists) {
        std::sort(l.begin(), l.end(), [](const Neighbor& p, const Neighbor& q) { return p.cell < q.cell; });
        adj_.insert(adj_.end(), l.begin(), l.end());
        adj_offsets_.push_back(adj_.size());
    }
}

bool Lattice::contains(CellCoord c) const noexcept {
    return c.x >= 1 && c.x <= width_ && c.y >= 1 && c.y <= height_;
}

std::size_t Lattice::index(CellCoord c) const {
    if (!contains(c)) {
        throw ValidationError("cell " + to_string(c) + " is outside the " + std::to_string(width_) + "x" +
                              std::to_string(height_) + " grid");
    }
    return static_cast<std::size_t>(c.y - 1) * static_cast<std::size_t>(width_) + static_cast<std::size_t>(c.x - 1);
}

CellCoord Lattice::coord(std::size_t i) const noexcept {
    const auto w = static_cast<std::size_t>(width_);
    return {static_cast<int>(i % w) + 1, static_cast<int>(i / w) + 1};
}

std::span<const Neighbor> Lattice::neighbors(std::size_t cell) const noexcept {
    return {adj_.data() + adj_offsets_[cell], adj_offsets_[cell + 1] - adj_offsets_[cell]};
}

std::optional<std::size_t> Lattice::find_edge(std::size_t a, std::size_t b) const noexcept {
    if (a >= cell_count() || b >= cell_count()) return std::nullopt;
    for (const auto& nb : neighbors(a)) {
        if (nb.cell == b) return nb.edge;
    }
    return std::nullopt;
}

void Lattice::set_edge_mode(std::size_t edge, EdgeMode mode) {
    if (edge >= modes_.size()) throw ValidationError("unknown edge index " + std::to_string(edge));
    modes_[edge] = mode;
}

void Lattice::set_edge_mode(CellCoord a, CellCoord b, EdgeMode mode) {
    const auto e = find_edge(index(a), index(b));
    if (!e) throw ValidationError("cells " + to_string(a) + " and " + to_string(b) + " are not adjacent");
    modes_[*e] = mode;
}

void Lattice::set_all_edge_modes(EdgeMode mode) noexcept { std::fill(modes_.begin(), modes_.end(), mode); }

std::size_t Lattice::count_edges(EdgeMode mode) const noexcept {
    return static_cast<std::size_t>(std::count(modes_.begin(), modes_.end(), mode));
}

double Lattice::max_row_conductance() const noexcept {
    const double g_cell = cell_.device1.g_metallic() + cell_.device2.g_metallic();
    const double g_c = std::max(g_on_, g_off_);
    double best = 0.0;
    for (std::size_t i = 0; i < cell_count(); ++i) {
        best = std::max(best, g_cell + 2.0 * g_c * static_cast<double>(neighbors(i).size()));
    }
    return best;
}

Lattice build_lattice(int width, int height, const DDCellConfig& cell, const CouplingParams& coupling,
                      const EdgeModeMap& edge_modes, Boundary boundary) {
    Lattice lattice(width, height, cell, coupling, boundary);
    lattice.set_all_edge_modes(edge_modes.default_mode);
    for (const auto& entry : edge_modes.overrides) lattice.set_edge_mode(entry.a, entry.b, entry.mode);
    return lattice;
}

void set_edge_mode(Lattice& lattice, std::size_t edge, EdgeMode mode) { lattice.set_edge_mode(edge, mode); }

NetworkState uniform_state(const Lattice& lattice, const CellState& cell) {
    const std::size_t n = lattice.cell_count();
    NetworkState s;
    s.v.assign(n, cell.v);
    s.state1.assign(n, cell.state1);
    s.state2.assign(n, cell.state2.value_or(DeviceState::Insulating));
    s.t = cell.t;
    return s;
}

void check_dimensions(const Lattice& lattice, const NetworkState& state) {
    const std::size_t n = lattice.cell_count();
    if (state.v.size() != n || state.state1.size() != n || state.state2.size() != n) {
        throw ValidationError("network state has " + std::to_string(state.v.size()) + " cells, lattice has " +
                              std::to_string(n));
    }
}

void network_rhs(const Lattice& lattice, std::span<const double> v, std::span<const DeviceState> s1,
                 std::span<const DeviceState> s2, std::span<double> out) {
    const auto& cfg = lattice.cell_config();
    const std::size_t n = lattice.cell_count();
    for (std::size_t i = 0; i < n; ++i) {
        const auto g = effective_conductances(s1[i], s2[i], cfg);
        double f = (cfg.v_dd - v[i]) * g.g_top - v[i] * g.g_bottom;
        for (const auto& nb : lattice.neighbors(i)) {
            const double gc = lattice.edge_conductance(nb.edge);
            if (gc != 0.0) f += (v[nb.cell] - v[i]) * gc;
        }
        out[i] = f;
    }
}

std::vector<double> network_rhs(const Lattice& lattice, const NetworkState& state) {
    check_dimensions(lattice, state);
    std::vector<double> f(state.size());
    network_rhs(lattice, state.v, state.state1, state.state2, f);
    return f;
}

}  // namespace mitosc
