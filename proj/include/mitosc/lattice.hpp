#pragma once

// W x H grid of identical D-D cells with switchable nearest-neighbor coupling.
//
// Every grid edge carries a fixed coupling capacitor c_couple and a resistor whose
// value is selected by a two-state switch: r_on (resistive coupling dominates) or
// r_off (capacitive coupling dominates).

#include "mitosc/cell.hpp"

#include <compare>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace mitosc {

enum class EdgeMode : std::uint8_t { On, Off };
enum class Boundary : std::uint8_t { Open, Periodic };

std::string_view to_string(EdgeMode m) noexcept;
std::string_view to_string(Boundary b) noexcept;

struct CouplingParams {
    double r_on = 0.1;
    double r_off = 10.0;
    double c_couple = 0.25;

    /// 0 < r_on <= r_off, c_couple >= 0. Infinite resistances decouple the cells.
    void validate() const;

    double g_on() const noexcept { return 1.0 / r_on; }
    double g_off() const noexcept { return 1.0 / r_off; }

    bool operator==(const CouplingParams&) const = default;
};

/// 1-based grid coordinate (N_x, N_y).
struct CellCoord {
    int x = 1;
    int y = 1;

    auto operator<=>(const CellCoord&) const = default;
};

std::string to_string(CellCoord c);

/// Undirected grid edge between cell indices a < b.
struct Edge {
    std::size_t a;
    std::size_t b;
};

struct Neighbor {
    std::size_t cell;
    std::size_t edge;
};

struct EdgeModeEntry {
    CellCoord a;
    CellCoord b;
    EdgeMode mode;
};

struct EdgeModeMap {
    EdgeMode default_mode = EdgeMode::On;
    std::vector<EdgeModeEntry> overrides;
};

class Lattice {
public:
    Lattice(int width, int height, DDCellConfig cell, CouplingParams coupling,
            Boundary boundary = Boundary::Open);

    int width() const noexcept { return width_; }
    int height() const noexcept { return height_; }
    std::size_t cell_count() const noexcept { return static_cast<std::size_t>(width_) * height_; }
    Boundary boundary() const noexcept { return boundary_; }

    const DDCellConfig& cell_config() const noexcept { return cell_; }
    const CouplingParams& coupling() const noexcept { return coupling_; }

    bool contains(CellCoord c) const noexcept;
    /// Row-major index; throws ValidationError when out of range.
    std::size_t index(CellCoord c) const;
    CellCoord coord(std::size_t i) const noexcept;

    const std::vector<Edge>& edges() const noexcept { return edges_; }
    std::span<const Neighbor> neighbors(std::size_t cell) const noexcept;
    std::optional<std::size_t> find_edge(std::size_t a, std::size_t b) const noexcept;

    EdgeMode edge_mode(std::size_t edge) const { return modes_.at(edge); }
    void set_edge_mode(std::size_t edge, EdgeMode mode);
    /// Throws ValidationError when a and b are not adjacent.
    void set_edge_mode(CellCoord a, CellCoord b, EdgeMode mode);
    void set_all_edge_modes(EdgeMode mode) noexcept;

    double edge_conductance(std::size_t edge) const noexcept {
        return modes_[edge] == EdgeMode::On ? g_on_ : g_off_;
    }
    std::size_t count_edges(EdgeMode mode) const noexcept;

    /// Gershgorin bound on the conductance matrix with every device metallic and every
    /// switch On; used for the explicit-step stability check.
    double max_row_conductance() const noexcept;

private:
    int width_;
    int height_;
    DDCellConfig cell_;
    CouplingParams coupling_;
    Boundary boundary_;
    double g_on_;
    double g_off_;
    std::vector<Edge> edges_;
    std::vector<EdgeMode> modes_;
    std::vector<std::size_t> adj_offsets_;
    std::vector<Neighbor> adj_;
};

/// Validated lattice with the given edge modes applied. Throws ValidationError for
/// out-of-range or non-adjacent entries in the map.
Lattice build_lattice(int width, int height, const DDCellConfig& cell, const CouplingParams& coupling,
                      const EdgeModeMap& edge_modes = {}, Boundary boundary = Boundary::Open);

void set_edge_mode(Lattice& lattice, std::size_t edge, EdgeMode mode);

struct NetworkState {
    std::vector<double> v;
    std::vector<DeviceState> state1;
    std::vector<DeviceState> state2;
    double t = 0.0;

    std::size_t size() const noexcept { return v.size(); }
};

/// Every cell at the same voltage and device states.
NetworkState uniform_state(const Lattice& lattice, const CellState& cell);

/// Throws ValidationError when the state does not match the lattice dimensions.
void check_dimensions(const Lattice& lattice, const NetworkState& state);

/// Branch currents into each node: cell term (from effective_conductances) plus resistive
/// coupling sum_j (v_j - v_i) g_ij. Capacitive coupling is carried by CapMatrix.
std::vector<double> network_rhs(const Lattice& lattice, const NetworkState& state);
void network_rhs(const Lattice& lattice, std::span<const double> v, std::span<const DeviceState> s1,
                 std::span<const DeviceState> s2, std::span<double> out);

}  // namespace mitosc
