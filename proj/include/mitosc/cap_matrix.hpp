#pragma once

// Capacitance matrix of the network: M = c_cell*I + c_couple*L, where L is the graph
// Laplacian of the grid. The coupling capacitors tie node derivatives together, so the
// network obeys M*v' = f(v, states). M depends only on the grid and the capacitances,
// so it is factorized once.

#include "mitosc/lattice.hpp"

#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include <cstddef>
#include <span>

namespace mitosc {

class CapMatrix {
public:
    /// Throws ValidationError for a non-positive cell capacitance.
    explicit CapMatrix(const Lattice& lattice);

    std::size_t size() const noexcept { return static_cast<std::size_t>(matrix_.rows()); }
    double cell_capacitance() const noexcept { return c_cell_; }
    double coupling_capacitance() const noexcept { return c_couple_; }
    const Eigen::SparseMatrix<double>& matrix() const noexcept { return matrix_; }
    double entry(std::size_t i, std::size_t j) const;

    /// out = M^{-1} rhs. The uniform component is handled exactly (M*1 = c_cell*1), so a
    /// uniform right-hand side gives a bitwise uniform solution.
    void solve(std::span<const double> rhs, std::span<double> out) const;
    void multiply(std::span<const double> x, std::span<double> out) const;
    /// ||M x - rhs|| / ||rhs|| (absolute when rhs is zero).
    double relative_residual(std::span<const double> x, std::span<const double> rhs) const;

    bool is_symmetric() const;
    bool strictly_diagonally_dominant() const;
    /// Lower bound on the smallest eigenvalue (Gershgorin).
    double min_eigenvalue_bound() const;

private:
    double c_cell_;
    double c_couple_;
    Eigen::SparseMatrix<double> matrix_;
    Eigen::SimplicialLLT<Eigen::SparseMatrix<double>> llt_;
    mutable Eigen::VectorXd work_;
};

CapMatrix assemble_cap_matrix(const Lattice& lattice);

}  // namespace mitosc
