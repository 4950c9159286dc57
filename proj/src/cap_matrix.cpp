#include "mitosc/cap_matrix.hpp"

#include "mitosc/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

namespace mitosc {

CapMatrix::CapMatrix(const Lattice& lattice)
    : c_cell_(lattice.cell_config().cap), c_couple_(lattice.coupling().c_couple) {
    if (!(c_cell_ > 0.0)) throw ValidationError("cap matrix: cell capacitance must be > 0");
    const auto n = static_cast<Eigen::Index>(lattice.cell_count());
    std::vector<Eigen::Triplet<double>> trips;
    trips.reserve(lattice.cell_count() + 4 * lattice.edges().size());
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto deg = static_cast<double>(lattice.neighbors(static_cast<std::size_t>(i)).size());
        trips.emplace_back(i, i, c_cell_ + deg * c_couple_);
    }
    if (c_couple_ > 0.0) {
        for (const auto& e : lattice.edges()) {
            const auto a = static_cast<Eigen::Index>(e.a);
            const auto b = static_cast<Eigen::Index>(e.b);
            trips.emplace_back(a, b, -c_couple_);
            trips.emplace_back(b, a, -c_couple_);
        }
    }
    matrix_.resize(n, n);
    matrix_.setFromTriplets(trips.begin(), trips.end());
    matrix_.makeCompressed();
    llt_.compute(matrix_);
    if (llt_.info() != Eigen::Success) throw RuntimeError("cap matrix: Cholesky factorization failed");
    work_.resize(n);
}

double CapMatrix::entry(std::size_t i, std::size_t j) const {
    return matrix_.coeff(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
}

void CapMatrix::solve(std::span<const double> rhs, std::span<double> out) const {
    const auto n = static_cast<Eigen::Index>(size());
    const double ref = rhs[0];
    for (Eigen::Index i = 0; i < n; ++i) work_[i] = rhs[static_cast<std::size_t>(i)] - ref;
    Eigen::Map<Eigen::VectorXd> x(out.data(), n);
    x = llt_.solve(work_);
    const double base = ref / c_cell_;
    for (Eigen::Index i = 0; i < n; ++i) x[i] += base;
}

void CapMatrix::multiply(std::span<const double> x, std::span<double> out) const {
    const auto n = static_cast<Eigen::Index>(size());
    Eigen::Map<const Eigen::VectorXd> xv(x.data(), n);
    Eigen::Map<Eigen::VectorXd> ov(out.data(), n);
    ov = matrix_ * xv;
}

double CapMatrix::relative_residual(std::span<const double> x, std::span<const double> rhs) const {
    const auto n = static_cast<Eigen::Index>(size());
    Eigen::Map<const Eigen::VectorXd> xv(x.data(), n);
    Eigen::Map<const Eigen::VectorXd> bv(rhs.data(), n);
    const double r = (matrix_ * xv - bv).norm();
    const double b = bv.norm();
    return b > 0.0 ? r / b : r;
}

bool CapMatrix::is_symmetric() const {
    const Eigen::SparseMatrix<double> t = matrix_.transpose();
    return (matrix_ - t).norm() == 0.0;
}

bool CapMatrix::strictly_diagonally_dominant() const {
    for (Eigen::Index k = 0; k < matrix_.outerSize(); ++k) {
        double diag = 0.0;
        double off = 0.0;
        for (Eigen::SparseMatrix<double>::InnerIterator it(matrix_, k); it; ++it) {
            if (it.row() == it.col()) diag = it.value();
            else off += std::abs(it.value());
        }
        if (!(diag > 0.0 && diag > off)) return false;
    }
    return true;
}

double CapMatrix::min_eigenvalue_bound() const {
    double bound = std::numeric_limits<double>::infinity();
    for (Eigen::Index k = 0; k < matrix_.outerSize(); ++k) {
        double diag = 0.0;
        double off = 0.0;
        for (Eigen::SparseMatrix<double>::InnerIterator it(matrix_, k); it; ++it) {
            if (it.row() == it.col()) diag = it.value();
            else off += std::abs(it.value());
        }
        bound = std::min(bound, diag - off);
    }
    return bound;
}

CapMatrix assemble_cap_matrix(const Lattice& lattice) { return CapMatrix(lattice); }

}  // namespace mitosc
