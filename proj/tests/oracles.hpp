#pragma once

// Reference constructions assembled from the formulas with dense matrices,
// independent of the library's sparse/block code paths.

#include "mmsim/operators.hpp"

#include <Eigen/Dense>

#include <functional>

namespace oracle {

struct Dense {
    Eigen::MatrixXd k; // M_g A
    Eigen::VectorXd m; // diagonal of M_g
    Eigen::MatrixXd a() const { return m.cwiseInverse().asDiagonal() * k; }
};

/// Ω = [0, L] with n nodes, interval cells with m nodes, map derivative
/// ∂_yΨ(x, y) given pointwise. Unknowns: active macro nodes, then the
/// interior nodes of each active node's cell.
Dense coupled_interval(double length, std::size_t n, bool dirichlet, std::size_t m,
                       const std::function<double(double, double)>& dpsi, mmsim::Coupling mode);

/// Flat strip (f ≡ 1): 5-point stencil, half-cell Neumann rows on η = 0,
/// η = 1 eliminated, periodic in ξ. Active nodes j < ny - 1 in row-major order.
Eigen::MatrixXd flat_strip_stiffness(std::size_t nx, std::size_t ny);

/// Smallest eigenvalue of the n-node Dirichlet second difference on an
/// interval of the given length (closed form).
double dirichlet_first_eigenvalue(double length, std::size_t n);

/// Smaller root of -b² + b = ρ₀ (boundary value of the steady flat profile).
double gravity_root(double rho0);

/// One θ-step of M ẋ + K x = 0 by dense solve.
Eigen::VectorXd theta_step(const Dense& d, const Eigen::VectorXd& x, double dt, double theta);

Eigen::VectorXcd resolvent(const Dense& d, std::complex<double> lambda, const Eigen::VectorXcd& rhs);

/// Dense generalized eigenvalues of (K, diag m), ascending (symmetric K).
Eigen::VectorXd eigenvalues(const Dense& d);

} // namespace oracle
