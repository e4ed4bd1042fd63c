#pragma once

// Spectral bound, decay fits, the conserved mass S, resolvent sector probes
// and manufactured-solution convergence studies.

#include "mmsim/operators.hpp"
#include "mmsim/solver.hpp"

#include <complex>
#include <cstdint>
#include <string>
#include <vector>

namespace mmsim {

/// S(u, U) = ∫ u + ∫∫ √|g| U (trapezoid quadrature).
double mass_S(const CoupledOperator& op, const TwoScaleState& w);
double yg_norm(const CoupledOperator& op, const TwoScaleState& w);

struct SpectralReport {
    double sigma = 0.0;
    std::vector<double> eigenvalues; // ascending, eigenvalues[0] == sigma
    Eigen::VectorXd eigenvector;     // unknown layout, M_g-normalized
    double symmetry_defect = 0.0;    // |K - K^T|_F / |K|_F with K = M_g A
    double tolerance = 0.0;
    int iterations = 0;
    double residual = 0.0; // |K x - σ M x| / (σ |M x|) for the σ eigenpair
    std::string method;
};

/// Smallest generalized eigenvalues of (K, M_g) by block inverse iteration
/// with M_g-orthogonalization and Rayleigh-Ritz. Needs a symmetric, coercive
/// operator (Aq or detached, with essential macro nodes).
SpectralReport spectral_bound(const CoupledOperator& op, std::size_t count = 4, double tol = 1e-10,
                              int max_iter = 5000);

struct DecayFit {
    double rate = 0.0;      // r in y ≈ A e^{-r t}
    double amplitude = 0.0; // A
    double residual = 0.0;  // RMS of the log residual
    double t_begin = 0.0;
    double t_end = 0.0;
    std::size_t samples = 0;
};

/// Log-linear least squares over t >= t0 + skip (t_end - t0).
DecayFit decay_fit(const std::vector<double>& t, const std::vector<double>& y, double skip = 0.1);
DecayFit decay_fit(const Trajectory& traj, double skip = 0.1);

struct SectorSample {
    std::complex<double> lambda;
    double norm = 0.0;   // |(λ + A)^{-1}| in the M_g norm
    double scaled = 0.0; // norm · |λ - ω|, ω = 0
    int iterations = 0;
    double residual = 0.0;
    bool converged = false;
};

struct SectorProbe {
    std::vector<SectorSample> samples;
    double m_constant = 0.0; // max of `scaled`
    std::vector<std::string> warnings;
};

/// λ = r e^{iφ} for every angle φ (radians from the positive real axis) and
/// radius r; each norm comes from block power iteration on R(λ̄)R(λ), which
/// is the M_g-adjoint product for the self-adjoint modes.
SectorProbe sector_probe(const CoupledOperator& op, const std::vector<double>& angles,
                         const std::vector<double>& radii, std::uint64_t seed = 1);
/// Same for explicit shifts.
SectorProbe sector_probe(const CoupledOperator& op, const std::vector<std::complex<double>>& shifts,
                         std::uint64_t seed = 1);

/// Exact V and 𝒜_x V for the cell catalog. `quadratic`: 1 - y², `cosine`: cos(πy/2).
double manufactured_value(const std::string& id, double y);
double manufactured_cell_action(const CellMap& map, const std::string& id, double x, double y, int dim,
                                CellMesh::Mode mode);

struct ConvergenceRow {
    std::size_t nodes = 0; // cell nodes (and macro nodes for the coupled study)
    double h = 0.0;
    double error = 0.0;
    double order = 0.0; // against the previous row, 0 for the first
};

struct ConvergenceReport {
    std::string solution;
    std::vector<ConvergenceRow> rows;
    bool monotone = false;
    double final_order = 0.0;
};

/// `quadratic` and `cosine` compare the cell action at x = 0.5 with the exact
/// value at interior nodes (max norm). `coupled` solves the steady coupled
/// Dirichlet problem on Ω = [0, 1] with manufactured
///   u = sin(πx),  U = u + φ(x)(1 - |y|²),  φ = 0.5 (1 + x) sin(πx)
/// and compares every unknown.
ConvergenceReport mms_convergence(const CellMap& map, const std::string& solution,
                                  const std::vector<std::size_t>& ladder,
                                  CellMesh::Mode mode = CellMesh::Mode::interval, int dim = 1);

} // namespace mmsim
