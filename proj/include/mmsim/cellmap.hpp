#pragma once

// Cell map families Ψ(x, ·): B → Ω_x and the metric they induce on B.

#include "mmsim/catalog.hpp"
#include "mmsim/geometry.hpp"

#include <Eigen/Dense>

#include <string>
#include <vector>

namespace mmsim {

/// Closed-form catalog of cell maps. Ψ depends on the macro point through its
/// first coordinate x only.
///
///   identity     Ψ(x, y) = y
///   scaled-ball  Ψ(x, y) = c(x) y          (any micro dimension, radial or interval)
///   general-1d   Ψ(x, y) = a(x) y + b(x) y² (interval cells only)
class CellMap {
public:
    enum class Family { identity, scaled_ball, general_1d };

    static CellMap identity();
    static CellMap scaled_ball(Coefficient c);
    static CellMap general_1d(Coefficient linear, Coefficient quadratic);

    Family family() const { return family_; }
    std::string name() const;
    const Coefficient& scale() const { return a_; }
    const Coefficient& linear() const { return a_; }
    const Coefficient& quadratic() const { return b_; }

    /// Ψ(x, y) along the cell coordinate (y in [-1,1], or r in [0,1] radially).
    double psi(double x, double y) const;
    double dpsi_dy(double x, double y) const;
    double d2psi_dy2(double x, double y) const;

private:
    Family family_ = Family::identity;
    Coefficient a_ = Coefficient::constant(1.0);
    Coefficient b_ = Coefficient::constant(0.0);
};

CellMap::Family parse_family(const std::string& name);

/// Metric g_ij = (∂_i Φ | ∂_j Φ) at one point. Every catalog family is
/// conformal (g = s I), but the full matrices are kept for checking.
struct MetricData {
    Eigen::MatrixXd g;
    Eigen::MatrixXd g_inv;
    double sqrt_det = 1.0;

    /// √|g| g^{rr}: the diffusion coefficient of the flux-form operator.
    double conductivity() const { return sqrt_det * g_inv(0, 0); }
};

/// Throws on non-finite values or |∂_yΨ| < 1e-12.
MetricData eval_metric(const CellMap& map, double x, double y, int dim = 1);

struct MapValidationReport {
    double min_dpsi = 0.0;
    double max_dpsi = 0.0;
    double lip_phi = 0.0;     // discrete Lipschitz constant of Φ
    double lip_phi_inv = 0.0; // and of Φ^{-1}
    /// Sampled sup of |∂^α Ψ| for |α| <= 2 (x-derivatives by central differences).
    double sup_derivatives = 0.0;
    double c1 = 0.0; // ellipticity bounds of g^{ij}
    double c2 = 0.0;
    bool pass = false;
    std::vector<std::string> failures;
};

MapValidationReport validate_map(const CellMap& map, const MacroMesh& macro, const CellMesh& cell);

} // namespace mmsim
