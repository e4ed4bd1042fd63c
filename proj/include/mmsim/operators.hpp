#pragma once

// Macro Laplacian, per-cell Laplace-Beltrami operators, exchange flux and the
// coupled two-scale operator with its weighted mass.

#include "mmsim/block_system.hpp"
#include "mmsim/cellmap.hpp"
#include "mmsim/geometry.hpp"

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <string>
#include <vector>

namespace mmsim {

/// dirichlet: every boundary node essential; neumann: every boundary node
/// natural; mixed: natural on gamma0, essential on gammaf (strip only).
/// On the interval `mixed` follows the endpoint tags.
enum class MacroBc { dirichlet, neumann, mixed };

MacroBc parse_macro_bc(const std::string& name);
std::string to_string(MacroBc bc);

struct MacroOperator {
    MacroBc bc = MacroBc::dirichlet;
    std::vector<bool> essential;       // per node
    std::vector<int> active_index;     // per node, -1 for essential nodes
    std::vector<std::size_t> active_nodes;
    Eigen::SparseMatrix<double> stiffness_full; // all nodes: Σ ∫ ∇u·∇v
    Eigen::SparseMatrix<double> stiffness;      // active × active
    Eigen::SparseMatrix<double> lift;           // active × all, essential columns only
    Eigen::VectorXd weights;                    // lumped volume of active nodes

    std::size_t active_size() const { return active_nodes.size(); }
    /// -Δ_h on active nodes: W^{-1} K.
    Eigen::SparseMatrix<double> laplacian() const;
};

/// Second-order conservative Laplacian. On the strip the energy
/// ∫ ∇u·∇v is evaluated in (ξ, η) with a corner-gradient rule, so mapped
/// cross terms appear and the flat strip reduces to the 5-point stencil.
MacroOperator assemble_macro(const MacroMesh& mesh, MacroBc bc);

/// Discrete Dirichlet form Σ ∇u·∇v over all macro nodes, evaluated directly
/// from the corner gradients (no matrix).
double macro_energy(const MacroMesh& mesh, const Eigen::VectorXd& u, const Eigen::VectorXd& v);

/// Flux-form discretization of 𝒜_x on the reference cell at one macro point.
///
/// Faces carry conductances κ = √|g| g^{rr} |face| / k, nodes carry the
/// weighted volumes m = ω √|g|, and (𝒜_h V)_j = (Σ faces κ (V_j - V_nb)) / m_j
/// on interior nodes. Interior nodes form a contiguous index range.
struct CellOperator {
    struct Link {
        std::size_t boundary;  // node on S
        std::size_t neighbour; // interior node across the face
        std::size_t face;
    };

    std::vector<double> conductance; // per face
    std::vector<double> mass;        // per node
    std::size_t first_interior = 0;
    std::size_t interior_count = 0;
    std::vector<Link> links;

    std::size_t size() const { return mass.size(); }
    /// √|g|-weighted cell volume held by the boundary nodes.
    double boundary_mass() const;
    /// 𝒜_h V at the interior nodes; V is a full cell vector.
    Eigen::VectorXd apply(const Eigen::VectorXd& v) const;
    /// B_x: the interior block of 𝒜_h (zero boundary trace).
    Tridiagonal<double> interior_matrix() const;
    /// Σ_f κ_f (δV)²: metric-weighted discrete H¹ seminorm squared.
    double energy(const Eigen::VectorXd& v) const;
    double energy(const Eigen::VectorXd& v, const Eigen::VectorXd& z) const;
};

CellOperator assemble_cell(const CellMesh& cell, const CellMap& map, double x);

/// Constant cell vector with value u_x (the lifting R of constant boundary data).
Eigen::VectorXd lift_boundary(const CellMesh& cell, double u_x);

/// Exchange flux q(V) = Σ_interior m_j (𝒜_h V)_j, the discrete Green identity
/// for -∫_S √|g| g^{ij} ∂_i V ν_j.
double exchange_flux(const CellOperator& op, const Eigen::VectorXd& v);
/// The same quantity from the boundary-face flux row alone.
double boundary_flux(const CellOperator& op, const Eigen::VectorXd& v);
/// C with |q(V)| <= C sqrt(energy(V)): C = Σ_links √κ.
double exchange_flux_bound(const CellOperator& op);

/// w = (u, U): u on every macro node; column n of `cells` is the full cell
/// vector at macro node n in reference coordinates.
struct TwoScaleState {
    Eigen::VectorXd u;
    Eigen::MatrixXd cells;

    static TwoScaleState zeros(std::size_t macro_nodes, std::size_t cell_nodes);
    /// Overwrite cell boundary values with u (matching condition).
    void enforce_matching(const CellMesh& cell);
};

/// A: no exchange term in the macro row. Aq: macro row -Δu - q(U).
/// AN: as Aq with a Neumann macro operator. detached: cells see zero boundary
/// data and q is dropped (block-diagonal reference).
enum class Coupling { A, Aq, AN, detached };

Coupling parse_coupling(const std::string& name);
std::string to_string(Coupling c);

/// Assembled coupled operator on the unknowns (active macro nodes and the
/// interior nodes of their cells; cell boundary values are the macro values).
///
/// The weighted mass M_g realizes the Y_g inner product with trapezoid
/// quadrature on the full cell, so the boundary-node share of each cell's
/// volume sits on the macro diagonal: M_u = W (1 + β_x) in the exchange modes
/// (Aq, AN). Modes A and detached keep M_u = W, so their macro row is exactly
/// -Δ_h u. The operator is A = M_g^{-1} K with K symmetric for Aq/AN.
class CoupledOperator {
public:
    CoupledOperator(MacroMesh macro_mesh, CellMesh cell_mesh, CellMap map, MacroOperator macro,
                    std::vector<CellOperator> cells, Coupling mode);

    const MacroMesh& macro_mesh() const { return macro_mesh_; }
    const CellMesh& cell_mesh() const { return cell_mesh_; }
    const CellMap& map() const { return map_; }
    const MacroOperator& macro() const { return macro_; }
    const std::vector<CellOperator>& cells() const { return cells_; }
    Coupling mode() const { return mode_; }

    std::size_t macro_unknowns() const { return macro_.active_size(); }
    std::size_t cell_unknowns() const { return cell_mesh_.interior_size(); }
    std::size_t size() const { return macro_unknowns() * (1 + cell_unknowns()); }

    /// Diagonal of M_g over the unknowns.
    const Eigen::VectorXd& mass() const { return mass_; }
    /// A in block form (linear part, essential macro values held at zero).
    const BlockOperator<double>& blocks() const { return blocks_; }
    Eigen::SparseMatrix<double> matrix() const { return blocks_.to_sparse(); }
    /// K = M_g A.
    Eigen::SparseMatrix<double> stiffness() const;
    /// α M_g + β M_g A.
    BlockOperator<double> system(double alpha, double beta) const;

    /// A applied to a full state from the stencils (essential macro values
    /// included). Returns a matching state, zero on essential nodes.
    TwoScaleState apply(const TwoScaleState& w) const;
    Eigen::VectorXd apply(const Eigen::VectorXd& x) const { return blocks_.apply(x); }

    Eigen::VectorXd gather(const TwoScaleState& w) const;
    /// Unknowns to full state; essential macro nodes take `essential_value`
    /// and their cells are constant.
    TwoScaleState scatter(const Eigen::VectorXd& x, double essential_value = 0.0) const;
    /// Galerkin load P^T M_full f of an arbitrary (possibly non-matching) state.
    Eigen::VectorXd load(const TwoScaleState& f) const;
    /// M_g A_e u_e: contribution of essential macro values to K w.
    Eigen::VectorXd essential_load(const TwoScaleState& w) const;
    /// Exchange flux of the cell at macro node n, using u(n) as boundary data.
    double exchange_flux_at(const TwoScaleState& w, std::size_t node) const;

    TwoScaleState zero_state() const;

private:
    MacroMesh macro_mesh_;
    CellMesh cell_mesh_;
    CellMap map_;
    MacroOperator macro_;
    std::vector<CellOperator> cells_;
    Coupling mode_;
    Eigen::VectorXd mass_;
    BlockOperator<double> blocks_;
};

/// Assembles per-node cell operators (in parallel) and the coupled operator.
CoupledOperator assemble_coupled(const MacroMesh& macro_mesh, MacroBc bc, const CellMesh& cell_mesh,
                                 const CellMap& map, Coupling mode);

/// Y_g inner product by trapezoid quadrature on the full states.
double weighted_inner(const CoupledOperator& op, const TwoScaleState& a, const TwoScaleState& b);

} // namespace mmsim
