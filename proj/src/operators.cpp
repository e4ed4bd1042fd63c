#include "mmsim/operators.hpp"

#include "mmsim/error.hpp"
#include "mmsim/parallel.hpp"

#include <array>
#include <cmath>

namespace mmsim {

MacroBc parse_macro_bc(const std::string& name)
{
    if (name == "dirichlet")
        return MacroBc::dirichlet;
    if (name == "neumann")
        return MacroBc::neumann;
    if (name == "mixed")
        return MacroBc::mixed;
    throw Error("unknown macro boundary condition '" + name + "'");
}

std::string to_string(MacroBc bc)
{
    switch (bc) {
    case MacroBc::dirichlet: return "dirichlet";
    case MacroBc::neumann: return "neumann";
    case MacroBc::mixed: return "mixed";
    }
    return {};
}

Coupling parse_coupling(const std::string& name)
{
    if (name == "A")
        return Coupling::A;
    if (name == "Aq")
        return Coupling::Aq;
    if (name == "AN")
        return Coupling::AN;
    if (name == "detached")
        return Coupling::detached;
    throw Error("unknown coupling mode '" + name + "' (expected A, Aq, AN or detached)");
}

std::string to_string(Coupling c)
{
    switch (c) {
    case Coupling::A: return "A";
    case Coupling::Aq: return "Aq";
    case Coupling::AN: return "AN";
    case Coupling::detached: return "detached";
    }
    return {};
}

namespace {

bool is_essential(BoundaryTag tag, MacroBc bc, bool strip)
{
    switch (tag) {
    case BoundaryTag::none: return false;
    case BoundaryTag::dirichlet:
        if (bc == MacroBc::neumann || (bc == MacroBc::mixed && strip))
            throw Error("boundary condition " + to_string(bc) + " does not match tag dirichlet");
        return true;
    case BoundaryTag::neumann:
        if (bc == MacroBc::dirichlet || (bc == MacroBc::mixed && strip))
            throw Error("boundary condition " + to_string(bc) + " does not match tag neumann");
        return false;
    case BoundaryTag::gamma0:
        return bc == MacroBc::dirichlet;
    case BoundaryTag::gammaf:
        return bc != MacroBc::neumann;
    }
    return false;
}

// One gradient sample of the strip energy: weight * g^T A g with
// g = (Σ cξ u, Σ cη u) over two nodes each.
struct CornerSample {
    double weight;
    std::array<double, 3> tensor; // A11, A12, A22
    std::array<std::size_t, 2> xi_nodes;
    std::array<std::size_t, 2> eta_nodes;
    double inv_dxi;
    double inv_deta;
};

template <class Fn>
void for_each_corner(const MacroMesh& mesh, Fn&& fn)
{
    const StripProfile& prof = *mesh.profile;
    const std::size_t nx = mesh.nx;
    const double w = 0.25 * mesh.dx * mesh.deta;
    for (std::size_t j = 0; j + 1 < mesh.ny; ++j) {
        for (std::size_t i = 0; i < nx; ++i) {
            const std::size_t i1 = (i + 1) % nx;
            for (std::size_t ci = 0; ci < 2; ++ci) {
                for (std::size_t cj = 0; cj < 2; ++cj) {
                    const std::size_t ic = ci == 0 ? i : i1;
                    const std::size_t jc = j + cj;
                    const double x = mesh.dx * static_cast<double>(ic);
                    const double eta = mesh.eta[jc];
                    const double f = prof.height(x);
                    const double fp = prof.slope(x);
                    CornerSample s{w,
                                   {f, -eta * fp, (1.0 + eta * eta * fp * fp) / f},
                                   {mesh.index(i, jc), mesh.index(i1, jc)},
                                   {mesh.index(ic, j), mesh.index(ic, j + 1)},
                                   1.0 / mesh.dx,
                                   1.0 / mesh.deta};
                    fn(s);
                }
            }
        }
    }
}

} // namespace

Eigen::SparseMatrix<double> MacroOperator::laplacian() const
{
    Eigen::SparseMatrix<double> l = stiffness;
    for (Eigen::Index k = 0; k < l.outerSize(); ++k)
        for (Eigen::SparseMatrix<double>::InnerIterator it(l, k); it; ++it)
            it.valueRef() /= weights(it.row());
    return l;
}

MacroOperator assemble_macro(const MacroMesh& mesh, MacroBc bc)
{
    const bool strip = mesh.kind == MacroMesh::Kind::periodic_strip;
    if (bc == MacroBc::mixed && strip) {
        // fine: gamma0 natural, gammaf essential
    }
    const std::size_t n = mesh.size();
    MacroOperator op;
    op.bc = bc;
    op.essential.resize(n);
    op.active_index.assign(n, -1);
    for (std::size_t k = 0; k < n; ++k) {
        op.essential[k] = is_essential(mesh.tags[k], bc, strip);
        if (!op.essential[k]) {
            op.active_index[k] = static_cast<int>(op.active_nodes.size());
            op.active_nodes.push_back(k);
        }
    }
    if (op.active_nodes.empty())
        throw Error("macro mesh has no active nodes");

    std::vector<Eigen::Triplet<double>> trip;
    if (!strip) {
        const double c = 1.0 / mesh.dx;
        for (std::size_t i = 0; i + 1 < n; ++i) {
            const auto a = static_cast<Eigen::Index>(i);
            trip.emplace_back(a, a, c);
            trip.emplace_back(a + 1, a + 1, c);
            trip.emplace_back(a, a + 1, -c);
            trip.emplace_back(a + 1, a, -c);
        }
    } else {
        for_each_corner(mesh, [&](const CornerSample& s) {
            // g = D u with D rows (ξ, η); K += w D^T A D
            const std::array<std::array<std::pair<std::size_t, double>, 2>, 2> d{{
                {{{s.xi_nodes[0], -s.inv_dxi}, {s.xi_nodes[1], s.inv_dxi}}},
                {{{s.eta_nodes[0], -s.inv_deta}, {s.eta_nodes[1], s.inv_deta}}},
            }};
            const double a[2][2] = {{s.tensor[0], s.tensor[1]}, {s.tensor[1], s.tensor[2]}};
            for (int p = 0; p < 2; ++p)
                for (int q = 0; q < 2; ++q)
                    for (const auto& [rp, cp] : d[static_cast<std::size_t>(p)])
                        for (const auto& [rq, cq] : d[static_cast<std::size_t>(q)])
                            trip.emplace_back(static_cast<Eigen::Index>(rp), static_cast<Eigen::Index>(rq),
                                              s.weight * cp * a[p][q] * cq);
        });
    }
    const auto nn = static_cast<Eigen::Index>(n);
    op.stiffness_full.resize(nn, nn);
    op.stiffness_full.setFromTriplets(trip.begin(), trip.end());

    const auto na = static_cast<Eigen::Index>(op.active_size());
    std::vector<Eigen::Triplet<double>> act;
    std::vector<Eigen::Triplet<double>> lift;
    for (Eigen::Index k = 0; k < op.stiffness_full.outerSize(); ++k) {
        for (Eigen::SparseMatrix<double>::InnerIterator it(op.stiffness_full, k); it; ++it) {
            const int r = op.active_index[static_cast<std::size_t>(it.row())];
            if (r < 0)
                continue;
            const int c = op.active_index[static_cast<std::size_t>(it.col())];
            if (c >= 0)
                act.emplace_back(r, c, it.value());
            else
                lift.emplace_back(r, it.col(), it.value());
        }
    }
    op.stiffness.resize(na, na);
    op.stiffness.setFromTriplets(act.begin(), act.end());
    op.lift.resize(na, nn);
    op.lift.setFromTriplets(lift.begin(), lift.end());
    op.weights.resize(na);
    for (Eigen::Index a = 0; a < na; ++a)
        op.weights(a) = mesh.volume[op.active_nodes[static_cast<std::size_t>(a)]];
    return op;
}

double macro_energy(const MacroMesh& mesh, const Eigen::VectorXd& u, const Eigen::VectorXd& v)
{
    double e = 0.0;
    if (mesh.kind == MacroMesh::Kind::interval) {
        for (std::size_t i = 0; i + 1 < mesh.size(); ++i) {
            const auto a = static_cast<Eigen::Index>(i);
            e += (u(a + 1) - u(a)) * (v(a + 1) - v(a)) / mesh.dx;
        }
        return e;
    }
    for_each_corner(mesh, [&](const CornerSample& s) {
        auto grad = [&](const Eigen::VectorXd& w) {
            return std::array<double, 2>{
                (w(static_cast<Eigen::Index>(s.xi_nodes[1])) - w(static_cast<Eigen::Index>(s.xi_nodes[0])))
                    * s.inv_dxi,
                (w(static_cast<Eigen::Index>(s.eta_nodes[1])) - w(static_cast<Eigen::Index>(s.eta_nodes[0])))
                    * s.inv_deta};
        };
        const auto gu = grad(u);
        const auto gv = grad(v);
        e += s.weight
             * (s.tensor[0] * gu[0] * gv[0] + s.tensor[1] * (gu[0] * gv[1] + gu[1] * gv[0])
                + s.tensor[2] * gu[1] * gv[1]);
    });
    return e;
}

double CellOperator::boundary_mass() const
{
    double b = 0.0;
    for (const Link& l : links)
        b += mass[l.boundary];
    return b;
}

Eigen::VectorXd CellOperator::apply(const Eigen::VectorXd& v) const
{
    const std::size_t m = size();
    Eigen::VectorXd out(static_cast<Eigen::Index>(interior_count));
    for (std::size_t r = 0; r < interior_count; ++r) {
        const std::size_t j = first_interior + r;
        const auto jj = static_cast<Eigen::Index>(j);
        double s = 0.0;
        if (j > 0)
            s += conductance[j - 1] * (v(jj) - v(jj - 1));
        if (j + 1 < m)
            s += conductance[j] * (v(jj) - v(jj + 1));
        out(static_cast<Eigen::Index>(r)) = s / mass[j];
    }
    return out;
}

Tridiagonal<double> CellOperator::interior_matrix() const
{
    const std::size_t m = size();
    Tridiagonal<double> t(interior_count);
    for (std::size_t r = 0; r < interior_count; ++r) {
        const std::size_t j = first_interior + r;
        double d = 0.0;
        if (j > 0) {
            d += conductance[j - 1];
            if (r > 0)
                t.lower[r] = -conductance[j - 1] / mass[j];
        }
        if (j + 1 < m) {
            d += conductance[j];
            if (r + 1 < interior_count)
                t.upper[r] = -conductance[j] / mass[j];
        }
        t.diag[r] = d / mass[j];
    }
    return t;
}

double CellOperator::energy(const Eigen::VectorXd& v, const Eigen::VectorXd& z) const
{
    double e = 0.0;
    for (std::size_t f = 0; f < conductance.size(); ++f) {
        const auto a = static_cast<Eigen::Index>(f);
        e += conductance[f] * (v(a + 1) - v(a)) * (z(a + 1) - z(a));
    }
    return e;
}

double CellOperator::energy(const Eigen::VectorXd& v) const { return energy(v, v); }

CellOperator assemble_cell(const CellMesh& cell, const CellMap& map, double x)
{
    if (map.family() == CellMap::Family::general_1d && cell.mode != CellMesh::Mode::interval)
        throw Error("general-1d maps require interval cells");
    const std::size_t m = cell.size();
    CellOperator op;
    op.conductance.resize(m - 1);
    op.mass.resize(m);
    for (std::size_t f = 0; f + 1 < m; ++f) {
        const MetricData g = eval_metric(map, x, cell.face_points[f], cell.dim);
        op.conductance[f] = g.conductivity() * cell.face_areas[f] / cell.spacing;
    }
    for (std::size_t j = 0; j < m; ++j)
        op.mass[j] = cell.volume_weights[j] * eval_metric(map, x, cell.nodes[j], cell.dim).sqrt_det;
    op.first_interior = cell.interior_ids.front();
    op.interior_count = cell.interior_ids.size();
    if (cell.mode == CellMesh::Mode::interval)
        op.links = {{0, 1, 0}, {m - 1, m - 2, m - 2}};
    else
        op.links = {{m - 1, m - 2, m - 2}};
    return op;
}

Eigen::VectorXd lift_boundary(const CellMesh& cell, double u_x)
{
    return Eigen::VectorXd::Constant(static_cast<Eigen::Index>(cell.size()), u_x);
}

double exchange_flux(const CellOperator& op, const Eigen::VectorXd& v)
{
    const Eigen::VectorXd av = op.apply(v);
    double q = 0.0;
    for (std::size_t r = 0; r < op.interior_count; ++r)
        q += op.mass[op.first_interior + r] * av(static_cast<Eigen::Index>(r));
    return q;
}

double boundary_flux(const CellOperator& op, const Eigen::VectorXd& v)
{
    double q = 0.0;
    for (const auto& l : op.links)
        q += op.conductance[l.face]
             * (v(static_cast<Eigen::Index>(l.neighbour)) - v(static_cast<Eigen::Index>(l.boundary)));
    return q;
}

double exchange_flux_bound(const CellOperator& op)
{
    double c = 0.0;
    for (const auto& l : op.links)
        c += std::sqrt(op.conductance[l.face]);
    return c;
}

TwoScaleState TwoScaleState::zeros(std::size_t macro_nodes, std::size_t cell_nodes)
{
    return {Eigen::VectorXd::Zero(static_cast<Eigen::Index>(macro_nodes)),
            Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(cell_nodes), static_cast<Eigen::Index>(macro_nodes))};
}

void TwoScaleState::enforce_matching(const CellMesh& cell)
{
    for (Eigen::Index n = 0; n < u.size(); ++n)
        for (auto b : cell.boundary_ids)
            cells(static_cast<Eigen::Index>(b), n) = u(n);
}

CoupledOperator::CoupledOperator(MacroMesh macro_mesh, CellMesh cell_mesh, CellMap map, MacroOperator macro,
                                 std::vector<CellOperator> cells, Coupling mode)
    : macro_mesh_(std::move(macro_mesh)), cell_mesh_(std::move(cell_mesh)), map_(std::move(map)),
      macro_(std::move(macro)), cells_(std::move(cells)), mode_(mode)
{
    if (cells_.size() != macro_mesh_.size())
        throw Error("one cell operator per macro node required");
    for (const auto& c : cells_)
        if (c.size() != cell_mesh_.size())
            throw Error("cell operator does not match the cell mesh");
    if (macro_.essential.size() != macro_mesh_.size())
        throw Error("macro operator does not match the macro mesh");
    if (mode_ == Coupling::AN && macro_.bc != MacroBc::neumann)
        throw Error("coupling AN requires a Neumann macro operator");

    const std::size_t na = macro_unknowns();
    const std::size_t nc = cell_unknowns();
    const auto ina = static_cast<Eigen::Index>(na);
    const auto inc = static_cast<Eigen::Index>(nc);
    const bool detached = mode_ == Coupling::detached;
    const bool exchange = mode_ == Coupling::Aq || mode_ == Coupling::AN;

    mass_.resize(static_cast<Eigen::Index>(size()));
    blocks_.cells.resize(na);
    blocks_.macro_from_cell = Eigen::MatrixXd::Zero(inc, ina);
    blocks_.cell_from_macro = Eigen::MatrixXd::Zero(inc, ina);
    Eigen::VectorXd row_scale(ina);
    Eigen::VectorXd diag_add = Eigen::VectorXd::Zero(ina);

    for (std::size_t a = 0; a < na; ++a) {
        const auto ia = static_cast<Eigen::Index>(a);
        const std::size_t node = macro_.active_nodes[a];
        const CellOperator& c = cells_[node];
        const double w = macro_.weights(ia);
        const double beta = exchange ? c.boundary_mass() : 0.0;
        mass_(ia) = w * (1.0 + beta);
        row_scale(ia) = 1.0 / mass_(ia);
        for (std::size_t r = 0; r < nc; ++r)
            mass_(ina + ia * inc + static_cast<Eigen::Index>(r)) = w * c.mass[c.first_interior + r];
        blocks_.cells[a] = c.interior_matrix();
        if (detached)
            continue;
        for (const auto& l : c.links) {
            const auto r = static_cast<Eigen::Index>(l.neighbour - c.first_interior);
            const double kappa = c.conductance[l.face];
            blocks_.cell_from_macro(r, ia) -= kappa / c.mass[l.neighbour];
            if (exchange) {
                blocks_.macro_from_cell(r, ia) -= kappa / (1.0 + beta);
                diag_add(ia) += w * kappa;
            }
        }
    }
    blocks_.macro = macro_.stiffness;
    for (Eigen::Index a = 0; a < ina; ++a)
        blocks_.macro.coeffRef(a, a) += diag_add(a);
    blocks_.macro = row_scale.asDiagonal() * blocks_.macro;
    blocks_.macro.makeCompressed();
}

Eigen::SparseMatrix<double> CoupledOperator::stiffness() const
{
    Eigen::SparseMatrix<double> k = mass_.asDiagonal() * matrix();
    k.makeCompressed();
    return k;
}

BlockOperator<double> CoupledOperator::system(double alpha, double beta) const
{
    const std::size_t na = macro_unknowns();
    const auto ina = static_cast<Eigen::Index>(na);
    const auto inc = static_cast<Eigen::Index>(cell_unknowns());
    BlockOperator<double> s;
    const Eigen::VectorXd mu = mass_.head(ina);
    Eigen::SparseMatrix<double> scaled = mu.asDiagonal() * blocks_.macro;
    s.macro = beta * scaled;
    for (Eigen::Index a = 0; a < ina; ++a)
        s.macro.coeffRef(a, a) += alpha * mu(a);
    s.macro.makeCompressed();
    s.cells.resize(na);
    s.macro_from_cell = beta * blocks_.macro_from_cell * mu.asDiagonal();
    s.cell_from_macro.resize(inc, ina);
    for (std::size_t a = 0; a < na; ++a) {
        const auto ia = static_cast<Eigen::Index>(a);
        const auto mc = mass_.segment(ina + ia * inc, inc);
        const auto& t = blocks_.cells[a];
        auto& o = s.cells[a];
        o = Tridiagonal<double>(t.size());
        for (std::size_t r = 0; r < t.size(); ++r) {
            const double m = mc(static_cast<Eigen::Index>(r));
            o.lower[r] = beta * m * t.lower[r];
            o.upper[r] = beta * m * t.upper[r];
            o.diag[r] = alpha * m + beta * m * t.diag[r];
        }
        s.cell_from_macro.col(ia) = beta * mc.cwiseProduct(blocks_.cell_from_macro.col(ia));
    }
    return s;
}

TwoScaleState CoupledOperator::apply(const TwoScaleState& w) const
{
    const std::size_t n = macro_mesh_.size();
    TwoScaleState out = TwoScaleState::zeros(n, cell_mesh_.size());
    const Eigen::VectorXd ku = macro_.stiffness_full * w.u;
    const bool detached = mode_ == Coupling::detached;
    const bool exchange = mode_ == Coupling::Aq || mode_ == Coupling::AN;
    parallel_for(macro_unknowns(), [&](std::size_t a) {
        const std::size_t node = macro_.active_nodes[a];
        const auto in = static_cast<Eigen::Index>(node);
        const CellOperator& c = cells_[node];
        Eigen::VectorXd v = w.cells.col(in);
        for (const auto& l : c.links)
            v(static_cast<Eigen::Index>(l.boundary)) = detached ? 0.0 : w.u(in);
        const double wt = macro_.weights(static_cast<Eigen::Index>(a));
        double macro_row = ku(in) / wt;
        if (exchange)
            macro_row = (macro_row - exchange_flux(c, v)) / (1.0 + c.boundary_mass());
        out.u(in) = macro_row;
        const Eigen::VectorXd av = c.apply(v);
        out.cells.col(in).segment(static_cast<Eigen::Index>(c.first_interior), av.size()) = av;
        for (const auto& l : c.links)
            out.cells(static_cast<Eigen::Index>(l.boundary), in) = detached ? 0.0 : macro_row;
    });
    return out;
}

Eigen::VectorXd CoupledOperator::gather(const TwoScaleState& w) const
{
    const auto na = static_cast<Eigen::Index>(macro_unknowns());
    const auto nc = static_cast<Eigen::Index>(cell_unknowns());
    Eigen::VectorXd x(static_cast<Eigen::Index>(size()));
    for (Eigen::Index a = 0; a < na; ++a) {
        const auto node = static_cast<Eigen::Index>(macro_.active_nodes[static_cast<std::size_t>(a)]);
        const auto& c = cells_[static_cast<std::size_t>(node)];
        x(a) = w.u(node);
        x.segment(na + a * nc, nc) = w.cells.col(node).segment(static_cast<Eigen::Index>(c.first_interior), nc);
    }
    return x;
}

TwoScaleState CoupledOperator::scatter(const Eigen::VectorXd& x, double essential_value) const
{
    const auto na = static_cast<Eigen::Index>(macro_unknowns());
    const auto nc = static_cast<Eigen::Index>(cell_unknowns());
    const std::size_t n = macro_mesh_.size();
    TwoScaleState w = TwoScaleState::zeros(n, cell_mesh_.size());
    for (std::size_t k = 0; k < n; ++k) {
        const auto ik = static_cast<Eigen::Index>(k);
        const int a = macro_.active_index[k];
        if (a < 0) {
            w.u(ik) = essential_value;
            w.cells.col(ik).setConstant(essential_value);
            continue;
        }
        const auto& c = cells_[k];
        w.u(ik) = x(a);
        w.cells.col(ik).segment(static_cast<Eigen::Index>(c.first_interior), nc) = x.segment(na + a * nc, nc);
        for (const auto& l : c.links)
            w.cells(static_cast<Eigen::Index>(l.boundary), ik) = mode_ == Coupling::detached ? 0.0 : x(a);
    }
    return w;
}

Eigen::VectorXd CoupledOperator::load(const TwoScaleState& f) const
{
    const auto na = static_cast<Eigen::Index>(macro_unknowns());
    const auto nc = static_cast<Eigen::Index>(cell_unknowns());
    Eigen::VectorXd b(static_cast<Eigen::Index>(size()));
    for (Eigen::Index a = 0; a < na; ++a) {
        const std::size_t node = macro_.active_nodes[static_cast<std::size_t>(a)];
        const auto in = static_cast<Eigen::Index>(node);
        const auto& c = cells_[node];
        const double w = macro_.weights(a);
        double macro_load = f.u(in);
        if (mode_ == Coupling::Aq || mode_ == Coupling::AN)
            for (const auto& l : c.links)
                macro_load += c.mass[l.boundary] * f.cells(static_cast<Eigen::Index>(l.boundary), in);
        b(a) = w * macro_load;
        for (Eigen::Index r = 0; r < nc; ++r) {
            const std::size_t j = c.first_interior + static_cast<std::size_t>(r);
            b(na + a * nc + r) = w * c.mass[j] * f.cells(static_cast<Eigen::Index>(j), in);
        }
    }
    return b;
}

Eigen::VectorXd CoupledOperator::essential_load(const TwoScaleState& w) const
{
    Eigen::VectorXd b = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(size()));
    b.head(static_cast<Eigen::Index>(macro_unknowns())) = macro_.lift * w.u;
    return b;
}

double CoupledOperator::exchange_flux_at(const TwoScaleState& w, std::size_t node) const
{
    const auto in = static_cast<Eigen::Index>(node);
    Eigen::VectorXd v = w.cells.col(in);
    for (const auto& l : cells_[node].links)
        v(static_cast<Eigen::Index>(l.boundary)) = w.u(in);
    return exchange_flux(cells_[node], v);
}

TwoScaleState CoupledOperator::zero_state() const
{
    return TwoScaleState::zeros(macro_mesh_.size(), cell_mesh_.size());
}

CoupledOperator assemble_coupled(const MacroMesh& macro_mesh, MacroBc bc, const CellMesh& cell_mesh,
                                 const CellMap& map, Coupling mode)
{
    MacroOperator macro = assemble_macro(macro_mesh, bc);
    std::vector<CellOperator> cells(macro_mesh.size());
    std::vector<std::string> errors(macro_mesh.size());
    parallel_for(macro_mesh.size(), [&](std::size_t k) {
        try {
            cells[k] = assemble_cell(cell_mesh, map, macro_mesh.x[k]);
        } catch (const std::exception& e) {
            errors[k] = e.what();
        }
    });
    for (const auto& e : errors)
        if (!e.empty())
            throw Error(e);
    return CoupledOperator(macro_mesh, cell_mesh, map, std::move(macro), std::move(cells), mode);
}

double weighted_inner(const CoupledOperator& op, const TwoScaleState& a, const TwoScaleState& b)
{
    const MacroMesh& mesh = op.macro_mesh();
    if (a.u.size() != static_cast<Eigen::Index>(mesh.size()) || b.u.size() != a.u.size()
        || a.cells.rows() != static_cast<Eigen::Index>(op.cell_mesh().size()) || b.cells.rows() != a.cells.rows()
        || a.cells.cols() != a.u.size() || b.cells.cols() != b.u.size())
        throw Error("state shape does not match the operator");
    double s = 0.0;
    for (std::size_t k = 0; k < mesh.size(); ++k) {
        const auto ik = static_cast<Eigen::Index>(k);
        const auto& c = op.cells()[k];
        double cell = 0.0;
        for (std::size_t j = 0; j < c.size(); ++j) {
            const auto ij = static_cast<Eigen::Index>(j);
            cell += c.mass[j] * a.cells(ij, ik) * b.cells(ij, ik);
        }
        s += mesh.volume[k] * (a.u(ik) * b.u(ik) + cell);
    }
    return s;
}

} // namespace mmsim
