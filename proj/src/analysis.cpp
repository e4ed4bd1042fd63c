#include "mmsim/analysis.hpp"

#include "mmsim/error.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

namespace mmsim {

double mass_S(const CoupledOperator& op, const TwoScaleState& w)
{
    TwoScaleState one = op.zero_state();
    one.u.setOnes();
    one.cells.setOnes();
    return weighted_inner(op, w, one);
}

double yg_norm(const CoupledOperator& op, const TwoScaleState& w)
{
    return std::sqrt(weighted_inner(op, w, w));
}

namespace {

bool self_adjoint_mode(Coupling c) { return c == Coupling::Aq || c == Coupling::AN || c == Coupling::detached; }

Eigen::MatrixXd random_block(std::size_t rows, std::size_t cols, std::uint64_t seed)
{
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    Eigen::MatrixXd x(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    for (Eigen::Index j = 0; j < x.cols(); ++j)
        for (Eigen::Index i = 0; i < x.rows(); ++i)
            x(i, j) = dist(rng);
    return x;
}

} // namespace

SpectralReport spectral_bound(const CoupledOperator& op, std::size_t count, double tol, int max_iter)
{
    if (op.mode() != Coupling::Aq && op.mode() != Coupling::detached)
        throw Error("spectral_bound needs a self-adjoint coupling (Aq or detached)");
    bool any_essential = false;
    for (bool e : op.macro().essential)
        any_essential = any_essential || e;
    if (!any_essential)
        throw Error("spectral_bound needs essential macro nodes (dirichlet or mixed boundary)");

    const std::size_t n = op.size();
    count = std::max<std::size_t>(1, std::min(count, n));
    const std::size_t p = std::min(n, count + 2);
    const Eigen::VectorXd& m = op.mass();
    const BlockOperator<double> k = op.system(0.0, 1.0);
    const BlockFactorization<double> solver(k);

    SpectralReport rep;
    rep.tolerance = tol;
    rep.method = "block inverse iteration, block size " + std::to_string(p) + ", M_g-Rayleigh-Ritz";
    const Eigen::SparseMatrix<double> ks = op.stiffness();
    const Eigen::SparseMatrix<double> kt = ks.transpose();
    rep.symmetry_defect = (ks - kt).norm() / ks.norm();

    Eigen::MatrixXd x = random_block(n, p, 0x5eed);
    Eigen::VectorXd previous = Eigen::VectorXd::Constant(static_cast<Eigen::Index>(p), -1.0);
    Eigen::MatrixXd y(x.rows(), x.cols());
    for (int it = 1; it <= max_iter; ++it) {
        const Eigen::MatrixXd mx = m.asDiagonal() * x;
        for (Eigen::Index j = 0; j < x.cols(); ++j)
            y.col(j) = solver.solve(mx.col(j));
        // K Y = M X, so the projected pencil is (Y^T M X, Y^T M Y).
        Eigen::MatrixXd kr = y.transpose() * mx;
        kr = 0.5 * (kr + kr.transpose()).eval();
        Eigen::MatrixXd mr = y.transpose() * m.asDiagonal() * y;
        mr = 0.5 * (mr + mr.transpose()).eval();
        Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> es(kr, mr);
        if (es.info() != Eigen::Success)
            throw Error("Rayleigh-Ritz step failed");
        const Eigen::VectorXd theta = es.eigenvalues();
        x = y * es.eigenvectors();

        double change = 0.0;
        for (std::size_t i = 0; i < count; ++i) {
            const auto ii = static_cast<Eigen::Index>(i);
            change = std::max(change, std::abs(theta(ii) - previous(ii)) / std::abs(theta(ii)));
        }
        previous = theta;
        const Eigen::VectorXd x0 = x.col(0);
        const Eigen::VectorXd mx0 = m.cwiseProduct(x0);
        const double residual = (k.apply(x0) - theta(0) * mx0).norm() / (std::abs(theta(0)) * mx0.norm());
        rep.iterations = it;
        rep.residual = residual;
        if (change <= 0.1 * tol && residual <= 1e-6) {
            rep.sigma = theta(0);
            for (std::size_t i = 0; i < count; ++i)
                rep.eigenvalues.push_back(theta(static_cast<Eigen::Index>(i)));
            rep.eigenvector = x0 / std::sqrt(x0.dot(mx0));
            return rep;
        }
    }
    std::ostringstream os;
    os << "spectral iteration stagnated after " << max_iter << " iterations (residual " << rep.residual << ")";
    throw Error(os.str());
}

DecayFit decay_fit(const std::vector<double>& t, const std::vector<double>& y, double skip)
{
    if (t.size() != y.size())
        throw Error("decay_fit: time and value series differ in length");
    if (t.size() < 2)
        throw Error("decay_fit: need at least two samples");
    if (!(skip >= 0.0 && skip < 1.0))
        throw Error("decay_fit: skip must lie in [0, 1)");
    const double t0 = t.front() + skip * (t.back() - t.front());
    double st = 0.0, sl = 0.0, stt = 0.0, stl = 0.0;
    std::size_t n = 0;
    DecayFit fit;
    fit.t_begin = t0;
    fit.t_end = t.back();
    for (std::size_t i = 0; i < t.size(); ++i) {
        if (t[i] < t0)
            continue;
        if (!(y[i] > 0.0))
            throw Error("decay_fit: non-positive value in the fit window");
        const double l = std::log(y[i]);
        st += t[i];
        sl += l;
        stt += t[i] * t[i];
        stl += t[i] * l;
        ++n;
    }
    if (n < 2)
        throw Error("decay_fit: fewer than two samples in the fit window");
    const double dn = static_cast<double>(n);
    const double denom = dn * stt - st * st;
    if (!(denom > 0.0))
        throw Error("decay_fit: degenerate time window");
    const double slope = (dn * stl - st * sl) / denom;
    const double intercept = (sl - slope * st) / dn;
    double rss = 0.0;
    for (std::size_t i = 0; i < t.size(); ++i)
        if (t[i] >= t0) {
            const double r = std::log(y[i]) - (intercept + slope * t[i]);
            rss += r * r;
        }
    fit.rate = -slope;
    fit.amplitude = std::exp(intercept);
    fit.residual = std::sqrt(rss / dn);
    fit.samples = n;
    return fit;
}

DecayFit decay_fit(const Trajectory& traj, double skip) { return decay_fit(traj.t, traj.norm_yg, skip); }

namespace {

using CMatrix = Eigen::MatrixXcd;

/// Returns X with X^H M X = I.
CMatrix m_orthonormal(const CMatrix& x, const Eigen::VectorXd& m)
{
    CMatrix g = x.adjoint() * m.asDiagonal() * x;
    g = 0.5 * (g + g.adjoint()).eval();
    Eigen::LLT<CMatrix> llt(g);
    if (llt.info() != Eigen::Success)
        throw Error("probe block lost rank");
    const CMatrix lh = llt.matrixU();
    return lh.triangularView<Eigen::Upper>().solve<Eigen::OnTheRight>(x);
}

SectorSample probe_one(const CoupledOperator& op, std::complex<double> lambda, std::uint64_t seed)
{
    constexpr int block = 3;
    constexpr int max_iter = 4000;
    const Eigen::VectorXd& m = op.mass();
    const Resolvent r(op, lambda);
    const Resolvent radj(op, std::conj(lambda));
    const auto n = op.size();
    CMatrix x = m_orthonormal(random_block(n, block, seed).cast<std::complex<double>>(), m);
    CMatrix y(x.rows(), x.cols());
    SectorSample s;
    s.lambda = lambda;
    for (int it = 1; it <= max_iter; ++it) {
        for (Eigen::Index j = 0; j < x.cols(); ++j)
            y.col(j) = radj.solve(r.solve(x.col(j)));
        CMatrix h = x.adjoint() * m.asDiagonal() * y;
        h = 0.5 * (h + h.adjoint()).eval();
        Eigen::SelfAdjointEigenSolver<CMatrix> es(h);
        const double top = es.eigenvalues()(block - 1);
        const Eigen::VectorXcd v = es.eigenvectors().col(block - 1);
        const Eigen::VectorXcd res = y * v - top * (x * v);
        const double rnorm = std::sqrt(std::abs(res.dot(m.asDiagonal() * res))) / top;
        s.iterations = it;
        s.residual = rnorm;
        s.norm = std::sqrt(top);
        if (rnorm <= 1e-10) {
            s.converged = true;
            break;
        }
        x = m_orthonormal(y * es.eigenvectors(), m);
    }
    s.scaled = s.norm * std::abs(lambda);
    return s;
}

} // namespace

SectorProbe sector_probe(const CoupledOperator& op, const std::vector<std::complex<double>>& shifts,
                         std::uint64_t seed)
{
    if (!self_adjoint_mode(op.mode()))
        throw Error("sector_probe needs a self-adjoint coupling (Aq, AN or detached)");
    SectorProbe out;
    for (std::size_t i = 0; i < shifts.size(); ++i) {
        SectorSample s = probe_one(op, shifts[i], seed + i);
        std::ostringstream os;
        os << "lambda = " << s.lambda;
        if (!s.converged)
            out.warnings.push_back(os.str() + ": power iteration did not converge");
        if (s.norm > 1e8)
            out.warnings.push_back(os.str() + ": shift is close to the spectrum (norm " + std::to_string(s.norm) + ")");
        out.m_constant = std::max(out.m_constant, s.scaled);
        out.samples.push_back(s);
    }
    return out;
}

SectorProbe sector_probe(const CoupledOperator& op, const std::vector<double>& angles,
                         const std::vector<double>& radii, std::uint64_t seed)
{
    std::vector<std::complex<double>> shifts;
    for (double a : angles)
        for (double r : radii)
            shifts.push_back(std::polar(r, a));
    return sector_probe(op, shifts, seed);
}

namespace {

struct Profile {
    double v, dv, d2v;
};

Profile manufactured(const std::string& id, double y)
{
    using std::numbers::pi;
    if (id == "quadratic")
        return {1.0 - y * y, -2.0 * y, -2.0};
    if (id == "cosine")
        return {std::cos(0.5 * pi * y), -0.5 * pi * std::sin(0.5 * pi * y), -0.25 * pi * pi * std::cos(0.5 * pi * y)};
    throw Error("unknown manufactured solution '" + id + "' (expected quadratic, cosine or coupled)");
}

double cell_action(const CellMap& map, const Profile& p, double x, double y, int dim, CellMesh::Mode mode)
{
    const double s = map.dpsi_dy(x, y);
    if (mode == CellMesh::Mode::interval)
        return -p.d2v / (s * s) + p.dv * map.d2psi_dy2(x, y) / (s * s * s);
    const double lap = y == 0.0 ? dim * p.d2v : p.d2v + (dim - 1) * p.dv / y;
    return -lap / (s * s);
}

} // namespace

double manufactured_value(const std::string& id, double y) { return manufactured(id, y).v; }

double manufactured_cell_action(const CellMap& map, const std::string& id, double x, double y, int dim,
                                CellMesh::Mode mode)
{
    return cell_action(map, manufactured(id, y), x, y, dim, mode);
}

namespace {

ConvergenceRow cell_error(const CellMap& map, const std::string& id, std::size_t m, CellMesh::Mode mode, int dim)
{
    constexpr double x = 0.5;
    const CellMesh cell = build_cell_mesh(dim, mode, m);
    const CellOperator op = assemble_cell(cell, map, x);
    Eigen::VectorXd v(static_cast<Eigen::Index>(m));
    for (std::size_t j = 0; j < m; ++j)
        v(static_cast<Eigen::Index>(j)) = manufactured_value(id, cell.nodes[j]);
    const Eigen::VectorXd a = op.apply(v);
    double err = 0.0;
    for (std::size_t r = 0; r < op.interior_count; ++r) {
        const double y = cell.nodes[op.first_interior + r];
        err = std::max(err, std::abs(a(static_cast<Eigen::Index>(r)) - manufactured_cell_action(map, id, x, y, dim, mode)));
    }
    return {m, cell.spacing, err, 0.0};
}

ConvergenceRow coupled_error(const CellMap& map, std::size_t m, CellMesh::Mode mode, int dim)
{
    using std::numbers::pi;
    const MacroMesh mesh = build_interval_mesh(1.0, m, BoundaryTag::dirichlet, BoundaryTag::dirichlet);
    const CellMesh cell = build_cell_mesh(dim, mode, m);
    const CoupledOperator op = assemble_coupled(mesh, MacroBc::dirichlet, cell, map, Coupling::Aq);
    auto u = [](double x) { return std::sin(pi * x); };
    auto phi = [](double x) { return 0.5 * (1.0 + x) * std::sin(pi * x); };

    TwoScaleState exact = op.zero_state();
    TwoScaleState f = op.zero_state();
    for (std::size_t k = 0; k < mesh.size(); ++k) {
        const auto ik = static_cast<Eigen::Index>(k);
        const double x = mesh.x[k];
        exact.u(ik) = u(x);
        double q = 0.0;
        if (mode == CellMesh::Mode::interval)
            q = 2.0 * phi(x) * (1.0 / map.dpsi_dy(x, 1.0) + 1.0 / map.dpsi_dy(x, -1.0));
        else
            q = 2.0 * phi(x) * unit_sphere_area(dim) * std::pow(map.dpsi_dy(x, 1.0), dim - 2);
        f.u(ik) = pi * pi * u(x) - q;
        for (std::size_t j = 0; j < cell.size(); ++j) {
            const double y = cell.nodes[j];
            exact.cells(static_cast<Eigen::Index>(j), ik) = u(x) + phi(x) * (1.0 - y * y);
            f.cells(static_cast<Eigen::Index>(j), ik)
                = phi(x) * manufactured_cell_action(map, "quadratic", x, y, dim, mode);
        }
    }
    const BlockFactorization<double> solver(op.system(0.0, 1.0));
    const Eigen::VectorXd x = solver.solve(op.load(f));
    const double err = (x - op.gather(exact)).cwiseAbs().maxCoeff();
    return {m, mesh.dx, err, 0.0};
}

} // namespace

ConvergenceReport mms_convergence(const CellMap& map, const std::string& solution,
                                  const std::vector<std::size_t>& ladder, CellMesh::Mode mode, int dim)
{
    if (ladder.size() < 3)
        throw Error("mesh ladder needs at least 3 levels");
    ConvergenceReport rep;
    rep.solution = solution;
    for (std::size_t m : ladder) {
        ConvergenceRow row = solution == "coupled" ? coupled_error(map, m, mode, dim)
                                                   : cell_error(map, solution, m, mode, dim);
        if (!rep.rows.empty()) {
            const ConvergenceRow& prev = rep.rows.back();
            row.order = std::log(prev.error / row.error) / std::log(prev.h / row.h);
        }
        rep.rows.push_back(row);
    }
    rep.monotone = true;
    for (std::size_t i = 1; i < rep.rows.size(); ++i)
        rep.monotone = rep.monotone && rep.rows[i].h < rep.rows[i - 1].h && rep.rows[i].error < rep.rows[i - 1].error;
    rep.final_order = rep.rows.back().order;
    return rep;
}

} // namespace mmsim
