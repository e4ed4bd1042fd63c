#include "mmsim/io.hpp"

#include "mmsim/error.hpp"

#include <ostream>

namespace mmsim {

std::ofstream open_output(const std::filesystem::path& path)
{
    if (path.has_parent_path())
        std::filesystem::create_directories(path.parent_path());
    std::ofstream os(path);
    if (!os)
        throw Error("cannot write " + path.string());
    os.precision(17);
    return os;
}

void write_trajectory_csv(std::ostream& os, const Trajectory& tr)
{
    os.precision(17);
    os << "t,norm_u,norm_Yg,S,min_u,max_u\n";
    for (std::size_t k = 0; k < tr.t.size(); ++k)
        os << tr.t[k] << ',' << tr.norm_u[k] << ',' << tr.norm_yg[k] << ',' << tr.mass[k] << ',' << tr.min_u[k]
           << ',' << tr.max_u[k] << '\n';
}

void write_snapshot(std::ostream& os, const CoupledOperator& op, const TwoScaleState& w, std::size_t step, double t)
{
    os.precision(17);
    const MacroMesh& mesh = op.macro_mesh();
    const CellMesh& cell = op.cell_mesh();
    os << "# step " << step << " t " << t << '\n';
    os << "# macro: index x y u\n";
    for (std::size_t k = 0; k < mesh.size(); ++k)
        os << k << ' ' << mesh.x[k] << ' ' << mesh.y[k] << ' ' << w.u(static_cast<Eigen::Index>(k)) << '\n';
    os << "# cells: macro_index cell_index y U\n";
    for (std::size_t k = 0; k < mesh.size(); ++k)
        for (std::size_t j = 0; j < cell.size(); ++j)
            os << k << ' ' << j << ' ' << cell.nodes[j] << ' '
               << w.cells(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(k)) << '\n';
}

void write_coordinate_matrix(std::ostream& os, const Eigen::SparseMatrix<double>& m)
{
    os.precision(17);
    os << "%%MatrixMarket matrix coordinate real general\n";
    os << m.rows() << ' ' << m.cols() << ' ' << m.nonZeros() << '\n';
    for (Eigen::Index k = 0; k < m.outerSize(); ++k)
        for (Eigen::SparseMatrix<double>::InnerIterator it(m, k); it; ++it)
            os << it.row() + 1 << ' ' << it.col() + 1 << ' ' << it.value() << '\n';
}

void write_gamma0_csv(std::ostream& os, const GravityRun& run)
{
    os.precision(17);
    os << 't';
    for (double x : run.trace_x)
        os << ",u(x=" << x << ')';
    os << '\n';
    for (std::size_t k = 0; k < run.trace.size(); ++k) {
        os << run.trajectory.t[k];
        for (double v : run.trace[k])
            os << ',' << v;
        os << '\n';
    }
}

void write_spectrum(std::ostream& os, const SpectralReport& rep)
{
    os.precision(17);
    os << "sigma " << rep.sigma << '\n';
    os << "eigenvalues";
    for (double e : rep.eigenvalues)
        os << ' ' << e;
    os << '\n';
    os << "symmetry_defect " << rep.symmetry_defect << '\n';
    os << "tolerance " << rep.tolerance << '\n';
    os << "iterations " << rep.iterations << '\n';
    os << "residual " << rep.residual << '\n';
    os << "method " << rep.method << '\n';
}

void write_sector_csv(std::ostream& os, const SectorProbe& probe)
{
    os.precision(17);
    os << "re,im,abs,norm,norm_times_abs,iterations,residual,converged\n";
    for (const auto& s : probe.samples)
        os << s.lambda.real() << ',' << s.lambda.imag() << ',' << std::abs(s.lambda) << ',' << s.norm << ','
           << s.scaled << ',' << s.iterations << ',' << s.residual << ',' << (s.converged ? 1 : 0) << '\n';
}

void write_convergence_csv(std::ostream& os, const std::vector<ConvergenceReport>& reports)
{
    os.precision(17);
    os << "study,nodes,h,error,order\n";
    for (const auto& r : reports)
        for (const auto& row : r.rows)
            os << r.solution << ',' << row.nodes << ',' << row.h << ',' << row.error << ',' << row.order << '\n';
}

} // namespace mmsim
