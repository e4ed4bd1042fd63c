#include "mmsim/commands.hpp"

#include "mmsim/analysis.hpp"
#include "mmsim/error.hpp"
#include "mmsim/gravity.hpp"
#include "mmsim/io.hpp"

#include <cmath>
#include <ostream>

namespace mmsim {

namespace {

namespace fs = std::filesystem;

struct Checks {
    std::ostream& log;
    bool ok = true;

    void expect(bool pass, const std::string& what)
    {
        log << (pass ? "  ok    " : "  FAIL  ") << what << '\n';
        ok = ok && pass;
    }
    int status() const { return ok ? 0 : 2; }
};

void export_operators(const Config& c, const CoupledOperator& op, const fs::path& out)
{
    if (!c.output.export_operators)
        return;
    auto a = open_output(out / "operator.mtx");
    write_coordinate_matrix(a, op.matrix());
    auto k = open_output(out / "stiffness.mtx");
    write_coordinate_matrix(k, op.stiffness());
    Eigen::SparseMatrix<double> m(op.mass().size(), op.mass().size());
    for (Eigen::Index i = 0; i < op.mass().size(); ++i)
        m.insert(i, i) = op.mass()(i);
    auto ms = open_output(out / "mass.mtx");
    write_coordinate_matrix(ms, m);
}

void write_snapshots(const CoupledOperator& op, const Trajectory& tr, const fs::path& out)
{
    for (const auto& [step, w] : tr.snapshots) {
        auto os = open_output(out / "snapshots" / ("step_" + std::to_string(step) + ".txt"));
        write_snapshot(os, op, w, step, tr.t[step]);
    }
}

double relative_drift(const std::vector<double>& s)
{
    double drift = 0.0;
    const double ref = std::max(std::abs(s.front()), 1e-300);
    for (double v : s)
        drift = std::max(drift, std::abs(v - s.front()) / ref);
    return drift;
}

int command_run(const Config& c, const fs::path& out, std::ostream& log)
{
    const auto op = build_operator(c);
    export_operators(c, *op, out);
    Checks checks{log};
    Trajectory tr;
    if (c.physics.problem == "gravity") {
        const GravityScenario s = build_gravity(c, op);
        const GravityRun r = run_gravity(s);
        auto g = open_output(out / "gamma0.csv");
        write_gamma0_csv(g, r);
        tr = r.trajectory;
    } else {
        const Scenario s = build_scenario(c, op);
        tr = run(s);
        const bool conservative = c.mesh.bc == MacroBc::neumann && op->mode() != Coupling::A && !s.forcing;
        if (conservative) {
            const double drift = relative_drift(tr.mass);
            log << "  mass drift " << drift << '\n';
            checks.expect(drift <= 1e-10, "S conserved to 1e-10");
        }
        const bool dissipative = c.mesh.bc != MacroBc::neumann && op->mode() == Coupling::Aq && !s.forcing;
        if (dissipative) {
            bool decreasing = true;
            for (std::size_t k = 1; k < tr.norm_yg.size(); ++k)
                decreasing = decreasing && tr.norm_yg[k] <= tr.norm_yg[k - 1] * (1.0 + 1e-12);
            checks.expect(decreasing, "Y_g norm non-increasing");
        }
    }
    auto csv = open_output(out / "trajectory.csv");
    write_trajectory_csv(csv, tr);
    write_snapshots(*op, tr, out);
    log << "  steps " << tr.steps() << ", final t " << tr.t.back() << '\n';
    if (tr.halted) {
        log << "  halted: " << tr.diagnostic << '\n';
        checks.ok = false;
    }
    return checks.status();
}

int command_spectrum(const Config& c, const fs::path& out, std::ostream& log)
{
    const auto op = build_operator(c);
    export_operators(c, *op, out);
    const SpectralReport rep = spectral_bound(*op, c.analysis.eigen_count, c.analysis.tol);
    auto os = open_output(out / "spectrum.txt");
    write_spectrum(os, rep);
    log << "  sigma " << rep.sigma << " (" << rep.iterations << " iterations)\n";
    Checks checks{log};
    checks.expect(rep.sigma > 0.0, "sigma > 0");
    checks.expect(rep.symmetry_defect <= 1e-10, "symmetry defect <= 1e-10");
    return checks.status();
}

int command_sector(const Config& c, const fs::path& out, std::ostream& log)
{
    const auto op = build_operator(c);
    export_operators(c, *op, out);
    const SpectralReport bound = spectral_bound(*op, 1, c.analysis.tol);
    const SectorProbe probe = sector_probe(*op, c.analysis.angles, c.analysis.radii, c.seed);
    auto os = open_output(out / "sector.csv");
    write_sector_csv(os, probe);
    log << "  sigma " << bound.sigma << ", fitted M " << probe.m_constant << '\n';
    for (const auto& w : probe.warnings)
        log << "  warning: " << w << '\n';
    Checks checks{log};
    for (const auto& s : probe.samples) {
        if (s.lambda.imag() != 0.0 || !(s.lambda.real() > 0.0))
            continue;
        const double want = 1.0 / (s.lambda.real() + bound.sigma);
        checks.expect(std::abs(s.norm - want) <= 1e-8 * want,
                      "|R(" + std::to_string(s.lambda.real()) + ")| = 1/(lambda + sigma)");
    }
    return checks.status();
}

int command_converge(const Config& c, const fs::path& out, std::ostream& log)
{
    const CellMap map = build_cell_map(c);
    std::vector<ConvergenceReport> reports;
    reports.push_back(mms_convergence(map, c.analysis.manufactured, c.analysis.ladder, c.cellmap.mode, c.cellmap.dim));
    reports.push_back(mms_convergence(map, "coupled", c.analysis.ladder, c.cellmap.mode, c.cellmap.dim));
    auto os = open_output(out / "convergence.csv");
    write_convergence_csv(os, reports);
    Checks checks{log};
    for (const auto& r : reports) {
        bool exact = true;
        for (const auto& row : r.rows)
            exact = exact && row.error <= 1e-12;
        log << "  " << r.solution << ": final order " << r.final_order << (exact ? " (exact)" : "") << '\n';
        checks.expect(r.monotone || exact, r.solution + " errors decrease with h");
    }
    return checks.status();
}

int command_steady(const Config& c, const fs::path& out, std::ostream& log)
{
    const auto op = build_operator(c);
    export_operators(c, *op, out);
    Checks checks{log};
    auto report = open_output(out / "steady.txt");
    if (c.physics.problem == "gravity") {
        const GravityScenario s = build_gravity(c, op);
        const SteadyResult r = steady_newton(s);
        auto snap = open_output(out / "snapshots" / "steady.txt");
        write_snapshot(snap, *op, r.w, 0, 0.0);
        const BoundaryNonlinearity g(*op, s.shift(), s.convention);
        double q = 0.0;
        for (std::size_t k = 0; k < op->macro_mesh().size(); ++k)
            q = std::max(q, std::abs(op->exchange_flux_at(r.w, k)));
        report << "iterations " << r.iterations << '\n' << "residual " << r.residual << '\n';
        report << "max_abs_q " << q << '\n';
        report << "gamma0";
        for (auto k : g.nodes())
            report << ' ' << r.w.u(static_cast<Eigen::Index>(k)) + s.shift();
        report << '\n';
        log << "  Newton iterations " << r.iterations << ", residual " << r.residual << '\n';
        log << "  u on gamma_0 at x = 0: " << r.w.u(static_cast<Eigen::Index>(g.nodes().front())) + s.shift() << '\n';
        return checks.status();
    }
    if (!c.physics.reaction.is_zero())
        throw Error("steady: the linear steady solve takes a source, not a reaction term");
    TwoScaleState h = op->zero_state();
    for (std::size_t k = 0; k < op->macro_mesh().size(); ++k)
        h.u(static_cast<Eigen::Index>(k)) = c.physics.source.value(op->macro_mesh().x[k]);
    const BlockOperator<double> k = op->system(0.0, 1.0);
    const Eigen::VectorXd b = op->load(h);
    const Eigen::VectorXd x = BlockFactorization<double>(k).solve(b);
    const double residual = (k.apply(x) - b).cwiseQuotient(op->mass()).cwiseAbs().maxCoeff();
    auto snap = open_output(out / "snapshots" / "steady.txt");
    write_snapshot(snap, *op, op->scatter(x), 0, 0.0);
    report << "residual " << residual << '\n';
    log << "  residual " << residual << '\n';
    checks.expect(residual <= 1e-8, "steady residual <= 1e-8");
    return checks.status();
}

} // namespace

int run_command(const std::string& subcommand, const Config& config, const fs::path& out, std::ostream& log)
{
    fs::create_directories(out);
    {
        auto rc = open_output(out / "resolved-config.ini");
        rc << resolved_config(config);
    }
    log.precision(10);
    log << subcommand << ": " << config.scenario << '\n';
    if (subcommand == "run")
        return command_run(config, out, log);
    if (subcommand == "spectrum")
        return command_spectrum(config, out, log);
    if (subcommand == "sector")
        return command_sector(config, out, log);
    if (subcommand == "converge")
        return command_converge(config, out, log);
    if (subcommand == "steady")
        return command_steady(config, out, log);
    throw Error("unknown subcommand '" + subcommand + "'");
}

} // namespace mmsim
