#include "mmsim/cellmap.hpp"

#include "mmsim/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace mmsim {

CellMap CellMap::identity() { return {}; }

CellMap CellMap::scaled_ball(Coefficient c)
{
    CellMap m;
    m.family_ = Family::scaled_ball;
    m.a_ = c;
    return m;
}

CellMap CellMap::general_1d(Coefficient linear, Coefficient quadratic)
{
    CellMap m;
    m.family_ = Family::general_1d;
    m.a_ = linear;
    m.b_ = quadratic;
    return m;
}

std::string CellMap::name() const
{
    switch (family_) {
    case Family::identity: return "identity";
    case Family::scaled_ball: return "scaled-ball";
    case Family::general_1d: return "general-1d";
    }
    return {};
}

CellMap::Family parse_family(const std::string& name)
{
    if (name == "identity")
        return CellMap::Family::identity;
    if (name == "scaled-ball")
        return CellMap::Family::scaled_ball;
    if (name == "general-1d")
        return CellMap::Family::general_1d;
    throw Error("unknown cell map family '" + name + "'");
}

double CellMap::psi(double x, double y) const
{
    switch (family_) {
    case Family::identity: return y;
    case Family::scaled_ball: return a_.value(x) * y;
    case Family::general_1d: return a_.value(x) * y + b_.value(x) * y * y;
    }
    return y;
}

double CellMap::dpsi_dy(double x, double y) const
{
    switch (family_) {
    case Family::identity: return 1.0;
    case Family::scaled_ball: return a_.value(x);
    case Family::general_1d: return a_.value(x) + 2.0 * b_.value(x) * y;
    }
    return 1.0;
}

double CellMap::d2psi_dy2(double x, double) const
{
    return family_ == Family::general_1d ? 2.0 * b_.value(x) : 0.0;
}

MetricData eval_metric(const CellMap& map, double x, double y, int dim)
{
    if (map.family() == CellMap::Family::general_1d && dim != 1)
        throw Error("general-1d maps are one-dimensional");
    const double d = map.dpsi_dy(x, y);
    if (!std::isfinite(d))
        throw Error("cell map not defined at x = " + std::to_string(x));
    if (std::abs(d) < 1e-12)
        throw Error("degenerate cell map derivative at x = " + std::to_string(x));

    MetricData m;
    const double s = d * d;
    m.g = Eigen::MatrixXd::Identity(dim, dim) * s;
    m.g_inv = Eigen::MatrixXd::Identity(dim, dim) / s;
    m.sqrt_det = std::pow(std::abs(d), dim);
    return m;
}

MapValidationReport validate_map(const CellMap& map, const MacroMesh& macro, const CellMesh& cell)
{
    MapValidationReport r;
    r.min_dpsi = std::numeric_limits<double>::infinity();
    r.max_dpsi = -std::numeric_limits<double>::infinity();
    r.c1 = std::numeric_limits<double>::infinity();
    r.c2 = 0.0;

    // Distinct macro abscissae (the map depends on x only).
    std::vector<double> xs(macro.x.begin(), macro.x.begin() + static_cast<long>(macro.nx));
    const double hx = macro.dx;
    const auto& ys = cell.nodes;

    bool degenerate = false;
    for (double x : xs) {
        for (double y : ys) {
            const double d = map.dpsi_dy(x, y);
            r.min_dpsi = std::min(r.min_dpsi, d);
            r.max_dpsi = std::max(r.max_dpsi, d);
            if (!(std::abs(d) >= 1e-12) || !std::isfinite(d)) {
                degenerate = true;
                continue;
            }
            const double ginv = 1.0 / (d * d);
            r.c1 = std::min(r.c1, ginv);
            r.c2 = std::max(r.c2, ginv);

            const double dx = (map.psi(x + hx, y) - map.psi(x - hx, y)) / (2.0 * hx);
            const double dxx = (map.psi(x + hx, y) - 2.0 * map.psi(x, y) + map.psi(x - hx, y)) / (hx * hx);
            const double dxy = (map.dpsi_dy(x + hx, y) - map.dpsi_dy(x - hx, y)) / (2.0 * hx);
            for (double v : {map.psi(x, y), d, map.d2psi_dy2(x, y), dx, dxx, dxy})
                r.sup_derivatives = std::max(r.sup_derivatives, std::abs(v));
        }
    }

    // Lipschitz quotients of Φ(x, y) = (x, Ψ(x, y)) over neighbouring grid
    // pairs (x-, y- and diagonal neighbours).
    auto quotient = [&](double x0, double y0, double x1, double y1) {
        const double dom = std::hypot(x1 - x0, y1 - y0);
        const double img = std::hypot(x1 - x0, map.psi(x1, y1) - map.psi(x0, y0));
        r.lip_phi = std::max(r.lip_phi, img / dom);
        r.lip_phi_inv = img > 0.0 ? std::max(r.lip_phi_inv, dom / img)
                                  : std::numeric_limits<double>::infinity();
    };
    for (std::size_t i = 0; i < xs.size(); ++i) {
        for (std::size_t j = 0; j < ys.size(); ++j) {
            if (i + 1 < xs.size())
                quotient(xs[i], ys[j], xs[i + 1], ys[j]);
            if (j + 1 < ys.size())
                quotient(xs[i], ys[j], xs[i], ys[j + 1]);
            if (i + 1 < xs.size() && j + 1 < ys.size())
                quotient(xs[i], ys[j], xs[i + 1], ys[j + 1]);
        }
    }

    if (degenerate)
        r.failures.push_back("degenerate derivative: |dpsi/dy| < 1e-12 at a sampled point");
    if (!(r.min_dpsi > 0.0) && !degenerate)
        r.failures.push_back("map is not orientation preserving");
    if (!std::isfinite(r.lip_phi) || !std::isfinite(r.lip_phi_inv))
        r.failures.push_back("non-finite Lipschitz constant");
    if (!std::isfinite(r.sup_derivatives))
        r.failures.push_back("non-finite derivative bound");
    if (!(r.c1 > 0.0) || !std::isfinite(r.c2))
        r.failures.push_back("ellipticity bounds not positive and finite");
    r.pass = r.failures.empty();
    return r;
}

} // namespace mmsim
