#include "mmsim/geometry.hpp"

#include "mmsim/error.hpp"

#include <cmath>
#include <numbers>
#include <ostream>

namespace mmsim {

using std::numbers::pi;

BoundaryTag parse_tag(const std::string& name)
{
    if (name == "dirichlet")
        return BoundaryTag::dirichlet;
    if (name == "neumann")
        return BoundaryTag::neumann;
    if (name == "gamma0")
        return BoundaryTag::gamma0;
    if (name == "gammaf")
        return BoundaryTag::gammaf;
    throw Error("unknown boundary tag '" + name + "'");
}

std::string to_string(BoundaryTag tag)
{
    switch (tag) {
    case BoundaryTag::none: return "none";
    case BoundaryTag::dirichlet: return "dirichlet";
    case BoundaryTag::neumann: return "neumann";
    case BoundaryTag::gamma0: return "gamma0";
    case BoundaryTag::gammaf: return "gammaf";
    }
    return "none";
}

StripProfile::StripProfile(Coefficient f) : f_(f)
{
    if (!f_.periodic())
        throw Error("strip profile " + f_.str() + " is not 2π-periodic");
    constexpr int samples = 4096;
    min_height_ = f_.value(0.0);
    for (int k = 1; k < samples; ++k)
        min_height_ = std::min(min_height_, f_.value(2.0 * pi * k / samples));
    if (!(min_height_ > 0.0))
        throw Error("strip profile " + f_.str() + " has a non-positive sample");
}

MacroMesh build_interval_mesh(double length, std::size_t n_nodes, BoundaryTag left, BoundaryTag right)
{
    if (!(length > 0.0) || !std::isfinite(length))
        throw Error("interval length must be positive");
    if (n_nodes < 3)
        throw Error("interval mesh needs at least 3 nodes, got " + std::to_string(n_nodes));
    for (BoundaryTag t : {left, right})
        if (t != BoundaryTag::dirichlet && t != BoundaryTag::neumann)
            throw Error("interval endpoints take dirichlet or neumann tags, got " + to_string(t));

    MacroMesh mesh;
    mesh.kind = MacroMesh::Kind::interval;
    mesh.nx = n_nodes;
    mesh.ny = 1;
    mesh.dx = length / static_cast<double>(n_nodes - 1);
    mesh.x.resize(n_nodes);
    mesh.y.assign(n_nodes, 0.0);
    mesh.tags.assign(n_nodes, BoundaryTag::none);
    mesh.volume.assign(n_nodes, mesh.dx);
    mesh.boundary_measure.assign(n_nodes, 0.0);
    for (std::size_t i = 0; i < n_nodes; ++i)
        mesh.x[i] = length * static_cast<double>(i) / static_cast<double>(n_nodes - 1);
    mesh.x.back() = length;
    mesh.tags.front() = left;
    mesh.tags.back() = right;
    mesh.volume.front() = mesh.volume.back() = 0.5 * mesh.dx;
    mesh.boundary_measure.front() = mesh.boundary_measure.back() = 1.0;
    return mesh;
}

MacroMesh build_strip_mesh(const StripProfile& profile, std::size_t nx, std::size_t ny)
{
    if (nx < 4 || ny < 3)
        throw Error("strip mesh needs nx >= 4 and ny >= 3");

    MacroMesh mesh;
    mesh.kind = MacroMesh::Kind::periodic_strip;
    mesh.nx = nx;
    mesh.ny = ny;
    mesh.dx = 2.0 * pi / static_cast<double>(nx);
    mesh.deta = 1.0 / static_cast<double>(ny - 1);
    mesh.periodic_axis = 0;
    mesh.profile = profile;
    mesh.eta.resize(ny);
    for (std::size_t j = 0; j < ny; ++j)
        mesh.eta[j] = static_cast<double>(j) / static_cast<double>(ny - 1);

    const std::size_t n = nx * ny;
    mesh.x.resize(n);
    mesh.y.resize(n);
    mesh.tags.assign(n, BoundaryTag::none);
    mesh.volume.resize(n);
    mesh.boundary_measure.assign(n, 0.0);
    for (std::size_t j = 0; j < ny; ++j) {
        const bool edge = (j == 0 || j + 1 == ny);
        for (std::size_t i = 0; i < nx; ++i) {
            const std::size_t k = mesh.index(i, j);
            const double xi = mesh.dx * static_cast<double>(i);
            const double f = profile.height(xi);
            mesh.x[k] = xi;
            mesh.y[k] = mesh.eta[j] * f;
            mesh.volume[k] = mesh.dx * mesh.deta * (edge ? 0.5 : 1.0) * f;
            if (j == 0) {
                mesh.tags[k] = BoundaryTag::gamma0;
                mesh.boundary_measure[k] = mesh.dx;
            } else if (j + 1 == ny) {
                mesh.tags[k] = BoundaryTag::gammaf;
                // arc length of the graph y = f(x)
                const double fp = profile.slope(xi);
                mesh.boundary_measure[k] = mesh.dx * std::sqrt(1.0 + fp * fp);
            }
        }
    }
    return mesh;
}

double unit_ball_volume(int dim)
{
    switch (dim) {
    case 1: return 2.0;
    case 2: return pi;
    case 3: return 4.0 * pi / 3.0;
    default: throw Error("unsupported cell dimension " + std::to_string(dim));
    }
}

double unit_sphere_area(int dim)
{
    switch (dim) {
    case 1: return 2.0;
    case 2: return 2.0 * pi;
    case 3: return 4.0 * pi;
    default: throw Error("unsupported cell dimension " + std::to_string(dim));
    }
}

CellMesh build_cell_mesh(int dim, CellMesh::Mode mode, std::size_t m_nodes)
{
    if (m_nodes < 3)
        throw Error("cell mesh needs at least 3 nodes");
    if (mode == CellMesh::Mode::interval && dim != 1)
        throw Error("interval cells require dim = 1, got " + std::to_string(dim));
    if (mode == CellMesh::Mode::radial && (dim < 1 || dim > 3))
        throw Error("radial cells support dim 1..3, got " + std::to_string(dim));

    CellMesh cell;
    cell.dim = dim;
    cell.mode = mode;
    const std::size_t m = m_nodes;
    cell.nodes.resize(m);
    cell.volume_weights.resize(m);

    if (mode == CellMesh::Mode::interval) {
        const double k = 2.0 / static_cast<double>(m - 1);
        cell.spacing = k;
        for (std::size_t j = 0; j < m; ++j)
            cell.nodes[j] = -1.0 + k * static_cast<double>(j);
        cell.nodes.back() = 1.0;
        for (std::size_t j = 0; j < m; ++j)
            cell.volume_weights[j] = (j == 0 || j + 1 == m) ? 0.5 * k : k;
        cell.boundary_ids = {0, m - 1};
        cell.surface_weights = {1.0, 1.0};
        cell.face_areas.assign(m - 1, 1.0);
    } else {
        // Radial nodes r_j = j k; dual cell [r_{j-1/2}, r_{j+1/2}] clipped to
        // [0, 1], integrated exactly against |S| r^{n-1} dr.
        const double k = 1.0 / static_cast<double>(m - 1);
        cell.spacing = k;
        const double area = unit_sphere_area(dim);
        const int n = dim;
        auto shell = [&](double a, double b) {
            return area * (std::pow(b, n) - std::pow(a, n)) / static_cast<double>(n);
        };
        for (std::size_t j = 0; j < m; ++j) {
            cell.nodes[j] = k * static_cast<double>(j);
            const double lo = j == 0 ? 0.0 : (static_cast<double>(j) - 0.5) * k;
            const double hi = j + 1 == m ? 1.0 : (static_cast<double>(j) + 0.5) * k;
            cell.volume_weights[j] = shell(lo, hi);
        }
        cell.nodes.back() = 1.0;
        cell.boundary_ids = {m - 1};
        cell.surface_weights = {area};
        cell.face_areas.resize(m - 1);
        for (std::size_t f = 0; f + 1 < m; ++f)
            cell.face_areas[f] = area * std::pow((static_cast<double>(f) + 0.5) * k, n - 1);
    }

    cell.face_points.resize(m - 1);
    for (std::size_t f = 0; f + 1 < m; ++f)
        cell.face_points[f] = 0.5 * (cell.nodes[f] + cell.nodes[f + 1]);
    for (std::size_t j = 0; j < m; ++j) {
        bool boundary = false;
        for (auto b : cell.boundary_ids)
            boundary = boundary || b == j;
        if (!boundary)
            cell.interior_ids.push_back(j);
    }
    return cell;
}

void dump(std::ostream& os, const MacroMesh& mesh)
{
    os << "# node x y tag volume\n";
    os.precision(17);
    for (std::size_t n = 0; n < mesh.size(); ++n)
        os << n << ' ' << mesh.x[n] << ' ' << mesh.y[n] << ' ' << to_string(mesh.tags[n]) << ' '
           << mesh.volume[n] << '\n';
}

void dump(std::ostream& os, const CellMesh& mesh)
{
    os << "# node coord volume_weight boundary\n";
    os.precision(17);
    std::size_t b = 0;
    for (std::size_t j = 0; j < mesh.size(); ++j) {
        const bool on_s = b < mesh.boundary_ids.size() && mesh.boundary_ids[b] == j;
        os << j << ' ' << mesh.nodes[j] << ' ' << mesh.volume_weights[j] << ' ' << (on_s ? 1 : 0)
           << '\n';
        if (on_s)
            ++b;
    }
}

} // namespace mmsim
