#pragma once

// Macro domains (interval, periodic strip under a graph) and the reference cell B.

#include "mmsim/catalog.hpp"

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace mmsim {

enum class BoundaryTag : std::uint8_t { none, dirichlet, neumann, gamma0, gammaf };

BoundaryTag parse_tag(const std::string& name);
std::string to_string(BoundaryTag tag);

/// Height function f of the periodic strip {0 < y < f(x)}, period 2π.
class StripProfile {
public:
    /// Throws unless f is 2π-periodic and positive on a fine sample.
    explicit StripProfile(Coefficient f);

    double height(double x) const { return f_.value(x); }
    double slope(double x) const { return f_.derivative(x); }
    double min_height() const { return min_height_; }
    const Coefficient& expression() const { return f_; }

private:
    Coefficient f_;
    double min_height_ = 0.0;
};

/// Structured macro mesh. Nodes are stored row-major: index = j * nx + i,
/// with ny == 1 for the interval.
///
/// For the strip the grid lives in terrain-following coordinates (ξ, η) with
/// physical y = η f(ξ); `volume` holds the lumped trapezoid weights times the
/// Jacobian f(ξ) so that sum(volume) = |Ω|.
struct MacroMesh {
    enum class Kind { interval, periodic_strip };

    Kind kind = Kind::interval;
    std::size_t nx = 0;
    std::size_t ny = 1;
    double dx = 0.0;   // spacing in x (ξ)
    double deta = 0.0; // spacing in η (strip only)
    std::vector<double> x;
    std::vector<double> y;
    std::vector<double> eta;
    std::vector<BoundaryTag> tags;
    std::vector<double> volume;
    /// Boundary quadrature weight per node (zero for interior nodes).
    std::vector<double> boundary_measure;
    std::optional<int> periodic_axis;
    std::optional<StripProfile> profile;

    std::size_t size() const { return x.size(); }
    std::size_t index(std::size_t i, std::size_t j) const { return j * nx + i; }
    bool is_boundary(std::size_t n) const { return tags[n] != BoundaryTag::none; }
};

/// Uniform nodes on [0, length]; `left` and `right` tag the endpoints.
MacroMesh build_interval_mesh(double length, std::size_t n_nodes, BoundaryTag left, BoundaryTag right);

/// Periodic strip Ω_f: nx distinct ξ nodes over [0, 2π), ny η rows over [0, 1].
/// Row η = 0 is tagged gamma0 and row η = 1 gammaf.
MacroMesh build_strip_mesh(const StripProfile& profile, std::size_t nx, std::size_t ny);

/// Reference cell B = B(0,1): the interval [-1, 1], or the radial coordinate
/// r in [0, 1] of radially symmetric functions on the n-ball.
struct CellMesh {
    enum class Mode { interval, radial };

    int dim = 1;
    Mode mode = Mode::interval;
    double spacing = 0.0;
    std::vector<double> nodes;
    std::vector<std::size_t> boundary_ids;
    std::vector<std::size_t> interior_ids;
    /// Reference-measure quadrature weight per node (sums to |B|).
    std::vector<double> volume_weights;
    /// Surface weight per entry of boundary_ids (sums to |S|).
    std::vector<double> surface_weights;
    /// Face k sits between nodes k and k+1.
    std::vector<double> face_points;
    std::vector<double> face_areas;

    std::size_t size() const { return nodes.size(); }
    std::size_t interior_size() const { return interior_ids.size(); }
};

CellMesh build_cell_mesh(int dim, CellMesh::Mode mode, std::size_t m_nodes);

/// |B| and |S| for the unit n-ball, n in {1, 2, 3}.
double unit_ball_volume(int dim);
double unit_sphere_area(int dim);

/// Plain-text node/tag table for debugging.
void dump(std::ostream& os, const MacroMesh& mesh);
void dump(std::ostream& os, const CellMesh& mesh);

} // namespace mmsim
