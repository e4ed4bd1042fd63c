#pragma once

// Sectioned key-value scenario files. Every key has a documented default, any
// unknown key is an error, and the resolved configuration can be echoed back.

#include "mmsim/catalog.hpp"
#include "mmsim/cellmap.hpp"
#include "mmsim/geometry.hpp"
#include "mmsim/gravity.hpp"
#include "mmsim/operators.hpp"
#include "mmsim/solver.hpp"

#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>
#include <vector>

namespace mmsim {

struct Config {
    std::string scenario = "unnamed";
    std::uint64_t seed = 1;

    struct Mesh {
        std::string kind = "interval"; // interval | strip
        double length = 1.0;           // interval
        std::size_t nodes = 17;        // interval
        std::size_t nx = 16;           // strip
        std::size_t ny = 9;            // strip
        Coefficient profile = Coefficient::constant(1.0);
        MacroBc bc = MacroBc::dirichlet; // default: dirichlet (interval), mixed (strip)
    } mesh;

    struct Cells {
        CellMap::Family family = CellMap::Family::identity;
        CellMesh::Mode mode = CellMesh::Mode::interval;
        int dim = 1;
        std::size_t nodes = 17;
        Coefficient scale = Coefficient::constant(1.0);     // scaled-ball
        Coefficient linear = Coefficient::constant(1.0);    // general-1d
        Coefficient quadratic = Coefficient::constant(0.0); // general-1d
    } cellmap;

    struct Physics {
        std::string problem = "standard"; // standard | gravity
        Coupling coupling = Coupling::Aq;
        Reaction reaction;
        Coefficient source = Coefficient::constant(0.0);
        double rho0 = 0.0;
        GravityConvention convention = GravityConvention::coordinate;
        bool shifted = false;
        double guard = 1e6;
    } physics;

    struct Initial {
        std::string u = "zero";      // zero | bump(a) | any coefficient expression
        std::string cells = "match"; // match | bubble(a)
        /// Regularity class of the initial data; recorded in the resolved config only.
        std::string regularity = "unspecified";
    } initial;

    struct Time {
        double theta = 0.5;
        double dt = 0.01;
        double t_end = 1.0;
        int newton = 1;
    } time;

    struct Output {
        std::size_t cadence = 0; // snapshot every n steps, 0 = none
        bool export_operators = false;
    } output;

    struct Analysis {
        std::size_t eigen_count = 4;
        double tol = 1e-10;
        std::vector<double> angles{0.0, 0.7853981633974483, 1.5707963267948966, 2.356194490192345};
        std::vector<double> radii{0.1, 1.0, 10.0, 100.0};
        std::vector<std::size_t> ladder{9, 17, 33, 65};
        std::string manufactured = "cosine";
        double decay_skip = 0.1;
    } analysis;
};

/// Throws ConfigError naming the key path on any unknown key or bad value.
Config parse_config(const std::string& text);
Config load_config(const std::filesystem::path& path);
/// All keys with their effective values, in the input format.
std::string resolved_config(const Config& c);

MacroMesh build_macro_mesh(const Config& c);
CellMesh build_cell_mesh(const Config& c);
CellMap build_cell_map(const Config& c);
std::shared_ptr<const CoupledOperator> build_operator(const Config& c);

/// Initial state from [initial]; for gravity the macro field is added to ρ₀
/// in the physical variable and then shifted if needed.
TwoScaleState initial_state(const Config& c, const CoupledOperator& op);

Scenario build_scenario(const Config& c, std::shared_ptr<const CoupledOperator> op);
GravityScenario build_gravity(const Config& c, std::shared_ptr<const CoupledOperator> op);

} // namespace mmsim
