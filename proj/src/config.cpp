#include "mmsim/config.hpp"

#include "mmsim/error.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <numbers>
#include <sstream>

namespace mmsim {

namespace {

namespace pt = boost::property_tree;

using Handler = std::function<void(const std::string& value, const std::string& key)>;

std::string trim(const std::string& s)
{
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos)
        return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

double to_double(const std::string& v, const std::string& key)
{
    const std::string t = trim(v);
    char* end = nullptr;
    const double d = std::strtod(t.c_str(), &end);
    if (t.empty() || end != t.c_str() + t.size() || !std::isfinite(d))
        throw ConfigError(key, "expected a number, got '" + v + "'");
    return d;
}

long long to_integer(const std::string& v, const std::string& key)
{
    const std::string t = trim(v);
    char* end = nullptr;
    const long long i = std::strtoll(t.c_str(), &end, 10);
    if (t.empty() || end != t.c_str() + t.size())
        throw ConfigError(key, "expected an integer, got '" + v + "'");
    return i;
}

std::size_t to_count(const std::string& v, const std::string& key)
{
    const long long i = to_integer(v, key);
    if (i < 0)
        throw ConfigError(key, "must be non-negative");
    return static_cast<std::size_t>(i);
}

bool to_bool(const std::string& v, const std::string& key)
{
    const std::string t = trim(v);
    if (t == "true" || t == "yes" || t == "1")
        return true;
    if (t == "false" || t == "no" || t == "0")
        return false;
    throw ConfigError(key, "expected true or false, got '" + v + "'");
}

std::vector<double> to_list(const std::string& v, const std::string& key)
{
    std::vector<double> out;
    std::stringstream ss(v);
    std::string item;
    while (std::getline(ss, item, ','))
        out.push_back(to_double(item, key));
    if (out.empty())
        throw ConfigError(key, "expected a comma-separated list");
    return out;
}

template <class F>
auto wrap(const std::string& key, F&& f)
{
    try {
        return f();
    } catch (const ConfigError&) {
        throw;
    } catch (const std::exception& e) {
        throw ConfigError(key, e.what());
    }
}

std::string fmt(double v)
{
    std::ostringstream os;
    os.precision(17);
    os << v;
    return os.str();
}

template <class T>
std::string join(const std::vector<T>& v)
{
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i)
            s += ", ";
        if constexpr (std::is_floating_point_v<T>)
            s += fmt(v[i]);
        else
            s += std::to_string(v[i]);
    }
    return s;
}

void check_initial_u(const std::string& v, const std::string& key)
{
    const CallExpr call = wrap(key, [&] { return parse_call(v); });
    if (call.name == "zero" && call.args.empty())
        return;
    if (call.name == "bump" && call.args.size() == 1)
        return;
    wrap(key, [&] { return Coefficient::parse(v); });
}

void check_initial_cells(const std::string& v, const std::string& key)
{
    const CallExpr call = wrap(key, [&] { return parse_call(v); });
    if (call.name == "match" && call.args.empty())
        return;
    if (call.name == "bubble" && call.args.size() == 1)
        return;
    throw ConfigError(key, "expected match or bubble(a), got '" + v + "'");
}

void validate(Config& c, bool bc_given)
{
    if (c.mesh.kind != "interval" && c.mesh.kind != "strip")
        throw ConfigError("mesh.kind", "expected interval or strip, got '" + c.mesh.kind + "'");
    const bool strip = c.mesh.kind == "strip";
    if (!bc_given)
        c.mesh.bc = strip ? MacroBc::mixed : MacroBc::dirichlet;
    if (!(c.mesh.length > 0.0))
        throw ConfigError("mesh.length", "must be positive");
    if (c.mesh.nodes < 3)
        throw ConfigError("mesh.nodes", "must be at least 3");
    if (c.mesh.nx < 4)
        throw ConfigError("mesh.nx", "must be at least 4");
    if (c.mesh.ny < 3)
        throw ConfigError("mesh.ny", "must be at least 3");
    if (strip)
        wrap("mesh.profile", [&] { return StripProfile(c.mesh.profile); });

    if (c.cellmap.dim < 1 || c.cellmap.dim > 3)
        throw ConfigError("cellmap.dim", "must be 1, 2 or 3");
    if (c.cellmap.mode == CellMesh::Mode::interval && c.cellmap.dim != 1)
        throw ConfigError("cellmap.dim", "interval cells are one-dimensional; use mode = radial");
    if (c.cellmap.nodes < 3)
        throw ConfigError("cellmap.nodes", "must be at least 3");
    if (c.cellmap.family == CellMap::Family::general_1d && c.cellmap.mode != CellMesh::Mode::interval)
        throw ConfigError("cellmap.family", "general-1d requires mode = interval");

    if (c.physics.problem != "standard" && c.physics.problem != "gravity")
        throw ConfigError("physics.problem", "expected standard or gravity, got '" + c.physics.problem + "'");
    if (c.physics.coupling == Coupling::AN && c.mesh.bc != MacroBc::neumann)
        throw ConfigError("physics.coupling", "AN requires mesh.bc = neumann");
    if (c.physics.problem == "gravity") {
        if (!strip)
            throw ConfigError("physics.problem", "gravity requires mesh.kind = strip");
        if (c.mesh.bc != MacroBc::mixed)
            throw ConfigError("mesh.bc", "gravity requires the mixed boundary condition");
        if (c.physics.coupling != Coupling::Aq)
            throw ConfigError("physics.coupling", "gravity requires coupling Aq");
        if (!c.physics.reaction.is_zero())
            throw ConfigError("physics.reaction", "gravity takes a source h, not a reaction term");
    }
    if (!(c.physics.rho0 >= 0.0))
        throw ConfigError("physics.rho0", "must be non-negative");
    if (!(c.physics.guard > 0.0))
        throw ConfigError("physics.guard", "must be positive");

    if (!(c.time.theta >= 0.5 && c.time.theta <= 1.0))
        throw ConfigError("time.theta", "must lie in [0.5, 1]");
    if (!(c.time.dt > 0.0))
        throw ConfigError("time.dt", "must be positive");
    if (!(c.time.t_end >= 0.0))
        throw ConfigError("time.t_end", "must be non-negative");
    if (c.time.newton < 1)
        throw ConfigError("time.newton", "must be at least 1");

    if (c.analysis.eigen_count < 1)
        throw ConfigError("analysis.eigen_count", "must be at least 1");
    if (!(c.analysis.tol > 0.0))
        throw ConfigError("analysis.tol", "must be positive");
    for (double r : c.analysis.radii)
        if (!(r > 0.0))
            throw ConfigError("analysis.radii", "radii must be positive");
    for (double a : c.analysis.angles)
        if (!(std::abs(a) < std::numbers::pi))
            throw ConfigError("analysis.angles", "angles must lie in (-pi, pi)");
    if (c.analysis.ladder.size() < 3)
        throw ConfigError("analysis.ladder", "needs at least 3 levels");
    for (std::size_t i = 0; i < c.analysis.ladder.size(); ++i) {
        if (c.analysis.ladder[i] < 3)
            throw ConfigError("analysis.ladder", "levels need at least 3 nodes");
        if (i > 0 && c.analysis.ladder[i] <= c.analysis.ladder[i - 1])
            throw ConfigError("analysis.ladder", "levels must increase");
    }
    const auto& mf = c.analysis.manufactured;
    if (mf != "quadratic" && mf != "cosine")
        throw ConfigError("analysis.manufactured", "expected quadratic or cosine, got '" + mf + "'");
    if (!(c.analysis.decay_skip >= 0.0 && c.analysis.decay_skip < 1.0))
        throw ConfigError("analysis.decay_skip", "must lie in [0, 1)");
}

} // namespace

Config parse_config(const std::string& text)
{
    pt::ptree tree;
    try {
        std::istringstream is(text);
        pt::read_ini(is, tree);
    } catch (const pt::ini_parser_error& e) {
        throw ConfigError("", "malformed config (line " + std::to_string(e.line()) + "): " + e.message());
    }

    Config c;
    bool bc_given = false;
    using Section = std::map<std::string, Handler>;
    const Section top{
        {"scenario", [&](const std::string& v, const std::string&) { c.scenario = trim(v); }},
        {"seed",
         [&](const std::string& v, const std::string& k) { c.seed = static_cast<std::uint64_t>(to_count(v, k)); }},
    };
    const std::map<std::string, Section> sections{
        {"mesh",
         {
             {"kind", [&](const std::string& v, const std::string&) { c.mesh.kind = trim(v); }},
             {"length", [&](const std::string& v, const std::string& k) { c.mesh.length = to_double(v, k); }},
             {"nodes", [&](const std::string& v, const std::string& k) { c.mesh.nodes = to_count(v, k); }},
             {"nx", [&](const std::string& v, const std::string& k) { c.mesh.nx = to_count(v, k); }},
             {"ny", [&](const std::string& v, const std::string& k) { c.mesh.ny = to_count(v, k); }},
             {"profile",
              [&](const std::string& v, const std::string& k) {
                  c.mesh.profile = wrap(k, [&] { return Coefficient::parse(v); });
              }},
             {"bc",
              [&](const std::string& v, const std::string& k) {
                  c.mesh.bc = wrap(k, [&] { return parse_macro_bc(trim(v)); });
                  bc_given = true;
              }},
         }},
        {"cellmap",
         {
             {"family",
              [&](const std::string& v, const std::string& k) {
                  c.cellmap.family = wrap(k, [&] { return parse_family(trim(v)); });
              }},
             {"mode",
              [&](const std::string& v, const std::string& k) {
                  const std::string t = trim(v);
                  if (t == "interval")
                      c.cellmap.mode = CellMesh::Mode::interval;
                  else if (t == "radial")
                      c.cellmap.mode = CellMesh::Mode::radial;
                  else
                      throw ConfigError(k, "expected interval or radial, got '" + v + "'");
              }},
             {"dim", [&](const std::string& v, const std::string& k) { c.cellmap.dim = static_cast<int>(to_integer(v, k)); }},
             {"nodes", [&](const std::string& v, const std::string& k) { c.cellmap.nodes = to_count(v, k); }},
             {"scale",
              [&](const std::string& v, const std::string& k) {
                  c.cellmap.scale = wrap(k, [&] { return Coefficient::parse(v); });
              }},
             {"linear",
              [&](const std::string& v, const std::string& k) {
                  c.cellmap.linear = wrap(k, [&] { return Coefficient::parse(v); });
              }},
             {"quadratic",
              [&](const std::string& v, const std::string& k) {
                  c.cellmap.quadratic = wrap(k, [&] { return Coefficient::parse(v); });
              }},
         }},
        {"physics",
         {
             {"problem", [&](const std::string& v, const std::string&) { c.physics.problem = trim(v); }},
             {"coupling",
              [&](const std::string& v, const std::string& k) {
                  c.physics.coupling = wrap(k, [&] { return parse_coupling(trim(v)); });
              }},
             {"reaction",
              [&](const std::string& v, const std::string& k) {
                  c.physics.reaction = wrap(k, [&] { return Reaction::parse(v); });
              }},
             {"source",
              [&](const std::string& v, const std::string& k) {
                  c.physics.source = wrap(k, [&] { return Coefficient::parse(v); });
              }},
             {"rho0", [&](const std::string& v, const std::string& k) { c.physics.rho0 = to_double(v, k); }},
             {"convention",
              [&](const std::string& v, const std::string& k) {
                  c.physics.convention = wrap(k, [&] { return parse_convention(trim(v)); });
              }},
             {"shifted", [&](const std::string& v, const std::string& k) { c.physics.shifted = to_bool(v, k); }},
             {"guard", [&](const std::string& v, const std::string& k) { c.physics.guard = to_double(v, k); }},
         }},
        {"initial",
         {
             {"u",
              [&](const std::string& v, const std::string& k) {
                  check_initial_u(v, k);
                  c.initial.u = trim(v);
              }},
             {"cells",
              [&](const std::string& v, const std::string& k) {
                  check_initial_cells(v, k);
                  c.initial.cells = trim(v);
              }},
             {"regularity", [&](const std::string& v, const std::string&) { c.initial.regularity = trim(v); }},
         }},
        {"time",
         {
             {"theta", [&](const std::string& v, const std::string& k) { c.time.theta = to_double(v, k); }},
             {"dt", [&](const std::string& v, const std::string& k) { c.time.dt = to_double(v, k); }},
             {"t_end", [&](const std::string& v, const std::string& k) { c.time.t_end = to_double(v, k); }},
             {"newton", [&](const std::string& v, const std::string& k) { c.time.newton = static_cast<int>(to_integer(v, k)); }},
         }},
        {"output",
         {
             {"cadence", [&](const std::string& v, const std::string& k) { c.output.cadence = to_count(v, k); }},
             {"export_operators",
              [&](const std::string& v, const std::string& k) { c.output.export_operators = to_bool(v, k); }},
         }},
        {"analysis",
         {
             {"eigen_count",
              [&](const std::string& v, const std::string& k) { c.analysis.eigen_count = to_count(v, k); }},
             {"tol", [&](const std::string& v, const std::string& k) { c.analysis.tol = to_double(v, k); }},
             {"angles", [&](const std::string& v, const std::string& k) { c.analysis.angles = to_list(v, k); }},
             {"radii", [&](const std::string& v, const std::string& k) { c.analysis.radii = to_list(v, k); }},
             {"ladder",
              [&](const std::string& v, const std::string& k) {
                  c.analysis.ladder.clear();
                  for (double d : to_list(v, k)) {
                      if (d != std::floor(d) || d < 0)
                          throw ConfigError(k, "levels must be non-negative integers");
                      c.analysis.ladder.push_back(static_cast<std::size_t>(d));
                  }
              }},
             {"manufactured",
              [&](const std::string& v, const std::string&) { c.analysis.manufactured = trim(v); }},
             {"decay_skip",
              [&](const std::string& v, const std::string& k) { c.analysis.decay_skip = to_double(v, k); }},
         }},
    };

    for (const auto& [name, node] : tree) {
        const auto sec = sections.find(name);
        if (sec == sections.end()) {
            if (!node.empty())
                throw ConfigError(name, "unknown section");
            const auto h = top.find(name);
            if (h == top.end())
                throw ConfigError(name, "unknown key");
            h->second(node.data(), name);
            continue;
        }
        for (const auto& [key, value] : node) {
            const std::string path = name + "." + key;
            if (!value.empty())
                throw ConfigError(path, "nested keys are not supported");
            const auto h = sec->second.find(key);
            if (h == sec->second.end())
                throw ConfigError(path, "unknown key");
            h->second(value.data(), path);
        }
    }
    validate(c, bc_given);
    return c;
}

Config load_config(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in)
        throw ConfigError("", "cannot read config file " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

std::string resolved_config(const Config& c)
{
    std::ostringstream os;
    os << "scenario = " << c.scenario << "\n"
       << "seed = " << c.seed << "\n\n"
       << "[mesh]\n"
       << "kind = " << c.mesh.kind << "\n"
       << "length = " << fmt(c.mesh.length) << "\n"
       << "nodes = " << c.mesh.nodes << "\n"
       << "nx = " << c.mesh.nx << "\n"
       << "ny = " << c.mesh.ny << "\n"
       << "profile = " << c.mesh.profile.str() << "\n"
       << "bc = " << to_string(c.mesh.bc) << "\n\n"
       << "[cellmap]\n"
       << "family = " << build_cell_map(c).name() << "\n"
       << "mode = " << (c.cellmap.mode == CellMesh::Mode::interval ? "interval" : "radial") << "\n"
       << "dim = " << c.cellmap.dim << "\n"
       << "nodes = " << c.cellmap.nodes << "\n"
       << "scale = " << c.cellmap.scale.str() << "\n"
       << "linear = " << c.cellmap.linear.str() << "\n"
       << "quadratic = " << c.cellmap.quadratic.str() << "\n\n"
       << "[physics]\n"
       << "problem = " << c.physics.problem << "\n"
       << "coupling = " << to_string(c.physics.coupling) << "\n"
       << "reaction = " << c.physics.reaction.str() << "\n"
       << "source = " << c.physics.source.str() << "\n"
       << "rho0 = " << fmt(c.physics.rho0) << "\n"
       << "convention = " << to_string(c.physics.convention) << "\n"
       << "shifted = " << (c.physics.shifted ? "true" : "false") << "\n"
       << "guard = " << fmt(c.physics.guard) << "\n\n"
       << "[initial]\n"
       << "u = " << c.initial.u << "\n"
       << "cells = " << c.initial.cells << "\n"
       << "regularity = " << c.initial.regularity << "\n\n"
       << "[time]\n"
       << "theta = " << fmt(c.time.theta) << "\n"
       << "dt = " << fmt(c.time.dt) << "\n"
       << "t_end = " << fmt(c.time.t_end) << "\n"
       << "newton = " << c.time.newton << "\n\n"
       << "[output]\n"
       << "cadence = " << c.output.cadence << "\n"
       << "export_operators = " << (c.output.export_operators ? "true" : "false") << "\n\n"
       << "[analysis]\n"
       << "eigen_count = " << c.analysis.eigen_count << "\n"
       << "tol = " << fmt(c.analysis.tol) << "\n"
       << "angles = " << join(c.analysis.angles) << "\n"
       << "radii = " << join(c.analysis.radii) << "\n"
       << "ladder = " << join(c.analysis.ladder) << "\n"
       << "manufactured = " << c.analysis.manufactured << "\n"
       << "decay_skip = " << fmt(c.analysis.decay_skip) << "\n";
    return os.str();
}

MacroMesh build_macro_mesh(const Config& c)
{
    if (c.mesh.kind == "strip")
        return build_strip_mesh(StripProfile(c.mesh.profile), c.mesh.nx, c.mesh.ny);
    BoundaryTag left = BoundaryTag::dirichlet;
    BoundaryTag right = BoundaryTag::dirichlet;
    if (c.mesh.bc == MacroBc::neumann)
        left = right = BoundaryTag::neumann;
    else if (c.mesh.bc == MacroBc::mixed)
        left = BoundaryTag::neumann;
    return build_interval_mesh(c.mesh.length, c.mesh.nodes, left, right);
}

CellMesh build_cell_mesh(const Config& c)
{
    return build_cell_mesh(c.cellmap.dim, c.cellmap.mode, c.cellmap.nodes);
}

CellMap build_cell_map(const Config& c)
{
    switch (c.cellmap.family) {
    case CellMap::Family::identity: return CellMap::identity();
    case CellMap::Family::scaled_ball: return CellMap::scaled_ball(c.cellmap.scale);
    case CellMap::Family::general_1d: return CellMap::general_1d(c.cellmap.linear, c.cellmap.quadratic);
    }
    return CellMap::identity();
}

std::shared_ptr<const CoupledOperator> build_operator(const Config& c)
{
    const MacroMesh mesh = build_macro_mesh(c);
    return std::make_shared<const CoupledOperator>(
        assemble_coupled(mesh, c.mesh.bc, build_cell_mesh(c), build_cell_map(c), c.physics.coupling));
}

TwoScaleState initial_state(const Config& c, const CoupledOperator& op)
{
    using std::numbers::pi;
    const MacroMesh& mesh = op.macro_mesh();
    const CellMesh& cell = op.cell_mesh();
    TwoScaleState w = op.zero_state();
    const CallExpr call = parse_call(c.initial.u);
    const bool strip = mesh.kind == MacroMesh::Kind::periodic_strip;
    double length = 0.0;
    for (double x : mesh.x)
        length = std::max(length, x);
    for (std::size_t k = 0; k < mesh.size(); ++k) {
        const auto ik = static_cast<Eigen::Index>(k);
        const double x = mesh.x[k];
        if (call.name == "zero")
            w.u(ik) = 0.0;
        else if (call.name == "bump")
            w.u(ik) = strip ? call.args[0] * std::cos(0.5 * pi * mesh.eta[k]) * (1.0 + 0.5 * std::cos(x))
                            : call.args[0] * std::sin(pi * x / length);
        else
            w.u(ik) = Coefficient::parse(c.initial.u).value(x);
    }
    const bool gravity = c.physics.problem == "gravity";
    if (gravity)
        w.u.array() += c.physics.rho0;

    const CallExpr cells = parse_call(c.initial.cells);
    const double a = cells.name == "bubble" ? cells.args[0] : 0.0;
    const bool detached = op.mode() == Coupling::detached;
    for (std::size_t k = 0; k < mesh.size(); ++k) {
        const auto ik = static_cast<Eigen::Index>(k);
        const double base = detached ? 0.0 : w.u(ik);
        for (std::size_t j = 0; j < cell.size(); ++j) {
            const double y = cell.nodes[j];
            w.cells(static_cast<Eigen::Index>(j), ik) = base + a * (1.0 - y * y);
        }
    }
    if (gravity && c.physics.shifted) {
        w.u.array() -= c.physics.rho0;
        w.cells.array() -= c.physics.rho0;
    }
    return w;
}

Scenario build_scenario(const Config& c, std::shared_ptr<const CoupledOperator> op)
{
    Scenario s;
    s.theta = c.time.theta;
    s.dt = c.time.dt;
    s.t_end = c.time.t_end;
    s.w0 = initial_state(c, *op);
    s.forcing = make_forcing(op->macro_mesh(), c.physics.reaction, c.physics.source);
    s.guard = c.physics.guard;
    s.cadence = c.output.cadence;
    s.op = std::move(op);
    return s;
}

GravityScenario build_gravity(const Config& c, std::shared_ptr<const CoupledOperator> op)
{
    GravityScenario s;
    s.rho0 = c.physics.rho0;
    s.shifted = c.physics.shifted;
    s.source = c.physics.source;
    s.convention = c.physics.convention;
    s.theta = c.time.theta;
    s.dt = c.time.dt;
    s.t_end = c.time.t_end;
    s.newton = c.time.newton;
    s.guard = c.physics.guard;
    s.cadence = c.output.cadence;
    s.w0 = initial_state(c, *op);
    s.op = std::move(op);
    return s;
}

} // namespace mmsim
