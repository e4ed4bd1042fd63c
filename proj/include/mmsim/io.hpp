#pragma once

// Plain-text outputs. Floats are written with 17 significant digits and a
// fixed column order so runs can be compared byte for byte.

#include "mmsim/analysis.hpp"
#include "mmsim/gravity.hpp"
#include "mmsim/operators.hpp"
#include "mmsim/solver.hpp"

#include <Eigen/Sparse>

#include <filesystem>
#include <fstream>
#include <iosfwd>

namespace mmsim {

std::ofstream open_output(const std::filesystem::path& path);

/// t,norm_u,norm_Yg,S,min_u,max_u
void write_trajectory_csv(std::ostream& os, const Trajectory& tr);
/// Macro table (index x y u) followed by the cell table (node j y U).
void write_snapshot(std::ostream& os, const CoupledOperator& op, const TwoScaleState& w, std::size_t step, double t);
/// Matrix Market coordinate format.
void write_coordinate_matrix(std::ostream& os, const Eigen::SparseMatrix<double>& m);
/// t followed by u at every Γ₀ node.
void write_gamma0_csv(std::ostream& os, const GravityRun& run);
void write_spectrum(std::ostream& os, const SpectralReport& rep);
/// re,im,abs,norm,norm_times_abs,iterations,residual,converged
void write_sector_csv(std::ostream& os, const SectorProbe& probe);
/// study,nodes,h,error,order
void write_convergence_csv(std::ostream& os, const std::vector<ConvergenceReport>& reports);

} // namespace mmsim
