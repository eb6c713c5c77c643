#pragma once

#include <string>

#include "vfc/simulation.hpp"

namespace vfc {

/// Writes the trajectory with header
///   t, x_<agent>_<comp>.., theta_<agent>_<comp>.., chi_o_*, norm_chi_tilde,
///   vartheta_o_*, norm_vartheta_tilde, norm_xi, s_*, sync_err, param_err
/// with floats printed to 17 significant digits (lossless round trip).
void emit_csv(const Trajectory& traj, const std::string& path);

/// Reads a trajectory CSV back (recorded columns only).
Trajectory read_csv(const std::string& path);

struct PlotSelection {
  bool states = false;
  bool params = false;
  bool errors = false;

  static PlotSelection all() { return {true, true, true}; }
};

/// Standalone SVG: one panel per state component (N curves plus the blended
/// solution), one panel per parameter component (N curves), and one
/// log-scale panel with the error norms. EmptySelection if no group chosen.
void emit_plot(const Trajectory& traj, const std::string& path,
               const PlotSelection& sel);

}  // namespace vfc
