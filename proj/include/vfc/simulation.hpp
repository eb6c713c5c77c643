#pragma once

#include <Eigen/Dense>
#include <functional>
#include <optional>
#include <vector>

#include "vfc/graph.hpp"
#include "vfc/model.hpp"
#include "vfc/transforms.hpp"

namespace vfc {

/// Fixed-step integration setup. Classical RK4 is the only method: the
/// coupling-induced stiffness is known a priori (fast eigenvalue -k lambda_N),
/// so the guard dt <= 0.5/(k lambda_N) replaces adaptive stepping and keeps
/// runs deterministic and diff-able.
struct IntegratorConfig {
  double dt = 1e-2;
  double t_end = 10.0;
  bool stiffness_guard = true;
};

/// One classical RK4 step; throws NumericalBlowup on a non-finite stage.
Eigen::VectorXd rk4_step(
    const std::function<Eigen::VectorXd(double, const Eigen::VectorXd&)>& f,
    const Eigen::VectorXd& y, double t, double dt);

/// A sampled vector-valued signal on a uniform grid.
struct Series {
  std::vector<double> times;
  std::vector<Eigen::VectorXd> values;

  std::size_t size() const { return times.size(); }
};

struct SimulateOptions {
  int record_every = 1;        // recording stride in integration steps
  bool with_blended = true;    // co-integrate s(t) from mean initial state
  bool with_reference = false; // co-integrate the constant-parameter reference
};

/// Time-indexed record of a network run. All recorded series share the
/// grid in `times`. Sup-norms that must be watched at every integration
/// step (not just recorded ones) live in the full-resolution stats.
struct Trajectory {
  int n_agents = 0, state_dim = 0, param_dim = 0;
  double k = 0.0, g = 0.0;
  double dt = 0.0;
  std::size_t total_steps = 0;

  std::vector<double> times;
  std::vector<Eigen::MatrixXd> x;      // n x N per record
  std::vector<Eigen::MatrixXd> theta;  // p x N per record
  std::vector<Eigen::VectorXd> chi_o;
  std::vector<double> norm_chi_tilde;
  std::vector<Eigen::VectorXd> vartheta_o;
  std::vector<double> norm_vartheta_tilde;
  std::vector<double> norm_xi;  // NaN when k = 0 (coordinate undefined)
  std::vector<Eigen::VectorXd> s;      // blended solution (empty if disabled)
  std::vector<Eigen::VectorXd> s_ref;  // constant-parameter reference (optional)
  std::vector<double> sync_err;   // max_i ||x_i - s||
  std::vector<double> param_err;  // max_i ||theta_i - vartheta_o||

  // Full-resolution statistics over every integration step.
  double sup_mean_drift = 0.0;      // sup_t ||vartheta_o(t) - vartheta_o(0)||
  double sup_norm_chi_tilde = 0.0;  // sup_t ||chi_tilde(t)||

  std::size_t records() const { return times.size(); }
};

/// Integrates the coupled state + adaptation dynamics on a fixed grid.
/// Throws StiffnessGuard when dt violates the guard, NumericalBlowup (with
/// the partial trajectory attached) when a non-finite value appears.
Trajectory simulate(const RegressorModel& model, const Graph& graph,
                    const NetworkState& initial, const CouplingGains& gains,
                    const IntegratorConfig& cfg, const SimulateOptions& opts = {});

/// Integrates s' = psi(s,t) vartheta_o(t) with the recorded mean-parameter
/// series (aligned with the cfg grid; linear interpolation at RK4 stages).
Series blended_trajectory(const RegressorModel& model,
                          const std::vector<Eigen::VectorXd>& vartheta_series,
                          const Eigen::VectorXd& s0, const IntegratorConfig& cfg);

/// Constant-parameter variant of the blended dynamics.
Series blended_trajectory(const RegressorModel& model,
                          const Eigen::VectorXd& vartheta_const,
                          const Eigen::VectorXd& s0, const IntegratorConfig& cfg);

/// Integrates the reference system s' = psi(s,t) theta_star.
Series reference_trajectory(const RegressorModel& model,
                            const Eigen::VectorXd& theta_star,
                            const Eigen::VectorXd& s0, const IntegratorConfig& cfg);

}  // namespace vfc
