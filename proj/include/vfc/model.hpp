#pragma once

#include <Eigen/Dense>
#include <functional>
#include <string>
#include <vector>

#include "vfc/errors.hpp"
#include "vfc/graph.hpp"

namespace vfc {

/// Node vector field in linearly parameterized form:
///   x_i' = psi(x_i, t) theta_i + psi_o(x_i, t) + coupling.
///
/// psi maps (x in R^n, t) to an n x p matrix; psi_o (optional) to R^n.
/// Analytic partials are optional; evaluation falls back to central finite
/// differences with step h = max(1e-6, 1e-6 * ||x||). rho, when supplied,
/// is a claimed envelope for ||psi|| and its partials as a function of
/// ||x||; it is checked by sampling, never assumed.
///
/// All callables must be pure: evaluation is const and thread-safe.
struct RegressorModel {
  int state_dim = 1;  // n
  int param_dim = 1;  // p

  std::function<Eigen::MatrixXd(const Eigen::VectorXd&, double)> psi;
  std::function<Eigen::VectorXd(const Eigen::VectorXd&, double)> psi_o;  // optional

  // Optional analytic partials: d_psi_dx[j] = d psi / d x_j (each n x p).
  std::function<std::vector<Eigen::MatrixXd>(const Eigen::VectorXd&, double)> d_psi_dx;
  std::function<Eigen::MatrixXd(const Eigen::VectorXd&, double)> d_psi_dt;

  std::function<double(double)> rho;  // optional envelope rho(||x||)

  // Which state components receive diffusive coupling. Empty = all.
  std::vector<bool> coupling_mask;

  std::string name;

  bool couples(int component) const {
    return coupling_mask.empty() || coupling_mask[component];
  }

  Eigen::MatrixXd psi_at(const Eigen::VectorXd& x, double t) const;
  Eigen::VectorXd psi_o_at(const Eigen::VectorXd& x, double t) const;
  /// Analytic partials if present, otherwise central finite differences.
  std::vector<Eigen::MatrixXd> d_psi_dx_at(const Eigen::VectorXd& x, double t) const;
  Eigen::MatrixXd d_psi_dt_at(const Eigen::VectorXd& x, double t) const;

  /// Jacobian of s -> psi(s, t) theta, an n x n matrix.
  Eigen::MatrixXd vector_field_jacobian(const Eigen::VectorXd& x, double t,
                                        const Eigen::VectorXd& theta) const;
};

/// Immutable snapshot of the network: column i of x (n x N) is agent i's
/// state, column i of theta (p x N) its parameter vector.
struct NetworkState {
  Eigen::MatrixXd x;      // n x N
  Eigen::MatrixXd theta;  // p x N
  double t = 0.0;

  int n_agents() const { return static_cast<int>(x.cols()); }
  int state_dim() const { return static_cast<int>(x.rows()); }
  int param_dim() const { return static_cast<int>(theta.rows()); }
};

/// Coupling gain k and adaptation gain g. The theory fixes g = 1/sqrt(k);
/// g = 0 disables adaptation, k = 0 decouples the network entirely.
struct CouplingGains {
  double k = 1.0;
  double g = 0.0;

  static double auto_g(double k) { return k > 0.0 ? 1.0 / std::sqrt(k) : 0.0; }
};

/// Time derivative of a NetworkState.
struct NetworkDerivative {
  Eigen::MatrixXd dx;      // n x N
  Eigen::MatrixXd dtheta;  // p x N
};

/// u_i = k * sum_{j in N(i)} (x_j - x_i), returned as n x N columns.
/// The sum over all agents is zero up to rounding.
Eigen::MatrixXd coupling_input(const Graph& g, const Eigen::MatrixXd& x, double k);

/// x_i' = psi(x_i,t) theta_i + psi_o(x_i,t) + u_i (mask applied to u).
Eigen::MatrixXd state_rhs(const RegressorModel& model, const Graph& g,
                          const NetworkState& s, const CouplingGains& gains);

/// theta_i' = g * psi(x_i,t)^T u_i, with the same coupling signal u_i.
Eigen::MatrixXd param_rhs(const RegressorModel& model, const Graph& g,
                          const NetworkState& s, const CouplingGains& gains);

/// Joint right-hand side of the coupled state + adaptation dynamics.
NetworkDerivative network_rhs(const RegressorModel& model, const Graph& g,
                              const NetworkState& s, const CouplingGains& gains);

/// psi(x,t) = [-x, sin t], psi_o = 0, n = 1, p = 2.
RegressorModel scalar_linear_sine();

/// Companion-form Van der Pol oscillator: per-agent state (z, y) with
/// z' = -z + y uncoupled, and the y dynamics written in regressor form
/// with theta = (mu, nu) and z entering psi as a time-like signal.
/// Only y receives coupling.
RegressorModel van_der_pol_companion();

/// Lookup by the names accepted in scenario configs.
RegressorModel model_by_name(const std::string& name);

}  // namespace vfc
