#pragma once

#include <Eigen/Dense>
#include <array>
#include <functional>
#include <optional>
#include <vector>

#include "vfc/graph.hpp"
#include "vfc/model.hpp"
#include "vfc/simulation.hpp"

namespace vfc {

/// Persistent-excitation window requirement: the sliding Gram integral of the
/// regressor over windows of length tau must stay between c1 I and c2 I,
/// for reference solutions started inside the M_x ball.
struct PESpec {
  double tau = 0.0;
  double c1 = 0.0;
  double c2 = 0.0;
  double M_x = 0.0;
};

/// Measures a PESpec along reference solutions from ||s0|| = M_x for each
/// sample parameter: c1 is the worst lower Gram bound across samples, c2
/// the largest upper one. Throws InvalidBounds when excitation is lost
/// (c1 <= 0) for some sample.
PESpec measure_pe(const RegressorModel& model,
                  const std::vector<Eigen::VectorXd>& theta_star_samples,
                  double M_x, double tau, double horizon, double dt);

struct PEGramReport {
  std::vector<double> window_start;
  std::vector<double> min_eig;
  std::vector<double> max_eig;
  double c1_est = 0.0;  // min over windows of the smallest Gram eigenvalue
  double c2_est = 0.0;  // max over windows of the largest Gram eigenvalue
  double tau_actual = 0.0;
};

/// Sliding-window Gram integrals of psi^T psi by trapezoidal quadrature on
/// the sampling grid. The window must span at least 10 grid steps and fit
/// inside the series (WindowTooLong otherwise).
PEGramReport pe_gram(const std::vector<Eigen::MatrixXd>& psi_series, double dt,
                     double tau);

/// Contraction certificate sampled on a grid: with the identity metric,
/// the margin is c = -max over (theta, s, t) of the largest eigenvalue of
/// the symmetric part of the Jacobian of s -> psi(s,t) theta.
struct ContractionReport {
  double c = 0.0;
  bool contractive = false;
  double worst_mu = 0.0;
  Eigen::VectorXd worst_theta;
  Eigen::VectorXd worst_state;
  double worst_t = 0.0;
  std::size_t samples = 0;
};

ContractionReport contraction_margin(const RegressorModel& model,
                                     const std::vector<Eigen::VectorXd>& theta_samples,
                                     const std::vector<Eigen::VectorXd>& state_grid,
                                     const std::vector<double>& t_grid);

/// A validated parameter set with its sampled margin and metric (identity
/// on the scalar theory path).
struct ContractionSpec {
  std::vector<Eigen::VectorXd> theta_star_set;
  double c = 0.0;
  Eigen::MatrixXd metric;
};

/// Samples the margin over the grids and packages the certified set;
/// throws InvalidBounds when the sampled margin is not positive.
ContractionSpec certify_contraction(const RegressorModel& model,
                                    const std::vector<Eigen::VectorXd>& theta_samples,
                                    const std::vector<Eigen::VectorXd>& state_grid,
                                    const std::vector<double>& t_grid);

/// State-transition matrix Phi(t1, t0) of w' = F(t) w by RK4.
Eigen::MatrixXd state_transition(const std::function<Eigen::MatrixXd(double)>& F,
                                 double t0, double t1, double dt);

/// Phi(t0 + j dt, t0) for j = 0..steps, one forward integration.
struct TransitionPath {
  double t0 = 0.0;
  double dt = 0.0;
  std::vector<Eigen::MatrixXd> phi;
};

TransitionPath transition_path(const std::function<Eigen::MatrixXd(double)>& F,
                               double t0, double t1, double dt);

/// Exponential-decay certificate for the parameter-error transition matrix:
/// intermediate constants (kappa1, kappa2, m_hat, b_hat) for the nominal
/// trajectory, inflated to (m, b) for perturbed trajectories started within
/// the M_x ball. When b_hat >= c the certificate clamps b_hat to c/2 and
/// records the clamp.
struct DecayBounds {
  double kappa1 = 0.0;
  double kappa2 = 0.0;
  double m_hat = 0.0;
  double b_hat = 0.0;
  double m = 0.0;
  double b = 0.0;
  double M_psi = 0.0;
  double L_psi = 0.0;
  double c = 0.0;
  bool b_hat_clamped = false;
};

DecayBounds decay_bounds(double c1, double c2, double tau, double M_psi, double c,
                         double L_psi, double M_x);

/// Uniform eigenvalue bounds for the P matrix: lambda_m = 1/(2 M_psi^2),
/// lambda_M = m^2 / (2 b).
struct PBounds {
  double lambda_m = 0.0;
  double lambda_M = 0.0;
};

PBounds p_bounds(const DecayBounds& b);

struct TransitionEnvelopeReport {
  double m = 0.0, b = 0.0, g = 0.0;
  double max_ratio = 0.0;  // max ||Phi(t1,t0)|| / (m e^{-g b (t1-t0)})
  std::size_t n_pairs = 0;
  std::size_t violations = 0;
};

/// Checks the certified envelope m e^{-g b dt} against measured transition
/// matrices of w' = -g psi^T psi w along reference solutions from each s0.
/// Violations are reported, not thrown.
TransitionEnvelopeReport transition_envelope_certificate(const RegressorModel& model,
                                const Eigen::VectorXd& theta_star,
                                const std::vector<Eigen::VectorXd>& s0_list,
                                double g, double horizon, const DecayBounds& bounds,
                                int n_t0 = 20, int n_dt = 20, double fine_dt = 1e-3);

/// P(t0) = g * integral over the path of Phi^T Phi, trapezoid rule, with the
/// certified tail bound for the truncated remainder reported as an interval
/// radius. Requires horizon - t0 >= 5/(g b) (TailTooLarge otherwise).
struct PMatrixResult {
  Eigen::MatrixXd value;
  double tail_bound = 0.0;
  double min_eig = 0.0;
  double max_eig = 0.0;
  bool within_bounds = false;  // eigenvalues inside [lambda_m, lambda_M] + tail slack
};

PMatrixResult p_matrix(const TransitionPath& path, double g, double horizon_T,
                       const DecayBounds& bounds);

/// P(t) on a uniform grid by backward integration of the Lyapunov ODE
/// P' = -P F - F^T P - g I from a terminal guess. psi_half_grid samples the
/// regressor at spacing dt/2 over [t0, t0 + (len-1) dt/2] so RK4 stages land
/// on sample points; the caller pads the horizon so terminal contamination
/// has decayed over the window of interest.
std::vector<Eigen::MatrixXd> p_matrix_path(
    const std::vector<Eigen::MatrixXd>& psi_half_grid, double dt, double g,
    const Eigen::MatrixXd& terminal_guess);

/// V = (k^2/2) xi^T xi + (1/2) vartheta_tilde^T (I (x) P) vartheta_tilde.
double lyapunov_value(const Eigen::VectorXd& xi, const Eigen::VectorXd& vartheta_tilde,
                      const Eigen::MatrixXd& P, double k);

struct DecayReport {
  bool skipped = false;  // adaptation disabled
  std::size_t n_checked = 0;
  std::size_t violations = 0;
  double fraction_violating = 0.0;
  double tol = 0.0;
  double worst_excess = 0.0;  // max (Vdot - bound)/(1 + V)
};

/// Finite-difference check of the Lyapunov decay inequality
/// V' <= -(g / (6 lambda_M)) V + tol (1 + V) along a recorded trajectory,
/// from t_start on. P_path must align with the recorded grid.
DecayReport decay_check(const Trajectory& traj, const LaplacianDecomposition& dec,
                        const RegressorModel& model,
                        const std::vector<Eigen::MatrixXd>& P_path,
                        const CouplingGains& gains, const PBounds& bounds,
                        double t_start);

/// Everything the boundedness argument needs for one problem instance.
struct ProblemInstance {
  int N = 0;
  double lambda2 = 0.0, lambdaN = 0.0;
  double M_x = 0.0, M_theta = 0.0, delta = 0.0;
  std::function<double(double)> rho;
  double c = 0.0;                 // contraction margin
  double c1 = 0.0, c2 = 0.0, tau = 0.0;
  double L_psi = 0.0;
  double M_tilde_psi = 0.0, L_tilde_psi = 0.0;  // sampled estimates
};

/// Full proof-constant ledger: trajectory bounds, deviation bounds, the
/// C-constants, and the coupling thresholds. Implicit thresholds are solved
/// as the smallest k >= 1 from which the corresponding display inequality
/// holds for all larger k, searched over [1, 1e12]; entries with no such k
/// in range are left empty (infeasible). The `extended` fields repeat the
/// search over [1, 1e60] as a diagnostic.
struct ProofConstants {
  double M_s = 0.0, M_psi = 0.0;
  double delta = 0.0, delta_o = 0.0, T0 = 0.0;
  double G_chi_o = 0.0, G_chi_tilde = 0.0, G_vartheta_o = 0.0, G_vartheta_tilde = 0.0;
  double G_theta = 0.0;
  double M_tilde_psi = 0.0, L_tilde_psi = 0.0;
  double M_dpsi = 0.0, M_xi = 0.0;
  DecayBounds decay;
  double lambda_m = 0.0, lambda_M = 0.0;
  std::array<double, 12> C{};  // C[0] = C1, ..., C[11] = C12
  std::array<std::optional<double>, 10> k_thresholds{};
  std::optional<double> k_star;
  std::array<std::optional<double>, 10> k_thresholds_extended{};
  std::optional<double> k_star_extended;
};

ProofConstants proof_constants(const ProblemInstance& prob);

/// delta_o = min{delta, c delta/(2 M_psi), c/(16 lambda_M M_psi^2 L_psi),
/// c/(2 L_psi)}; exposed separately so the arithmetic is testable with
/// injected bounds.
double delta_o_formula(double delta, double c, double M_psi, double lambda_M,
                       double L_psi);

/// T0 = (delta_o/2) / ((M_psi + M_tilde_psi) lambda_N G_chi_tilde).
double T0_formula(double delta_o, double M_psi, double M_tilde_psi, double lambdaN,
                  double G_chi_tilde);

/// Least-squares affine fit of log y over the trailing fraction of the
/// series; returns the decay rate (-slope) and intercept.
struct ExpFit {
  double rate = 0.0;
  double intercept = 0.0;
  std::size_t n_points = 0;
};

ExpFit fit_exp_rate(const std::vector<double>& t, const std::vector<double>& y,
                    double tail_fraction);

/// Sampled estimates of the deviation-operator bounds over the trajectory
/// box |chi_o| <= G_chi_o, ||chi_tilde|| <= G_chi_tilde.
struct TildePsiBounds {
  double M_tilde_psi = 0.0;
  double L_tilde_psi = 0.0;
  std::size_t samples = 0;
};

TildePsiBounds sample_tilde_psi_bounds(const RegressorModel& model,
                                       const LaplacianDecomposition& dec,
                                       double G_chi_o, double G_chi_tilde,
                                       const std::vector<double>& t_grid,
                                       int n_chi_o = 21, int n_mag = 8, int n_dir = 16,
                                       unsigned seed = 12345);

/// Worst margin of the claimed envelope rho over a sampling grid:
/// min over samples of rho(||s||) - max{||psi||, ||dpsi/ds||, ||dpsi/dt||}.
/// Nonnegative = envelope holds on the grid.
double rho_envelope_margin(const RegressorModel& model,
                           const std::vector<Eigen::VectorXd>& state_grid,
                           const std::vector<double>& t_grid);

}  // namespace vfc
