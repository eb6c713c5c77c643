#pragma once

#include <Eigen/Dense>
#include <vector>

#include "vfc/graph.hpp"
#include "vfc/model.hpp"

namespace vfc {

/// Consensus/disagreement split of the stacked agent states:
/// chi_o is the average component (R^n), chi_tilde the stacked projection
/// onto the orthogonal complement of the consensus subspace (R^{(N-1)n}).
struct SyncCoords {
  Eigen::VectorXd chi_o;
  Eigen::VectorXd chi_tilde;
};

/// Same split for the stacked parameters: vartheta_o = (1/N) sum theta_i.
struct ParamCoords {
  Eigen::VectorXd vartheta_o;
  Eigen::VectorXd vartheta_tilde;
};

/// xi = chi_tilde - (1/k) (Lambda^{-1} (x) psi(chi_o,t)) vartheta_tilde.
struct XiCoord {
  Eigen::VectorXd xi;
};

/// Block-diagonal deviation operator: block i = psi(chi_o + r_i chi_tilde, t)
/// - psi(chi_o, t). Never materialized as a dense matrix; operator norm is
/// the max block norm.
struct TildePsi {
  std::vector<Eigen::MatrixXd> blocks;  // N blocks, each n x p

  /// Stacked product with theta (p x N columns) -> n x N columns.
  Eigen::MatrixXd apply(const Eigen::MatrixXd& theta) const;
  /// Transposed product with v (n x N columns) -> p x N columns.
  Eigen::MatrixXd apply_transpose(const Eigen::MatrixXd& v) const;
  double norm() const;  // max over blocks of operator 2-norm
};

SyncCoords to_sync_coords(const LaplacianDecomposition& dec, const Eigen::MatrixXd& x);
Eigen::MatrixXd from_sync_coords(const LaplacianDecomposition& dec, const SyncCoords& c);
ParamCoords to_param_coords(const LaplacianDecomposition& dec, const Eigen::MatrixXd& theta);
Eigen::MatrixXd from_param_coords(const LaplacianDecomposition& dec, const ParamCoords& c);

TildePsi tilde_psi(const RegressorModel& model, const Eigen::VectorXd& chi_o,
                   const Eigen::VectorXd& chi_tilde,
                   const LaplacianDecomposition& dec, double t);

/// Requires k > 0 (InvalidGain otherwise). psi_at_chi_o is psi(chi_o, t).
XiCoord xi_of(const LaplacianDecomposition& dec, const Eigen::VectorXd& chi_tilde,
              const Eigen::VectorXd& vartheta_tilde,
              const Eigen::MatrixXd& psi_at_chi_o, double k);

/// State of the network expressed in transformed coordinates.
struct TransformedState {
  Eigen::VectorXd chi_o;           // n
  Eigen::VectorXd chi_tilde;       // (N-1) n
  Eigen::VectorXd vartheta_o;      // p
  Eigen::VectorXd vartheta_tilde;  // (N-1) p
};

/// Right-hand side of the dynamics rewritten in (chi_o, chi_tilde,
/// vartheta_o, vartheta_tilde) coordinates. Test oracle only: the
/// untransformed network equations are the production path, and this
/// form exists to validate the coordinate algebra against them.
/// Requires a fully coupled model (no coupling mask).
TransformedState transformed_rhs(const RegressorModel& model,
                                 const LaplacianDecomposition& dec,
                                 const TransformedState& s, double t,
                                 const CouplingGains& gains);

/// Right-hand side of the xi dynamics after the second change of variables.
/// Test oracle, scalar state (n = 1) only.
Eigen::VectorXd xi_rhs(const RegressorModel& model, const LaplacianDecomposition& dec,
                       const TransformedState& s, double t, const CouplingGains& gains);

/// Reshape helpers between stacked disagreement vectors and their
/// (dim x (N-1)) matrix layout (column j = block j).
Eigen::MatrixXd unstack(const Eigen::VectorXd& v, int dim);
Eigen::VectorXd stack(const Eigen::MatrixXd& m);

}  // namespace vfc
