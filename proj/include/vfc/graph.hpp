#pragma once

#include <Eigen/Dense>
#include <utility>
#include <vector>

#include "vfc/errors.hpp"

namespace vfc {

/// Undirected simple graph on agents 0..N-1. Edges are stored once,
/// normalized as (i, j) with i < j, and queried symmetrically.
struct Graph {
  int n_agents = 0;
  std::vector<std::pair<int, int>> edges;      // normalized, sorted
  std::vector<std::vector<int>> neighbors;     // adjacency lists

  int degree(int i) const { return static_cast<int>(neighbors[i].size()); }
};

/// Spectral decomposition of the graph Laplacian: L = R diag(lambda) R^T
/// with R^T R = I and R^T 1 = 0. lambda holds the N-1 nonzero eigenvalues
/// in ascending order; lambda2/lambdaN are its extremes (0 when N = 1).
struct LaplacianDecomposition {
  Eigen::MatrixXd laplacian;   // N x N
  Eigen::MatrixXd r_matrix;    // N x (N-1)
  Eigen::VectorXd lambda;      // N-1, ascending, all > 0
  double lambda2 = 0.0;
  double lambdaN = 0.0;

  int n_agents() const { return static_cast<int>(laplacian.rows()); }
  /// i-th row of R as a row vector (1 x (N-1)).
  Eigen::RowVectorXd row(int i) const { return r_matrix.row(i); }
};

/// Validates and normalizes the edge list. Self-loops, out-of-range
/// endpoints, and duplicate edges are rejected with InvalidEdge.
Graph build_graph(int n_agents, const std::vector<std::pair<int, int>>& edges);

/// L = D - A, assembled in integer arithmetic so row sums are exactly zero.
Eigen::MatrixXd laplacian(const Graph& g);

/// Eigendecomposition of L restricted to the complement of span{1_N}.
/// Column signs are fixed so the first nonzero component is positive.
/// Throws NotConnected if any retained eigenvalue is below 1e-9.
LaplacianDecomposition decompose(const Graph& g);

/// Connectivity by breadth-first search (non-spectral route).
bool validate_connectivity(const Graph& g);

/// Named topologies used by scenario configs.
Graph ring_graph(int n_agents);
Graph path_graph(int n_agents);
Graph complete_graph(int n_agents);

}  // namespace vfc
