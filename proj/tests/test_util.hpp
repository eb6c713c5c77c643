#pragma once

#include <Eigen/Dense>
#include <random>
#include <set>
#include <utility>
#include <vector>

#include "vfc/graph.hpp"

namespace vfc_test {

// Deterministic uniform double in [lo, hi) from raw engine bits, so tests
// do not depend on libstdc++'s distribution implementations.
inline double uniform(std::mt19937_64& rng, double lo, double hi) {
  const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
  return lo + (hi - lo) * u;
}

inline int uniform_int(std::mt19937_64& rng, int lo, int hi) {  // inclusive
  return lo + static_cast<int>(rng() % static_cast<unsigned long long>(hi - lo + 1));
}

inline Eigen::VectorXd random_vector(std::mt19937_64& rng, int n, double lo, double hi) {
  Eigen::VectorXd v(n);
  for (int i = 0; i < n; ++i) v(i) = uniform(rng, lo, hi);
  return v;
}

inline Eigen::MatrixXd random_matrix(std::mt19937_64& rng, int r, int c, double lo,
                                     double hi) {
  Eigen::MatrixXd m(r, c);
  for (int j = 0; j < c; ++j) m.col(j) = random_vector(rng, r, lo, hi);
  return m;
}

// Random graph with the given edge probability; may be disconnected.
inline vfc::Graph random_graph(std::mt19937_64& rng, int n, double edge_prob) {
  std::vector<std::pair<int, int>> edges;
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      if (uniform(rng, 0.0, 1.0) < edge_prob) edges.push_back({i, j});
    }
  }
  return vfc::build_graph(n, edges);
}

// Random connected graph: random spanning tree plus extra random edges.
inline vfc::Graph random_connected_graph(std::mt19937_64& rng, int n,
                                         double extra_edge_prob = 0.3) {
  std::vector<int> order(n);
  for (int i = 0; i < n; ++i) order[i] = i;
  for (int i = n - 1; i > 0; --i) std::swap(order[i], order[uniform_int(rng, 0, i)]);
  std::vector<std::pair<int, int>> edges;
  for (int i = 1; i < n; ++i) {
    edges.push_back({order[i], order[uniform_int(rng, 0, i - 1)]});
  }
  std::set<std::pair<int, int>> seen;
  for (auto& [a, b] : edges) {
    if (a > b) std::swap(a, b);
    seen.insert({a, b});
  }
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      if (seen.count({i, j})) continue;
      if (uniform(rng, 0.0, 1.0) < extra_edge_prob) seen.insert({i, j});
    }
  }
  return vfc::build_graph(
      n, std::vector<std::pair<int, int>>(seen.begin(), seen.end()));
}

}  // namespace vfc_test
