#include "vfc/graph.hpp"

#include <algorithm>
#include <queue>
#include <set>
#include <string>

namespace vfc {

Graph build_graph(int n_agents, const std::vector<std::pair<int, int>>& edges) {
  if (n_agents < 1) {
    throw InvalidEdge("build_graph: n_agents must be >= 1, got " +
                      std::to_string(n_agents));
  }
  Graph g;
  g.n_agents = n_agents;
  g.neighbors.resize(n_agents);

  std::set<std::pair<int, int>> seen;
  for (const auto& [a, b] : edges) {
    if (a == b) {
      throw InvalidEdge("build_graph: self-loop at node " + std::to_string(a));
    }
    if (a < 0 || b < 0 || a >= n_agents || b >= n_agents) {
      throw InvalidEdge("build_graph: edge (" + std::to_string(a) + "," +
                        std::to_string(b) + ") out of range [0," +
                        std::to_string(n_agents) + ")");
    }
    auto e = std::minmax(a, b);
    if (!seen.insert({e.first, e.second}).second) {
      throw InvalidEdge("build_graph: duplicate edge (" + std::to_string(a) +
                        "," + std::to_string(b) + ")");
    }
  }
  g.edges.assign(seen.begin(), seen.end());
  for (const auto& [i, j] : g.edges) {
    g.neighbors[i].push_back(j);
    g.neighbors[j].push_back(i);
  }
  for (auto& nb : g.neighbors) std::sort(nb.begin(), nb.end());
  return g;
}

Eigen::MatrixXd laplacian(const Graph& g) {
  const int n = g.n_agents;
  // Integer assembly keeps row sums exactly zero after conversion.
  Eigen::MatrixXi li = Eigen::MatrixXi::Zero(n, n);
  for (const auto& [i, j] : g.edges) {
    li(i, i) += 1;
    li(j, j) += 1;
    li(i, j) -= 1;
    li(j, i) -= 1;
  }
  return li.cast<double>();
}

LaplacianDecomposition decompose(const Graph& g) {
  const int n = g.n_agents;
  LaplacianDecomposition dec;
  dec.laplacian = laplacian(g);
  dec.r_matrix.resize(n, n - 1);
  dec.lambda.resize(n - 1);
  if (n == 1) return dec;  // empty spectrum, single node

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(dec.laplacian);
  const Eigen::VectorXd& vals = es.eigenvalues();   // ascending
  const Eigen::MatrixXd& vecs = es.eigenvectors();

  constexpr double kConnectivityTol = 1e-9;
  for (int m = 1; m < n; ++m) {
    if (vals(m) < kConnectivityTol) {
      throw NotConnected("decompose: Laplacian eigenvalue " +
                         std::to_string(vals(m)) +
                         " below 1e-9; graph is disconnected");
    }
    Eigen::VectorXd col = vecs.col(m);
    // Deterministic sign: first component with magnitude above tolerance
    // is made positive.
    for (int i = 0; i < n; ++i) {
      if (std::abs(col(i)) > kConnectivityTol) {
        if (col(i) < 0.0) col = -col;
        break;
      }
    }
    dec.r_matrix.col(m - 1) = col;
    dec.lambda(m - 1) = vals(m);
  }
  dec.lambda2 = dec.lambda(0);
  dec.lambdaN = dec.lambda(n - 2);
  return dec;
}

bool validate_connectivity(const Graph& g) {
  const int n = g.n_agents;
  if (n <= 1) return true;
  std::vector<char> visited(n, 0);
  std::queue<int> frontier;
  frontier.push(0);
  visited[0] = 1;
  int count = 1;
  while (!frontier.empty()) {
    int u = frontier.front();
    frontier.pop();
    for (int v : g.neighbors[u]) {
      if (!visited[v]) {
        visited[v] = 1;
        ++count;
        frontier.push(v);
      }
    }
  }
  return count == n;
}

Graph ring_graph(int n_agents) {
  std::vector<std::pair<int, int>> edges;
  if (n_agents == 2) {
    edges = {{0, 1}};
  } else if (n_agents >= 3) {
    for (int i = 0; i < n_agents; ++i) edges.push_back({i, (i + 1) % n_agents});
  }
  return build_graph(n_agents, edges);
}

Graph path_graph(int n_agents) {
  std::vector<std::pair<int, int>> edges;
  for (int i = 0; i + 1 < n_agents; ++i) edges.push_back({i, i + 1});
  return build_graph(n_agents, edges);
}

Graph complete_graph(int n_agents) {
  std::vector<std::pair<int, int>> edges;
  for (int i = 0; i < n_agents; ++i)
    for (int j = i + 1; j < n_agents; ++j) edges.push_back({i, j});
  return build_graph(n_agents, edges);
}

}  // namespace vfc
