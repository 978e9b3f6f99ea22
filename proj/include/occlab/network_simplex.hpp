#pragma once

#include <Eigen/Core>

#include <vector>

namespace occlab {

/// Balanced transportation problem min Σ c_ij x_ij, Σ_j x_ij = a_i, Σ_i x_ij = b_j, x ≥ 0,
/// on the complete bipartite graph, solved by primal network simplex with block-search
/// pivoting and a strongly feasible spanning tree (after LEMON's NetworkSimplex).
struct TransportSolution {
  struct Flow {
    int from = 0;
    int to = 0;
    double mass = 0.0;
  };
  std::vector<Flow> flows;  // positive basic flows
  double cost = 0.0;
  /// Dual potentials with u_i + v_j ≤ c_ij; equality on basic arcs.
  Eigen::VectorXd u, v;
  double dual_value = 0.0;      // Σ a_i u_i + Σ b_j v_j
  double max_violation = 0.0;   // max(u_i + v_j − c_ij, 0)
  long long pivots = 0;
};

/// `cost` is a × b row-major (rows = sources). a and b must have equal totals up to 1e−12 relative.
TransportSolution solve_transport(const Eigen::VectorXd& a, const Eigen::VectorXd& b,
                                  const Eigen::MatrixXd& cost);

}  // namespace occlab
