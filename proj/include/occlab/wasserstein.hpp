#pragma once

#include "occlab/invariant.hpp"
#include "occlab/network_simplex.hpp"
#include "occlab/sde.hpp"
#include "occlab/stats.hpp"

#include <cstdint>
#include <vector>

namespace occlab {

inline constexpr Eigen::Index kExactCellCap = 4096;

/// Geodesic distance on the unit torus: Euclidean norm of the wrapped componentwise gaps.
double torus_distance(const Point& x, const Point& y);
double torus_distance(const double* x, const double* y, int dim);

/// Sparse coupling between two measures on the same cell grid.
struct TransportPlan {
  DiscreteMeasure source, target;
  std::vector<TransportSolution::Flow> entries;  // cell → cell mass
  double cost = 0.0;

  Eigen::VectorXd row_sums() const;
  Eigen::VectorXd col_sums() const;
  Eigen::MatrixXd dense() const;
};

struct W1Result {
  double cost = 0.0;
  TransportPlan plan;
  double dual_value = 0.0;
  double duality_gap = 0.0;     // cost − dual value
  double dual_violation = 0.0;  // max(u_i + v_j − d_ij, 0)
  long long pivots = 0;
};

/// Pairwise geodesic distances between the cell centers of m^d grids.
Eigen::MatrixXd cell_distances(int dim, int m, const std::vector<Eigen::Index>& rows,
                               const std::vector<Eigen::Index>& cols);

/// Exact W₁ by network simplex. Mass shared by both measures stays in place (optimal for a
/// metric cost), so only cells with a surplus or a deficit enter the solver.
W1Result w1_exact(const DiscreteMeasure& nu, const DiscreteMeasure& rho, Eigen::Index cap = kExactCellCap);

struct SinkhornOptions {
  double epsilon = 0.005;  // final regularization, in units of the ground distance
  double scaling = 0.7;    // ε-scaling factor per stage
  int iterations_per_stage = 40;
  int final_iterations = 2000;
  double tol = 1e-9;        // marginal violation to stop the final stage
  double bracket = 0.05;    // required (upper − lower) / lower
};

struct EntropicResult {
  double estimate = 0.0;  // debiased Sinkhorn divergence
  double lower = 0.0;     // dual bound from the c-transform of the entropic potential
  double upper = 0.0;     // cost of the entropic plan rounded onto the exact marginals
  double epsilon = 0.0;
  int iterations = 0;
  bool bracket_ok = false;
};

/// Entropic fallback for grids above the exact-solver cap.
EntropicResult w1_sinkhorn(const DiscreteMeasure& nu, const DiscreteMeasure& rho,
                           const SinkhornOptions& opt = {});

/// sup|∇φ| on a refined grid.
double lipschitz_constant(const PeriodicField& phi, int refine = 4);

struct DualBound {
  double value = 0.0;
  int best = -1;
  std::vector<double> lipschitz;  // certified constants before rescaling
};

/// max over potentials of |∫φ dν − ∫φ dρ| after rescaling each φ to be 1-Lipschitz.
DualBound w1_dual_bound(const DiscreteMeasure& nu, const DiscreteMeasure& rho,
                        const std::vector<PeriodicField>& potentials);

/// Exact cell averages of the density on the m^d cells.
DiscreteMeasure discretize_density(const InvariantMeasure& mu, int m);

struct RateConfig {
  DriftSpec drift;
  DiffusivitySpec diffusivity;
  std::vector<double> T;
  double h = 0.01;
  int m = 16;
  int replications = 50;
  std::uint64_t seed = 0;
  Point x0;  // defaults to the origin
  int threads = 1;
  double bias_fraction = 0.2;
  int bias_replications = 10;
  double invariant_tol = 1e-10;
};

struct RateRow {
  double T = 0.0;
  double mean = 0.0;
  double sd = 0.0;
  int replications = 0;
};

struct RateResult {
  int m = 0;
  std::vector<RateRow> table;
  std::vector<std::vector<double>> w1;  // [T index][replication]
  RateFit fit;
  double bias_estimate = 0.0;  // |E W₁(m) − E W₁(m/2)| at the largest T
  bool bias_ok = false;
  int reruns = 0;
};

/// √T-rate experiment: for each T and replication, simulate from stream (seed, rep),
/// histogram the path and compute W₁ to the discretized invariant density.
RateResult rate_experiment(const RateConfig& config);

}  // namespace occlab
