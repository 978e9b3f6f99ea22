#include "occlab/invariant.hpp"

#include "occlab/errors.hpp"
#include "occlab/krylov.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

namespace occlab {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

double rms(const Eigen::VectorXd& v) { return v.norm() / std::sqrt(double(v.size())); }

struct Run {
  Eigen::VectorXd mu;
  double residual = 0.0;
  int iterations = 0;
  std::vector<double> history;
};

Run inverse_iteration(const GeneratorOperator& Ls, Eigen::VectorXd mu, double tol,
                      const InvariantOptions& opt) {
  const Grid& g = Ls.grid();
  const double scale = Ls.diffusivity().mean_diffusion;
  const double c = opt.shift_factor * kTwoPi * kTwoPi * scale;
  const GridTables& t = tables(g);

  auto A = [&](const Eigen::VectorXd& v) -> Eigen::VectorXd { return Ls.apply_values(v) - c * v; };
  auto M = [&](const Eigen::VectorXd& r) -> Eigen::VectorXd {
    Eigen::VectorXcd h = grid_to_coeffs(g, r);
    for (Eigen::Index i = 0; i < h.size(); ++i)
      h[i] = t.band[i] ? h[i] / (-kTwoPi * kTwoPi * scale * double(t.k2[i]) - c) : 0.0;
    return coeffs_to_grid(g, h);
  };

  Run run;
  mu /= mu.mean();
  KrylovOptions ko;
  ko.tol = 0.1 * tol * std::sqrt(double(g.size()));
  ko.max_iterations = opt.max_inner;
  for (int outer = 0; outer < opt.max_outer; ++outer) {
    const KrylovResult kr = gmres(A, M, Eigen::VectorXd(-c * mu), mu, ko);
    mu = kr.x / kr.x.mean();
    run.iterations = outer + 1;
    run.residual = rms(Ls.apply_values(mu));
    run.history.push_back(run.residual);
    if (run.residual <= tol) {
      run.mu = std::move(mu);
      return run;
    }
  }
  std::ostringstream os;
  os << "invariant density did not converge in " << opt.max_outer
     << " outer iterations; residual history:";
  for (double r : run.history) os << ' ' << r;
  throw NumericalFailure(os.str());
}

}  // namespace

InvariantMeasure uniform_measure(const Grid& g) {
  InvariantMeasure m;
  m.density = PeriodicField::constant(g, 1.0);
  return m;
}

InvariantMeasure solve_invariant(const GeneratorOperator& adjoint, double tol,
                                 const InvariantOptions& opt) {
  if (adjoint.kind() != OperatorKind::adjoint)
    throw InvalidArgument("solve_invariant expects the adjoint operator L*");
  if (!(tol > 0.0)) throw InvalidArgument("solve_invariant: tol must be > 0");
  const Grid& g = adjoint.grid();

  Run run = inverse_iteration(adjoint, Eigen::VectorXd::Ones(g.size()), tol, opt);

  for (Eigen::Index i = 0; i < run.mu.size(); ++i) {
    if (run.mu[i] >= 0.0) continue;
    if (run.mu[i] > -1e-10) {
      run.mu[i] = 0.0;
      continue;
    }
    std::ostringstream os;
    os << "invariant density is negative (" << run.mu[i] << ") at grid node " << i << " x = (";
    const Point x = g.node(i);
    for (int a = 0; a < g.dim; ++a) os << (a ? "," : "") << x[a];
    os << ')';
    throw NumericalFailure(os.str());
  }
  run.mu /= run.mu.mean();

  InvariantMeasure out;
  out.density = PeriodicField::from_values(g, run.mu);
  out.mass = integral(out.density);
  out.min_density = run.mu.minCoeff();
  out.max_density = run.mu.maxCoeff();
  out.residual = l2_norm(adjoint.apply(out.density));
  out.iterations = run.iterations;
  out.residual_history = run.history;
  if (out.min_density <= 0.0)
    throw NumericalFailure("invariant density is not bounded away from zero on the grid");

  if (opt.probe_uniqueness) {
    Eigen::VectorXd start(g.size());
    for (Eigen::Index i = 0; i < g.size(); ++i)
      start[i] = 1.0 + 0.5 * std::cos(kTwoPi * g.node(i)[0]);
    const Run second = inverse_iteration(adjoint, start, tol, opt);
    out.uniqueness_gap = rms(second.mu - run.mu);
    if (out.uniqueness_gap > 10.0 * tol)
      throw NumericalFailure("invariant density depends on the initial iterate (gap " +
                             std::to_string(out.uniqueness_gap) + ")");
  }

  const PeriodicField fine = resample(out.density, 2 * g.n);
  Eigen::VectorXd grad2 = Eigen::VectorXd::Zero(fine.grid().size());
  for (int a = 0; a < g.dim; ++a) grad2 += derivative(fine, a).values().cwiseAbs2();
  out.lipschitz_surrogate = std::sqrt(grad2.maxCoeff());
  return out;
}

double ergodic_pairing_check(const InvariantMeasure& mu, const GeneratorOperator& L,
                             const std::vector<PeriodicField>& test_fields) {
  if (L.kind() != OperatorKind::generator)
    throw InvalidArgument("ergodic_pairing_check expects the generator L");
  double worst = 0.0;
  for (const PeriodicField& phi : test_fields)
    worst = std::max(worst, std::abs(inner(L.apply(phi), mu.density)));
  return worst;
}

}  // namespace occlab
