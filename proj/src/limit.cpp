#include "occlab/limit.hpp"

#include "occlab/errors.hpp"
#include "occlab/rng.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <sstream>

namespace occlab {

namespace {

bool is_zero(const PeriodicField& f, double scale) { return max_abs(f) <= 1e-14 * std::max(1.0, scale); }

PeriodicField poisson_solve(const PeriodicField& f, const GeneratorOperator& L, const InvariantMeasure& mu,
                            double tol = 1e-10) {
  const PeriodicField fbar = center_mu(f, mu);
  if (is_zero(fbar, max_abs(f))) return PeriodicField::zero(f.grid());
  return solve_poisson(L, fbar, mu, tol * std::max(1.0, l2_norm(fbar))).u;
}

Eigen::MatrixXd symmetric_root(const Eigen::MatrixXd& C) {
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(C);
  if (es.info() != Eigen::Success) throw NumericalFailure("sample_limit: eigendecomposition failed");
  const Eigen::VectorXd ev = es.eigenvalues();
  if (ev.size() && ev.minCoeff() < -1e-10)
    throw NumericalFailure("sample_limit: covariance is not positive semidefinite");
  return es.eigenvectors() * ev.cwiseMax(0.0).cwiseSqrt().asDiagonal();
}

}  // namespace

double mu_expectation(const PeriodicField& f, const InvariantMeasure& mu) {
  require_same_grid(f.grid(), mu.grid(), "mu_expectation");
  return inner(f, mu.density) / mu.mass;
}

EmpiricalProcessSample empirical_process(const DiffusionPath& path, const std::vector<PeriodicField>& fs,
                                         const InvariantMeasure& mu) {
  for (const PeriodicField& f : fs) require_same_grid(f.grid(), mu.grid(), "empirical_process");
  if (mu.grid().dim != path.dim) throw InvalidArgument("empirical_process: path and grid dimensions differ");
  EmpiricalProcessSample s;
  s.test_functions = fs;
  s.T = double(path.steps) * path.h;
  s.path_seed = path.seed;
  s.path_stream = path.stream;
  const std::vector<double> avg = occupation_averages(path, fs);
  s.values.resize(Eigen::Index(fs.size()));
  const double rt = std::sqrt(s.T);
  for (std::size_t i = 0; i < fs.size(); ++i) {
    const PeriodicField& f = fs[i];
    // Constants are exactly centered.
    s.values[Eigen::Index(i)] = max_abs(f - f.mean()) == 0.0 ? 0.0 : rt * (avg[i] - mu_expectation(f, mu));
  }
  return s;
}

PoissonFlux poisson_flux(const PeriodicField& f, const GeneratorOperator& L, const InvariantMeasure& mu,
                         const DiffusivitySpec& diffusivity, double tol) {
  const Grid& g = L.grid();
  require_same_grid(g, f.grid(), "poisson_flux");
  require_same_grid(g, diffusivity.grid(), "poisson_flux");
  PoissonFlux out;
  out.u = poisson_solve(f, L, mu, tol);
  const int d = g.dim, n2 = 2 * g.n;
  std::vector<Eigen::VectorXd> grad;
  for (int i = 0; i < d; ++i) grad.push_back(resample(derivative(out.u, i), n2).values());
  for (int c = 0; c < d; ++c) {
    Eigen::VectorXd w = Eigen::VectorXd::Zero(grad[0].size());
    for (int i = 0; i < d; ++i) w.array() += resample(diffusivity.sigma_at(i, c), n2).values().array() * grad[i].array();
    out.flux.push_back(std::move(w));
  }
  return out;
}

double flux_inner(const PoissonFlux& a, const PoissonFlux& b, const InvariantMeasure& mu) {
  const Eigen::VectorXd m = resample(mu.density, 2 * mu.grid().n).values();
  double acc = 0.0;
  for (std::size_t c = 0; c < a.flux.size(); ++c) acc += (a.flux[c].array() * b.flux[c].array() * m.array()).sum();
  return acc / double(m.size()) / mu.mass;
}

double covariance(const PeriodicField& f, const PeriodicField& g, const GeneratorOperator& L,
                  const InvariantMeasure& mu, const DiffusivitySpec& diffusivity) {
  const PoissonFlux a = poisson_flux(f, L, mu, diffusivity);
  const PoissonFlux b = poisson_flux(g, L, mu, diffusivity);
  return flux_inner(a, b, mu);
}

CovarianceGram make_gram(std::vector<PeriodicField> fs, Eigen::MatrixXd C) {
  if (C.rows() != C.cols() || C.rows() != Eigen::Index(fs.size()))
    throw InvalidArgument("make_gram: matrix size does not match the function family");
  CovarianceGram out;
  out.test_functions = std::move(fs);
  const Eigen::MatrixXd S = 0.5 * (C + C.transpose());
  if (S.size() == 0) return out;
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(S);
  if (es.info() != Eigen::Success) throw NumericalFailure("gram: eigendecomposition failed");
  out.eigen_floor = es.eigenvalues().minCoeff();
  if (out.eigen_floor < -1e-10) {
    std::ostringstream os;
    os << "gram is not positive semidefinite (smallest eigenvalue " << out.eigen_floor << ")";
    throw NumericalFailure(os.str());
  }
  if (out.eigen_floor < 0.0) {
    const Eigen::MatrixXd R =
        es.eigenvectors() * es.eigenvalues().cwiseMax(0.0).asDiagonal() * es.eigenvectors().transpose();
    out.gram = 0.5 * (R + R.transpose());
  } else
    out.gram = S;
  return out;
}

CovarianceGram gram(const std::vector<PeriodicField>& fs, const GeneratorOperator& L,
                    const InvariantMeasure& mu, const DiffusivitySpec& diffusivity) {
  std::vector<PoissonFlux> flux;
  flux.reserve(fs.size());
  for (const PeriodicField& f : fs) flux.push_back(poisson_flux(f, L, mu, diffusivity));
  const Eigen::Index k = Eigen::Index(fs.size());
  Eigen::MatrixXd C(k, k);
  for (Eigen::Index i = 0; i < k; ++i)
    for (Eigen::Index j = i; j < k; ++j) C(i, j) = C(j, i) = flux_inner(flux[i], flux[j], mu);
  return make_gram(fs, std::move(C));
}

Eigen::MatrixXd sample_limit(const CovarianceGram& C, std::uint64_t seed, int draws) {
  if (draws < 0) throw InvalidArgument("sample_limit: draws must be >= 0");
  const Eigen::Index k = C.gram.rows();
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(k, draws);
  if (k == 0) return out;
  const Eigen::MatrixXd R = symmetric_root(C.gram);
  Eigen::VectorXd z(k);
  for (int j = 0; j < draws; ++j) {
    PhiloxStream rng(seed, std::uint64_t(j));
    for (Eigen::Index i = 0; i < k; ++i) z[i] = rng.normal();
    out.col(j) = R * z;
  }
  return out;
}

Eigen::VectorXd sample_limit(const CovarianceGram& C, std::uint64_t seed) { return sample_limit(C, seed, 1).col(0); }

MartingaleDecomposition martingale_decomposition(const DiffusionPath& path, const PeriodicField& f,
                                                 const GeneratorOperator& L, const InvariantMeasure& mu,
                                                 const DiffusivitySpec& diffusivity) {
  const Grid& g = L.grid();
  require_same_grid(g, f.grid(), "martingale_decomposition");
  if (path.dim != g.dim) throw InvalidArgument("martingale_decomposition: path and grid dimensions differ");
  if (path.noise.size() != std::size_t(path.steps) * path.dim)
    throw InvalidArgument("martingale_decomposition: path carries no stored noise");
  const double m = mu_expectation(f, mu);
  if (std::abs(m) > 1e-8 * std::max(1.0, l2_norm(f)))
    throw InvalidArgument("martingale_decomposition: f is not centered under mu; call center_mu first");

  MartingaleDecomposition out;
  if (is_zero(f, 0.0)) return out;
  const PeriodicField u = poisson_solve(f, L, mu);
  std::vector<PeriodicField> fields{u};
  for (int i = 0; i < g.dim; ++i) fields.push_back(derivative(u, i));
  const FieldEvaluator ev(fields);
  const SdeModel coef(L.drift(), diffusivity);
  const int d = g.dim;
  std::vector<double> v(d + 1), b(d), s(std::size_t(d) * d);
  Point x(d);
  double stoch = 0.0;
  for (Eigen::Index k = 0; k < path.steps; ++k) {
    for (int a = 0; a < d; ++a) x[a] = path.state_ptr(k)[a];
    ev.evaluate(x, v.data());
    coef.evaluate(x, b.data(), s.data());
    const double* xi = path.noise.data() + k * d;
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) stoch += v[1 + i] * s[i * d + j] * xi[j];
  }
  const double T = double(path.steps) * path.h;
  const double rt = std::sqrt(T);
  out.empirical = rt * (occupation_average(path, f) - m);
  ev.evaluate(path.terminal(), v.data());
  const double uT = v[0];
  ev.evaluate(path.x0, v.data());
  out.boundary = (uT - v[0]) / rt;
  out.stochastic = stoch / rt;
  out.residual = out.empirical - out.boundary + out.stochastic;
  return out;
}

std::vector<double> quadratic_variation_series(const DiffusionPath& path, const PeriodicField& f,
                                               const GeneratorOperator& L, const InvariantMeasure& mu,
                                               const DiffusivitySpec& diffusivity) {
  const Grid& g = L.grid();
  require_same_grid(g, f.grid(), "quadratic_variation_series");
  if (path.dim != g.dim) throw InvalidArgument("quadratic_variation_series: path and grid dimensions differ");
  const PeriodicField u = poisson_solve(f, L, mu);
  const int d = g.dim;
  const FieldEvaluator ev(gradient(u));
  const SdeModel coef(L.drift(), diffusivity);
  std::vector<double> grad(d), b(d), s(std::size_t(d) * d), out(std::size_t(path.steps));
  Point x(d);
  for (Eigen::Index k = 0; k < path.steps; ++k) {
    for (int a = 0; a < d; ++a) x[a] = path.state_ptr(k)[a];
    ev.evaluate(x, grad.data());
    coef.evaluate(x, b.data(), s.data());
    double q = 0.0;
    for (int c = 0; c < d; ++c) {
      double w = 0.0;
      for (int i = 0; i < d; ++i) w += s[i * d + c] * grad[i];
      q += w * w;
    }
    out[std::size_t(k)] = q;
  }
  return out;
}

double rho_L(const PeriodicField& f, const PeriodicField& g, const GeneratorOperator& L,
             const InvariantMeasure& mu, const DiffusivitySpec& diffusivity) {
  const PeriodicField u = poisson_solve(f - g, L, mu);
  double s = 0.0;
  for (int i = 0; i < L.dim(); ++i) {
    const double m = sup_norm(derivative(u, i), 4);
    s += m * m;
  }
  return std::sqrt(diffusivity.Lambda * s);
}

double rho_G(const PeriodicField& f, const PeriodicField& g, const GeneratorOperator& L,
             const InvariantMeasure& mu, const DiffusivitySpec& diffusivity) {
  const PoissonFlux a = poisson_flux(f - g, L, mu, diffusivity);
  return std::sqrt(std::max(0.0, flux_inner(a, a, mu)));
}

double besov_bound_ratio(const PeriodicField& f, const PeriodicField& g, double gamma,
                         const GeneratorOperator& L, const InvariantMeasure& mu,
                         const DiffusivitySpec& diffusivity) {
  if (!(gamma > 0.0)) throw InvalidArgument("besov_bound_ratio: gamma must be > 0");
  const PeriodicField diff = f - g;
  const double nb = besov_norm(diff, {-1.0 + gamma, kInf, kInf});
  if (!(nb > 0.0)) throw InvalidArgument("besov_bound_ratio: f = g");
  return rho_L(f, g, L, mu, diffusivity) / nb;
}

}  // namespace occlab
