#include "occlab/wasserstein.hpp"

#include "occlab/errors.hpp"
#include "occlab/parallel.hpp"

#include <cmath>
#include <complex>
#include <limits>
#include <numbers>
#include <sstream>

namespace occlab {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

void require_same_cells(const DiscreteMeasure& a, const DiscreteMeasure& b, const char* who) {
  if (a.dim != b.dim || a.m != b.m || a.weights.size() != b.weights.size()) {
    std::ostringstream os;
    os << who << ": measures live on different grids (" << a.dim << "d, m=" << a.m << " vs " << b.dim
       << "d, m=" << b.m << ")";
    throw InvalidArgument(os.str());
  }
}

std::vector<double> centers(int dim, int m, const std::vector<Eigen::Index>& cells) {
  DiscreteMeasure tmp;
  tmp.dim = dim;
  tmp.m = m;
  std::vector<double> out(cells.size() * std::size_t(dim));
  for (std::size_t i = 0; i < cells.size(); ++i) {
    const Point c = tmp.center(cells[i]);
    for (int a = 0; a < dim; ++a) out[i * dim + a] = c[a];
  }
  return out;
}

/// Surplus (ν − ρ)⁺ and deficit (ρ − ν)⁺ with their cells.
struct Split {
  std::vector<Eigen::Index> src, dst;
  Eigen::VectorXd a, b;
  Eigen::VectorXd common;
};

Split split(const DiscreteMeasure& nu, const DiscreteMeasure& rho) {
  Split s;
  const Eigen::Index n = nu.size();
  s.common = nu.weights.cwiseMin(rho.weights);
  std::vector<double> a, b;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double d = nu.weights[i] - rho.weights[i];
    if (d > 0.0) {
      s.src.push_back(i);
      a.push_back(d);
    } else if (d < 0.0) {
      s.dst.push_back(i);
      b.push_back(-d);
    }
  }
  s.a = Eigen::Map<Eigen::VectorXd>(a.data(), Eigen::Index(a.size()));
  s.b = Eigen::Map<Eigen::VectorXd>(b.data(), Eigen::Index(b.size()));
  // Exact balance: put the rounding residue on the largest entry.
  if (s.a.size() && s.b.size()) {
    const double r = s.a.sum() - s.b.sum();
    Eigen::Index k;
    s.b.maxCoeff(&k);
    s.b[k] = std::max(0.0, s.b[k] + r);
  }
  return s;
}

double log_sum_exp(const double* v, std::size_t n) {
  double mx = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n; ++i) mx = std::max(mx, v[i]);
  if (!std::isfinite(mx)) return mx;
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += std::exp(v[i] - mx);
  return mx + std::log(s);
}

/// Log-domain Sinkhorn with ε-scaling on point clouds x (weights a) and y (weights b).
struct SinkhornRun {
  std::vector<double> f, g;
  double eps = 0.0;
  int iterations = 0;
  double violation = 0.0;
};

class SinkhornSolver {
 public:
  SinkhornSolver(int dim, const std::vector<double>& x, const Eigen::VectorXd& a, const std::vector<double>& y,
                 const Eigen::VectorXd& b)
      : d_(dim), x_(x), y_(y), a_(a), b_(b), na_(std::size_t(a.size())), nb_(std::size_t(b.size())) {
    for (std::size_t i = 0; i < na_; ++i) la_.push_back(std::log(a_[Eigen::Index(i)]));
    for (std::size_t j = 0; j < nb_; ++j) lb_.push_back(std::log(b_[Eigen::Index(j)]));
  }

  double cost(std::size_t i, std::size_t j) const { return torus_distance(&x_[i * d_], &y_[j * d_], d_); }

  /// f_i = −ε log Σ_j b_j exp((g_j − C_ij)/ε)
  void update_f(std::vector<double>& f, const std::vector<double>& g, double eps) const {
    std::vector<double> t(nb_);
    for (std::size_t i = 0; i < na_; ++i) {
      for (std::size_t j = 0; j < nb_; ++j) t[j] = lb_[j] + (g[j] - cost(i, j)) / eps;
      f[i] = -eps * log_sum_exp(t.data(), nb_);
    }
  }
  void update_g(const std::vector<double>& f, std::vector<double>& g, double eps) const {
    std::vector<double> t(na_);
    for (std::size_t j = 0; j < nb_; ++j) {
      for (std::size_t i = 0; i < na_; ++i) t[i] = la_[i] + (f[i] - cost(i, j)) / eps;
      g[j] = -eps * log_sum_exp(t.data(), na_);
    }
  }

  /// Max |row marginal − a| of the plan defined by (f, g); columns are exact after update_g.
  double violation(const std::vector<double>& f, const std::vector<double>& g, double eps) const {
    double v = 0.0;
    for (std::size_t i = 0; i < na_; ++i) {
      double r = 0.0;
      for (std::size_t j = 0; j < nb_; ++j)
        r += a_[Eigen::Index(i)] * b_[Eigen::Index(j)] * std::exp((f[i] + g[j] - cost(i, j)) / eps);
      v = std::max(v, std::abs(r - a_[Eigen::Index(i)]));
    }
    return v;
  }

  SinkhornRun run(const SinkhornOptions& opt) const {
    double diam = 0.0;
    for (std::size_t i = 0; i < na_; ++i)
      for (std::size_t j = 0; j < nb_; ++j) diam = std::max(diam, cost(i, j));
    SinkhornRun r;
    r.f.assign(na_, 0.0);
    r.g.assign(nb_, 0.0);
    double eps = std::max(diam, opt.epsilon);
    while (true) {
      const bool last = eps <= opt.epsilon;
      const int iters = last ? opt.final_iterations : opt.iterations_per_stage;
      for (int it = 0; it < iters; ++it) {
        update_f(r.f, r.g, eps);
        update_g(r.f, r.g, eps);
        ++r.iterations;
        if (last && it % 20 == 19) {
          r.violation = violation(r.f, r.g, eps);
          if (r.violation <= opt.tol) break;
        }
      }
      if (last) break;
      eps = std::max(opt.epsilon, eps * opt.scaling);
    }
    r.eps = eps;
    return r;
  }

  /// Symmetric OT_ε(a, a) value via the averaged fixed point.
  static double self_value(int dim, const std::vector<double>& x, const Eigen::VectorXd& a,
                           const SinkhornOptions& opt) {
    const SinkhornSolver s(dim, x, a, x, a);
    const SinkhornRun r = s.run(opt);
    double v = 0.0;
    for (std::size_t i = 0; i < s.na_; ++i) v += a[Eigen::Index(i)] * (r.f[i] + r.g[i]);
    return v;
  }

  double dual(const SinkhornRun& r) const {
    double v = 0.0;
    for (std::size_t i = 0; i < na_; ++i) v += a_[Eigen::Index(i)] * r.f[i];
    for (std::size_t j = 0; j < nb_; ++j) v += b_[Eigen::Index(j)] * r.g[j];
    return v;
  }

  /// ⟨a, g^c⟩ + ⟨b, g⟩ with g^c_i = min_j (C_ij − g_j): a feasible dual point.
  double c_transform_bound(const SinkhornRun& r) const {
    double v = 0.0;
    for (std::size_t i = 0; i < na_; ++i) {
      double m = std::numeric_limits<double>::infinity();
      for (std::size_t j = 0; j < nb_; ++j) m = std::min(m, cost(i, j) - r.g[j]);
      v += a_[Eigen::Index(i)] * m;
    }
    for (std::size_t j = 0; j < nb_; ++j) v += b_[Eigen::Index(j)] * r.g[j];
    return v;
  }

  /// Cost of the entropic plan after rounding onto the exact marginals.
  double rounded_cost(const SinkhornRun& r) const {
    Eigen::MatrixXd P{Eigen::Index(na_), Eigen::Index(nb_)};
    for (std::size_t i = 0; i < na_; ++i)
      for (std::size_t j = 0; j < nb_; ++j)
        P(Eigen::Index(i), Eigen::Index(j)) =
            a_[Eigen::Index(i)] * b_[Eigen::Index(j)] * std::exp((r.f[i] + r.g[j] - cost(i, j)) / r.eps);
    const Eigen::VectorXd x = (a_.array() / P.rowwise().sum().array().max(1e-300)).min(1.0);
    P = x.asDiagonal() * P;
    const Eigen::VectorXd y = (b_.array() / P.colwise().sum().transpose().array().max(1e-300)).min(1.0);
    P = P * y.asDiagonal();
    const Eigen::VectorXd ea = a_ - P.rowwise().sum();
    const Eigen::VectorXd eb = b_ - P.colwise().sum().transpose();
    const double s = ea.lpNorm<1>();
    if (s > 0.0) P += ea * eb.transpose() / s;
    double c = 0.0;
    for (std::size_t i = 0; i < na_; ++i)
      for (std::size_t j = 0; j < nb_; ++j) c += P(Eigen::Index(i), Eigen::Index(j)) * cost(i, j);
    return c;
  }

 private:
  int d_;
  const std::vector<double>& x_;
  const std::vector<double>& y_;
  Eigen::VectorXd a_, b_;
  std::size_t na_, nb_;
  std::vector<double> la_, lb_;
};

Eigen::VectorXd histogram_counts(const DiffusionPath& p, int m, Eigen::Index cells) {
  Eigen::VectorXd w = Eigen::VectorXd::Zero(cells);
  for (Eigen::Index k = 0; k < p.steps; ++k) w[cell_index(p.state_ptr(k), p.dim, m)] += 1.0;
  return w;
}

}  // namespace

double torus_distance(const double* x, const double* y, int dim) {
  double s = 0.0;
  for (int a = 0; a < dim; ++a) {
    double t = std::abs(x[a] - y[a]);
    t -= std::floor(t);
    t = std::min(t, 1.0 - t);
    s += t * t;
  }
  return std::sqrt(s);
}

double torus_distance(const Point& x, const Point& y) {
  if (x.size() != y.size()) throw InvalidArgument("torus_distance: dimension mismatch");
  return torus_distance(x.data(), y.data(), int(x.size()));
}

Eigen::VectorXd TransportPlan::row_sums() const {
  Eigen::VectorXd r = Eigen::VectorXd::Zero(source.size());
  for (const auto& e : entries) r[e.from] += e.mass;
  return r;
}

Eigen::VectorXd TransportPlan::col_sums() const {
  Eigen::VectorXd c = Eigen::VectorXd::Zero(target.size());
  for (const auto& e : entries) c[e.to] += e.mass;
  return c;
}

Eigen::MatrixXd TransportPlan::dense() const {
  Eigen::MatrixXd P = Eigen::MatrixXd::Zero(source.size(), target.size());
  for (const auto& e : entries) P(e.from, e.to) += e.mass;
  return P;
}

Eigen::MatrixXd cell_distances(int dim, int m, const std::vector<Eigen::Index>& rows,
                               const std::vector<Eigen::Index>& cols) {
  const std::vector<double> x = centers(dim, m, rows), y = centers(dim, m, cols);
  Eigen::MatrixXd C(Eigen::Index(rows.size()), Eigen::Index(cols.size()));
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < cols.size(); ++j)
      C(Eigen::Index(i), Eigen::Index(j)) = torus_distance(&x[i * dim], &y[j * dim], dim);
  return C;
}

W1Result w1_exact(const DiscreteMeasure& nu, const DiscreteMeasure& rho, Eigen::Index cap) {
  require_same_cells(nu, rho, "w1_exact");
  if (nu.size() > cap) {
    std::ostringstream os;
    os << "w1_exact: " << nu.size() << " cells exceed the exact-solver cap of " << cap
       << "; use w1_dual_bound or the entropic fallback w1_sinkhorn";
    throw InvalidArgument(os.str());
  }
  W1Result r;
  r.plan.source = nu;
  r.plan.target = rho;
  const Split s = split(nu, rho);
  for (Eigen::Index i = 0; i < nu.size(); ++i)
    if (s.common[i] > 0.0) r.plan.entries.push_back({int(i), int(i), s.common[i]});
  if (s.a.size() == 0 || s.b.size() == 0 || s.a.sum() <= 1e-15) return r;

  const Eigen::MatrixXd C = cell_distances(nu.dim, nu.m, s.src, s.dst);
  const TransportSolution t = solve_transport(s.a, s.b, C);
  for (const auto& f : t.flows) r.plan.entries.push_back({int(s.src[f.from]), int(s.dst[f.to]), f.mass});
  r.cost = t.cost;
  r.plan.cost = t.cost;
  r.dual_value = t.dual_value;
  r.duality_gap = t.cost - t.dual_value;
  r.dual_violation = t.max_violation;
  r.pivots = t.pivots;
  return r;
}

EntropicResult w1_sinkhorn(const DiscreteMeasure& nu, const DiscreteMeasure& rho, const SinkhornOptions& opt) {
  require_same_cells(nu, rho, "w1_sinkhorn");
  if (!(opt.epsilon > 0.0) || !(opt.scaling > 0.0 && opt.scaling < 1.0))
    throw InvalidArgument("w1_sinkhorn: epsilon must be > 0 and scaling in (0, 1)");
  EntropicResult out;
  const Split s = split(nu, rho);
  if (s.a.size() == 0 || s.b.size() == 0 || s.a.sum() <= 1e-15) {
    out.bracket_ok = true;
    return out;
  }
  const std::vector<double> x = centers(nu.dim, nu.m, s.src), y = centers(nu.dim, nu.m, s.dst);
  const SinkhornSolver solver(nu.dim, x, s.a, y, s.b);
  const SinkhornRun r = solver.run(opt);
  out.epsilon = r.eps;
  out.iterations = r.iterations;
  out.lower = std::max(0.0, solver.c_transform_bound(r));
  out.upper = solver.rounded_cost(r);
  out.estimate = solver.dual(r) - 0.5 * SinkhornSolver::self_value(nu.dim, x, s.a, opt) -
                 0.5 * SinkhornSolver::self_value(nu.dim, y, s.b, opt);
  out.bracket_ok = out.upper - out.lower <= opt.bracket * out.lower;
  return out;
}

double lipschitz_constant(const PeriodicField& phi, int refine) {
  const PeriodicField fine = resample(phi, refine * phi.grid().n);
  Eigen::VectorXd g2 = Eigen::VectorXd::Zero(fine.grid().size());
  for (int a = 0; a < phi.grid().dim; ++a) g2 += derivative(fine, a).values().cwiseAbs2();
  return std::sqrt(g2.maxCoeff());
}

DualBound w1_dual_bound(const DiscreteMeasure& nu, const DiscreteMeasure& rho,
                        const std::vector<PeriodicField>& potentials) {
  require_same_cells(nu, rho, "w1_dual_bound");
  DualBound out;
  if (potentials.empty()) return out;
  for (const PeriodicField& p : potentials)
    if (p.grid().dim != nu.dim) throw InvalidArgument("w1_dual_bound: potential dimension differs from the measures");
  const Eigen::VectorXd diff = nu.weights - rho.weights;
  std::vector<Point> c;
  for (Eigen::Index i = 0; i < nu.size(); ++i) c.push_back(nu.center(i));
  for (std::size_t k = 0; k < potentials.size(); ++k) {
    const double L = lipschitz_constant(potentials[k]);
    out.lipschitz.push_back(L);
    if (!(L > 0.0)) continue;  // constant potential: pairing is 0
    const FieldEvaluator ev({potentials[k]});
    double pair = 0.0;
    for (Eigen::Index i = 0; i < nu.size(); ++i) pair += ev.evaluate_one(c[std::size_t(i)]) * diff[i];
    const double v = std::abs(pair) / std::max(1.0, L);
    if (v > out.value) {
      out.value = v;
      out.best = int(k);
    }
  }
  return out;
}

DiscreteMeasure discretize_density(const InvariantMeasure& mu, int m) {
  const Grid& g = mu.grid();
  if (m < 1) throw InvalidArgument("discretize_density: m must be >= 1");
  const int d = g.dim;
  const int half = g.n / 2;
  // avg[k + half][j] = m ∫_{j/m}^{(j+1)/m} e^{2πikx} dx
  std::vector<std::vector<std::complex<double>>> avg(std::size_t(g.n), std::vector<std::complex<double>>(m));
  for (int k = -half; k < half; ++k)
    for (int j = 0; j < m; ++j) {
      std::complex<double> v;
      if (k == 0) {
        v = 1.0;
      } else {
        const std::complex<double> e1 = std::polar(1.0, kTwoPi * k * (j + 1) / m);
        const std::complex<double> e0 = std::polar(1.0, kTwoPi * k * double(j) / m);
        v = (e1 - e0) * double(m) / std::complex<double>(0.0, kTwoPi * k);
      }
      avg[std::size_t(k + half)][std::size_t(j)] = v;
    }
  std::vector<Eigen::Index> active;
  const Eigen::VectorXcd& c = mu.density.coeffs();
  const double cmax = c.cwiseAbs().maxCoeff();
  for (Eigen::Index i = 0; i < g.size(); ++i)
    if (std::abs(c[i]) > 1e-16 * cmax) active.push_back(i);
  std::vector<Wavevector> ks;
  for (Eigen::Index i : active) ks.push_back(g.wavevector(i));

  Eigen::Index cells = 1;
  for (int a = 0; a < d; ++a) cells *= m;
  Eigen::VectorXd w(cells);
  std::vector<int> j(d);
  for (Eigen::Index cell = 0; cell < cells; ++cell) {
    Eigen::Index rest = cell;
    for (int a = d - 1; a >= 0; --a) {
      j[a] = int(rest % m);
      rest /= m;
    }
    std::complex<double> acc = 0.0;
    for (std::size_t t = 0; t < active.size(); ++t) {
      std::complex<double> z = c[active[t]];
      for (int a = 0; a < d; ++a) {
        const int k = ks[t][a] == half ? -half : ks[t][a];
        z *= avg[std::size_t(k + half)][std::size_t(j[a])];
      }
      acc += z;
    }
    w[cell] = std::max(0.0, acc.real());
  }
  return make_discrete_measure(d, m, std::move(w));
}

RateResult rate_experiment(const RateConfig& cfg) {
  const Grid& g = cfg.diffusivity.grid();
  const int d = g.dim;
  if (d > 3) throw InvalidArgument("rate_experiment: the √T rate is established for d <= 3 only");
  if (cfg.T.size() < 2) throw InvalidArgument("rate_experiment: at least two horizons are required");
  if (cfg.replications < 2) throw InvalidArgument("rate_experiment: at least two replications are required");
  const InvariantMeasure mu =
      solve_invariant(assemble_adjoint(cfg.drift, cfg.diffusivity), cfg.invariant_tol);
  const SdeModel model(cfg.drift, cfg.diffusivity);
  const Point x0 = cfg.x0.size() ? cfg.x0 : Point(Point::Zero(d));
  const std::size_t nT = cfg.T.size(), R = std::size_t(cfg.replications);

  RateResult out;
  int m = cfg.m;
  for (;;) {
    Eigen::Index cells = 1;
    for (int a = 0; a < d; ++a) cells *= m;
    const DiscreteMeasure target = discretize_density(mu, m);
    const DiscreteMeasure coarse_target = discretize_density(mu, std::max(2, m / 2));
    out.m = m;
    out.w1.assign(nT, std::vector<double>(R, 0.0));
    std::vector<double> coarse(R, 0.0);
    const std::size_t nb = std::min<std::size_t>(R, std::size_t(std::max(0, cfg.bias_replications)));
    parallel_for(nT * R, cfg.threads, [&](std::size_t job) {
      const std::size_t t = job / R, r = job % R;
      const std::uint64_t stream = (std::uint64_t(t) << 32) | std::uint64_t(r);
      const DiffusionPath p = simulate_path(model, x0, cfg.T[t], cfg.h, cfg.seed, stream, false);
      const Eigen::VectorXd counts = histogram_counts(p, m, cells);
      const DiscreteMeasure hist = make_discrete_measure(d, m, counts);
      out.w1[t][r] = w1_exact(hist, target).cost;
      if (t + 1 == nT && r < nb) {
        const DiscreteMeasure hc = occupation_histogram(p, coarse_target.m);
        coarse[r] = w1_exact(hc, coarse_target).cost;
      }
    });

    out.table.clear();
    std::vector<double> Ts, means;
    for (std::size_t t = 0; t < nT; ++t) {
      RateRow row;
      row.T = cfg.T[t];
      row.replications = cfg.replications;
      for (double v : out.w1[t]) row.mean += v;
      row.mean /= double(R);
      for (double v : out.w1[t]) row.sd += (v - row.mean) * (v - row.mean);
      row.sd = std::sqrt(row.sd / double(R - 1));
      out.table.push_back(row);
      Ts.push_back(row.T);
      means.push_back(row.mean);
    }
    out.fit = fit_rate(Ts, means);

    double fine_mean = 0.0, coarse_mean = 0.0;
    for (std::size_t r = 0; r < nb; ++r) {
      fine_mean += out.w1[nT - 1][r];
      coarse_mean += coarse[r];
    }
    out.bias_estimate = nb ? std::abs(fine_mean - coarse_mean) / double(nb) : 0.0;
    double smallest = means.front();
    for (double v : means) smallest = std::min(smallest, v);
    out.bias_ok = out.bias_estimate <= cfg.bias_fraction * smallest;
    Eigen::Index next_cells = 1;
    for (int a = 0; a < d; ++a) next_cells *= 2 * m;
    if (out.bias_ok || next_cells > kExactCellCap) break;
    m *= 2;
    ++out.reruns;
  }
  return out;
}

}  // namespace occlab
