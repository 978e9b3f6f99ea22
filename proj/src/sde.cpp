#include "occlab/sde.hpp"

#include "occlab/errors.hpp"
#include "occlab/rng.hpp"

#include <cmath>
#include <sstream>

namespace occlab {

namespace {

bool is_constant(const PeriodicField& f) {
  const double c0 = std::abs(f.coeffs()[0]);
  double rest = 0.0;
  for (Eigen::Index i = 1; i < f.coeffs().size(); ++i) rest = std::max(rest, std::abs(f.coeffs()[i]));
  return rest <= 1e-15 * std::max(1.0, c0);
}

bool all_constant(const std::vector<PeriodicField>& fs) {
  for (const PeriodicField& f : fs)
    if (!is_constant(f)) return false;
  return true;
}

inline double wrap(double v) {
  double w = v - std::floor(v);
  return w >= 1.0 ? 0.0 : w;
}

void check_step(double h, double T) {
  if (!(h > 0.0) || !std::isfinite(h)) throw InvalidArgument("simulate_path: step h must be > 0");
  if (!(T >= h) || !std::isfinite(T)) throw InvalidArgument("simulate_path: horizon T must satisfy T >= h");
}

Point checked_start(const Point& x0, int dim) {
  if (x0.size() != dim) throw InvalidArgument("simulate_path: x0 has the wrong dimension");
  Point x(dim);
  for (int a = 0; a < dim; ++a) {
    if (!std::isfinite(x0[a])) throw InvalidArgument("simulate_path: x0 is not finite");
    x[a] = wrap(x0[a]);
  }
  return x;
}

/// Euler-Maruyama core shared by simulation and replay.
class Stepper {
 public:
  explicit Stepper(const SdeModel& model)
      : model_(model), d_(model.dim()), x_(d_), b_(d_), s_(std::size_t(d_) * d_) {}

  void step(const double* xk, const double* xi, double h, double* out, Eigen::Index k) {
    for (int a = 0; a < d_; ++a) x_[a] = xk[a];
    model_.evaluate(x_, b_.data(), s_.data());
    for (int i = 0; i < d_; ++i) {
      double v = xk[i] + b_[i] * h;
      for (int j = 0; j < d_; ++j) v += s_[i * d_ + j] * xi[j];
      if (!std::isfinite(v)) {
        std::ostringstream os;
        os << "nonfinite state at step " << k << " (coefficient blow-up)";
        throw NumericalFailure(os.str());
      }
      out[i] = wrap(v);
    }
  }

 private:
  const SdeModel& model_;
  int d_;
  Point x_;
  std::vector<double> b_, s_;
};

}  // namespace

SdeModel::SdeModel(const DriftSpec& drift, const DiffusivitySpec& diffusivity) {
  dim_ = diffusivity.dim();
  if (drift.dim() != dim_) throw InvalidArgument("SdeModel: drift and diffusivity dimensions differ");
  drift_constant_ = all_constant(drift.components);
  sigma_constant_ = all_constant(diffusivity.sigma);
  for (const PeriodicField& f : drift.components) b0_.push_back(f.coeffs()[0].real());
  for (const PeriodicField& f : diffusivity.sigma) s0_.push_back(f.coeffs()[0].real());
  if (!drift_constant_) drift_ = FieldEvaluator(drift.components);
  if (!sigma_constant_) sigma_ = FieldEvaluator(diffusivity.sigma);
}

void SdeModel::evaluate(const Point& x, double* b, double* s) const {
  if (drift_constant_)
    std::copy(b0_.begin(), b0_.end(), b);
  else
    drift_.evaluate(x, b);
  if (sigma_constant_)
    std::copy(s0_.begin(), s0_.end(), s);
  else
    sigma_.evaluate(x, s);
}

Point DiscreteMeasure::center(Eigen::Index cell) const {
  Point p(dim);
  for (int a = dim - 1; a >= 0; --a) {
    p[a] = (double(cell % m) + 0.5) / m;
    cell /= m;
  }
  return p;
}

DiscreteMeasure make_discrete_measure(int dim, int m, Eigen::VectorXd weights) {
  if (dim < 1 || m < 1) throw InvalidArgument("DiscreteMeasure: dim and m must be positive");
  Eigen::Index expect = 1;
  for (int a = 0; a < dim; ++a) expect *= m;
  if (weights.size() != expect) throw InvalidArgument("DiscreteMeasure: weight vector has the wrong size");
  if ((weights.array() < 0.0).any() || !weights.allFinite())
    throw InvalidArgument("DiscreteMeasure: weights must be finite and nonnegative");
  const double s = weights.sum();
  if (!(s > 0.0)) throw InvalidArgument("DiscreteMeasure: total mass is zero");
  DiscreteMeasure out;
  out.dim = dim;
  out.m = m;
  out.weights = weights / s;
  return out;
}

Eigen::Index cell_index(const double* x, int dim, int m) {
  Eigen::Index idx = 0;
  for (int a = 0; a < dim; ++a) {
    int c = static_cast<int>(x[a] * m);
    c = std::clamp(c, 0, m - 1);
    idx = idx * m + c;
  }
  return idx;
}

Eigen::Index step_count(double T, double h) {
  return static_cast<Eigen::Index>(std::floor(T / h + 1e-9));
}

std::vector<double> brownian_increments(int dim, Eigen::Index steps, double h, std::uint64_t seed,
                                        std::uint64_t stream) {
  PhiloxStream rng(seed, stream);
  const double sh = std::sqrt(h);
  std::vector<double> xi(std::size_t(steps) * dim);
  for (double& v : xi) v = sh * rng.normal();
  return xi;
}

DiffusionPath simulate_path(const SdeModel& model, const Point& x0, double T, double h,
                            std::uint64_t seed, std::uint64_t stream, bool keep_noise) {
  check_step(h, T);
  const int d = model.dim();
  DiffusionPath p;
  p.dim = d;
  p.x0 = checked_start(x0, d);
  p.h = h;
  p.T = T;
  p.steps = step_count(T, h);
  p.seed = seed;
  p.stream = stream;
  p.states.resize(std::size_t(p.steps + 1) * d);
  for (int a = 0; a < d; ++a) p.states[a] = p.x0[a];

  PhiloxStream rng(seed, stream);
  const double sh = std::sqrt(h);
  std::vector<double> xi(d);
  if (keep_noise) p.noise.resize(std::size_t(p.steps) * d);
  Stepper st(model);
  for (Eigen::Index k = 0; k < p.steps; ++k) {
    for (int a = 0; a < d; ++a) xi[a] = sh * rng.normal();
    if (keep_noise) std::copy(xi.begin(), xi.end(), p.noise.begin() + k * d);
    st.step(p.states.data() + k * d, xi.data(), h, p.states.data() + (k + 1) * d, k);
  }
  return p;
}

DiffusionPath simulate_path(const DriftSpec& drift, const DiffusivitySpec& diffusivity,
                            const Point& x0, double T, double h, std::uint64_t seed,
                            std::uint64_t stream) {
  return simulate_path(SdeModel(drift, diffusivity), x0, T, h, seed, stream);
}

DiffusionPath simulate_with_noise(const SdeModel& model, const Point& x0, double h,
                                  std::vector<double> noise) {
  const int d = model.dim();
  if (noise.size() % d != 0) throw InvalidArgument("simulate_with_noise: noise length is not a multiple of d");
  DiffusionPath p;
  p.dim = d;
  p.x0 = checked_start(x0, d);
  p.h = h;
  p.steps = static_cast<Eigen::Index>(noise.size() / d);
  p.T = double(p.steps) * h;
  check_step(h, p.T);
  p.noise = std::move(noise);
  p.states.resize(std::size_t(p.steps + 1) * d);
  for (int a = 0; a < d; ++a) p.states[a] = p.x0[a];
  Stepper st(model);
  for (Eigen::Index k = 0; k < p.steps; ++k)
    st.step(p.states.data() + k * d, p.noise.data() + k * d, h, p.states.data() + (k + 1) * d, k);
  return p;
}

DiffusionPath replay(const SdeModel& model, const DiffusionPath& path) {
  if (path.noise.size() != std::size_t(path.steps) * path.dim)
    throw InvalidArgument("replay: path carries no stored noise");
  DiffusionPath p = simulate_with_noise(model, path.x0, path.h, path.noise);
  p.T = path.T;
  p.seed = path.seed;
  p.stream = path.stream;
  return p;
}

std::vector<double> coarsen_noise(const std::vector<double>& noise, int dim, int factor) {
  if (factor < 1) throw InvalidArgument("coarsen_noise: factor must be >= 1");
  const std::size_t n = noise.size() / dim;
  if (n % factor != 0) throw InvalidArgument("coarsen_noise: step count is not divisible by factor");
  std::vector<double> out((n / factor) * dim, 0.0);
  for (std::size_t k = 0; k < n; ++k)
    for (int a = 0; a < dim; ++a) out[(k / factor) * dim + a] += noise[k * dim + a];
  return out;
}

std::vector<double> occupation_averages(const DiffusionPath& path, const std::vector<PeriodicField>& fs) {
  if (path.steps < 1) throw InvalidArgument("occupation_average: path has no completed steps");
  for (const PeriodicField& f : fs)
    if (f.grid().dim != path.dim) throw InvalidArgument("occupation_average: dimension mismatch");
  const FieldEvaluator ev(fs);
  std::vector<double> acc(fs.size(), 0.0), v(fs.size());
  Point x(path.dim);
  for (Eigen::Index k = 0; k < path.steps; ++k) {
    for (int a = 0; a < path.dim; ++a) x[a] = path.state_ptr(k)[a];
    ev.evaluate(x, v.data());
    for (std::size_t i = 0; i < fs.size(); ++i) acc[i] += v[i];
  }
  for (std::size_t i = 0; i < fs.size(); ++i)
    acc[i] = is_constant(fs[i]) ? fs[i].coeffs()[0].real() : acc[i] / double(path.steps);
  return acc;
}

double occupation_average(const DiffusionPath& path, const PeriodicField& f) {
  return occupation_averages(path, {f})[0];
}

DiscreteMeasure occupation_histogram(const DiffusionPath& path, int m) {
  if (m < 2) throw InvalidArgument("occupation_histogram: m must be >= 2");
  if (path.steps < 1) throw InvalidArgument("occupation_histogram: path has no completed steps");
  Eigen::Index cells = 1;
  for (int a = 0; a < path.dim; ++a) cells *= m;
  Eigen::VectorXd w = Eigen::VectorXd::Zero(cells);
  for (Eigen::Index k = 0; k < path.steps; ++k) w[cell_index(path.state_ptr(k), path.dim, m)] += 1.0;
  DiscreteMeasure out;
  out.dim = path.dim;
  out.m = m;
  out.weights = w / double(path.steps);
  return out;
}

}  // namespace occlab
