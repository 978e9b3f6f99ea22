#include "occlab/generator.hpp"

#include "occlab/errors.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <numbers>
#include <optional>
#include <sstream>

namespace occlab {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

void require_in_band(const PeriodicField& f, const std::string& name) {
  const double oob = out_of_band_norm(f);
  if (oob > 1e-12 * std::max(1.0, l2_norm(f)))
    throw InvalidArgument(name + " has energy beyond the dealiased band |k_a| <= n/3 (" +
                          std::to_string(oob) + "); increase the resolution");
}

std::string describe_node(const Grid& g, Eigen::Index flat) {
  std::ostringstream os;
  Eigen::Index rest = flat;
  int idx[kMaxDim];
  for (int a = g.dim - 1; a >= 0; --a) {
    idx[a] = int(rest % g.n);
    rest /= g.n;
  }
  os << "node (";
  for (int a = 0; a < g.dim; ++a) os << (a ? "," : "") << idx[a];
  os << ") at x = (";
  const Point x = g.node(flat);
  for (int a = 0; a < g.dim; ++a) os << (a ? "," : "") << x[a];
  os << ')';
  return os.str();
}

template <int D>
std::pair<double, double> extreme_eigs(const Eigen::Matrix<double, D, D>& A) {
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix<double, D, D>> es;
  if constexpr (D == 2 || D == 3)
    es.computeDirect(A, Eigen::EigenvaluesOnly);
  else
    es.compute(A, Eigen::EigenvaluesOnly);
  return {es.eigenvalues()(0), es.eigenvalues()(D - 1)};
}

}  // namespace

// ---------------------------------------------------------------- specs

DriftSpec make_drift(std::vector<PeriodicField> components, double declared_smoothness) {
  if (components.empty()) throw InvalidArgument("drift needs at least one component");
  const Grid& g = components.front().grid();
  if (int(components.size()) != g.dim)
    throw InvalidArgument("drift has " + std::to_string(components.size()) +
                          " components on a " + std::to_string(g.dim) + "-dimensional grid");
  for (std::size_t i = 0; i < components.size(); ++i) {
    require_same_grid(g, components[i].grid(), "make_drift");
    require_in_band(components[i], "drift component b_" + std::to_string(i + 1));
  }
  if (!(declared_smoothness > 0.0)) throw InvalidArgument("declared drift smoothness must be > 0");
  return DriftSpec{std::move(components), declared_smoothness};
}

DriftSpec zero_drift(const Grid& g) {
  return make_drift(std::vector<PeriodicField>(g.dim, PeriodicField::zero(g)));
}

DriftSpec gradient_drift(const PeriodicField& potential) {
  require_in_band(potential, "drift potential B");
  return make_drift(gradient(potential));
}

DriftSpec shear_drift(const Grid& g) {
  if (g.dim < 2) throw InvalidArgument("the shear drift preset requires d >= 2");
  std::vector<PeriodicField> b(g.dim, PeriodicField::zero(g));
  auto e = [&](int axis) {
    Wavevector k = Wavevector::Zero(g.dim);
    k[axis] = 1;
    return k;
  };
  b[0] = synthesize({Mode{e(1), 0.0, 1.0}, Mode{e(0), 0.0, 0.5}}, g);
  if (g.dim >= 3) b[1] = synthesize({Mode{e(2), 0.0, 1.0}}, g);
  return make_drift(std::move(b));
}

DiffusivitySpec make_diffusivity(std::vector<PeriodicField> sigma) {
  if (sigma.empty()) throw InvalidArgument("diffusivity needs d*d entries");
  const Grid& g = sigma.front().grid();
  const int d = g.dim;
  if (int(sigma.size()) != d * d)
    throw InvalidArgument("diffusivity has " + std::to_string(sigma.size()) + " entries, expected " +
                          std::to_string(d * d));
  int bw = 0;
  for (std::size_t i = 0; i < sigma.size(); ++i) {
    require_same_grid(g, sigma[i].grid(), "make_diffusivity");
    bw = std::max(bw, bandwidth(sigma[i]));
  }
  if (2 * bw > g.cutoff())
    throw InvalidArgument("sigma bandwidth " + std::to_string(bw) +
                          " is too high for an exact a = sigma sigma^T / 2 at resolution " +
                          std::to_string(g.n));

  DiffusivitySpec out;
  out.d = d;
  out.sigma = std::move(sigma);
  out.a.assign(std::size_t(d) * d, PeriodicField());
  for (int i = 0; i < d; ++i)
    for (int j = i; j < d; ++j) {
      Eigen::VectorXd acc = Eigen::VectorXd::Zero(g.size());
      for (int m = 0; m < d; ++m)
        acc += out.sigma[i * d + m].values().cwiseProduct(out.sigma[j * d + m].values());
      out.a[i * d + j] = PeriodicField::from_values(g, 0.5 * acc);
      out.a[j * d + i] = out.a[i * d + j];
    }

  out.lambda = kInf;
  out.Lambda = -kInf;
  double trace_sum = 0.0;
  Eigen::MatrixXd A(d, d);
  for (Eigen::Index node = 0; node < g.size(); ++node) {
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) A(i, j) = out.a[i * d + j].values()[node];
    std::pair<double, double> mm;
    switch (d) {
      case 1: mm = {A(0, 0), A(0, 0)}; break;
      case 2: mm = extreme_eigs<2>(A); break;
      case 3: mm = extreme_eigs<3>(A); break;
      default: mm = extreme_eigs<4>(A); break;
    }
    if (mm.first < out.lambda) {
      out.lambda = mm.first;
      out.argmin_node = node;
    }
    out.Lambda = std::max(out.Lambda, mm.second);
    trace_sum += A.trace();
  }
  out.mean_diffusion = trace_sum / (double(g.size()) * d);
  return out;
}

DiffusivitySpec scaled_identity_diffusivity(const Grid& g, double scale) {
  std::vector<PeriodicField> sigma;
  for (int i = 0; i < g.dim; ++i)
    for (int j = 0; j < g.dim; ++j) sigma.push_back(PeriodicField::constant(g, i == j ? scale : 0.0));
  return make_diffusivity(std::move(sigma));
}

DiffusivitySpec modulated_diffusivity(const Grid& g, double amplitude) {
  const int d = g.dim;
  std::vector<PeriodicField> sigma(std::size_t(d) * d, PeriodicField::zero(g));
  for (int i = 0; i < d; ++i) {
    Wavevector k = Wavevector::Zero(d);
    k[i] = 1;
    sigma[i * d + i] = synthesize({Mode{Wavevector::Zero(d), 1.0, 0.0}, Mode{k, 0.0, amplitude}}, g);
    if (i + 1 < d) {
      Wavevector k1 = Wavevector::Zero(d);
      k1[i + 1] = 1;
      sigma[i * d + i + 1] = synthesize({Mode{k1, 0.8 * amplitude, 0.0}}, g);
    }
  }
  return make_diffusivity(std::move(sigma));
}

DiffusivitySpec diagonal_diffusivity(const Grid& g, const std::vector<double>& a_diag) {
  if (int(a_diag.size()) != g.dim) throw InvalidArgument("diagonal diffusivity needs d entries");
  std::vector<PeriodicField> sigma;
  for (int i = 0; i < g.dim; ++i)
    for (int j = 0; j < g.dim; ++j) {
      if (i == j && a_diag[i] < 0.0) throw InvalidArgument("diagonal diffusivity must be >= 0");
      sigma.push_back(PeriodicField::constant(g, i == j ? std::sqrt(2.0 * a_diag[i]) : 0.0));
    }
  return make_diffusivity(std::move(sigma));
}

// ---------------------------------------------------------------- operator

GeneratorOperator::Coefficient GeneratorOperator::classify(const PeriodicField& f) {
  Coefficient c;
  c.value = f.mean();
  double rest = 0.0;
  for (Eigen::Index i = 1; i < f.coeffs().size(); ++i) rest = std::max(rest, std::abs(f.coeffs()[i]));
  c.constant = rest <= 1e-15 * std::abs(c.value) || rest == 0.0;
  c.zero = c.constant && c.value == 0.0;
  if (!c.constant) c.values = f.values();
  return c;
}

GeneratorOperator::GeneratorOperator(DriftSpec drift, DiffusivitySpec diffusivity, OperatorKind kind)
    : kind_(kind), grid_(drift.grid()), drift_(std::move(drift)), diffusivity_(std::move(diffusivity)) {
  const int d = grid_.dim;
  require_same_grid(grid_, diffusivity_.grid(), "assemble");
  if (diffusivity_.dim() != d) throw InvalidArgument("drift and diffusivity dimensions differ");
  btilde_.reserve(d);
  for (int i = 0; i < d; ++i) {
    Eigen::VectorXcd c = drift_.components[i].coeffs();
    for (int j = 0; j < d; ++j) c -= derivative(diffusivity_.a_at(i, j), j).coeffs();
    btilde_.push_back(PeriodicField::from_coeffs(grid_, std::move(c)));
  }
  Eigen::VectorXcd div = Eigen::VectorXcd::Zero(grid_.size());
  for (int i = 0; i < d; ++i) div += derivative(btilde_[i], i).coeffs();
  div_btilde_ = PeriodicField::from_coeffs(grid_, std::move(div));

  for (const PeriodicField& a : diffusivity_.a) a_coef_.push_back(classify(a));
  for (const PeriodicField& b : drift_.components) b_coef_.push_back(classify(b));
  for (const PeriodicField& b : btilde_) bt_coef_.push_back(classify(b));
  div_coef_ = classify(div_btilde_);
}

namespace {

// Accumulates Σ coefficient(x)·w(x) for spectral w, keeping constant
// coefficients in Fourier space and forming the rest on the grid.
class ProductSum {
 public:
  explicit ProductSum(const Grid& g) : g_(g), spec_(Eigen::VectorXcd::Zero(g.size())) {}

  template <class Coef>
  void add(const Coef& c, const Eigen::VectorXcd& what, const Eigen::VectorXd* what_grid = nullptr) {
    if (c.zero) return;
    if (c.constant) {
      spec_ += c.value * what;
      return;
    }
    if (!grid_) grid_ = Eigen::VectorXd::Zero(g_.size());
    if (what_grid)
      grid_->array() += c.values.array() * what_grid->array();
    else
      grid_->array() += c.values.array() * coeffs_to_grid(g_, what).array();
  }

  Eigen::VectorXcd finish() {
    if (grid_) {
      Eigen::VectorXcd c = grid_to_coeffs(g_, *grid_);
      const auto& band = tables(g_).band;
      for (Eigen::Index i = 0; i < c.size(); ++i)
        if (band[i]) spec_[i] += c[i];
    }
    return spec_;
  }

 private:
  const Grid& g_;
  Eigen::VectorXcd spec_;
  std::optional<Eigen::VectorXd> grid_;
};

// ∂_axis applied to in-band coefficients.
Eigen::VectorXcd dhat(const Grid& g, const Eigen::VectorXcd& c, int axis) {
  const GridTables& t = tables(g);
  Eigen::VectorXcd out(c.size());
  for (Eigen::Index i = 0; i < c.size(); ++i)
    out[i] = c[i] * std::complex<double>(0.0, kTwoPi * t.k(i, axis, g.dim));
  return out;
}

Eigen::VectorXcd in_band(const Grid& g, Eigen::VectorXcd c) {
  const auto& band = tables(g).band;
  for (Eigen::Index i = 0; i < c.size(); ++i)
    if (!band[i]) c[i] = 0.0;
  return c;
}

}  // namespace

Eigen::VectorXcd GeneratorOperator::nondivergence(const Eigen::VectorXcd& uhat, bool with_drift) const {
  const int d = grid_.dim;
  const GridTables& t = tables(grid_);
  ProductSum sum(grid_);
  Eigen::VectorXcd w(uhat.size());
  for (int i = 0; i < d; ++i)
    for (int j = i; j < d; ++j) {
      const Coefficient& c = a_coef_[i * d + j];
      if (c.zero) continue;
      const double factor = (i == j ? 1.0 : 2.0) * -kTwoPi * kTwoPi;
      for (Eigen::Index m = 0; m < uhat.size(); ++m)
        w[m] = factor * double(t.k(m, i, d)) * double(t.k(m, j, d)) * uhat[m];
      sum.add(c, w);
    }
  if (with_drift)
    for (int i = 0; i < d; ++i)
      if (!b_coef_[i].zero) sum.add(b_coef_[i], dhat(grid_, uhat, i));
  return sum.finish();
}

Eigen::VectorXcd GeneratorOperator::divergence(const Eigen::VectorXcd& vhat, double drift_sign,
                                               bool with_potential) const {
  const int d = grid_.dim;
  std::vector<Eigen::VectorXcd> g_hat(d);
  std::vector<std::optional<Eigen::VectorXd>> g_grid(d);
  for (int j = 0; j < d; ++j) g_hat[j] = dhat(grid_, vhat, j);
  auto grid_of = [&](int j) -> const Eigen::VectorXd* {
    if (!g_grid[j]) g_grid[j] = coeffs_to_grid(grid_, g_hat[j]);
    return &*g_grid[j];
  };

  Eigen::VectorXcd out = Eigen::VectorXcd::Zero(vhat.size());
  for (int i = 0; i < d; ++i) {
    ProductSum flux(grid_);
    for (int j = 0; j < d; ++j) {
      const Coefficient& c = a_coef_[i * d + j];
      flux.add(c, g_hat[j], c.constant ? nullptr : grid_of(j));
    }
    out += dhat(grid_, flux.finish(), i);
  }
  ProductSum lower(grid_);
  for (int i = 0; i < d; ++i) {
    const Coefficient& c = bt_coef_[i];
    if (c.zero) continue;
    Coefficient signed_c = c;
    signed_c.value *= drift_sign;
    if (!c.constant) signed_c.values *= drift_sign;
    lower.add(signed_c, g_hat[i], c.constant ? nullptr : grid_of(i));
  }
  if (with_potential && !div_coef_.zero) {
    Coefficient neg = div_coef_;
    neg.value = -neg.value;
    if (!neg.constant) neg.values = -neg.values;
    lower.add(neg, vhat);
  }
  out += lower.finish();
  return out;
}

PeriodicField GeneratorOperator::apply(const PeriodicField& u) const {
  require_same_grid(grid_, u.grid(), "GeneratorOperator::apply");
  const Eigen::VectorXcd uhat = in_band(grid_, u.coeffs());
  if (kind_ == OperatorKind::generator) return PeriodicField::from_coeffs(grid_, nondivergence(uhat, true));
  return PeriodicField::from_coeffs(grid_, divergence(uhat, -1.0, true));
}

PeriodicField GeneratorOperator::apply_divergence_form(const PeriodicField& u) const {
  require_same_grid(grid_, u.grid(), "GeneratorOperator::apply_divergence_form");
  if (kind_ != OperatorKind::generator)
    throw InvalidArgument("apply_divergence_form is defined for the generator only");
  return PeriodicField::from_coeffs(grid_, divergence(in_band(grid_, u.coeffs()), 1.0, false));
}

PeriodicField GeneratorOperator::apply_second_order(const PeriodicField& u) const {
  require_same_grid(grid_, u.grid(), "GeneratorOperator::apply_second_order");
  return PeriodicField::from_coeffs(grid_, nondivergence(in_band(grid_, u.coeffs()), false));
}

Eigen::VectorXd GeneratorOperator::apply_values(const Eigen::VectorXd& u) const {
  return apply(PeriodicField::from_values(grid_, u)).values();
}

namespace {

GeneratorOperator build(const DriftSpec& drift, const DiffusivitySpec& diffusivity, double tol,
                        OperatorKind kind) {
  if (drift.components.empty() || diffusivity.sigma.empty())
    throw InvalidArgument("assemble: empty coefficient specification");
  require_same_grid(drift.grid(), diffusivity.grid(), "assemble");
  if (!(diffusivity.lambda > tol)) {
    std::ostringstream os;
    os << "ellipticity failure: minimal eigenvalue of a(x) is " << diffusivity.lambda << " at "
       << describe_node(diffusivity.grid(), diffusivity.argmin_node);
    throw InvalidArgument(os.str());
  }
  return GeneratorOperator(drift, diffusivity, kind);
}

}  // namespace

GeneratorOperator assemble(const DriftSpec& drift, const DiffusivitySpec& diffusivity, double tol) {
  return build(drift, diffusivity, tol, OperatorKind::generator);
}

GeneratorOperator assemble_adjoint(const DriftSpec& drift, const DiffusivitySpec& diffusivity,
                                   double tol) {
  return build(drift, diffusivity, tol, OperatorKind::adjoint);
}

}  // namespace occlab
