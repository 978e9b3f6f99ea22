#include "occlab/spectral.hpp"

#include "occlab/errors.hpp"
#include "occlab/fft.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <sstream>
#include <string>

namespace occlab {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

bool is_pow2(int n) { return n > 0 && (n & (n - 1)) == 0; }

int next_pow2(int n) {
  int p = 1;
  while (p < n) p <<= 1;
  return p;
}

std::string describe(const Wavevector& k) {
  std::ostringstream os;
  os << '(';
  for (int a = 0; a < k.size(); ++a) os << (a ? "," : "") << k[a];
  os << ')';
  return os.str();
}

long norm2(const Wavevector& k) {
  long s = 0;
  for (int a = 0; a < k.size(); ++a) s += long(k[a]) * k[a];
  return s;
}

// Copy coefficients from grid `src` into an n2 grid of the same dimension.
// Nyquist entries are split evenly between ±n/2 when growing and folded back
// when shrinking, so the represented real function is preserved.
Eigen::VectorXcd transfer(const Grid& src, const Eigen::VectorXcd& c, int n2) {
  const Grid dst{src.dim, n2};
  Eigen::VectorXcd out = Eigen::VectorXcd::Zero(dst.size());
  const int half = src.n / 2;
  const int lim2 = n2 / 2;
  for (Eigen::Index i = 0; i < src.size(); ++i) {
    if (c[i] == 0.0) continue;
    Wavevector k = src.wavevector(i);
    bool keep = true;
    int nyq_axes[kMaxDim];
    int n_nyq = 0;
    for (int a = 0; a < src.dim; ++a) {
      if (std::abs(k[a]) > lim2) keep = false;
      if (n2 > src.n && k[a] == half) nyq_axes[n_nyq++] = a;
    }
    if (!keep) continue;
    const double w = 1.0 / double(1 << n_nyq);
    for (int mask = 0; mask < (1 << n_nyq); ++mask) {
      Wavevector kk = k;
      for (int t = 0; t < n_nyq; ++t)
        if (mask & (1 << t)) kk[nyq_axes[t]] = -half;
      out[dst.index_of(kk)] += w * c[i];
    }
  }
  return out;
}

}  // namespace

// ---------------------------------------------------------------- Grid

Eigen::Index Grid::size() const {
  Eigen::Index s = 1;
  for (int a = 0; a < dim; ++a) s *= n;
  return s;
}

Wavevector Grid::wavevector(Eigen::Index flat) const {
  Wavevector k(dim);
  for (int a = dim - 1; a >= 0; --a) {
    k[a] = frequency(int(flat % n));
    flat /= n;
  }
  return k;
}

Eigen::Index Grid::index_of(const Wavevector& k) const {
  Eigen::Index flat = 0;
  for (int a = 0; a < dim; ++a) flat = flat * n + (((k[a] % n) + n) % n);
  return flat;
}

Point Grid::node(Eigen::Index flat) const {
  Point x(dim);
  for (int a = dim - 1; a >= 0; --a) {
    x[a] = double(flat % n) / n;
    flat /= n;
  }
  return x;
}

bool Grid::in_band(const Wavevector& k) const {
  const int c = cutoff();
  for (int a = 0; a < dim; ++a)
    if (std::abs(k[a]) > c) return false;
  return true;
}

Eigen::VectorXcd grid_to_coeffs(const Grid& g, const Eigen::VectorXd& values) {
  Eigen::VectorXcd c = values.cast<std::complex<double>>();
  fft_nd(c, g.dim, g.n, false);
  c /= double(g.size());
  return c;
}

Eigen::VectorXd coeffs_to_grid(const Grid& g, Eigen::VectorXcd coeffs) {
  fft_nd(coeffs, g.dim, g.n, true);
  return coeffs.real();
}

const GridTables& tables(const Grid& g) {
  static std::mutex mu;
  static std::map<std::pair<int, int>, std::unique_ptr<GridTables>> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto& slot = cache[{g.dim, g.n}];
  if (!slot) {
    auto t = std::make_unique<GridTables>();
    const Eigen::Index N = g.size();
    t->freq.resize(std::size_t(N) * g.dim);
    t->neg.resize(N);
    t->k2.resize(N);
    t->band.resize(N);
    for (Eigen::Index i = 0; i < N; ++i) {
      const Wavevector k = g.wavevector(i);
      long r2 = 0;
      for (int a = 0; a < g.dim; ++a) {
        t->freq[i * g.dim + a] = k[a];
        r2 += long(k[a]) * k[a];
      }
      t->neg[i] = g.index_of(-k);
      t->k2[i] = r2;
      t->band[i] = g.in_band(k);
    }
    slot = std::move(t);
  }
  return *slot;
}

Grid make_grid(int dim, int n) {
  if (dim < 1 || dim > kMaxDim)
    throw InvalidArgument("grid dimension must lie in [1, " + std::to_string(kMaxDim) +
                          "], got " + std::to_string(dim));
  if (!is_pow2(n) || n < 4)
    throw InvalidArgument("grid resolution must be a power of two >= 4, got " +
                          std::to_string(n));
  return Grid{dim, n};
}

void require_same_grid(const Grid& a, const Grid& b, const char* where) {
  if (!(a == b)) {
    std::ostringstream os;
    os << where << ": grid mismatch (d=" << a.dim << ", n=" << a.n << ") vs (d=" << b.dim
       << ", n=" << b.n << ")";
    throw InvalidArgument(os.str());
  }
}

Wavevector wavevector(std::initializer_list<int> k) {
  Wavevector w(static_cast<Eigen::Index>(k.size()));
  int a = 0;
  for (int v : k) w[a++] = v;
  return w;
}

// ---------------------------------------------------------------- PeriodicField

PeriodicField PeriodicField::zero(const Grid& g) { return constant(g, 0.0); }

PeriodicField PeriodicField::constant(const Grid& g, double c) {
  PeriodicField f;
  f.grid_ = g;
  f.values_ = Eigen::VectorXd::Constant(g.size(), c);
  f.coeffs_ = Eigen::VectorXcd::Zero(g.size());
  f.coeffs_[0] = c;
  return f;
}

PeriodicField PeriodicField::from_values(const Grid& g, Eigen::VectorXd values) {
  if (values.size() != g.size())
    throw InvalidArgument("from_values: expected " + std::to_string(g.size()) + " values, got " +
                          std::to_string(values.size()));
  if (!values.allFinite()) throw InvalidArgument("from_values: nonfinite grid value");
  PeriodicField f;
  f.grid_ = g;
  f.coeffs_ = grid_to_coeffs(g, values);
  f.values_ = std::move(values);
  return f;
}

PeriodicField PeriodicField::from_coeffs(const Grid& g, Eigen::VectorXcd coeffs) {
  if (coeffs.size() != g.size())
    throw InvalidArgument("from_coeffs: expected " + std::to_string(g.size()) +
                          " coefficients, got " + std::to_string(coeffs.size()));
  const auto& neg = tables(g).neg;
  Eigen::VectorXcd sym(coeffs.size());
  for (Eigen::Index i = 0; i < g.size(); ++i)
    sym[i] = 0.5 * (coeffs[i] + std::conj(coeffs[neg[i]]));
  PeriodicField f;
  f.grid_ = g;
  f.values_ = coeffs_to_grid(g, sym);
  f.coeffs_ = std::move(sym);
  return f;
}

std::complex<double> PeriodicField::coeff(const Wavevector& k) const {
  const int half = grid_.n / 2;
  for (int a = 0; a < grid_.dim; ++a)
    if (k[a] > half || k[a] < -half) return 0.0;
  return coeffs_[grid_.index_of(k)];
}

double PeriodicField::operator()(const Point& x) const {
  Point y(grid_.dim);
  for (int a = 0; a < grid_.dim; ++a) y[a] = x[a] - std::floor(x[a]);
  double acc = 0.0;
  for (Eigen::Index i = 0; i < grid_.size(); ++i) {
    if (coeffs_[i] == 0.0) continue;
    const Wavevector k = grid_.wavevector(i);
    double phase = 0.0;
    for (int a = 0; a < grid_.dim; ++a) phase += k[a] * y[a];
    acc += (coeffs_[i] * std::polar(1.0, kTwoPi * phase)).real();
  }
  return acc;
}

// ---------------------------------------------------------------- arithmetic

PeriodicField operator+(const PeriodicField& f, const PeriodicField& g) {
  require_same_grid(f.grid(), g.grid(), "operator+");
  return PeriodicField::from_coeffs(f.grid(), f.coeffs() + g.coeffs());
}

PeriodicField operator-(const PeriodicField& f, const PeriodicField& g) {
  require_same_grid(f.grid(), g.grid(), "operator-");
  return PeriodicField::from_coeffs(f.grid(), f.coeffs() - g.coeffs());
}

PeriodicField operator-(const PeriodicField& f) { return -1.0 * f; }

PeriodicField operator*(double c, const PeriodicField& f) {
  return PeriodicField::from_coeffs(f.grid(), c * f.coeffs());
}

PeriodicField operator+(const PeriodicField& f, double c) {
  Eigen::VectorXcd coeffs = f.coeffs();
  coeffs[0] += c;
  return PeriodicField::from_coeffs(f.grid(), std::move(coeffs));
}

// ---------------------------------------------------------------- synthesis

PeriodicField synthesize(const ModeList& modes, const Grid& g) {
  const int n = g.n;
  for (const Mode& m : modes) {
    if (m.k.size() != g.dim)
      throw InvalidArgument("synthesize: wavevector " + describe(m.k) + " has wrong dimension");
    for (int a = 0; a < g.dim; ++a)
      if (std::abs(m.k[a]) > n / 2)
        throw InvalidArgument("synthesize: frequency " + describe(m.k) +
                              " exceeds resolution/2 = " + std::to_string(n / 2));
    if (!std::isfinite(m.a) || !std::isfinite(m.b))
      throw InvalidArgument("synthesize: nonfinite amplitude at " + describe(m.k));
  }
  std::vector<double> ctab(n), stab(n);
  for (int j = 0; j < n; ++j) {
    ctab[j] = std::cos(kTwoPi * j / n);
    stab[j] = std::sin(kTwoPi * j / n);
  }
  Eigen::VectorXd v = Eigen::VectorXd::Zero(g.size());
  for (Eigen::Index i = 0; i < g.size(); ++i) {
    Eigen::Index flat = i;
    int node[kMaxDim];
    for (int a = g.dim - 1; a >= 0; --a) {
      node[a] = int(flat % n);
      flat /= n;
    }
    double acc = 0.0;
    for (const Mode& m : modes) {
      long ph = 0;
      for (int a = 0; a < g.dim; ++a) ph += long(m.k[a]) * node[a];
      const int idx = int(((ph % n) + n) % n);
      acc += m.a * ctab[idx] + m.b * stab[idx];
    }
    v[i] = acc;
  }
  return PeriodicField::from_values(g, std::move(v));
}

PeriodicField synthesize(const ModeList& modes, int dim, int resolution) {
  return synthesize(modes, make_grid(dim, resolution));
}

ModeList to_modes(const PeriodicField& f, double tol) {
  const Grid& g = f.grid();
  ModeList out;
  for (Eigen::Index i = 0; i < g.size(); ++i) {
    const std::complex<double> c = f.coeffs()[i];
    if (std::abs(c) <= tol) continue;
    const Wavevector k = g.wavevector(i);
    const Eigen::Index j = g.index_of(-k);
    if (j == i) {
      out.push_back({k, c.real(), 0.0});
      continue;
    }
    // Keep the representative whose first nonzero component is positive.
    int first = 0;
    for (int a = 0; a < g.dim; ++a)
      if (k[a] != 0) {
        first = k[a];
        break;
      }
    if (first < 0) continue;
    out.push_back({k, 2.0 * c.real(), -2.0 * c.imag()});
  }
  return out;
}

PeriodicField cos_mode(const Grid& g, const Wavevector& k, double amplitude) {
  return synthesize({Mode{k, amplitude, 0.0}}, g);
}

PeriodicField sin_mode(const Grid& g, const Wavevector& k, double amplitude) {
  return synthesize({Mode{k, 0.0, amplitude}}, g);
}

// ---------------------------------------------------------------- calculus

PeriodicField derivative(const PeriodicField& f, int axis) {
  const Grid& g = f.grid();
  if (axis < 0 || axis >= g.dim) throw InvalidArgument("derivative: axis out of range");
  Eigen::VectorXcd c = f.coeffs();
  const int half = g.n / 2;
  const GridTables& t = tables(g);
  for (Eigen::Index i = 0; i < g.size(); ++i) {
    const int k = t.k(i, axis, g.dim);
    c[i] *= (k == half) ? 0.0 : std::complex<double>(0.0, kTwoPi * k);
  }
  return PeriodicField::from_coeffs(g, std::move(c));
}

std::vector<PeriodicField> gradient(const PeriodicField& f) {
  std::vector<PeriodicField> out;
  out.reserve(f.dim());
  for (int a = 0; a < f.dim(); ++a) out.push_back(derivative(f, a));
  return out;
}

PeriodicField laplacian(const PeriodicField& f) {
  const Grid& g = f.grid();
  Eigen::VectorXcd c = f.coeffs();
  const GridTables& t = tables(g);
  for (Eigen::Index i = 0; i < g.size(); ++i) c[i] *= -kTwoPi * kTwoPi * double(t.k2[i]);
  return PeriodicField::from_coeffs(g, std::move(c));
}

PeriodicField dealias(const PeriodicField& f) {
  const Grid& g = f.grid();
  Eigen::VectorXcd c = f.coeffs();
  bool changed = false;
  const GridTables& t = tables(g);
  for (Eigen::Index i = 0; i < g.size(); ++i)
    if (c[i] != 0.0 && !t.band[i]) {
      c[i] = 0.0;
      changed = true;
    }
  return changed ? PeriodicField::from_coeffs(g, std::move(c)) : f;
}

double out_of_band_norm(const PeriodicField& f) {
  const Grid& g = f.grid();
  double s = 0.0;
  const GridTables& t = tables(g);
  for (Eigen::Index i = 0; i < g.size(); ++i)
    if (!t.band[i]) s += std::norm(f.coeffs()[i]);
  return std::sqrt(s);
}

PeriodicField multiply(const PeriodicField& f, const PeriodicField& g) {
  require_same_grid(f.grid(), g.grid(), "multiply");
  const PeriodicField pf = dealias(f);
  const PeriodicField pg = dealias(g);
  return dealias(
      PeriodicField::from_values(f.grid(), pf.values().cwiseProduct(pg.values())));
}

PeriodicField resample(const PeriodicField& f, int n2) {
  const Grid g2 = make_grid(f.dim(), n2);
  if (n2 == f.resolution()) return f;
  return PeriodicField::from_coeffs(g2, transfer(f.grid(), f.coeffs(), n2));
}

int bandwidth(const PeriodicField& f, double rel_tol) {
  const Grid& g = f.grid();
  const double cmax = f.coeffs().cwiseAbs().maxCoeff();
  if (cmax == 0.0) return 0;
  int bw = 0;
  for (Eigen::Index i = 0; i < g.size(); ++i) {
    if (std::abs(f.coeffs()[i]) <= rel_tol * cmax) continue;
    const Wavevector k = g.wavevector(i);
    for (int a = 0; a < g.dim; ++a) bw = std::max(bw, std::abs(k[a]));
  }
  return bw;
}

// ---------------------------------------------------------------- integrals and norms

double inner(const PeriodicField& f, const PeriodicField& g) {
  require_same_grid(f.grid(), g.grid(), "inner");
  return (f.coeffs().array() * g.coeffs().conjugate().array()).sum().real();
}

double integral(const PeriodicField& f) { return f.mean(); }

double l2_norm(const PeriodicField& f) { return f.coeffs().norm(); }

double max_abs(const PeriodicField& f) { return f.values().cwiseAbs().maxCoeff(); }

double sup_norm(const PeriodicField& f, int refine) {
  int n2 = f.resolution() * std::max(1, refine);
  auto nodes = [&](int n) {
    double s = 1.0;
    for (int a = 0; a < f.dim(); ++a) s *= n;
    return s;
  };
  while (n2 > f.resolution() && nodes(n2) > double(1 << 21)) n2 /= 2;
  return max_abs(resample(f, n2));
}

double integrate_product(const std::vector<const PeriodicField*>& factors) {
  if (factors.empty()) return 1.0;
  const Grid& g = factors.front()->grid();
  int total_bw = 0;
  for (const PeriodicField* f : factors) {
    require_same_grid(g, f->grid(), "integrate_product");
    total_bw += bandwidth(*f, 1e-15);
  }
  const int n2 = std::max(g.n, next_pow2(total_bw + 1));
  Eigen::VectorXd prod = Eigen::VectorXd::Ones(Grid{g.dim, n2}.size());
  for (const PeriodicField* f : factors) prod.array() *= resample(*f, n2).values().array();
  return prod.mean();
}

void validate(const BesovIndex& idx) {
  if (!(idx.p >= 1.0) || !(idx.q >= 1.0) || std::isnan(idx.s) || std::isinf(idx.s))
    throw InvalidArgument("Besov index requires p, q in [1, inf] and finite s");
}

int dyadic_block(const Wavevector& k) {
  const long r2 = norm2(k);
  if (r2 == 0) return 0;
  int j = 1;
  while (r2 >= (1L << (2 * j))) ++j;
  return j;
}

double besov_norm(const PeriodicField& f, const BesovIndex& idx) {
  validate(idx);
  const Grid& g = f.grid();
  const Eigen::VectorXcd& c = f.coeffs();
  const double cmax = c.cwiseAbs().maxCoeff();
  if (cmax == 0.0) return 0.0;

  int jmax = 0;
  int kmax = 0;
  std::vector<int> block(g.size(), -1);
  for (Eigen::Index i = 0; i < g.size(); ++i) {
    if (std::abs(c[i]) <= 1e-13 * cmax) continue;
    const Wavevector k = g.wavevector(i);
    block[i] = dyadic_block(k);
    jmax = std::max(jmax, block[i]);
    for (int a = 0; a < g.dim; ++a) kmax = std::max(kmax, std::abs(k[a]));
  }

  std::vector<double> norms(jmax + 1, 0.0);
  if (idx.p == 2.0) {
    for (Eigen::Index i = 0; i < g.size(); ++i)
      if (block[i] >= 0) norms[block[i]] += std::norm(c[i]);
    for (double& v : norms) v = std::sqrt(v);
  } else {
    // Synthesize each block with 16 points per shortest wavelength, dropping to
    // no fewer than 4 when the node budget would be exceeded.
    int ne = std::max(4, next_pow2(16 * std::max(kmax, 1)));
    while (ne > 4 * std::max(kmax, 1) && std::pow(double(ne), g.dim) > double(1 << 21)) ne /= 2;
    const Grid ge{g.dim, ne};
    for (int j = 0; j <= jmax; ++j) {
      Eigen::VectorXcd bc = Eigen::VectorXcd::Zero(g.size());
      bool any = false;
      for (Eigen::Index i = 0; i < g.size(); ++i)
        if (block[i] == j) {
          bc[i] = c[i];
          any = true;
        }
      if (!any) continue;
      const Eigen::VectorXd v = coeffs_to_grid(ge, transfer(g, bc, ne)).cwiseAbs();
      if (std::isinf(idx.p))
        norms[j] = v.maxCoeff();
      else
        norms[j] = std::pow(v.array().pow(idx.p).mean(), 1.0 / idx.p);
    }
  }

  double acc = 0.0;
  for (int j = 0; j <= jmax; ++j) {
    const double term = std::exp2(j * idx.s) * norms[j];
    if (std::isinf(idx.q))
      acc = std::max(acc, term);
    else
      acc += std::pow(term, idx.q);
  }
  return std::isinf(idx.q) ? acc : std::pow(acc, 1.0 / idx.q);
}

double sobolev_norm(const PeriodicField& f, double s) {
  const Grid& g = f.grid();
  double acc = 0.0;
  const GridTables& t = tables(g);
  for (Eigen::Index i = 0; i < g.size(); ++i) {
    const double m = std::norm(f.coeffs()[i]);
    if (m == 0.0) continue;
    acc += std::pow(1.0 + double(t.k2[i]), s) * m;
  }
  return std::sqrt(acc);
}

// ---------------------------------------------------------------- FieldEvaluator

FieldEvaluator::FieldEvaluator(const std::vector<PeriodicField>& fields, double rel_tol) {
  if (fields.empty()) return;
  const Grid& g = fields.front().grid();
  dim_ = g.dim;
  const int half = g.n / 2;
  for (const PeriodicField& f : fields) {
    require_same_grid(g, f.grid(), "FieldEvaluator");
    const double cmax = f.coeffs().cwiseAbs().maxCoeff();
    for (Eigen::Index i = 0; i < g.size(); ++i) {
      const std::complex<double> c = f.coeffs()[i];
      if (c == 0.0 || std::abs(c) <= rel_tol * cmax) continue;
      const Wavevector k = g.wavevector(i);
      bool nyquist = false;
      int first = 0;
      for (int a = 0; a < dim_; ++a) {
        if (k[a] == half) nyquist = true;
        if (first == 0) first = k[a];
      }
      // Pair k with -k: keep one representative at twice the weight.
      double w = 1.0;
      if (!nyquist && first != 0) {
        if (first < 0) continue;
        w = 2.0;
      }
      for (int a = 0; a < dim_; ++a) {
        mode_k_.push_back(k[a]);
        kmax_ = std::max(kmax_, std::abs(k[a]));
      }
      mode_c_.push_back(w * c);
    }
    offsets_.push_back(static_cast<int>(mode_c_.size()));
  }
  for (int& v : mode_k_) v += kmax_;
}

void FieldEvaluator::evaluate(const Point& x, double* out) const {
  const int width = 2 * kmax_ + 1;
  thread_local std::vector<std::complex<double>> phase;
  phase.resize(std::size_t(dim_) * width);
  for (int a = 0; a < dim_; ++a) {
    std::complex<double>* p = phase.data() + a * width + kmax_;
    p[0] = 1.0;
    const std::complex<double> e = std::polar(1.0, kTwoPi * x[a]);
    for (int m = 1; m <= kmax_; ++m) {
      p[m] = p[m - 1] * e;
      p[-m] = std::conj(p[m]);
    }
  }
  const int nf = size();
  for (int f = 0; f < nf; ++f) {
    double acc = 0.0;
    for (int m = offsets_[f]; m < offsets_[f + 1]; ++m) {
      const int* k = mode_k_.data() + std::size_t(m) * dim_;
      std::complex<double> z = mode_c_[m];
      for (int a = 0; a < dim_; ++a) z *= phase[a * width + k[a]];
      acc += z.real();
    }
    out[f] = acc;
  }
}

double FieldEvaluator::evaluate_one(const Point& x) const {
  if (size() != 1) throw InvalidArgument("FieldEvaluator::evaluate_one needs exactly one field");
  double v = 0.0;
  evaluate(x, &v);
  return v;
}

}  // namespace occlab
