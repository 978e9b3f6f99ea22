#pragma once

#include <Eigen/Core>

#include <complex>
#include <limits>
#include <vector>

namespace occlab {

inline constexpr int kMaxDim = 4;
inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// A point of the torus (or of R^d before wrapping). Stack storage, no heap.
using Point = Eigen::Matrix<double, Eigen::Dynamic, 1, Eigen::ColMajor, kMaxDim, 1>;
using Wavevector = Eigen::Matrix<int, Eigen::Dynamic, 1, Eigen::ColMajor, kMaxDim, 1>;

/// Uniform n^dim grid on [0,1)^dim, row-major (axis 0 varies slowest).
struct Grid {
  int dim = 1;
  int n = 16;

  Eigen::Index size() const;
  int frequency(int index) const { return index <= n / 2 ? index : index - n; }
  Wavevector wavevector(Eigen::Index flat) const;
  Eigen::Index index_of(const Wavevector& k) const;
  Point node(Eigen::Index flat) const;
  /// Largest |k_a| kept by the 2/3 dealiasing rule.
  int cutoff() const { return n / 3; }
  bool in_band(const Wavevector& k) const;

  friend bool operator==(const Grid&, const Grid&) = default;
};

/// Per-grid lookup tables shared by all fields on that grid (built once, cached).
struct GridTables {
  std::vector<int> freq;            // size()*dim signed frequencies
  std::vector<Eigen::Index> neg;    // flat index of -k
  std::vector<long> k2;             // |k|^2
  std::vector<char> band;           // 1 if kept by dealias()
  int k(Eigen::Index flat, int axis, int dim) const { return freq[flat * dim + axis]; }
};
const GridTables& tables(const Grid& g);

/// Normalized transforms: values → c_k with f = Σ c_k e^{2πik·x}, and back (real part).
Eigen::VectorXcd grid_to_coeffs(const Grid& g, const Eigen::VectorXd& values);
Eigen::VectorXd coeffs_to_grid(const Grid& g, Eigen::VectorXcd coeffs);

Grid make_grid(int dim, int n);
void require_same_grid(const Grid& a, const Grid& b, const char* where);

/// One real Fourier mode: a·cos(2πk·x) + b·sin(2πk·x).
struct Mode {
  Wavevector k;
  double a = 0.0;
  double b = 0.0;
};
using ModeList = std::vector<Mode>;

/// Real periodic function on the torus held simultaneously as grid values and
/// as Fourier coefficients c_k with f(x) = Σ c_k e^{2πik·x}. Immutable.
class PeriodicField {
 public:
  PeriodicField() = default;

  static PeriodicField zero(const Grid& g);
  static PeriodicField constant(const Grid& g, double c);
  static PeriodicField from_values(const Grid& g, Eigen::VectorXd values);
  /// Coefficients in FFT order; the Hermitian part is kept.
  static PeriodicField from_coeffs(const Grid& g, Eigen::VectorXcd coeffs);

  const Grid& grid() const { return grid_; }
  int dim() const { return grid_.dim; }
  int resolution() const { return grid_.n; }
  const Eigen::VectorXd& values() const { return values_; }
  const Eigen::VectorXcd& coeffs() const { return coeffs_; }
  /// Zero when k is outside the stored range.
  std::complex<double> coeff(const Wavevector& k) const;
  double mean() const { return coeffs_.size() ? coeffs_[0].real() : 0.0; }

  /// Spectral interpolation at an arbitrary point (wrapped into [0,1)^d first).
  double operator()(const Point& x) const;

 private:
  Grid grid_;
  Eigen::VectorXd values_;
  Eigen::VectorXcd coeffs_;
};

PeriodicField operator+(const PeriodicField& f, const PeriodicField& g);
PeriodicField operator-(const PeriodicField& f, const PeriodicField& g);
PeriodicField operator-(const PeriodicField& f);
PeriodicField operator*(double c, const PeriodicField& f);
inline PeriodicField operator*(const PeriodicField& f, double c) { return c * f; }
PeriodicField operator+(const PeriodicField& f, double c);
inline PeriodicField operator-(const PeriodicField& f, double c) { return f + (-c); }

PeriodicField synthesize(const ModeList& modes, const Grid& g);
PeriodicField synthesize(const ModeList& modes, int dim, int resolution);
/// Inverse of synthesize: one entry per ±k pair with |c_k| above `tol`.
ModeList to_modes(const PeriodicField& f, double tol = 1e-15);

/// ∂f/∂x_axis as the exact multiplier 2πik_axis; Nyquist modes are dropped.
PeriodicField derivative(const PeriodicField& f, int axis);
std::vector<PeriodicField> gradient(const PeriodicField& f);
PeriodicField laplacian(const PeriodicField& f);
/// Zero every mode with some |k_a| > n/3.
PeriodicField dealias(const PeriodicField& f);
/// L² norm of the part of f removed by dealias().
double out_of_band_norm(const PeriodicField& f);
/// Dealiased product: P(Pf · Pg).
PeriodicField multiply(const PeriodicField& f, const PeriodicField& g);
/// Spectral resampling onto an n2 grid (zero padding or truncation).
PeriodicField resample(const PeriodicField& f, int n2);
/// Largest |k_a| over modes with |c_k| > rel_tol·max|c|.
int bandwidth(const PeriodicField& f, double rel_tol = 1e-13);

/// ∫ f g dx, exact for fields on a common grid.
double inner(const PeriodicField& f, const PeriodicField& g);
double integral(const PeriodicField& f);
double l2_norm(const PeriodicField& f);
double max_abs(const PeriodicField& f);
/// max |f| over a grid refined `refine` times (capped at 2^21 nodes).
double sup_norm(const PeriodicField& f, int refine = 4);
/// ∫ Π factors dx evaluated without aliasing on a sufficiently fine grid.
double integrate_product(const std::vector<const PeriodicField*>& factors);

struct BesovIndex {
  double s = 0.0;
  double p = 2.0;
  double q = 2.0;
};
void validate(const BesovIndex& idx);

/// Dyadic block of a nonzero wavevector: 2^{j-1} ≤ |k| < 2^j; block 0 is k = 0.
int dyadic_block(const Wavevector& k);
/// (Σ_j (2^{js} ‖Δ_j f‖_p)^q)^{1/q} over sharp dyadic annuli; max over j for q = ∞.
double besov_norm(const PeriodicField& f, const BesovIndex& idx);
/// (Σ_k (1+|k|²)^s |c_k|²)^{1/2}.
double sobolev_norm(const PeriodicField& f, double s);

/// Fast repeated off-grid evaluation of several fields that share a grid.
/// Phase tables e^{2πimx_a} are computed once per point for all fields.
class FieldEvaluator {
 public:
  FieldEvaluator() = default;
  explicit FieldEvaluator(const std::vector<PeriodicField>& fields, double rel_tol = 1e-15);

  int size() const { return static_cast<int>(offsets_.size()) - 1; }
  /// out[i] = fields[i](x); x must already lie in [0,1)^d.
  void evaluate(const Point& x, double* out) const;
  /// Single-field evaluators only.
  double evaluate_one(const Point& x) const;

 private:
  int dim_ = 0;
  int kmax_ = 0;
  std::vector<int> offsets_{0};
  std::vector<int> mode_k_;  // dim_ entries per mode, shifted by kmax_
  std::vector<std::complex<double>> mode_c_;
};

/// Single real mode amplitude·cos(2πk·x) (resp. sin) on grid g.
PeriodicField cos_mode(const Grid& g, const Wavevector& k, double amplitude = 1.0);
PeriodicField sin_mode(const Grid& g, const Wavevector& k, double amplitude = 1.0);
Wavevector wavevector(std::initializer_list<int> k);

}  // namespace occlab
