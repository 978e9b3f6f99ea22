#include "occlab/entropy.hpp"

#include "occlab/errors.hpp"
#include "occlab/rng.hpp"
#include "occlab/stats.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

namespace occlab {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

int block_of(long n) {
  if (n == 0) return 0;
  int j = 1;
  while (n >= (1L << (2 * j))) ++j;
  return j;
}

/// log volume of the Euclidean unit ball in R^n.
double log_unit_ball(double n) {
  if (n <= 0.0) return 0.0;
  return 0.5 * n * std::log(std::numbers::pi) - std::lgamma(0.5 * n + 1.0);
}

/// Lattice points of Z^d grouped by |k|², restricted to |k| ≤ K.
struct Shell {
  long n = 0;
  double count = 0.0;
  int block = 0;
};

std::vector<Shell> lattice_shells(int dim, int K) {
  const long N = long(K) * K;
  std::vector<double> r(std::size_t(N + 1), 0.0), next(std::size_t(N + 1));
  r[0] = 1.0;
  for (int a = 0; a < dim; ++a) {
    std::fill(next.begin(), next.end(), 0.0);
    for (long n = 0; n <= N; ++n) {
      if (r[std::size_t(n)] == 0.0) continue;
      for (long k = 0; n + k * k <= N; ++k) next[std::size_t(n + k * k)] += (k == 0 ? 1.0 : 2.0) * r[std::size_t(n)];
    }
    r.swap(next);
  }
  std::vector<Shell> out;
  for (long n = 0; n <= N; ++n)
    if (r[std::size_t(n)] > 0.0) out.push_back({n, r[std::size_t(n)], block_of(n)});
  return out;
}

struct Block {
  double dims = 0.0;       // D_j
  double radius = 0.0;     // r_j = M 2^{-js}
  double weight_max = 0.0; // largest covering-norm weight on the block
  std::vector<std::size_t> shells;
};

/// The truncated ball as a product over dyadic blocks, measured in the covering norm.
class Body {
 public:
  Body(const BesovBall& ball, EntropyNorm norm, const EntropyOptions& opt) : norm_(norm), ball_(ball) {
    if (ball.dim < 1) throw InvalidArgument("estimate_covering: dimension must be >= 1");
    if (!(ball.M > 0.0) || !std::isfinite(ball.M)) throw InvalidArgument("estimate_covering: ball radius M must be > 0");
    if (opt.truncation < 1) throw InvalidArgument("estimate_covering: truncation K must be >= 1");
    if (!std::isfinite(ball.s)) throw InvalidArgument("estimate_covering: s must be finite");
    t_ = opt.t;
    scale_ = 1.0;
    switch (norm) {
      case EntropyNorm::BesovSup:
        if (!std::isinf(ball.p))
          throw InvalidArgument("estimate_covering: the B^t_{inf,inf} bracket needs a p = inf ball");
        break;
      case EntropyNorm::RhoL:
        if (!std::isinf(ball.p))
          throw InvalidArgument("estimate_covering: the rho_L bracket needs a p = inf ball");
        if (!(opt.gamma > 0.0 && opt.gamma < 1.0))
          throw InvalidArgument("estimate_covering: gamma must lie in (0, 1)");
        if (!(opt.rho_constant > 0.0)) throw InvalidArgument("estimate_covering: rho_constant must be > 0");
        t_ = -1.0 + opt.gamma;
        scale_ = opt.rho_constant;
        break;
      case EntropyNorm::HMinus1:
        if (ball.p != 2.0) throw InvalidArgument("estimate_covering: the H^-1 bracket needs a p = 2 ball");
        t_ = -1.0;
        break;
    }
    // s − t > max(d/p − d/p′, 0) = 0 for both pairings.
    if (!(ball.s - t_ > 0.0)) {
      std::ostringstream os;
      os << "estimate_covering: need s - t > 0 (s = " << ball.s << ", t = " << t_ << ")";
      throw InvalidArgument(os.str());
    }
    shells_ = lattice_shells(ball.dim, opt.truncation);
    top_ = shells_.back().block;
    blocks_.assign(std::size_t(top_ + 1), Block{});
    for (std::size_t i = 0; i < shells_.size(); ++i) {
      Block& b = blocks_[std::size_t(shells_[i].block)];
      b.dims += shells_[i].count;
      b.shells.push_back(i);
    }
    for (int j = 0; j <= top_; ++j) {
      Block& b = blocks_[std::size_t(j)];
      b.radius = ball.M * std::pow(2.0, -j * ball.s);
      if (norm_ == EntropyNorm::HMinus1)
        b.weight_max = 1.0 / std::sqrt(1.0 + double(shells_[b.shells.front()].n));
      else
        b.weight_max = scale_ * std::pow(2.0, j * t_);
    }
  }

  double t() const { return t_; }

  /// Smallest ε for which the single ball at 0 covers.
  double radius() const {
    double r = 0.0;
    for (const Block& b : blocks_) {
      const double e = b.radius * b.weight_max;
      r = norm_ == EntropyNorm::HMinus1 ? r + e * e : std::max(r, e);
    }
    return norm_ == EntropyNorm::HMinus1 ? std::sqrt(r) : r;
  }

  double semi_axis(const Shell& sh) const {
    return blocks_[std::size_t(sh.block)].radius / std::sqrt(1.0 + double(sh.n));
  }

  double active_coordinates(double eps) const {
    double a = 0.0;
    for (const Block& b : blocks_) {
      if (norm_ != EntropyNorm::HMinus1) {
        if (b.radius * b.weight_max > eps) a += b.dims;
        continue;
      }
      for (std::size_t i : b.shells)
        if (semi_axis(shells_[i]) > eps) a += shells_[i].count;
    }
    return a;
  }

  bool saturated(double eps) const {
    const Block& b = blocks_.back();
    return b.radius * b.weight_max > eps;
  }

  std::pair<double, double> bracket(double eps) const {
    if (eps >= radius()) return {0.0, 0.0};
    return norm_ == EntropyNorm::HMinus1 ? ellipsoid_bracket(eps) : sup_bracket(eps);
  }

 private:
  /// Blocks are balls of one norm and the covering norm is the max over blocks, so
  /// (r/ε)^D ≤ N(rB, εB) ≤ (1 + 2r/ε)^D per block and the logs add.
  std::pair<double, double> sup_bracket(double eps) const {
    double lo = 0.0, up = 0.0;
    for (const Block& b : blocks_) {
      const double q = b.radius * b.weight_max / eps;
      if (q <= 1.0) continue;
      lo += b.dims * std::log(q);
      up += b.dims * std::log1p(2.0 * q);
    }
    return {lo, up};
  }

  /// Product of Euclidean balls seen through diagonal weights: a product of ellipsoids.
  std::pair<double, double> ellipsoid_bracket(double eps) const {
    // Lower: projections onto {axes > θε} have explicit volume.
    double lo = 0.0;
    for (int s = 0; s <= 24; ++s) {
      const double theta = std::pow(16.0, s / 24.0);
      double total = 0.0, lv = 0.0;
      for (const Block& b : blocks_) {
        double nj = 0.0, la = 0.0;
        for (std::size_t i : b.shells) {
          const double a = semi_axis(shells_[i]);
          if (a <= theta * eps) break;  // shells are sorted by |k|, axes decrease
          nj += shells_[i].count;
          la += shells_[i].count * std::log(a);
        }
        if (nj == 0.0) continue;
        total += nj;
        lv += log_unit_ball(nj) + la;
      }
      if (total == 0.0) break;
      lo = std::max(lo, lv - log_unit_ball(total) - total * std::log(eps));
    }
    // Upper: drop blocks above J (their sup radius δ fits in ε), pack the rest at
    // η = √(ε² − δ²) and bound vol(P + η/2·B) by per-block enclosures.
    double up = kInf;
    for (int J = 0; J <= top_; ++J) {
      double d2 = 0.0;
      for (int j = J + 1; j <= top_; ++j) {
        const double e = blocks_[std::size_t(j)].radius * blocks_[std::size_t(j)].weight_max;
        d2 += e * e;
      }
      if (d2 >= eps * eps) continue;
      const double h = 0.5 * std::sqrt(eps * eps - d2);
      double dims = 0.0, ball_enclosure = 0.0, ellipsoid_enclosure = 0.0;
      for (int j = 0; j <= J; ++j) {
        const Block& b = blocks_[std::size_t(j)];
        dims += b.dims;
        ball_enclosure += log_unit_ball(b.dims) + b.dims * std::log(b.radius * b.weight_max + h);
        // E + hB ⊂ √2·E(a + h)
        ellipsoid_enclosure += log_unit_ball(b.dims);
        for (std::size_t i : b.shells)
          ellipsoid_enclosure += shells_[i].count * std::log(std::sqrt(2.0) * (semi_axis(shells_[i]) + h));
      }
      const double v = std::min(ball_enclosure, ellipsoid_enclosure) - log_unit_ball(dims) - dims * std::log(h);
      up = std::min(up, v);
    }
    up = std::max(up, 0.0);
    return {lo, std::max(lo, up)};
  }

  EntropyNorm norm_;
  BesovBall ball_;
  double t_ = 0.0;
  double scale_ = 1.0;
  std::vector<Shell> shells_;
  std::vector<Block> blocks_;
  int top_ = 0;
};

void require_curve(const EntropyCurve& c, const char* who) {
  const std::size_t n = c.radii.size();
  if (c.log_covering.size() != n) {
    std::ostringstream os;
    os << who << ": radii and log_covering have different lengths";
    throw InvalidArgument(os.str());
  }
  if (n < 5) throw InvalidArgument(std::string(who) + ": need at least 5 radii");
  for (std::size_t i = 0; i < n; ++i) {
    if (!(c.radii[i] > 0.0) || !std::isfinite(c.log_covering[i]) || c.log_covering[i] < 0.0)
      throw InvalidArgument(std::string(who) + ": radii must be positive and log N finite, nonnegative");
    if (i && !(c.radii[i] < c.radii[i - 1])) throw InvalidArgument(std::string(who) + ": radii must decrease");
    if (i && c.log_covering[i] < c.log_covering[i - 1] * (1.0 - 1e-12))
      throw InvalidArgument(std::string(who) + ": non-monotone curve (log N must not decrease as eps shrinks)");
  }
  if (c.radii.front() / c.radii.back() < 10.0 * (1.0 - 1e-9))
    throw InvalidArgument(std::string(who) + ": radii must span at least one decade");
}

/// Indices of the smallest-ε decade among usable points (positive, unsaturated).
std::vector<std::size_t> tail_window(const EntropyCurve& c) {
  std::vector<std::size_t> use;
  for (std::size_t i = 0; i < c.radii.size(); ++i) {
    const bool sat = i < c.saturated.size() && c.saturated[i];
    if (c.log_covering[i] > 0.0 && !sat) use.push_back(i);
  }
  if (use.empty()) return use;
  const double lo = c.radii[use.back()];
  std::vector<std::size_t> w;
  for (std::size_t i : use)
    if (c.radii[i] <= 10.0 * lo * (1.0 + 1e-9)) w.push_back(i);
  if (w.size() < 3) w = use;
  return w;
}

}  // namespace

std::string to_string(EntropyNorm n) {
  switch (n) {
    case EntropyNorm::BesovSup: return "besov_sup";
    case EntropyNorm::HMinus1: return "h_minus_1";
    case EntropyNorm::RhoL: return "rho_L";
  }
  return "?";
}

EntropyNorm parse_entropy_norm(const std::string& s) {
  if (s == "besov_sup") return EntropyNorm::BesovSup;
  if (s == "h_minus_1") return EntropyNorm::HMinus1;
  if (s == "rho_L") return EntropyNorm::RhoL;
  throw InvalidArgument("unknown entropy norm '" + s + "' (expected besov_sup, h_minus_1 or rho_L)");
}

EntropyCurve estimate_covering(const BesovBall& ball, EntropyNorm norm, std::vector<double> radii,
                               const EntropyOptions& opt) {
  const Body body(ball, norm, opt);
  for (double r : radii)
    if (!(r > 0.0) || !std::isfinite(r)) throw InvalidArgument("estimate_covering: radii must be positive");
  std::sort(radii.begin(), radii.end(), std::greater<>());
  radii.erase(std::unique(radii.begin(), radii.end()), radii.end());

  EntropyCurve c;
  c.norm = norm;
  c.ball = ball;
  c.t = body.t();
  c.truncation = opt.truncation;
  c.radius = body.radius();
  for (double eps : radii) {
    if (body.active_coordinates(eps) > opt.budget) {
      c.truncated = true;
      break;
    }
    const auto [lo, up] = body.bracket(eps);
    c.radii.push_back(eps);
    c.lower.push_back(lo);
    c.upper.push_back(up);
    c.saturated.push_back(body.saturated(eps));
  }
  // N is monotone in ε, so each bound transfers along the curve.
  const std::size_t n = c.radii.size();
  for (std::size_t i = 1; i < n; ++i) c.lower[i] = std::max(c.lower[i], c.lower[i - 1]);
  for (std::size_t i = n; i-- > 1;) c.upper[i - 1] = std::min(c.upper[i - 1], c.upper[i]);
  for (std::size_t i = 0; i < n; ++i) c.log_covering.push_back(0.5 * (c.lower[i] + c.upper[i]));
  return c;
}

std::vector<double> entropy_radii(const BesovBall& ball, EntropyNorm norm, const EntropyOptions& opt,
                                  double decades, int per_decade) {
  if (!(decades > 0.0) || per_decade < 1) throw InvalidArgument("entropy_radii: need decades > 0 and per_decade >= 1");
  const double R = Body(ball, norm, opt).radius();
  const int n = int(std::lround(decades * per_decade));
  std::vector<double> r;
  for (int i = 0; i <= n; ++i) r.push_back(R * std::pow(10.0, -double(i) / per_decade));
  return r;
}

ExponentFit fit_entropy_exponent(const EntropyCurve& c, const EntropyCurve* doubled) {
  const std::size_t n = c.radii.size();
  if (doubled && doubled->radii != c.radii)
    throw InvalidArgument("fit_entropy_exponent: the K-doubled curve must share the radii");
  std::vector<bool> ok(n, false);
  for (std::size_t i = 0; i < n; ++i) {
    ok[i] = c.lower[i] > 0.0 && !c.saturated[i];
    if (doubled && ok[i]) {
      const double width = std::max(c.upper[i] - c.lower[i], doubled->upper[i] - doubled->lower[i]);
      ok[i] = std::abs(c.log_covering[i] - doubled->log_covering[i]) <= width;
    }
  }
  for (std::size_t e = n; e-- > 0;) {
    if (!ok[e]) continue;
    std::size_t b = e;
    bool good = true;
    while (b > 0 && c.radii[b] < 10.0 * c.radii[e] * (1.0 - 1e-9)) {
      --b;
      if (!ok[b]) {
        good = false;
        break;
      }
    }
    if (!good || c.radii[b] < 10.0 * c.radii[e] * (1.0 - 1e-9)) continue;
    std::vector<double> x, mid, lo, up;
    for (std::size_t i = b; i <= e; ++i) {
      x.push_back(-std::log(c.radii[i]));
      mid.push_back(std::log(c.log_covering[i]));
      lo.push_back(std::log(c.lower[i]));
      up.push_back(std::log(c.upper[i]));
    }
    const RateFit f = fit_line(x, mid);
    ExponentFit out;
    out.exponent = f.slope;
    out.ci = f.ci;
    out.exponent_lower = fit_line(x, lo).slope;
    out.exponent_upper = fit_line(x, up).slope;
    out.eps_hi = c.radii[b];
    out.eps_lo = c.radii[e];
    return out;
  }
  throw NumericalFailure(
      "fit_entropy_exponent: no decade of radii is free of truncation saturation; raise K or the radii");
}

DudleyResult dudley_integral(const EntropyCurve& c) {
  require_curve(c, "dudley_integral");
  DudleyResult out;
  const std::size_t n = c.radii.size();
  for (std::size_t i = 1; i < n; ++i)
    out.measured += 0.5 * (std::sqrt(c.log_covering[i]) + std::sqrt(c.log_covering[i - 1])) *
                    (c.radii[i - 1] - c.radii[i]);
  const std::vector<std::size_t> w = tail_window(c);
  if (w.empty()) {
    out.value = out.measured;
    return out;
  }
  if (w.size() < 2) throw NumericalFailure("dudley_integral: too few positive radii to extrapolate the tail");
  std::vector<double> x, y;
  for (std::size_t i : w) {
    x.push_back(std::log(c.radii[i]));
    y.push_back(0.5 * std::log(c.log_covering[i]));
  }
  const RateFit f = fit_line(x, y);
  out.exponent = f.slope;
  if (out.exponent <= -1.0) {
    out.divergent = true;
    out.tail = kInf;
    out.value = kInf;
    return out;
  }
  const double eps = c.radii.back();
  const double A = std::sqrt(c.log_covering.back()) / std::pow(eps, out.exponent);
  out.tail = A * std::pow(eps, out.exponent + 1.0) / (out.exponent + 1.0);
  out.value = out.measured + out.tail;
  return out;
}

SudakovTrend sudakov_check(const EntropyCurve& c) {
  require_curve(c, "sudakov_check");
  const std::vector<std::size_t> w = tail_window(c);
  if (w.size() < 2) throw NumericalFailure("sudakov_check: too few positive radii");
  std::vector<double> x, y;
  for (std::size_t i : w) {
    x.push_back(std::log(c.radii[i]));
    y.push_back(std::log(c.radii[i]) + 0.5 * std::log(c.log_covering[i]));
  }
  const RateFit f = fit_line(x, y);
  return {-f.slope, f.ci};
}

// ---------------------------------------------------------------- greedy net

namespace {

struct NetCoordinate {
  std::vector<int> k;
  int block = 0;
  bool sine = false;
};

}  // namespace

NetEstimate greedy_net_estimate(const BesovBall& ball, EntropyNorm norm, const std::vector<double>& radii,
                                const EntropyOptions& opt, int net_points, int restarts, std::uint64_t seed) {
  const Body body(ball, norm, opt);  // validates the pairing
  if (net_points < 2 || restarts < 1) throw InvalidArgument("greedy_net_estimate: need >= 2 points and >= 1 restart");
  const int d = ball.dim, K = opt.truncation;
  // Orthonormal real basis: 1, √2cos(2πk·x), √2sin(2πk·x) over a half-lattice.
  std::vector<NetCoordinate> coords;
  std::vector<int> k(std::size_t(d), -K);
  for (;;) {
    long n2 = 0;
    for (int v : k) n2 += long(v) * v;
    bool positive = false;  // first nonzero entry > 0
    for (int v : k)
      if (v != 0) {
        positive = v > 0;
        break;
      }
    if (n2 <= long(K) * K) {
      if (n2 == 0) coords.push_back({k, 0, false});
      if (positive) {
        coords.push_back({k, block_of(n2), false});
        coords.push_back({k, block_of(n2), true});
      }
    }
    int a = d - 1;
    while (a >= 0 && k[std::size_t(a)] == K) k[std::size_t(a--)] = -K;
    if (a < 0) break;
    ++k[std::size_t(a)];
  }
  const std::size_t D = coords.size();
  if (D > 64) throw InvalidArgument("greedy_net_estimate: net sampling is limited to 64 coordinates; lower K");
  int top = 0;
  for (const auto& c : coords) top = std::max(top, c.block);
  const double t = body.t();
  const double scale = norm == EntropyNorm::RhoL ? opt.rho_constant : 1.0;

  // Evaluation nodes for sup norms: 8 per shortest wavelength along each axis.
  const int ne = 8 * K;
  std::size_t nodes = 1;
  for (int a = 0; a < d; ++a) nodes *= std::size_t(ne);
  const bool sup = norm != EntropyNorm::HMinus1;
  if (sup && nodes * D > (std::size_t(1) << 24)) throw InvalidArgument("greedy_net_estimate: evaluation grid too large");
  Eigen::MatrixXd basis;  // nodes × D
  if (sup) {
    basis.resize(Eigen::Index(nodes), Eigen::Index(D));
    for (std::size_t p = 0; p < nodes; ++p) {
      std::size_t rest = p;
      std::vector<double> x(static_cast<std::size_t>(d));
      for (int a = d - 1; a >= 0; --a) {
        x[std::size_t(a)] = double(rest % std::size_t(ne)) / ne;
        rest /= std::size_t(ne);
      }
      for (std::size_t c = 0; c < D; ++c) {
        double ph = 0.0;
        for (int a = 0; a < d; ++a) ph += coords[c].k[std::size_t(a)] * x[std::size_t(a)];
        const double z = 2.0 * std::numbers::pi * ph;
        basis(Eigen::Index(p), Eigen::Index(c)) =
            coords[c].block == 0 ? 1.0 : std::sqrt(2.0) * (coords[c].sine ? std::sin(z) : std::cos(z));
      }
    }
  }
  std::vector<std::vector<std::size_t>> by_block(std::size_t(top + 1));
  for (std::size_t c = 0; c < D; ++c) by_block[std::size_t(coords[c].block)].push_back(c);
  auto block_values = [&](const Eigen::VectorXd& x, std::size_t j) {
    Eigen::VectorXd v = Eigen::VectorXd::Zero(Eigen::Index(nodes));
    for (std::size_t c : by_block[j]) v += x[Eigen::Index(c)] * basis.col(Eigen::Index(c));
    return v;
  };

  // Sample the net.
  PhiloxStream rng(seed, 0);
  std::vector<Eigen::VectorXd> net;
  std::vector<std::vector<Eigen::VectorXd>> values;  // per point, per block
  for (int i = 0; i < net_points; ++i) {
    Eigen::VectorXd x = Eigen::VectorXd::Zero(Eigen::Index(D));
    std::vector<Eigen::VectorXd> vals;
    for (std::size_t j = 0; j < by_block.size(); ++j) {
      const double r = ball.M * std::pow(2.0, -double(j) * ball.s);
      const std::size_t Dj = by_block[j].size();
      if (!sup) {
        // Uniform in the Euclidean ball of radius r.
        Eigen::VectorXd g(static_cast<Eigen::Index>(Dj));
        for (std::size_t c = 0; c < Dj; ++c) g[Eigen::Index(c)] = rng.normal();
        g *= r * std::pow(rng.uniform(), 1.0 / double(Dj)) / g.norm();
        for (std::size_t c = 0; c < Dj; ++c) x[Eigen::Index(by_block[j][c])] = g[Eigen::Index(c)];
        continue;
      }
      // Uniform in {‖Δ_j f‖_∞ ≤ r} by rejection from the coefficient box |c| ≤ √2 r.
      for (int attempt = 0;; ++attempt) {
        if (attempt > 200000) throw NumericalFailure("greedy_net_estimate: rejection sampling stalled; lower K");
        for (std::size_t c : by_block[j]) x[Eigen::Index(c)] = std::sqrt(2.0) * r * (2.0 * rng.uniform() - 1.0);
        const Eigen::VectorXd v = block_values(x, j);
        if (v.cwiseAbs().maxCoeff() <= r) {
          vals.push_back(v);
          break;
        }
      }
    }
    net.push_back(x);
    values.push_back(std::move(vals));
  }

  // Pairwise distances in the covering norm.
  const std::size_t B = std::size_t(net_points);
  Eigen::MatrixXd dist = Eigen::MatrixXd::Zero(Eigen::Index(B), Eigen::Index(B));
  Eigen::VectorXd w(static_cast<Eigen::Index>(D));
  for (std::size_t c = 0; c < D; ++c) {
    long n2 = 0;
    for (int v : coords[c].k) n2 += long(v) * v;
    w[Eigen::Index(c)] = 1.0 / std::sqrt(1.0 + double(n2));
  }
  for (std::size_t a = 0; a < B; ++a)
    for (std::size_t b = a + 1; b < B; ++b) {
      double v = 0.0;
      if (!sup) {
        v = (w.array() * (net[a] - net[b]).array()).matrix().norm();
      } else {
        for (std::size_t j = 0; j < by_block.size(); ++j)
          v = std::max(v, scale * std::pow(2.0, double(j) * t) * (values[a][j] - values[b][j]).cwiseAbs().maxCoeff());
      }
      dist(Eigen::Index(a), Eigen::Index(b)) = dist(Eigen::Index(b), Eigen::Index(a)) = v;
    }

  NetEstimate out;
  out.radii = radii;
  for (double eps : radii) {
    // Farthest-point insertion from several starts.
    std::size_t best = 0;
    for (int rs = 0; rs < restarts; ++rs) {
      std::size_t start = std::size_t(rng.next_u64() % B);
      Eigen::VectorXd md = dist.col(Eigen::Index(start));
      std::size_t count = 1;
      for (;;) {
        Eigen::Index far;
        if (md.maxCoeff(&far) <= eps) break;
        ++count;
        md = md.cwiseMin(dist.col(far));
      }
      best = std::max(best, count);
    }
    out.exhausted = out.exhausted || best == B;
    out.log_packing.push_back(std::log(double(best)));

    // Greedy set cover of the net by ε-balls centred at net points.
    std::vector<int> gain(B, 0);
    std::vector<bool> covered(B, false);
    for (std::size_t a = 0; a < B; ++a)
      for (std::size_t b = 0; b < B; ++b) gain[a] += dist(Eigen::Index(a), Eigen::Index(b)) <= eps;
    std::size_t left = B, centres = 0;
    while (left > 0) {
      const std::size_t a = std::size_t(std::max_element(gain.begin(), gain.end()) - gain.begin());
      ++centres;
      for (std::size_t b = 0; b < B; ++b) {
        if (covered[b] || dist(Eigen::Index(a), Eigen::Index(b)) > eps) continue;
        covered[b] = true;
        --left;
        for (std::size_t c = 0; c < B; ++c)
          if (dist(Eigen::Index(b), Eigen::Index(c)) <= eps) --gain[c];
      }
    }
    out.log_cover.push_back(std::log(double(centres)));
  }
  return out;
}

}  // namespace occlab
