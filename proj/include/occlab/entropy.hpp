#pragma once

#include <cstdint>
#include <limits>
#include <string>
#include <vector>

namespace occlab {

/// Pseudo-distances for covering numbers.
///  - BesovSup: ‖·‖_{B^t_{∞∞}} over sharp dyadic blocks; needs a p = ∞ ball.
///  - HMinus1:  (Σ_k (1+|k|²)^{-1} |c_k|²)^{1/2}; needs a p = 2 ball.
///  - RhoL:     covered through the dominating norm C‖·‖_{B^{-1+γ}_{∞∞}}. Only the upper
///              side of the bracket bounds ρ_L itself.
enum class EntropyNorm { BesovSup, HMinus1, RhoL };

std::string to_string(EntropyNorm n);
EntropyNorm parse_entropy_norm(const std::string& s);

/// {f : sup_j 2^{js} ‖Δ_j f‖_p ≤ M} truncated to |k| ≤ K.
struct BesovBall {
  int dim = 1;
  double s = 1.0;
  double p = std::numeric_limits<double>::infinity();  // 2 or ∞
  double M = 1.0;
};

struct EntropyOptions {
  double t = -0.5;             // BesovSup smoothness of the covering norm
  double gamma = 0.1;          // RhoL: index of B^{-1+γ}_{∞∞}
  double rho_constant = 1.0;   // RhoL: ρ_L ≤ C ‖·‖_{B^{-1+γ}_{∞∞}}
  int truncation = 64;         // K
  double budget = 1e9;         // max active coordinates per radius before the curve is cut
};

/// Two-sided volumetric bracket on log N(ball, norm, ε). The ball is a product over dyadic
/// blocks; lower bounds come from volume ratios of coordinate projections, upper bounds
/// from the packing-volume argument after discarding blocks whose total radius fits in ε.
struct EntropyCurve {
  std::vector<double> radii;         // decreasing
  std::vector<double> lower, upper;  // bounds on log N
  std::vector<double> log_covering;  // bracket midpoint
  std::vector<bool> saturated;       // top frequency block still active: truncation visible
  EntropyNorm norm = EntropyNorm::BesovSup;
  BesovBall ball;
  double t = 0.0;                    // smoothness of the covering norm
  int truncation = 0;
  double radius = 0.0;               // one ball centred at 0 covers for ε ≥ radius
  bool truncated = false;            // budget exhausted; radii below the cut were dropped
};

EntropyCurve estimate_covering(const BesovBall& ball, EntropyNorm norm, std::vector<double> radii,
                               const EntropyOptions& opt = {});

/// `per_decade` radii from the covering radius down to radius · 10^{-decades}.
std::vector<double> entropy_radii(const BesovBall& ball, EntropyNorm norm, const EntropyOptions& opt,
                                  double decades, int per_decade = 8);

/// Slope of log log N against log(1/ε) over one decade.
struct ExponentFit {
  double exponent = 0.0;        // from the bracket midpoint
  double exponent_lower = 0.0;  // from the lower curve
  double exponent_upper = 0.0;  // from the upper curve
  double ci = 0.0;
  double eps_hi = 0.0, eps_lo = 0.0;
};

/// Fits the smallest-ε decade that is free of truncation saturation. With `doubled`
/// (same ball at 2K) the window must also be K-stable: midpoints within the bracket width.
ExponentFit fit_entropy_exponent(const EntropyCurve& curve, const EntropyCurve* doubled = nullptr);

struct DudleyResult {
  double value = 0.0;     // measured part plus tail, infinite when divergent
  double measured = 0.0;  // trapezoid over the measured radii
  double tail = 0.0;      // ∫_0^{ε_min} A ε^β
  double exponent = 0.0;  // β in √log N ≈ A ε^β at small ε
  bool divergent = false;
};

/// ∫_0^∞ √log N dε. Needs ≥ 5 radii over ≥ 1 decade and a nonincreasing curve.
DudleyResult dudley_integral(const EntropyCurve& curve);

struct SudakovTrend {
  double growth = 0.0;  // g in ε √log N ∝ ε^{-g}; g > 0 is consistent with divergence
  double ci = 0.0;
};

SudakovTrend sudakov_check(const EntropyCurve& curve);

/// Greedy farthest-point packing (with restarts) and greedy set cover on a random net drawn
/// from a small truncated ball. A cross-check of the volumetric bracket, limited to
/// log(budget) and to nets of a few dozen dimensions.
struct NetEstimate {
  std::vector<double> radii;
  std::vector<double> log_packing;  // log of an ε-separated subset of the ball
  std::vector<double> log_cover;    // log of a greedy ε-cover of the net
  bool exhausted = false;           // packing reached the net size at some radius
};

NetEstimate greedy_net_estimate(const BesovBall& ball, EntropyNorm norm, const std::vector<double>& radii,
                                const EntropyOptions& opt, int net_points, int restarts, std::uint64_t seed);

}  // namespace occlab
