#ifndef SCORETALK_GAUSSIAN_HPP
#define SCORETALK_GAUSSIAN_HPP

// Linear and coarsely linear scores under a bivariate normal prior
// theta ~ N(0, Sigma): Rayleigh-quotient payoffs, the credible linear scores
// (eigenvectors of Phi Sigma), truncated-normal payoffs of coarsely linear
// scores and a two-pass Monte Carlo payoff estimator.

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <string>
#include <vector>

#include <boost/math/distributions/normal.hpp>

#include "scoretalk/model.hpp"
#include "scoretalk/parallel.hpp"

namespace scoretalk {

using Vec2 = std::array<double, 2>;

inline double dot(const Vec2 &a, const Vec2 &b) { return a[0] * b[0] + a[1] * b[1]; }
inline double norm(const Vec2 &a) { return std::hypot(a[0], a[1]); }

/// Centered bivariate normal prior.
class GaussianModel {
public:
  GaussianModel(double var1, double var2, double cov12) : var1_(var1), var2_(var2), cov12_(cov12) {
    if (!std::isfinite(var1) || !std::isfinite(var2) || !std::isfinite(cov12))
      throw InvalidInput("gaussian model: non-finite covariance entry");
    if (!(var1 > 0.0))
      throw InvalidInput("gaussian model: sigma_1^2 must be > 0");
    if (!(var1 * var2 - cov12 * cov12 > 0.0))
      throw InvalidInput("gaussian model: covariance is not positive definite (det <= 0)");
  }

  double var1() const { return var1_; }
  double var2() const { return var2_; }
  double cov12() const { return cov12_; }
  double det() const { return var1_ * var2_ - cov12_ * cov12_; }

  Vec2 apply(const Vec2 &b) const { return {var1_ * b[0] + cov12_ * b[1], cov12_ * b[0] + var2_ * b[1]}; }
  double quad(const Vec2 &b) const { return dot(b, apply(b)); }

  /// Lower Cholesky factor, row-major {l11, l21, l22}.
  std::array<double, 3> cholesky() const {
    const double l11 = std::sqrt(var1_);
    const double l21 = cov12_ / l11;
    return {l11, l21, std::sqrt(var2_ - l21 * l21)};
  }

  /// tr(Phi Sigma) = phi sigma_1^2 + sigma_2^2, the loss of saying nothing.
  double prior_loss(const PayoffWeights &w) const { return w.phi() * var1_ + var2_; }

  friend bool operator==(const GaussianModel &, const GaussianModel &) = default;

private:
  double var1_, var2_, cov12_;
};

inline Vec2 apply_phi(const PayoffWeights &w, const Vec2 &v) { return {w.phi() * v[0], v[1]}; }

/// Linear score s(theta) = beta' theta, stored with unit norm and the first
/// nonzero component positive (rescalings induce the same outcomes).
class LinearScore {
public:
  LinearScore(double b1, double b2) {
    const double n = std::hypot(b1, b2);
    if (!(n > 0.0) || !std::isfinite(n))
      throw InvalidInput("linear score: beta must be finite and nonzero");
    double sign = (b1 > 0.0 || (b1 == 0.0 && b2 > 0.0)) ? 1.0 : -1.0;
    beta_ = {sign * b1 / n, sign * b2 / n};
  }
  explicit LinearScore(const Vec2 &b) : LinearScore(b[0], b[1]) {}

  const Vec2 &beta() const { return beta_; }
  double operator[](std::size_t i) const { return beta_[i]; }
  double angle() const { return std::atan2(beta_[1], beta_[0]); }

  friend bool operator==(const LinearScore &, const LinearScore &) = default;

private:
  Vec2 beta_{1.0, 0.0};
};

/// Linear index cut at increasing thresholds: message m on (c_{m-1}, c_m].
class CoarselyLinearScore {
public:
  CoarselyLinearScore(LinearScore beta, std::vector<double> cuts) : beta_(beta), cuts_(std::move(cuts)) {
    if (cuts_.empty())
      throw InvalidInput("coarsely linear score: at least one cut (two cells) required");
    for (std::size_t i = 0; i < cuts_.size(); ++i) {
      if (!std::isfinite(cuts_[i]))
        throw InvalidInput("coarsely linear score: cuts must be finite");
      if (i > 0 && !(cuts_[i] > cuts_[i - 1]))
        throw InvalidInput("coarsely linear score: cuts must be strictly increasing");
    }
  }

  const LinearScore &beta() const { return beta_; }
  const std::vector<double> &cuts() const { return cuts_; }
  std::size_t cells() const { return cuts_.size() + 1; }

  /// Cell index in [0, cells()) of a state.
  std::size_t cell(const Vec2 &theta) const {
    const double s = dot(beta_.beta(), theta);
    return static_cast<std::size_t>(std::lower_bound(cuts_.begin(), cuts_.end(), s) - cuts_.begin());
  }

private:
  LinearScore beta_;
  std::vector<double> cuts_;
};

inline Vec2 checked_direction(const Vec2 &beta) {
  if (!(norm(beta) > 0.0) || !std::isfinite(norm(beta)))
    throw InvalidInput("beta must be finite and nonzero");
  return beta;
}

/// q(beta) = beta' Sigma Phi Sigma beta / beta' Sigma beta: the variance the
/// receiver's actions explain under the linear score.
inline double rayleigh_quotient(const Vec2 &beta, const GaussianModel &g, const PayoffWeights &w) {
  const Vec2 sb = g.apply(checked_direction(beta));
  return dot(sb, apply_phi(w, sb)) / dot(beta, sb);
}
inline double rayleigh_quotient(const LinearScore &s, const GaussianModel &g, const PayoffWeights &w) {
  return rayleigh_quotient(s.beta(), g, w);
}

/// Full ex-ante payoff -(phi sigma_1^2 + sigma_2^2) + q(beta).
inline double exante_linear_payoff(const Vec2 &beta, const GaussianModel &g, const PayoffWeights &w) {
  return -g.prior_loss(w) + rayleigh_quotient(beta, g, w);
}
inline double exante_linear_payoff(const LinearScore &s, const GaussianModel &g, const PayoffWeights &w) {
  return exante_linear_payoff(s.beta(), g, w);
}

/// Action per unit of score, Sigma beta / beta' Sigma beta.
inline Vec2 receiver_coefficient(const Vec2 &beta, const GaussianModel &g) {
  const Vec2 sb = g.apply(checked_direction(beta));
  const double var_s = dot(beta, sb);
  return {sb[0] / var_s, sb[1] / var_s};
}
inline Vec2 receiver_coefficient(const LinearScore &s, const GaussianModel &g) {
  return receiver_coefficient(s.beta(), g);
}

/// Distance between beta and the sender's best reply direction
/// (beta' Sigma beta / beta' Sigma Phi Sigma beta) Phi Sigma beta, both unit
/// normalised. Zero exactly at credible linear scores.
inline double fixed_point_residual(const Vec2 &beta, const GaussianModel &g, const PayoffWeights &w) {
  checked_direction(beta);
  const Vec2 sb = g.apply(beta);
  const double scale = dot(beta, sb) / dot(sb, apply_phi(w, sb));
  const Vec2 image{scale * w.phi() * sb[0], scale * sb[1]};
  const double nb = norm(beta), ni = norm(image);
  return std::hypot(beta[0] / nb - image[0] / ni, beta[1] / nb - image[1] / ni);
}
inline double fixed_point_residual(const LinearScore &s, const GaussianModel &g, const PayoffWeights &w) {
  return fixed_point_residual(s.beta(), g, w);
}

struct LinearEquilibriumReport {
  std::array<LinearScore, 2> scores{LinearScore(1, 0), LinearScore(0, 1)};
  std::array<double, 2> eigenvalues{0.0, 0.0};
  std::size_t best_index = 0;
  std::size_t worst_index = 1;
  /// Every direction is an eigendirection (sigma_12 = 0, phi sigma_1^2 = sigma_2^2).
  bool degenerate_all_directions = false;

  const LinearScore &best() const { return scores[best_index]; }
  const LinearScore &worst() const { return scores[worst_index]; }
};

/// Ratios beta_1 / beta_2 of the two credible linear scores for sigma_12 != 0,
/// ordered (+root, -root). The smaller-magnitude root is taken as
/// -phi / (larger root), since the two roots multiply to -phi.
inline std::array<double, 2> credible_ratios(const GaussianModel &g, const PayoffWeights &w) {
  if (g.cov12() == 0.0)
    throw InvalidInput("credible_ratios: sigma_12 = 0 has axis scores, not finite ratios");
  const double a = w.phi() * g.var1() - g.var2();
  const double root = std::sqrt(a * a + 4.0 * w.phi() * g.cov12() * g.cov12());
  const double two_c = 2.0 * g.cov12();
  if (a >= 0.0) {
    const double plus = (a + root) / two_c;
    return {plus, -w.phi() / plus};
  }
  const double minus = (a - root) / two_c;
  return {-w.phi() / minus, minus};
}

/// The credible linear scores: eigenvectors of Phi Sigma, labelled best and
/// worst by their Rayleigh value.
inline LinearEquilibriumReport credible_linear_scores(const GaussianModel &g, const PayoffWeights &w) {
  LinearEquilibriumReport r;
  if (g.cov12() == 0.0) {
    r.scores = {LinearScore(1, 0), LinearScore(0, 1)};
    r.degenerate_all_directions = w.phi() * g.var1() == g.var2();
  } else {
    const auto ratio = credible_ratios(g, w);
    const auto from_ratio = [](double q) {
      return std::abs(q) >= 1.0 ? LinearScore(1.0, 1.0 / q) : LinearScore(q, 1.0);
    };
    r.scores = {from_ratio(ratio[0]), from_ratio(ratio[1])};
  }
  for (std::size_t i = 0; i < 2; ++i)
    r.eigenvalues[i] = rayleigh_quotient(r.scores[i], g, w);
  if (r.eigenvalues[1] > r.eigenvalues[0]) {
    r.best_index = 1;
    r.worst_index = 0;
  }
  return r;
}

/// Angle grid of q over [0, pi) for plot-data export.
struct QuotientSample {
  double angle = 0.0;
  double q = 0.0;
};

inline std::vector<QuotientSample> rayleigh_curve(const GaussianModel &g, const PayoffWeights &w,
                                                  std::size_t points) {
  std::vector<QuotientSample> out;
  out.reserve(points);
  for (std::size_t i = 0; i < points; ++i) {
    const double t = std::numbers::pi * static_cast<double>(i) / static_cast<double>(points);
    out.push_back({t, rayleigh_quotient(Vec2{std::cos(t), std::sin(t)}, g, w)});
  }
  return out;
}

// ---------------------------------------------------------------------------
// Standard normal helpers.

inline double normal_pdf(double z) { return std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi); }
inline double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }
inline double normal_sf(double z) { return 0.5 * std::erfc(z / std::numbers::sqrt2); }

/// P(a < Z <= b), evaluated in the tail where it is not a difference of
/// numbers close to one.
inline double normal_interval(double a, double b) {
  if (a >= 0.0)
    return normal_sf(a) - normal_sf(b);
  if (b <= 0.0)
    return normal_cdf(b) - normal_cdf(a);
  return 1.0 - normal_cdf(a) - normal_sf(b);
}

struct TruncatedMoment {
  double probability = 0.0;
  double mean = 0.0; ///< E[Z | a < Z <= b]
};

inline TruncatedMoment truncated_standard_normal(double a, double b) {
  const double p = normal_interval(a, b);
  const double pa = std::isfinite(a) ? normal_pdf(a) : 0.0;
  const double pb = std::isfinite(b) ? normal_pdf(b) : 0.0;
  return {p, (pa - pb) / p};
}

inline constexpr double kVoidCellMass = 1e-15;

/// Exact payoff of a coarsely linear score: the receiver's action in cell m
/// is Sigma beta / sigma_s^2 times E[s | cell], so the explained variance is
/// q(beta) / sigma_s^2 * sum_m P(m) E[s | m]^2.
inline double coarsely_linear_payoff(const CoarselyLinearScore &score, const GaussianModel &g,
                                     const PayoffWeights &w) {
  const Vec2 &beta = score.beta().beta();
  const double var_s = g.quad(beta);
  const double sd_s = std::sqrt(var_s);
  CompensatedSum explained;
  double lo = -std::numeric_limits<double>::infinity();
  for (std::size_t m = 0; m < score.cells(); ++m) {
    const double hi = m < score.cuts().size() ? score.cuts()[m] / sd_s : std::numeric_limits<double>::infinity();
    const TruncatedMoment t = truncated_standard_normal(lo, hi);
    if (!(t.probability >= kVoidCellMass))
      throw Refusal("coarsely_linear_payoff: cell " + std::to_string(m + 1) + " has probability " +
                    std::to_string(t.probability) + " (numerically void)");
    explained += t.probability * t.mean * t.mean;
    lo = hi;
  }
  return -g.prior_loss(w) + rayleigh_quotient(beta, g, w) * explained.value();
}

/// Cuts splitting the score into `cells` equiprobable cells.
inline std::vector<double> equiprobable_cuts(const LinearScore &beta, const GaussianModel &g, std::size_t cells) {
  if (cells < 2)
    throw InvalidInput("equiprobable_cuts: need at least two cells");
  const double sd_s = std::sqrt(g.quad(beta.beta()));
  const boost::math::normal_distribution<double> z;
  std::vector<double> cuts;
  for (std::size_t k = 1; k < cells; ++k)
    cuts.push_back(sd_s * boost::math::quantile(z, static_cast<double>(k) / static_cast<double>(cells)));
  return cuts;
}

// ---------------------------------------------------------------------------
// Monte Carlo oracle.

struct MonteCarloEstimate {
  double estimate = 0.0;
  double standard_error = 0.0;
  /// Pass-2 samples whose message never appeared in pass 1.
  std::size_t excluded = 0;
};

inline constexpr std::size_t kMonteCarloBlock = std::size_t{1} << 16;

namespace detail {

inline Vec2 sample_gaussian(std::mt19937_64 &rng, std::normal_distribution<double> &z,
                            const std::array<double, 3> &chol) {
  const double z1 = z(rng);
  const double z2 = z(rng);
  return {chol[0] * z1, chol[1] * z1 + chol[2] * z2};
}

} // namespace detail

/// Two-pass payoff estimate for an arbitrary score `message(theta)` with
/// values in [0, messages). Pass 1 estimates the receiver's posterior means,
/// pass 2 scores fresh samples against them. Blocks of kMonteCarloBlock
/// samples draw from their own seeded streams and are reduced in block
/// order, so the result depends on the seed only.
template <class Evaluator>
MonteCarloEstimate mc_payoff(Evaluator &&message, std::size_t messages, const GaussianModel &g,
                             const PayoffWeights &w, std::size_t samples, std::uint64_t seed,
                             unsigned threads = 1) {
  if (samples < 1000)
    throw InvalidInput("mc_payoff: at least 1000 samples required");
  if (messages == 0)
    throw InvalidInput("mc_payoff: message count must be positive");
  const auto chol = g.cholesky();
  const std::size_t blocks = (samples + kMonteCarloBlock - 1) / kMonteCarloBlock;
  const auto block_size = [&](std::size_t b) { return std::min(kMonteCarloBlock, samples - b * kMonteCarloBlock); };
  const auto checked = [&](const Vec2 &theta) {
    const auto m = static_cast<std::size_t>(message(theta));
    if (m >= messages)
      throw InvalidInput("mc_payoff: evaluator returned message " + std::to_string(m) + " out of range");
    return m;
  };

  // Pass 1: per-block sums of (count, theta_1, theta_2) per message.
  std::vector<double> partial(blocks * messages * 3, 0.0);
  parallel_chunks(blocks, threads, [&](std::size_t b) {
    auto rng = stream_engine(seed, 1, b);
    std::normal_distribution<double> z;
    double *slot = partial.data() + b * messages * 3;
    for (std::size_t i = 0; i < block_size(b); ++i) {
      const Vec2 theta = detail::sample_gaussian(rng, z, chol);
      const std::size_t m = checked(theta);
      slot[3 * m] += 1.0;
      slot[3 * m + 1] += theta[0];
      slot[3 * m + 2] += theta[1];
    }
  });
  std::vector<double> count(messages, 0.0);
  std::vector<Vec2> action(messages, Vec2{0.0, 0.0});
  for (std::size_t m = 0; m < messages; ++m) {
    CompensatedSum c, s1, s2;
    for (std::size_t b = 0; b < blocks; ++b) {
      const double *slot = partial.data() + (b * messages + m) * 3;
      c += slot[0];
      s1 += slot[1];
      s2 += slot[2];
    }
    count[m] = c.value();
    if (count[m] > 0.0)
      action[m] = {s1.value() / count[m], s2.value() / count[m]};
  }

  // Pass 2: payoff moments on a disjoint stream.
  struct Moments {
    CompensatedSum sum, sum_sq;
    std::size_t used = 0, excluded = 0;
  };
  std::vector<Moments> moments(blocks);
  parallel_chunks(blocks, threads, [&](std::size_t b) {
    auto rng = stream_engine(seed, 2, b);
    std::normal_distribution<double> z;
    Moments &mo = moments[b];
    for (std::size_t i = 0; i < block_size(b); ++i) {
      const Vec2 theta = detail::sample_gaussian(rng, z, chol);
      const std::size_t m = checked(theta);
      if (count[m] == 0.0) {
        ++mo.excluded;
        continue;
      }
      const double e1 = action[m][0] - theta[0];
      const double e2 = action[m][1] - theta[1];
      const double u = -w.phi() * e1 * e1 - e2 * e2;
      mo.sum += u;
      mo.sum_sq += u * u;
      ++mo.used;
    }
  });
  CompensatedSum sum, sum_sq;
  std::size_t used = 0, excluded = 0;
  for (const auto &mo : moments) {
    sum += mo.sum.value();
    sum_sq += mo.sum_sq.value();
    used += mo.used;
    excluded += mo.excluded;
  }
  if (used < 2)
    throw Refusal("mc_payoff: fewer than two usable pass-2 samples");
  const double n = static_cast<double>(used);
  const double mean = sum.value() / n;
  const double var = std::max(0.0, (sum_sq.value() / n - mean * mean) * n / (n - 1.0));
  return {mean, std::sqrt(var / n), excluded};
}

} // namespace scoretalk

#endif // SCORETALK_GAUSSIAN_HPP
