#ifndef SCORETALK_FINITE_HPP
#define SCORETALK_FINITE_HPP

// Exhaustive analysis of finite state spaces: the intermediate value
// property, enumeration of scores, optimal and credible scores, the value
// of commitment and the closed forms for the four-state square.

#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "scoretalk/model.hpp"

namespace scoretalk {

struct IvpWitness {
  std::size_t high = 0; ///< state with the larger rank
  std::size_t low = 0;  ///< state with the smaller rank
  int rank = 0;         ///< intermediate rank missing from the box
  friend bool operator==(const IvpWitness &, const IvpWitness &) = default;
};

struct IvpVerdict {
  bool feasible = true;
  std::optional<IvpWitness> witness_failure;
};

/// Checks the intermediate value property: whenever s(t) > s(t'), every rank
/// strictly between them is attained inside the box [t ^ t', t v t'].
///
/// Pairs are scanned with the higher-ranked state in decreasing rank order
/// (ties by index), the lower one by index and the missing rank ascending, so
/// the reported witness is deterministic.
inline IvpVerdict check_ivp(const FiniteModel &model, const OrderedScore &score) {
  score.check_fits(model);
  const std::size_t n = model.size();
  std::vector<std::size_t> by_rank(n);
  for (std::size_t i = 0; i < n; ++i)
    by_rank[i] = i;
  std::stable_sort(by_rank.begin(), by_rank.end(),
                   [&](std::size_t a, std::size_t b) { return score.rank(a) > score.rank(b); });

  for (std::size_t hi : by_rank) {
    for (std::size_t lo = 0; lo < n; ++lo) {
      if (score.rank(hi) - score.rank(lo) < 2)
        continue;
      const Point box_lo = componentwise_min(model.state(hi), model.state(lo));
      const Point box_hi = componentwise_max(model.state(hi), model.state(lo));
      for (int m = score.rank(lo) + 1; m < score.rank(hi); ++m) {
        bool found = false;
        for (std::size_t t = 0; t < n && !found; ++t)
          found = score.rank(t) == m && in_box(model.state(t), box_lo, box_hi);
        if (!found)
          return {false, IvpWitness{hi, lo, m}};
      }
    }
  }
  return {};
}

namespace detail {

using StateMask = std::uint32_t;

// Restricted growth strings in lexicographic order: every set partition of
// n items exactly once.
template <class Visit> void for_each_set_partition(std::size_t n, Visit &&visit) {
  std::vector<int> rgs(n, 0);
  std::vector<int> prefix_max(n, 0);
  while (true) {
    visit(std::span<const int>(rgs));
    std::size_t i = n;
    while (i > 1) {
      --i;
      if (rgs[i] <= prefix_max[i - 1]) {
        ++rgs[i];
        prefix_max[i] = std::max(prefix_max[i - 1], rgs[i]);
        for (std::size_t j = i + 1; j < n; ++j) {
          rgs[j] = 0;
          prefix_max[j] = prefix_max[i];
        }
        break;
      }
      if (i == 1)
        return;
    }
    if (n <= 1)
      return;
  }
}

// Searches block orderings that satisfy IVP, placing ranks bottom-up and
// rejecting a prefix as soon as a pair inside it lacks an intermediate block.
class OrderingSearch {
public:
  OrderingSearch(const std::vector<std::vector<StateMask>> &box, std::vector<StateMask> blocks)
      : box_(box), blocks_(std::move(blocks)), k_(blocks_.size()),
        cache_(k_ * k_ * k_, static_cast<std::int8_t>(-1)) {}

  std::optional<std::vector<int>> find() {
    order_.clear();
    used_.assign(k_, false);
    if (extend())
      return order_;
    return std::nullopt;
  }

private:
  bool pair_ok(int p, int q, int mid) {
    auto &c = cache_[(static_cast<std::size_t>(p) * k_ + static_cast<std::size_t>(q)) * k_ +
                     static_cast<std::size_t>(mid)];
    if (c < 0) {
      bool ok = true;
      for (std::size_t a = 0; a < box_.size() && ok; ++a) {
        if (!(blocks_[p] >> a & 1U))
          continue;
        for (std::size_t b = 0; b < box_.size() && ok; ++b)
          if (blocks_[q] >> b & 1U)
            ok = (box_[a][b] & blocks_[mid]) != 0;
      }
      c = ok ? 1 : 0;
    }
    return c == 1;
  }

  bool extend() {
    if (order_.size() == k_)
      return true;
    const std::size_t j = order_.size();
    for (std::size_t cand = 0; cand < k_; ++cand) {
      if (used_[cand])
        continue;
      bool ok = true;
      for (std::size_t i = 0; i + 1 < j && ok; ++i)
        for (std::size_t t = i + 1; t < j && ok; ++t)
          ok = pair_ok(order_[i], static_cast<int>(cand), order_[t]);
      if (!ok)
        continue;
      used_[cand] = true;
      order_.push_back(static_cast<int>(cand));
      if (extend())
        return true;
      order_.pop_back();
      used_[cand] = false;
    }
    return false;
  }

  const std::vector<std::vector<StateMask>> &box_;
  std::vector<StateMask> blocks_;
  std::size_t k_;
  std::vector<std::int8_t> cache_;
  std::vector<int> order_;
  std::vector<bool> used_;
};

} // namespace detail

inline constexpr std::size_t kMaxEnumeratedStates = 10;

/// One IVP-passing score per partition of the states into 2..max_k blocks.
/// A partition is admitted when some ordering of its blocks passes
/// check_ivp; the first such ordering found is returned. Output order follows
/// the lexicographic order of restricted growth strings.
inline std::vector<OrderedScore> enumerate_scores(const FiniteModel &model, int max_k) {
  const std::size_t n = model.size();
  if (n > kMaxEnumeratedStates)
    throw Refusal("enumerate_scores: " + std::to_string(n) + " states exceeds the exhaustive-search limit of " +
                  std::to_string(kMaxEnumeratedStates));
  if (max_k < 2 || static_cast<std::size_t>(max_k) > n)
    throw InvalidInput("enumerate_scores: max_K must lie in [2, " + std::to_string(n) + "], got " +
                       std::to_string(max_k));

  std::vector<std::vector<detail::StateMask>> box(n, std::vector<detail::StateMask>(n, 0));
  for (std::size_t a = 0; a < n; ++a)
    for (std::size_t b = 0; b < n; ++b) {
      const Point lo = componentwise_min(model.state(a), model.state(b));
      const Point hi = componentwise_max(model.state(a), model.state(b));
      for (std::size_t t = 0; t < n; ++t)
        if (in_box(model.state(t), lo, hi))
          box[a][b] |= detail::StateMask{1} << t;
    }

  std::vector<OrderedScore> out;
  detail::for_each_set_partition(n, [&](std::span<const int> rgs) {
    const int k = *std::max_element(rgs.begin(), rgs.end()) + 1;
    if (k < 2 || k > max_k)
      return;
    std::vector<detail::StateMask> blocks(static_cast<std::size_t>(k), 0);
    for (std::size_t i = 0; i < n; ++i)
      blocks[static_cast<std::size_t>(rgs[i])] |= detail::StateMask{1} << i;
    detail::OrderingSearch search(box, blocks);
    const auto order = search.find();
    if (!order)
      return;
    std::vector<int> rank_of_block(static_cast<std::size_t>(k));
    for (std::size_t pos = 0; pos < order->size(); ++pos)
      rank_of_block[static_cast<std::size_t>((*order)[pos])] = static_cast<int>(pos) + 1;
    std::vector<int> ranks(n);
    for (std::size_t i = 0; i < n; ++i)
      ranks[i] = rank_of_block[static_cast<std::size_t>(rgs[i])];
    out.emplace_back(std::move(ranks));
  });
  return out;
}

/// Incentive compatibility of `score` against the receiver's best response.
/// Deviations range over the used messages only; ties satisfy IC.
inline EquilibriumReport check_credibility(const FiniteModel &model, const OrderedScore &score,
                                           const PayoffWeights &w, double tol = 1e-9) {
  const ReceiverPolicy policy = best_response(model, score);
  EquilibriumReport report;
  report.exante_payoff = exante_payoff(model, score, policy, w);
  report.ic_slack.resize(model.size());
  double worst = std::numeric_limits<double>::infinity();
  Deviation worst_dev;
  for (std::size_t i = 0; i < model.size(); ++i) {
    const double on_path = utility(policy.action(score.rank(i)), model.state(i), w);
    double best = -std::numeric_limits<double>::infinity();
    int best_rank = 0;
    for (int m = 1; m <= score.messages(); ++m) {
      const double u = utility(policy.action(m), model.state(i), w);
      if (u > best) {
        best = u;
        best_rank = m;
      }
    }
    report.ic_slack[i] = on_path - best;
    if (report.ic_slack[i] < worst) {
      worst = report.ic_slack[i];
      worst_dev = {i, best_rank};
    }
  }
  report.credible = worst >= -tol;
  if (!report.credible)
    report.best_deviation = worst_dev;
  return report;
}

/// Per-score record for report serialisation.
struct ScoreRow {
  std::size_t partition_id = 0; ///< index in enumerate_scores order
  OrderedScore score;
  double payoff = 0.0;
  bool credible = false;
  double min_slack = 0.0;
};

inline std::vector<ScoreRow> score_table(const FiniteModel &model, const PayoffWeights &w, int max_k,
                                         double tol = 1e-9) {
  std::vector<ScoreRow> rows;
  auto scores = enumerate_scores(model, max_k);
  rows.reserve(scores.size());
  for (std::size_t id = 0; id < scores.size(); ++id) {
    const EquilibriumReport r = check_credibility(model, scores[id], w, tol);
    rows.push_back(ScoreRow{id, std::move(scores[id]), r.exante_payoff, r.credible, r.min_slack()});
  }
  return rows;
}

inline constexpr double kPayoffTieTolerance = 1e-12;

struct OptimalScores {
  double payoff = 0.0;
  std::vector<OrderedScore> argmax;
};

/// Maximises the ex-ante payoff over all scores with at most max_k messages.
inline OptimalScores optimal_scores(const FiniteModel &model, const PayoffWeights &w, int max_k) {
  const auto scores = enumerate_scores(model, max_k);
  std::vector<double> payoffs;
  payoffs.reserve(scores.size());
  double best = -std::numeric_limits<double>::infinity();
  for (const auto &s : scores) {
    payoffs.push_back(exante_payoff(model, s, w));
    best = std::max(best, payoffs.back());
  }
  OptimalScores out{best, {}};
  for (std::size_t i = 0; i < scores.size(); ++i)
    if (payoffs[i] >= best - kPayoffTieTolerance)
      out.argmax.push_back(scores[i]);
  return out;
}

struct CommitmentGap {
  double optimal_payoff = 0.0;
  double best_credible_payoff = 0.0;
  double gap = 0.0;
  OrderedScore best_credible;
};

/// Optimal payoff minus the best payoff of a credible score. A credible
/// score with two messages always exists, so the maximum is well defined.
inline CommitmentGap commitment_gap(const FiniteModel &model, const PayoffWeights &w, int max_k,
                                    double tol = 1e-9) {
  const auto rows = score_table(model, w, max_k, tol);
  const ScoreRow *best = nullptr;
  const ScoreRow *best_credible = nullptr;
  for (const auto &row : rows) {
    if (!best || row.payoff > best->payoff)
      best = &row;
    if (row.credible && (!best_credible || row.payoff > best_credible->payoff))
      best_credible = &row;
  }
  if (!best_credible)
    throw Refusal("commitment_gap: no credible score found among enumerated scores");
  return {best->payoff, best_credible->payoff, std::max(0.0, best->payoff - best_credible->payoff),
          best_credible->score};
}

// ---------------------------------------------------------------------------
// The four-state square {0,1}^2. Probabilities are ordered
// f(0,0), f(1,0), f(0,1), f(1,1) throughout.

using SquarePmf = std::array<double, 4>;

inline FiniteModel square_model(const SquarePmf &f) {
  return FiniteModel({Point(0, 0), Point(1, 0), Point(0, 1), Point(1, 1)}, {f.begin(), f.end()});
}

/// Pools the off-diagonal states (1,0) and (0,1).
inline OrderedScore score_d() { return OrderedScore({1, 2, 2, 3}); }
/// Pools the diagonal states (0,0) and (1,1).
inline OrderedScore score_D() { return OrderedScore({2, 1, 3, 2}); }
/// Reveals theta_1 only.
inline OrderedScore score_1() { return OrderedScore({1, 2, 1, 2}); }
/// Reveals theta_2 only.
inline OrderedScore score_2() { return OrderedScore({1, 1, 2, 2}); }

enum class SquareOptimum { s_d, s_D, tie };

inline const char *to_string(SquareOptimum o) {
  switch (o) {
  case SquareOptimum::s_d:
    return "s_d";
  case SquareOptimum::s_D:
    return "s_D";
  case SquareOptimum::tie:
    return "tie";
  }
  return "?";
}

struct TwoByTwoReport {
  double u_D = 0.0;
  double u_d = 0.0;
  double u_1 = 0.0;
  double u_2 = 0.0;
  SquareOptimum optimal_label = SquareOptimum::tie;
  bool credible_optimal = false;
  /// Probability ratio of the pooled pair of the optimal score.
  double ratio = 0.0;
};

/// sqrt(2) - 1: lower end of the credible ratio interval for the square.
inline const double kCredibleRatioLow = std::sqrt(2.0) - 1.0;

inline bool ratio_is_credible(double ratio) {
  return ratio >= kCredibleRatioLow && ratio <= 1.0 / kCredibleRatioLow;
}

/// Closed-form payoffs and credibility on the square with phi = 1.
inline TwoByTwoReport two_by_two_analysis(const SquarePmf &f, const PayoffWeights &w = PayoffWeights(1.0)) {
  if (w.phi() != 1.0)
    throw Refusal("two_by_two_analysis: closed forms hold for phi = 1 only");
  for (double p : f)
    if (!(p > 0.0))
      throw InvalidInput("two_by_two_analysis: pmf must be strictly positive");
  const double f00 = f[0], f10 = f[1], f01 = f[2], f11 = f[3];
  const auto pooled = [](double x, double y) { return x * y / (x + y); };

  TwoByTwoReport r;
  r.u_D = -2.0 * pooled(f00, f11);
  r.u_d = -2.0 * pooled(f10, f01);
  r.u_1 = -pooled(f00, f01) - pooled(f10, f11);
  r.u_2 = -pooled(f00, f10) - pooled(f01, f11);

  const double diag = pooled(f00, f11);
  const double off = pooled(f01, f10);
  const double ratio_d = f10 / f01;
  const double ratio_D = f00 / f11;
  if (std::abs(diag - off) <= 0.5 * kPayoffTieTolerance) {
    r.optimal_label = SquareOptimum::tie;
    r.ratio = ratio_d;
    r.credible_optimal = ratio_is_credible(ratio_d) || ratio_is_credible(ratio_D);
  } else if (diag > off) {
    r.optimal_label = SquareOptimum::s_d;
    r.ratio = ratio_d;
    r.credible_optimal = ratio_is_credible(ratio_d);
  } else {
    r.optimal_label = SquareOptimum::s_D;
    r.ratio = ratio_D;
    r.credible_optimal = ratio_is_credible(ratio_D);
  }
  return r;
}

// ---------------------------------------------------------------------------
// IVP on a regular lattice, where the order box of two grid points is an
// index rectangle. Ranks are stored row-major with the first index along
// theta_1: ranks[ix * ny + iy].

struct LatticeIvpVerdict {
  bool feasible = true;
  std::optional<IvpWitness> witness_failure; ///< indices into the lattice
};

inline LatticeIvpVerdict check_lattice_ivp(std::span<const int> ranks, std::size_t nx, std::size_t ny) {
  if (ranks.size() != nx * ny)
    throw InvalidInput("check_lattice_ivp: rank raster has the wrong size");
  if (ranks.empty())
    return {};
  const int k = *std::max_element(ranks.begin(), ranks.end());
  const auto at = [&](std::size_t ix, std::size_t iy) { return ranks[ix * ny + iy]; };
  const long nyl = static_cast<long>(ny);

  // For each intermediate rank m and each lower-ranked point l, scan the four
  // quadrants around l column by column. Within a quadrant the rows reachable
  // without meeting rank m shrink to a staircase; a higher-ranked point inside
  // that staircase is a violating pair.
  std::vector<long> next_up(nx * ny), next_down(nx * ny);
  std::vector<int> higher_prefix(nx * (ny + 1));
  for (int m = 2; m < k; ++m) {
    for (std::size_t ix = 0; ix < nx; ++ix) {
      long nxt = nyl;
      for (long iy = nyl - 1; iy >= 0; --iy) {
        if (at(ix, static_cast<std::size_t>(iy)) == m)
          nxt = iy;
        next_up[ix * ny + static_cast<std::size_t>(iy)] = nxt;
      }
      long prv = -1;
      for (long iy = 0; iy < nyl; ++iy) {
        if (at(ix, static_cast<std::size_t>(iy)) == m)
          prv = iy;
        next_down[ix * ny + static_cast<std::size_t>(iy)] = prv;
      }
      higher_prefix[ix * (ny + 1)] = 0;
      for (std::size_t iy = 0; iy < ny; ++iy)
        higher_prefix[ix * (ny + 1) + iy + 1] = higher_prefix[ix * (ny + 1) + iy] + (at(ix, iy) > m ? 1 : 0);
    }
    const auto higher_in = [&](std::size_t ix, long from, long to) { // rows [from, to)
      if (to <= from)
        return 0;
      return higher_prefix[ix * (ny + 1) + static_cast<std::size_t>(to)] -
             higher_prefix[ix * (ny + 1) + static_cast<std::size_t>(from)];
    };
    for (std::size_t lx = 0; lx < nx; ++lx)
      for (std::size_t ly = 0; ly < ny; ++ly) {
        if (at(lx, ly) >= m)
          continue;
        const long y0 = static_cast<long>(ly);
        for (int dx : {1, -1})
          for (int dy : {1, -1}) {
            long limit = dy > 0 ? nyl : -1; // first blocked row
            for (long x = static_cast<long>(lx); x >= 0 && x < static_cast<long>(nx); x += dx) {
              const std::size_t ux = static_cast<std::size_t>(x);
              if (dy > 0) {
                limit = std::min(limit, next_up[ux * ny + ly]);
                if (higher_in(ux, y0, limit) > 0) {
                  for (long y = y0; y < limit; ++y)
                    if (at(ux, static_cast<std::size_t>(y)) > m)
                      return {false, IvpWitness{ux * ny + static_cast<std::size_t>(y), lx * ny + ly, m}};
                }
                if (limit == y0)
                  break;
              } else {
                limit = std::max(limit, next_down[ux * ny + ly]);
                if (higher_in(ux, limit + 1, y0 + 1) > 0) {
                  for (long y = y0; y > limit; --y)
                    if (at(ux, static_cast<std::size_t>(y)) > m)
                      return {false, IvpWitness{ux * ny + static_cast<std::size_t>(y), lx * ny + ly, m}};
                }
                if (limit == y0)
                  break;
              }
            }
          }
      }
  }
  return {};
}

} // namespace scoretalk

#endif // SCORETALK_FINITE_HPP
