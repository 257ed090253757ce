#ifndef SCORETALK_MODEL_HPP
#define SCORETALK_MODEL_HPP

// Shared domain types for cheap talk through scores: the common quadratic
// payoff, finite state spaces, ordered scores and the receiver's Bayesian
// best response.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace scoretalk {

/// Raised when arguments violate a documented precondition.
class InvalidInput : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

/// Raised when an engine declines a well-formed request (size guards,
/// numerically void cells, unsupported closed forms).
class Refusal : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Neumaier-compensated running sum.
class CompensatedSum {
public:
  void add(double x) {
    const double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x))
      comp_ += (sum_ - t) + x;
    else
      comp_ += (x - t) + sum_;
    sum_ = t;
  }
  CompensatedSum &operator+=(double x) {
    add(x);
    return *this;
  }
  double value() const { return sum_ + comp_; }

private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

/// A state or action in R^1 or R^2. Unused trailing coordinates are zero.
struct Point {
  std::array<double, 2> x{0.0, 0.0};
  int dim = 2;

  constexpr Point() = default;
  constexpr explicit Point(double a) : x{a, 0.0}, dim(1) {}
  constexpr Point(double a, double b) : x{a, b}, dim(2) {}

  constexpr double operator[](std::size_t i) const { return x[i]; }
  constexpr double &operator[](std::size_t i) { return x[i]; }

  friend constexpr bool operator==(const Point &, const Point &) = default;
};

inline Point componentwise_min(const Point &a, const Point &b) {
  Point r = a;
  for (int d = 0; d < a.dim; ++d)
    r[d] = std::min(a[d], b[d]);
  return r;
}

inline Point componentwise_max(const Point &a, const Point &b) {
  Point r = a;
  for (int d = 0; d < a.dim; ++d)
    r[d] = std::max(a[d], b[d]);
  return r;
}

/// True when lo <= p <= hi in every coordinate.
inline bool in_box(const Point &p, const Point &lo, const Point &hi) {
  for (int d = 0; d < p.dim; ++d)
    if (p[d] < lo[d] || p[d] > hi[d])
      return false;
  return true;
}

/// Loss weight phi on the first dimension; Phi = diag(phi, 1).
class PayoffWeights {
public:
  explicit PayoffWeights(double phi = 1.0) : phi_(phi) {
    if (!(phi > 0.0) || !std::isfinite(phi))
      throw InvalidInput("payoff weight phi must be finite and > 0, got " + std::to_string(phi));
  }
  double phi() const { return phi_; }

  /// Per-coordinate weights of the quadratic loss for states of dimension `dim`.
  /// One-dimensional models use the unweighted loss.
  std::array<double, 2> metric(int dim) const {
    return dim == 1 ? std::array<double, 2>{1.0, 0.0} : std::array<double, 2>{phi_, 1.0};
  }

  friend bool operator==(const PayoffWeights &, const PayoffWeights &) = default;

private:
  double phi_;
};

/// Common payoff -phi (a1 - t1)^2 - (a2 - t2)^2, or -(a - t)^2 in one dimension.
inline double utility(const Point &a, const Point &theta, const PayoffWeights &w) {
  if (a.dim != theta.dim || (a.dim != 1 && a.dim != 2))
    throw InvalidInput("utility: action and state dimensions differ");
  const auto m = w.metric(a.dim);
  double u = 0.0;
  for (int d = 0; d < a.dim; ++d) {
    const double e = a[d] - theta[d];
    u -= m[d] * e * e;
  }
  return u;
}

/// A finite state space with a strictly positive probability mass function.
class FiniteModel {
public:
  static constexpr double kPmfTolerance = 1e-12;

  FiniteModel(std::vector<Point> states, std::vector<double> pmf)
      : states_(std::move(states)), pmf_(std::move(pmf)) {
    if (states_.size() < 2)
      throw InvalidInput("finite model needs at least two states");
    if (states_.size() != pmf_.size())
      throw InvalidInput("finite model: states and pmf differ in length");
    dim_ = states_.front().dim;
    if (dim_ != 1 && dim_ != 2)
      throw InvalidInput("finite model: dimension must be 1 or 2");
    CompensatedSum total;
    for (std::size_t i = 0; i < states_.size(); ++i) {
      if (states_[i].dim != dim_)
        throw InvalidInput("finite model: mixed state dimensions");
      for (int d = 0; d < dim_; ++d)
        if (!std::isfinite(states_[i][d]))
          throw InvalidInput("finite model: non-finite state coordinate");
      if (!(pmf_[i] > 0.0) || !std::isfinite(pmf_[i]))
        throw InvalidInput("finite model: pmf entry " + std::to_string(i) + " is not strictly positive");
      total += pmf_[i];
    }
    if (std::abs(total.value() - 1.0) > kPmfTolerance)
      throw InvalidInput("finite model: pmf sums to 1 + (" + std::to_string(total.value() - 1.0) + ")");
    for (std::size_t i = 0; i < states_.size(); ++i)
      for (std::size_t j = i + 1; j < states_.size(); ++j)
        if (states_[i] == states_[j])
          throw InvalidInput("finite model: duplicate state at indices " + std::to_string(i) + " and " +
                             std::to_string(j));
  }

  int dim() const { return dim_; }
  std::size_t size() const { return states_.size(); }
  std::span<const Point> states() const { return states_; }
  std::span<const double> pmf() const { return pmf_; }
  const Point &state(std::size_t i) const { return states_[i]; }
  double mass(std::size_t i) const { return pmf_[i]; }

  Point mean() const {
    Point m = states_.front();
    for (int d = 0; d < dim_; ++d) {
      CompensatedSum s;
      for (std::size_t i = 0; i < size(); ++i)
        s += pmf_[i] * states_[i][d];
      m[d] = s.value();
    }
    return m;
  }

  /// phi Var(theta_1) + Var(theta_2): the loss of a fully pooling score.
  double prior_loss(const PayoffWeights &w) const {
    const auto metric = w.metric(dim_);
    const Point m = mean();
    CompensatedSum s;
    for (std::size_t i = 0; i < size(); ++i)
      for (int d = 0; d < dim_; ++d) {
        const double e = states_[i][d] - m[d];
        s += pmf_[i] * metric[d] * e * e;
      }
    return s.value();
  }

private:
  std::vector<Point> states_;
  std::vector<double> pmf_;
  int dim_ = 2;
};

/// A surjective assignment of state indices to message ranks 1..K, K >= 2.
class OrderedScore {
public:
  explicit OrderedScore(std::vector<int> ranks) : ranks_(std::move(ranks)) {
    if (ranks_.empty())
      throw InvalidInput("score: empty assignment");
    k_ = *std::max_element(ranks_.begin(), ranks_.end());
    if (*std::min_element(ranks_.begin(), ranks_.end()) < 1)
      throw InvalidInput("score: ranks start at 1");
    if (k_ < 2)
      throw InvalidInput("score: a score is not constant (K >= 2)");
    std::vector<bool> used(static_cast<std::size_t>(k_) + 1, false);
    for (int r : ranks_)
      used[static_cast<std::size_t>(r)] = true;
    for (int m = 1; m <= k_; ++m)
      if (!used[static_cast<std::size_t>(m)])
        throw InvalidInput("score: rank " + std::to_string(m) + " is unused (ranks must be surjective onto 1..K)");
  }

  int messages() const { return k_; }
  std::size_t size() const { return ranks_.size(); }
  int rank(std::size_t state) const { return ranks_[state]; }
  std::span<const int> ranks() const { return ranks_; }

  void check_fits(const FiniteModel &model) const {
    if (ranks_.size() != model.size())
      throw InvalidInput("score assigns " + std::to_string(ranks_.size()) + " states but the model has " +
                         std::to_string(model.size()));
  }

  /// Canonical block labelling (first-occurrence order); equal for scores
  /// that induce the same partition of states.
  std::vector<int> partition_key() const {
    std::vector<int> relabel(static_cast<std::size_t>(k_) + 1, 0);
    std::vector<int> key(ranks_.size());
    int next = 0;
    for (std::size_t i = 0; i < ranks_.size(); ++i) {
      int &slot = relabel[static_cast<std::size_t>(ranks_[i])];
      if (slot == 0)
        slot = ++next;
      key[i] = slot - 1;
    }
    return key;
  }

  friend bool operator==(const OrderedScore &, const OrderedScore &) = default;

private:
  std::vector<int> ranks_;
  int k_ = 0;
};

/// Receiver actions indexed by message rank (actions()[m - 1] answers rank m).
class ReceiverPolicy {
public:
  explicit ReceiverPolicy(std::vector<Point> actions) : actions_(std::move(actions)) {}
  const Point &action(int rank) const { return actions_.at(static_cast<std::size_t>(rank - 1)); }
  std::span<const Point> actions() const { return actions_; }
  std::size_t messages() const { return actions_.size(); }

private:
  std::vector<Point> actions_;
};

struct Deviation {
  std::size_t state = 0;
  int rank = 0;
  friend bool operator==(const Deviation &, const Deviation &) = default;
};

/// Outcome of an incentive-compatibility check.
struct EquilibriumReport {
  double exante_payoff = 0.0;
  /// Per state: on-path utility minus the best utility over used messages.
  std::vector<double> ic_slack;
  bool credible = false;
  std::optional<Deviation> best_deviation;
  /// Largest distance between a used action and the posterior mean of its
  /// cell. Zero whenever the actions are computed by best_response.
  double best_response_gap = 0.0;

  double min_slack() const {
    return ic_slack.empty() ? 0.0 : *std::min_element(ic_slack.begin(), ic_slack.end());
  }
};

/// Posterior means E[theta | s(theta) = m] for every rank.
inline ReceiverPolicy best_response(const FiniteModel &model, const OrderedScore &score) {
  score.check_fits(model);
  const auto k = static_cast<std::size_t>(score.messages());
  std::vector<std::array<CompensatedSum, 2>> sums(k);
  std::vector<CompensatedSum> mass(k);
  for (std::size_t i = 0; i < model.size(); ++i) {
    const auto m = static_cast<std::size_t>(score.rank(i) - 1);
    mass[m] += model.mass(i);
    for (int d = 0; d < model.dim(); ++d)
      sums[m][static_cast<std::size_t>(d)] += model.mass(i) * model.state(i)[d];
  }
  std::vector<Point> actions(k, model.state(0));
  for (std::size_t m = 0; m < k; ++m)
    for (int d = 0; d < model.dim(); ++d)
      actions[m][d] = sums[m][static_cast<std::size_t>(d)].value() / mass[m].value();
  return ReceiverPolicy(std::move(actions));
}

inline double exante_payoff(const FiniteModel &model, const OrderedScore &score, const ReceiverPolicy &policy,
                            const PayoffWeights &w) {
  CompensatedSum s;
  for (std::size_t i = 0; i < model.size(); ++i)
    s += model.mass(i) * utility(policy.action(score.rank(i)), model.state(i), w);
  return s.value();
}

/// Expected common payoff when the receiver best-responds to `score`.
inline double exante_payoff(const FiniteModel &model, const OrderedScore &score, const PayoffWeights &w) {
  return exante_payoff(model, score, best_response(model, score), w);
}

} // namespace scoretalk

#endif // SCORETALK_MODEL_HPP
