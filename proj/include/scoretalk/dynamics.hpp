#ifndef SCORETALK_DYNAMICS_HPP
#define SCORETALK_DYNAMICS_HPP

// Constructive equilibrium search. Lloyd iteration alternates the sender's
// incentive step (each state picks the action it likes best) with the
// receiver's best response (each action moves to its cell's posterior mean).
// Its fixed points are equilibria of the discrete game.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <numbers>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "scoretalk/finite.hpp"
#include "scoretalk/gaussian.hpp"
#include "scoretalk/model.hpp"
#include "scoretalk/parallel.hpp"

namespace scoretalk {

/// Weighted states: the common input of Lloyd iteration.
struct PointSet {
  int dim = 2;
  std::vector<Point> points;
  std::vector<double> weights;

  std::size_t size() const { return points.size(); }

  static PointSet from(const FiniteModel &model) {
    return {model.dim(), {model.states().begin(), model.states().end()}, {model.pmf().begin(), model.pmf().end()}};
  }
};

/// Regular lattice over [-r sigma_1, r sigma_1] x [-r sigma_2, r sigma_2];
/// each cell centre carries density times area, renormalised to one.
/// Points are stored row-major with the first index along theta_1.
class DiscretizedPrior {
public:
  static constexpr std::size_t kMinResolution = 32;

  DiscretizedPrior(const GaussianModel &g, std::size_t resolution, double radius = 5.0)
      : model_(g), resolution_(resolution), radius_(radius) {
    if (resolution < kMinResolution)
      throw InvalidInput("discretized prior: resolution must be >= " + std::to_string(kMinResolution));
    if (!(radius > 0.0))
      throw InvalidInput("discretized prior: radius must be > 0");
    const double sd1 = std::sqrt(g.var1()), sd2 = std::sqrt(g.var2());
    step_ = {2.0 * radius * sd1 / static_cast<double>(resolution), 2.0 * radius * sd2 / static_cast<double>(resolution)};
    const double inv_det = 1.0 / g.det();
    set_.dim = 2;
    set_.points.reserve(resolution * resolution);
    set_.weights.reserve(resolution * resolution);
    CompensatedSum total;
    for (std::size_t ix = 0; ix < resolution; ++ix) {
      const double x = -radius * sd1 + (static_cast<double>(ix) + 0.5) * step_[0];
      for (std::size_t iy = 0; iy < resolution; ++iy) {
        const double y = -radius * sd2 + (static_cast<double>(iy) + 0.5) * step_[1];
        const double q = ((g.var2() * x * x + g.var1() * y * y) - 2.0 * g.cov12() * (x * y)) * inv_det;
        const double d = std::exp(-0.5 * q);
        set_.points.emplace_back(x, y);
        set_.weights.push_back(d);
        total += d;
      }
    }
    const double z = total.value();
    for (double &m : set_.weights)
      m /= z;
  }

  const GaussianModel &model() const { return model_; }
  std::size_t resolution() const { return resolution_; }
  double radius() const { return radius_; }
  const std::array<double, 2> &spacing() const { return step_; }
  const PointSet &points() const { return set_; }
  std::size_t index(std::size_t ix, std::size_t iy) const { return ix * resolution_ + iy; }

private:
  GaussianModel model_;
  std::size_t resolution_;
  double radius_;
  std::array<double, 2> step_{};
  PointSet set_;
};

struct LloydOptions {
  std::size_t messages = 2;
  double tol = 1e-12;
  std::size_t max_iter = 10000;
  std::optional<std::vector<Point>> init;
  unsigned threads = 1;
};

struct LloydState {
  std::vector<Point> actions;
  std::vector<int> assignment; ///< message index in [0, actions.size()) per point
  double objective = 0.0;
  std::size_t iterations = 0;
  bool converged = false;
  std::size_t reseeds = 0;
  bool monotone = true;
  std::vector<double> trace; ///< objective after each assignment step
};

inline constexpr double kMonotoneSlack = 1e-12;

namespace detail {

inline constexpr std::size_t kLloydChunk = 4096;

inline std::size_t lloyd_chunks(std::size_t n) { return (n + kLloydChunk - 1) / kLloydChunk; }

inline Point weighted_centroid(const PointSet &ps, std::span<const std::size_t> idx) {
  CompensatedSum m, s0, s1;
  for (std::size_t i : idx) {
    m += ps.weights[i];
    s0 += ps.weights[i] * ps.points[i][0];
    s1 += ps.weights[i] * ps.points[i][1];
  }
  Point c = ps.points[idx.front()];
  c[0] = s0.value() / m.value();
  if (ps.dim == 2)
    c[1] = s1.value() / m.value();
  return c;
}

// Unit eigenvector for the largest eigenvalue of [[a, b], [b, c]].
inline Vec2 principal_direction(double a, double b, double c) {
  if (b == 0.0)
    return a >= c ? Vec2{1.0, 0.0} : Vec2{0.0, 1.0};
  const double lambda = 0.5 * (a + c) + std::hypot(0.5 * (a - c), b);
  Vec2 v = std::abs(lambda - c) >= std::abs(lambda - a) ? Vec2{lambda - c, b} : Vec2{b, lambda - a};
  const double n = norm(v);
  return {v[0] / n, v[1] / n};
}

inline Vec2 principal_axis(const PointSet &ps) {
  if (ps.dim == 1)
    return {1.0, 0.0};
  CompensatedSum m0, m1;
  for (std::size_t i = 0; i < ps.size(); ++i) {
    m0 += ps.weights[i] * ps.points[i][0];
    m1 += ps.weights[i] * ps.points[i][1];
  }
  CompensatedSum c00, c01, c11;
  for (std::size_t i = 0; i < ps.size(); ++i) {
    const double d0 = ps.points[i][0] - m0.value(), d1 = ps.points[i][1] - m1.value();
    c00 += ps.weights[i] * d0 * d0;
    c01 += ps.weights[i] * d0 * d1;
    c11 += ps.weights[i] * d1 * d1;
  }
  return principal_direction(c00.value(), c01.value(), c11.value());
}

} // namespace detail

/// Default initialisation: sort states along the prior's first principal
/// axis, cut them into `messages` contiguous groups of (nearly) equal mass
/// and start each action at its group's centroid. States with equal
/// projection stay in one group, so a prior symmetric about the axis gives
/// actions on the axis.
inline std::vector<Point> principal_axis_init(const PointSet &ps, std::size_t messages) {
  if (ps.size() < messages)
    throw InvalidInput("principal_axis_init: fewer states than messages");
  const Vec2 axis = detail::principal_axis(ps);
  std::vector<std::size_t> order(ps.size());
  std::vector<double> proj(ps.size());
  for (std::size_t i = 0; i < order.size(); ++i) {
    order[i] = i;
    proj[i] = axis[0] * ps.points[i][0] + axis[1] * ps.points[i][1];
  }
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return proj[a] < proj[b]; });

  // Runs of equal projection, up to rounding in the axis.
  double scale = 0.0;
  for (double v : proj)
    scale = std::max(scale, std::abs(v));
  const double same = 1e-9 * scale;
  std::vector<std::size_t> run_end;
  for (std::size_t i = 1; i <= order.size(); ++i)
    if (i == order.size() || proj[order[i]] - proj[order[i - 1]] > same)
      run_end.push_back(i);

  std::vector<std::size_t> cut;
  if (run_end.size() >= messages) {
    CompensatedSum cum;
    std::size_t r = 0, i = 0;
    for (std::size_t k = 0; k + 1 < messages; ++k) {
      const double target = static_cast<double>(k + 1) / static_cast<double>(messages);
      const std::size_t last_allowed = run_end.size() - (messages - k);
      do {
        for (; i < run_end[r]; ++i)
          cum += ps.weights[order[i]];
        ++r;
      } while (r <= last_allowed && cum.value() < target);
      cut.push_back(run_end[r - 1]);
    }
    cut.push_back(order.size());
  } else {
    // Too few distinct projections: split by position.
    for (std::size_t k = 1; k <= messages; ++k)
      cut.push_back(k * order.size() / messages);
  }

  std::vector<Point> init;
  std::size_t start = 0;
  for (std::size_t end : cut) {
    init.push_back(detail::weighted_centroid(ps, std::span<const std::size_t>(order).subspan(start, end - start)));
    start = end;
  }
  return init;
}

/// `messages` distinct states drawn with probability proportional to weight.
inline std::vector<Point> random_init(const PointSet &ps, std::size_t messages, std::mt19937_64 &rng) {
  if (ps.size() < messages)
    throw InvalidInput("random_init: fewer states than messages");
  std::discrete_distribution<std::size_t> pick(ps.weights.begin(), ps.weights.end());
  std::vector<std::size_t> chosen;
  std::size_t attempts = 0;
  while (chosen.size() < messages) {
    std::size_t i = pick(rng);
    if (++attempts > 100 * messages) // heavy mass concentration; fall back to uniform picks
      i = std::uniform_int_distribution<std::size_t>(0, ps.size() - 1)(rng);
    if (std::find(chosen.begin(), chosen.end(), i) == chosen.end())
      chosen.push_back(i);
  }
  std::vector<Point> init;
  for (std::size_t i : chosen)
    init.push_back(ps.points[i]);
  return init;
}

/// Lowest-index argmax of the utility over `actions`.
inline std::pair<int, double> best_action(const std::vector<Point> &actions, const Point &theta,
                                          const std::array<double, 2> &metric, int dim) {
  int best = 0;
  double best_u = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < actions.size(); ++k) {
    double u = 0.0;
    for (int d = 0; d < dim; ++d) {
      const double e = actions[k][d] - theta[d];
      u -= metric[d] * e * e;
    }
    if (u > best_u) {
      best_u = u;
      best = static_cast<int>(k);
    }
  }
  return {best, best_u};
}

/// Alternating best response from `opt.init` (default: principal_axis_init).
///
/// Each iteration assigns every state to its utility-maximising action
/// (ties to the lowest index) and records the objective, then moves each
/// action to its cell's posterior mean. Empty cells are reseeded at the
/// worst-served state. Stops when the assignment repeats, the objective
/// improves by less than `opt.tol`, or after `opt.max_iter` iterations
/// (converged = false).
inline LloydState lloyd(const PointSet &ps, const PayoffWeights &w, const LloydOptions &opt) {
  const std::size_t n = opt.messages;
  if (n < 2)
    throw InvalidInput("lloyd: at least two messages are required (a score is not constant)");
  if (ps.size() < n)
    throw InvalidInput("lloyd: fewer states than messages");
  if (ps.size() != ps.weights.size())
    throw InvalidInput("lloyd: points and weights differ in length");
  LloydState st;
  st.actions = opt.init ? *opt.init : principal_axis_init(ps, n);
  if (st.actions.size() != n)
    throw InvalidInput("lloyd: initial actions must number exactly " + std::to_string(n));
  for (std::size_t a = 0; a < n; ++a) {
    if (st.actions[a].dim != ps.dim)
      throw InvalidInput("lloyd: initial action dimension differs from the states");
    for (std::size_t b = a + 1; b < n; ++b)
      if (st.actions[a] == st.actions[b])
        throw InvalidInput("lloyd: initial actions must be distinct");
  }

  const auto metric = w.metric(ps.dim);
  const std::size_t chunks = detail::lloyd_chunks(ps.size());
  std::vector<int> assign(ps.size(), -1), previous;
  std::vector<double> served(ps.size(), 0.0);
  std::vector<double> chunk_obj(chunks);
  std::vector<double> chunk_sums(chunks * n * 3);

  const auto assign_step = [&] {
    parallel_chunks(chunks, opt.threads, [&](std::size_t c) {
      const std::size_t lo = c * detail::kLloydChunk, hi = std::min(ps.size(), lo + detail::kLloydChunk);
      CompensatedSum obj;
      for (std::size_t i = lo; i < hi; ++i) {
        const auto [k, u] = best_action(st.actions, ps.points[i], metric, ps.dim);
        assign[i] = k;
        served[i] = u;
        obj += ps.weights[i] * u;
      }
      chunk_obj[c] = obj.value();
    });
    CompensatedSum total;
    for (double v : chunk_obj)
      total += v;
    return total.value();
  };

  // Posterior means of the current assignment; returns per-cell mass.
  const auto centroid_step = [&] {
    std::fill(chunk_sums.begin(), chunk_sums.end(), 0.0);
    parallel_chunks(chunks, opt.threads, [&](std::size_t c) {
      const std::size_t lo = c * detail::kLloydChunk, hi = std::min(ps.size(), lo + detail::kLloydChunk);
      double *slot = chunk_sums.data() + c * n * 3;
      std::vector<CompensatedSum> acc(n * 3);
      for (std::size_t i = lo; i < hi; ++i) {
        const auto k = static_cast<std::size_t>(assign[i]);
        acc[3 * k] += ps.weights[i];
        acc[3 * k + 1] += ps.weights[i] * ps.points[i][0];
        acc[3 * k + 2] += ps.weights[i] * ps.points[i][1];
      }
      for (std::size_t j = 0; j < n * 3; ++j)
        slot[j] = acc[j].value();
    });
    std::vector<double> mass(n, 0.0);
    for (std::size_t k = 0; k < n; ++k) {
      CompensatedSum m, s0, s1;
      for (std::size_t c = 0; c < chunks; ++c) {
        const double *slot = chunk_sums.data() + (c * n + k) * 3;
        m += slot[0];
        s0 += slot[1];
        s1 += slot[2];
      }
      mass[k] = m.value();
      if (mass[k] > 0.0) {
        st.actions[k][0] = s0.value() / mass[k];
        if (ps.dim == 2)
          st.actions[k][1] = s1.value() / mass[k];
      }
    }
    return mass;
  };

  double prev_obj = -std::numeric_limits<double>::infinity();
  for (st.iterations = 1; st.iterations <= opt.max_iter; ++st.iterations) {
    const double obj = assign_step();
    st.trace.push_back(obj);
    if (obj < prev_obj - kMonotoneSlack)
      st.monotone = false;
    if (assign == previous) {
      st.converged = true;
      break;
    }
    const bool small_step = obj - prev_obj < opt.tol;
    previous = assign;
    const auto mass = centroid_step();
    if (small_step) {
      st.converged = true;
      break;
    }
    for (std::size_t k = 0; k < n; ++k) {
      if (mass[k] > 0.0)
        continue;
      std::size_t worst = 0;
      for (std::size_t i = 1; i < ps.size(); ++i)
        if (served[i] < served[worst])
          worst = i;
      st.actions[k] = ps.points[worst];
      served[worst] = 0.0;
      ++st.reseeds;
    }
    prev_obj = obj;
  }
  st.iterations = std::min(st.iterations, opt.max_iter);
  st.assignment = previous;

  CompensatedSum obj;
  for (std::size_t i = 0; i < ps.size(); ++i)
    obj += ps.weights[i] * utility(st.actions[static_cast<std::size_t>(st.assignment[i])], ps.points[i], w);
  st.objective = obj.value();
  return st;
}

/// Restart 0 starts from `opt.init` (or the principal-axis default); restart
/// r >= 1 starts from distinct states drawn from stream (seed, r).
inline std::vector<LloydState> lloyd_restarts(const PointSet &ps, const PayoffWeights &w, LloydOptions opt,
                                              std::size_t restarts, std::uint64_t seed) {
  if (restarts == 0)
    throw InvalidInput("lloyd_restarts: at least one run is required");
  std::vector<LloydState> out;
  out.reserve(restarts);
  out.push_back(lloyd(ps, w, opt));
  for (std::size_t r = 1; r < restarts; ++r) {
    auto rng = stream_engine(seed, 3, r);
    opt.init = random_init(ps, opt.messages, rng);
    out.push_back(lloyd(ps, w, opt));
  }
  return out;
}

inline std::size_t best_objective(std::span<const LloydState> states) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < states.size(); ++i)
    if (states[i].objective > states[best].objective)
      best = i;
  return best;
}

/// Builds a state from a given assignment: actions are the cell posterior
/// means; objective is the resulting payoff.
inline LloydState state_from_assignment(const PointSet &ps, const PayoffWeights &w, std::vector<int> assignment) {
  if (assignment.size() != ps.size())
    throw InvalidInput("state_from_assignment: assignment length differs from the state count");
  const int n = *std::max_element(assignment.begin(), assignment.end()) + 1;
  std::vector<std::vector<std::size_t>> cells(static_cast<std::size_t>(n));
  for (std::size_t i = 0; i < assignment.size(); ++i) {
    if (assignment[i] < 0)
      throw InvalidInput("state_from_assignment: negative message index");
    cells[static_cast<std::size_t>(assignment[i])].push_back(i);
  }
  LloydState st;
  for (const auto &c : cells) {
    if (c.empty())
      throw InvalidInput("state_from_assignment: message indices must be contiguous from 0");
    st.actions.push_back(detail::weighted_centroid(ps, c));
  }
  st.assignment = std::move(assignment);
  CompensatedSum obj;
  for (std::size_t i = 0; i < ps.size(); ++i)
    obj += ps.weights[i] * utility(st.actions[static_cast<std::size_t>(st.assignment[i])], ps.points[i], w);
  st.objective = obj.value();
  st.converged = true;
  st.trace = {st.objective};
  return st;
}

/// Recomputes IC slacks of the state's assignment against its own actions
/// (deviations range over the used messages) and the distance between each
/// used action and its cell's posterior mean. Credible requires both
/// min slack >= -tol and best_response_gap <= tol.
inline EquilibriumReport ic_audit(const LloydState &st, const PointSet &ps, const PayoffWeights &w,
                                  double tol = 1e-9) {
  if (st.assignment.size() != ps.size())
    throw InvalidInput("ic_audit: state does not match the point set");
  const std::size_t n = st.actions.size();
  std::vector<std::vector<std::size_t>> cells(n);
  for (std::size_t i = 0; i < ps.size(); ++i)
    cells[static_cast<std::size_t>(st.assignment[i])].push_back(i);
  std::vector<Point> used;
  EquilibriumReport r;
  for (std::size_t k = 0; k < n; ++k) {
    if (cells[k].empty())
      continue;
    used.push_back(st.actions[k]);
    const Point mean = detail::weighted_centroid(ps, cells[k]);
    double gap = 0.0;
    for (int d = 0; d < ps.dim; ++d)
      gap += (mean[d] - st.actions[k][d]) * (mean[d] - st.actions[k][d]);
    r.best_response_gap = std::max(r.best_response_gap, std::sqrt(gap));
  }
  // Deviation ranks number the used messages in index order.
  const auto metric = w.metric(ps.dim);
  CompensatedSum payoff;
  r.ic_slack.resize(ps.size());
  double worst = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < ps.size(); ++i) {
    const double on_path = utility(st.actions[static_cast<std::size_t>(st.assignment[i])], ps.points[i], w);
    const auto [k, best] = best_action(used, ps.points[i], metric, ps.dim);
    payoff += ps.weights[i] * on_path;
    r.ic_slack[i] = on_path - best;
    if (r.ic_slack[i] < worst) {
      worst = r.ic_slack[i];
      r.best_deviation = Deviation{i, k + 1};
    }
  }
  r.exante_payoff = payoff.value();
  r.credible = worst >= -tol && r.best_response_gap <= tol;
  if (r.credible)
    r.best_deviation.reset();
  return r;
}

// ---------------------------------------------------------------------------
// Shape of a fixed point: are the actions on a line, are the cell
// boundaries parallel?

struct BoundaryFit {
  std::size_t first = 0, second = 0; ///< message indices, first < second
  std::size_t points = 0;
  double normal_angle = 0.0; ///< in [0, pi)
};

struct ShapeDiagnostics {
  /// Max perpendicular distance of the actions from their total least
  /// squares line, divided by their extent along it.
  double centroid_collinearity_residual = 0.0;
  /// Max pairwise angle between fitted boundary normals (radians).
  double boundary_parallelism_spread = 0.0;
  std::vector<BoundaryFit> boundaries;
  std::size_t boundaries_skipped = 0;
};

namespace detail {

struct LineFit {
  Vec2 mean{0.0, 0.0};
  Vec2 direction{1.0, 0.0};
};

inline LineFit total_least_squares(std::span<const Point> pts) {
  LineFit f;
  CompensatedSum m0, m1;
  for (const auto &p : pts) {
    m0 += p[0];
    m1 += p[1];
  }
  const double n = static_cast<double>(pts.size());
  f.mean = {m0.value() / n, m1.value() / n};
  CompensatedSum c00, c01, c11;
  for (const auto &p : pts) {
    const double d0 = p[0] - f.mean[0], d1 = p[1] - f.mean[1];
    c00 += d0 * d0;
    c01 += d0 * d1;
    c11 += d1 * d1;
  }
  f.direction = principal_direction(c00.value(), c01.value(), c11.value());
  return f;
}

inline double angle_mod_pi(double a) {
  a = std::fmod(a, std::numbers::pi);
  return a < 0.0 ? a + std::numbers::pi : a;
}

inline double angle_distance_mod_pi(double a, double b) {
  const double d = std::abs(angle_mod_pi(a) - angle_mod_pi(b));
  return std::min(d, std::numbers::pi - d);
}

} // namespace detail

inline double collinearity_residual(std::span<const Point> actions) {
  if (actions.size() <= 2)
    return 0.0;
  const auto fit = detail::total_least_squares(actions);
  double lo = std::numeric_limits<double>::infinity(), hi = -lo, perp = 0.0;
  for (const auto &a : actions) {
    const double d0 = a[0] - fit.mean[0], d1 = a[1] - fit.mean[1];
    const double along = d0 * fit.direction[0] + d1 * fit.direction[1];
    lo = std::min(lo, along);
    hi = std::max(hi, along);
    perp = std::max(perp, std::abs(-d0 * fit.direction[1] + d1 * fit.direction[0]));
  }
  return hi > lo ? perp / (hi - lo) : 0.0;
}

/// Boundary points between messages i and j are lattice points whose two
/// best actions are i and j with a utility gap below |grad| * h, i.e. points
/// within one grid step of the indifference line.
inline ShapeDiagnostics shape_diagnostics(const LloydState &st, const DiscretizedPrior &prior,
                                          const PayoffWeights &w) {
  const PointSet &ps = prior.points();
  if (st.assignment.size() != ps.size())
    throw InvalidInput("shape_diagnostics: state does not match the prior");
  ShapeDiagnostics out;
  out.centroid_collinearity_residual = collinearity_residual(st.actions);

  const std::size_t n = st.actions.size();
  const auto metric = w.metric(2);
  const double h = std::max(prior.spacing()[0], prior.spacing()[1]);
  std::map<std::pair<std::size_t, std::size_t>, std::vector<Point>> bands;
  for (const auto &theta : ps.points) {
    std::size_t b1 = 0, b2 = 1;
    double u1 = -std::numeric_limits<double>::infinity(), u2 = u1;
    for (std::size_t k = 0; k < n; ++k) {
      const double u = utility(st.actions[k], theta, w);
      if (u > u1) {
        b2 = b1;
        u2 = u1;
        b1 = k;
        u1 = u;
      } else if (u > u2) {
        b2 = k;
        u2 = u;
      }
    }
    const auto &a = st.actions[b1];
    const auto &b = st.actions[b2];
    const double grad = 2.0 * std::hypot(metric[0] * (a[0] - b[0]), metric[1] * (a[1] - b[1]));
    if (u1 - u2 < grad * h)
      bands[{std::min(b1, b2), std::max(b1, b2)}].push_back(theta);
  }
  for (const auto &[key, pts] : bands) {
    if (pts.size() < 2) {
      ++out.boundaries_skipped;
      continue;
    }
    const auto fit = detail::total_least_squares(pts);
    const double normal = std::atan2(fit.direction[0], -fit.direction[1]);
    out.boundaries.push_back({key.first, key.second, pts.size(), detail::angle_mod_pi(normal)});
  }
  for (std::size_t i = 0; i < out.boundaries.size(); ++i)
    for (std::size_t j = i + 1; j < out.boundaries.size(); ++j)
      out.boundary_parallelism_spread =
          std::max(out.boundary_parallelism_spread,
                   detail::angle_distance_mod_pi(out.boundaries[i].normal_angle, out.boundaries[j].normal_angle));
  return out;
}

/// Ranks 1..K of the used messages, ordered along the total least squares
/// line through the actions (ties by message index).
inline std::vector<int> ranks_along_action_line(const LloydState &st) {
  std::vector<bool> used(st.actions.size(), false);
  for (int k : st.assignment)
    used[static_cast<std::size_t>(k)] = true;
  std::vector<std::size_t> live;
  std::vector<Point> pts;
  for (std::size_t k = 0; k < used.size(); ++k)
    if (used[k]) {
      live.push_back(k);
      pts.push_back(st.actions[k]);
    }
  const auto fit = detail::total_least_squares(pts);
  const auto along = [&](std::size_t k) {
    return (st.actions[k][0] - fit.mean[0]) * fit.direction[0] + (st.actions[k][1] - fit.mean[1]) * fit.direction[1];
  };
  std::stable_sort(live.begin(), live.end(), [&](std::size_t a, std::size_t b) { return along(a) < along(b); });
  std::vector<int> rank_of(st.actions.size(), 0);
  for (std::size_t r = 0; r < live.size(); ++r)
    rank_of[live[r]] = static_cast<int>(r) + 1;
  std::vector<int> ranks(st.assignment.size());
  for (std::size_t i = 0; i < ranks.size(); ++i)
    ranks[i] = rank_of[static_cast<std::size_t>(st.assignment[i])];
  return ranks;
}

/// Whether the fixed point, with messages ranked along the action line, is a
/// score on the lattice (passes the IVP).
inline LatticeIvpVerdict is_lattice_score(const LloydState &st, const DiscretizedPrior &prior) {
  const auto ranks = ranks_along_action_line(st);
  return check_lattice_ivp(ranks, prior.resolution(), prior.resolution());
}

/// Index of the highest-objective state that is a lattice score, if any.
inline std::optional<std::size_t> best_score_fixed_point(std::span<const LloydState> states,
                                                         const DiscretizedPrior &prior) {
  std::optional<std::size_t> best;
  for (std::size_t i = 0; i < states.size(); ++i) {
    if (best && states[i].objective <= states[*best].objective)
      continue;
    if (is_lattice_score(states[i], prior).feasible)
      best = i;
  }
  return best;
}

} // namespace scoretalk

#endif // SCORETALK_DYNAMICS_HPP
