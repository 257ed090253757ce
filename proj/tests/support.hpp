#ifndef SCORETALK_TESTS_SUPPORT_HPP
#define SCORETALK_TESTS_SUPPORT_HPP

#include <random>
#include <set>
#include <vector>

#include "oracle.hpp"
#include "scoretalk/model.hpp"

namespace testing_support {

inline std::vector<double> random_pmf(std::mt19937_64 &rng, std::size_t n) {
  std::uniform_real_distribution<double> u(0.05, 1.0);
  std::vector<double> p(n);
  double s = 0.0;
  for (auto &v : p)
    s += (v = u(rng));
  for (auto &v : p)
    v /= s;
  return p;
}

/// Distinct states on a small integer lattice (so boxes often contain other
/// states), in one or two dimensions.
inline scoretalk::FiniteModel random_model(std::mt19937_64 &rng, std::size_t n, int dim) {
  std::uniform_int_distribution<int> coord(0, 3);
  std::set<std::pair<int, int>> seen;
  std::vector<scoretalk::Point> states;
  while (states.size() < n) {
    const int a = coord(rng) + (dim == 1 ? 4 * coord(rng) : 0);
    const int b = dim == 2 ? coord(rng) : 0;
    if (!seen.insert({a, b}).second)
      continue;
    states.push_back(dim == 1 ? scoretalk::Point(a) : scoretalk::Point(a, b));
  }
  return scoretalk::FiniteModel(std::move(states), random_pmf(rng, n));
}

inline oracle::Model to_oracle(const scoretalk::FiniteModel &m, double phi) {
  oracle::Model o;
  o.dim = m.dim();
  o.phi = phi;
  for (const auto &s : m.states())
    o.states.push_back({s[0], s[1]});
  o.pmf.assign(m.pmf().begin(), m.pmf().end());
  return o;
}

} // namespace testing_support

#endif // SCORETALK_TESTS_SUPPORT_HPP
