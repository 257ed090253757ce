#ifndef SCORETALK_CONFIG_HPP
#define SCORETALK_CONFIG_HPP

// Experiment configuration: a strict JSON document, validated in full so
// that every violation is reported at once.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "scoretalk/model.hpp"

namespace scoretalk {

using Json = nlohmann::ordered_json;

enum class Mode { finite, two_by_two, gaussian, lloyd, audit };

inline const char *to_string(Mode m) {
  switch (m) {
  case Mode::finite:
    return "finite";
  case Mode::two_by_two:
    return "two-by-two";
  case Mode::gaussian:
    return "gaussian";
  case Mode::lloyd:
    return "lloyd";
  case Mode::audit:
    return "audit";
  }
  return "?";
}

inline std::optional<Mode> parse_mode(const std::string &s) {
  for (Mode m : {Mode::finite, Mode::two_by_two, Mode::gaussian, Mode::lloyd, Mode::audit})
    if (s == to_string(m))
      return m;
  return std::nullopt;
}

struct SigmaBlock {
  double s11 = 1.0;
  double s22 = 1.0;
  double s12 = 0.0;
  friend bool operator==(const SigmaBlock &, const SigmaBlock &) = default;
};

struct ModelBlock {
  std::optional<std::vector<double>> pmf;
  std::optional<std::vector<std::vector<double>>> states;
  std::optional<SigmaBlock> sigma;
  friend bool operator==(const ModelBlock &, const ModelBlock &) = default;
};

struct SolverBlock {
  std::optional<std::int64_t> max_k;
  std::optional<std::int64_t> n;
  std::optional<double> tol;
  std::optional<std::uint64_t> seed;
  std::optional<std::int64_t> resolution;
  std::optional<double> radius;
  std::optional<std::int64_t> restarts;
  std::optional<std::int64_t> max_iter;
  std::optional<std::vector<std::int64_t>> score;
  std::optional<std::vector<double>> beta;
  std::optional<std::int64_t> cells;
  std::optional<std::int64_t> samples;
  std::optional<std::int64_t> curve_points;
  friend bool operator==(const SolverBlock &, const SolverBlock &) = default;

  int max_k_or_default(std::size_t states) const {
    return static_cast<int>(max_k.value_or(static_cast<std::int64_t>(std::min<std::size_t>(states, 4))));
  }
  double tol_or_default() const { return tol.value_or(1e-9); }
};

struct OutputBlock {
  std::optional<std::string> dir;
  std::optional<std::vector<std::string>> formats;
  friend bool operator==(const OutputBlock &, const OutputBlock &) = default;

  bool wants(const std::string &format) const {
    return !formats || std::find(formats->begin(), formats->end(), format) != formats->end();
  }
};

struct SweepBlock {
  std::string parameter;
  std::vector<double> values;
  friend bool operator==(const SweepBlock &, const SweepBlock &) = default;
};

struct ExperimentConfig {
  Mode mode = Mode::finite;
  std::optional<double> phi;
  ModelBlock model;
  SolverBlock solver;
  OutputBlock output;
  std::optional<SweepBlock> sweep;
  friend bool operator==(const ExperimentConfig &, const ExperimentConfig &) = default;

  double phi_or_default() const { return phi.value_or(1.0); }
};

/// Every violation found in a config document.
class ConfigError : public InvalidInput {
public:
  explicit ConfigError(std::vector<std::string> violations)
      : InvalidInput(join(violations)), violations_(std::move(violations)) {}
  const std::vector<std::string> &violations() const { return violations_; }

private:
  static std::string join(const std::vector<std::string> &v) {
    std::string s = "invalid config:";
    for (const auto &x : v)
      s += "\n  - " + x;
    return s;
  }
  std::vector<std::string> violations_;
};

inline constexpr double kPmfSumTolerance = 1e-12;

inline std::string format_number(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

namespace detail {

/// Reads typed fields out of a JSON object, recording problems instead of
/// throwing, and flags keys that were never read.
class Reader {
public:
  Reader(const Json &obj, std::string path, std::vector<std::string> &errors)
      : obj_(obj), path_(std::move(path)), errors_(errors) {}

  bool has(const std::string &key) const { return obj_.contains(key); }
  std::string where(const std::string &key) const { return path_.empty() ? key : path_ + "." + key; }

  const Json *raw(const std::string &key) {
    seen_.insert(key);
    const auto it = obj_.find(key);
    return it == obj_.end() ? nullptr : &*it;
  }

  std::optional<double> number(const std::string &key) {
    const Json *j = raw(key);
    if (!j)
      return std::nullopt;
    if (!j->is_number()) {
      errors_.push_back(where(key) + ": expected a number");
      return std::nullopt;
    }
    const double v = j->get<double>();
    if (!std::isfinite(v)) {
      errors_.push_back(where(key) + ": must be finite");
      return std::nullopt;
    }
    return v;
  }

  std::optional<std::int64_t> integer(const std::string &key) {
    const Json *j = raw(key);
    if (!j)
      return std::nullopt;
    if (!j->is_number_integer()) {
      errors_.push_back(where(key) + ": expected an integer");
      return std::nullopt;
    }
    return j->get<std::int64_t>();
  }

  std::optional<std::uint64_t> unsigned_integer(const std::string &key) {
    const Json *j = raw(key);
    if (!j)
      return std::nullopt;
    if (!j->is_number_unsigned()) {
      errors_.push_back(where(key) + ": expected a non-negative integer");
      return std::nullopt;
    }
    return j->get<std::uint64_t>();
  }

  std::optional<std::string> string(const std::string &key) {
    const Json *j = raw(key);
    if (!j)
      return std::nullopt;
    if (!j->is_string()) {
      errors_.push_back(where(key) + ": expected a string");
      return std::nullopt;
    }
    return j->get<std::string>();
  }

  template <class T> std::optional<std::vector<T>> array(const std::string &key) {
    const Json *j = raw(key);
    if (!j)
      return std::nullopt;
    if (!j->is_array()) {
      errors_.push_back(where(key) + ": expected an array");
      return std::nullopt;
    }
    std::vector<T> out;
    for (std::size_t i = 0; i < j->size(); ++i) {
      const Json &e = (*j)[i];
      const bool ok = std::is_same_v<T, std::string> ? e.is_string()
                      : std::is_integral_v<T>        ? e.is_number_integer()
                                                     : e.is_number();
      if (!ok) {
        errors_.push_back(where(key) + "[" + std::to_string(i) + "]: wrong element type");
        return std::nullopt;
      }
      out.push_back(e.get<T>());
    }
    return out;
  }

  const Json *object(const std::string &key) {
    const Json *j = raw(key);
    if (j && !j->is_object()) {
      errors_.push_back(where(key) + ": expected an object");
      return nullptr;
    }
    return j;
  }

  void reject_unknown() const {
    for (const auto &[key, value] : obj_.items())
      if (!seen_.count(key))
        errors_.push_back(where(key) + ": unknown key");
  }

private:
  const Json &obj_;
  std::string path_;
  std::vector<std::string> &errors_;
  std::set<std::string> seen_;
};

} // namespace detail

/// Structural parse of a JSON document; type errors and unknown keys are
/// collected in `errors`. Semantic checks live in validate().
inline ExperimentConfig config_from_json(const Json &doc, std::vector<std::string> &errors) {
  ExperimentConfig cfg;
  if (!doc.is_object()) {
    errors.push_back("config: top level must be an object");
    return cfg;
  }
  detail::Reader top(doc, "", errors);
  if (const auto mode = top.string("mode")) {
    if (const auto m = parse_mode(*mode))
      cfg.mode = *m;
    else
      errors.push_back("mode: '" + *mode + "' is not one of finite, two-by-two, gaussian, lloyd, audit");
  } else if (!doc.contains("mode")) {
    errors.push_back("mode: required");
  }
  cfg.phi = top.number("phi");

  if (const Json *m = top.object("model")) {
    detail::Reader r(*m, "model", errors);
    cfg.model.pmf = r.array<double>("pmf");
    if (const Json *states = r.raw("states")) {
      if (!states->is_array()) {
        errors.push_back("model.states: expected an array");
      } else {
        std::vector<std::vector<double>> out;
        bool ok = true;
        for (std::size_t i = 0; i < states->size() && ok; ++i) {
          const Json &s = (*states)[i];
          if (s.is_number()) {
            out.push_back({s.get<double>()});
          } else if (s.is_array() && std::all_of(s.begin(), s.end(), [](const Json &x) { return x.is_number(); })) {
            out.push_back(s.get<std::vector<double>>());
          } else {
            errors.push_back("model.states[" + std::to_string(i) + "]: expected a number or an array of numbers");
            ok = false;
          }
        }
        if (ok)
          cfg.model.states = out;
      }
    }
    if (const Json *s = r.object("sigma")) {
      detail::Reader rs(*s, "model.sigma", errors);
      const auto s11 = rs.number("s11"), s22 = rs.number("s22"), s12 = rs.number("s12");
      for (const char *k : {"s11", "s22", "s12"})
        if (!s->contains(k))
          errors.push_back(std::string("model.sigma.") + k + ": required");
      if (s11 && s22 && s12)
        cfg.model.sigma = SigmaBlock{*s11, *s22, *s12};
      rs.reject_unknown();
    }
    r.reject_unknown();
  } else if (!doc.contains("model")) {
    errors.push_back("model: required");
  }

  if (const Json *s = top.object("solver")) {
    detail::Reader r(*s, "solver", errors);
    auto &v = cfg.solver;
    v.max_k = r.integer("max_k");
    v.n = r.integer("n");
    v.tol = r.number("tol");
    v.seed = r.unsigned_integer("seed");
    v.resolution = r.integer("resolution");
    v.radius = r.number("radius");
    v.restarts = r.integer("restarts");
    v.max_iter = r.integer("max_iter");
    v.score = r.array<std::int64_t>("score");
    v.beta = r.array<double>("beta");
    v.cells = r.integer("cells");
    v.samples = r.integer("samples");
    v.curve_points = r.integer("curve_points");
    r.reject_unknown();
  }

  if (const Json *o = top.object("output")) {
    detail::Reader r(*o, "output", errors);
    cfg.output.dir = r.string("dir");
    cfg.output.formats = r.array<std::string>("formats");
    r.reject_unknown();
  }

  if (const Json *s = top.object("sweep")) {
    detail::Reader r(*s, "sweep", errors);
    SweepBlock sw;
    if (const auto p = r.string("parameter"))
      sw.parameter = *p;
    else if (!s->contains("parameter"))
      errors.push_back("sweep.parameter: required");
    if (const auto v = r.array<double>("values"))
      sw.values = *v;
    else if (!s->contains("values"))
      errors.push_back("sweep.values: required");
    cfg.sweep = sw;
    r.reject_unknown();
  }
  top.reject_unknown();
  return cfg;
}

/// Semantic checks; returns every violation.
inline std::vector<std::string> validate(const ExperimentConfig &cfg) {
  std::vector<std::string> errors;
  const auto need = [&](bool ok, const std::string &msg) {
    if (!ok)
      errors.push_back(msg);
  };
  const auto &m = cfg.model;
  const auto &s = cfg.solver;
  if (cfg.phi)
    need(*cfg.phi > 0.0, "phi: must be > 0");

  const bool finite_block = m.pmf.has_value() || m.states.has_value();
  const bool gaussian_block = m.sigma.has_value();
  need(!(finite_block && gaussian_block), "model: give either pmf/states or sigma, not both");
  switch (cfg.mode) {
  case Mode::two_by_two:
    need(m.pmf.has_value(), "model.pmf: required for mode two-by-two");
    need(!m.states.has_value(), "model.states: not allowed for mode two-by-two (states are {0,1}^2)");
    need(!gaussian_block, "model.sigma: not allowed for mode two-by-two");
    if (m.pmf)
      need(m.pmf->size() == 4, "model.pmf: two-by-two needs 4 probabilities f(0,0), f(1,0), f(0,1), f(1,1)");
    break;
  case Mode::finite:
    need(m.pmf.has_value() && m.states.has_value(), "model: mode finite needs pmf and states");
    need(!gaussian_block, "model.sigma: not allowed for mode finite");
    break;
  case Mode::gaussian:
    need(gaussian_block, "model.sigma: required for mode gaussian");
    need(!finite_block, "model: pmf/states not allowed for mode gaussian");
    break;
  case Mode::lloyd:
  case Mode::audit:
    need(gaussian_block || (m.pmf.has_value() && m.states.has_value()),
         std::string("model: mode ") + to_string(cfg.mode) + " needs sigma, or pmf and states");
    break;
  }

  if (m.pmf) {
    CompensatedSum total;
    bool positive = true;
    for (double p : *m.pmf) {
      total += p;
      positive = positive && p > 0.0;
    }
    need(positive, "model.pmf: every probability must be > 0");
    need(m.pmf->size() >= 2, "model.pmf: at least two states");
    const double residual = total.value() - 1.0;
    if (std::abs(residual) > kPmfSumTolerance) {
      char buf[160];
      std::snprintf(buf, sizeof buf, "model.pmf: probabilities sum to %.12g (residual %+.6g)", total.value(),
                    residual);
      errors.push_back(buf);
    }
  }
  if (m.states) {
    const auto &st = *m.states;
    const std::size_t dim = st.empty() ? 0 : st.front().size();
    need(dim == 1 || dim == 2, "model.states: states must have 1 or 2 coordinates");
    need(std::all_of(st.begin(), st.end(), [&](const auto &x) { return x.size() == dim; }),
         "model.states: all states must have the same dimension");
    if (m.pmf)
      need(st.size() == m.pmf->size(), "model.states: " + std::to_string(st.size()) + " states but " +
                                           std::to_string(m.pmf->size()) + " probabilities");
    std::set<std::vector<double>> distinct(st.begin(), st.end());
    need(distinct.size() == st.size(), "model.states: states must be distinct");
  }
  if (m.sigma) {
    const auto &g = *m.sigma;
    need(g.s11 > 0.0, "model.sigma.s11: must be > 0");
    need(g.s22 > 0.0, "model.sigma.s22: must be > 0");
    need(g.s12 * g.s12 < g.s11 * g.s22, "model.sigma: not positive definite (s12^2 >= s11 * s22)");
  }

  if (s.tol)
    need(*s.tol > 0.0, "solver.tol: must be > 0");
  if (s.max_k)
    need(*s.max_k >= 2, "solver.max_k: must be >= 2");
  if (s.n)
    need(*s.n >= 2, "solver.n: must be >= 2 (a score is not constant)");
  if (s.resolution)
    need(*s.resolution >= 32, "solver.resolution: must be >= 32");
  if (s.radius)
    need(*s.radius > 0.0, "solver.radius: must be > 0");
  if (s.restarts)
    need(*s.restarts >= 1, "solver.restarts: must be >= 1");
  if (s.max_iter)
    need(*s.max_iter >= 1, "solver.max_iter: must be >= 1");
  if (s.cells)
    need(*s.cells >= 2, "solver.cells: must be >= 2");
  if (s.samples)
    need(*s.samples >= 1000, "solver.samples: must be >= 1000");
  if (s.curve_points)
    need(*s.curve_points >= 2, "solver.curve_points: must be >= 2");
  if (s.beta)
    need(s.beta->size() == 2 && (s.beta->at(0) != 0.0 || s.beta->at(1) != 0.0),
         "solver.beta: expected two numbers, not both zero");
  if (s.score) {
    need(cfg.mode == Mode::audit && finite_block, "solver.score: only used by mode audit on a finite model");
    if (m.pmf)
      need(s.score->size() == m.pmf->size(), "solver.score: one rank per state required");
  } else if (cfg.mode == Mode::audit && finite_block) {
    need(false, "solver.score: required for mode audit on a finite model");
  }
  need(s.seed.has_value() || !((s.restarts && *s.restarts > 1) || s.samples),
       "solver.seed: required when restarts > 1 or samples is set");

  if (cfg.output.formats)
    for (const auto &f : *cfg.output.formats)
      need(f == "json" || f == "csv" || f == "txt", "output.formats: unknown format '" + f + "'");

  if (cfg.sweep) {
    const auto &sw = *cfg.sweep;
    need(!sw.values.empty(), "sweep.values: must not be empty");
    if (sw.parameter == "phi") {
      for (double v : sw.values)
        need(v > 0.0, "sweep.values: phi values must be > 0");
    } else if (sw.parameter == "s12") {
      need(gaussian_block, "sweep: parameter s12 needs a sigma model");
      if (m.sigma)
        for (double v : sw.values)
          need(v * v < m.sigma->s11 * m.sigma->s22,
               "sweep.values: s12 = " + format_number(v) + " makes sigma not positive definite");
    } else if (sw.parameter == "n") {
      need(cfg.mode == Mode::lloyd, "sweep: parameter n needs mode lloyd");
      for (double v : sw.values)
        need(v >= 2.0 && v == std::floor(v), "sweep.values: n must be an integer >= 2");
    } else if (!sw.parameter.empty()) {
      errors.push_back("sweep.parameter: '" + sw.parameter + "' is not one of phi, s12, n");
    }
  }
  return errors;
}

inline ExperimentConfig parse_config_json(const Json &doc) {
  std::vector<std::string> errors;
  ExperimentConfig cfg = config_from_json(doc, errors);
  // Mode-dependent checks are meaningless without a mode.
  const bool mode_ok = std::none_of(errors.begin(), errors.end(), [](const std::string &e) { return e.rfind("mode:", 0) == 0; });
  if (mode_ok)
    for (auto &e : validate(cfg))
      errors.push_back(std::move(e));
  if (!errors.empty())
    throw ConfigError(std::move(errors));
  return cfg;
}

inline ExperimentConfig parse_config(const std::string &text) {
  Json doc;
  try {
    doc = Json::parse(text);
  } catch (const Json::parse_error &e) {
    throw ConfigError({std::string("config: not valid JSON: ") + e.what()});
  }
  return parse_config_json(doc);
}

inline Json to_json(const ExperimentConfig &cfg) {
  Json j;
  j["mode"] = to_string(cfg.mode);
  if (cfg.phi)
    j["phi"] = *cfg.phi;
  Json model = Json::object();
  if (cfg.model.pmf)
    model["pmf"] = *cfg.model.pmf;
  if (cfg.model.states) {
    Json states = Json::array();
    for (const auto &s : *cfg.model.states)
      states.push_back(s);
    model["states"] = states;
  }
  if (cfg.model.sigma)
    model["sigma"] = Json{{"s11", cfg.model.sigma->s11}, {"s22", cfg.model.sigma->s22}, {"s12", cfg.model.sigma->s12}};
  j["model"] = model;

  Json solver = Json::object();
  const auto put = [&](const char *key, const auto &opt) {
    if (opt)
      solver[key] = *opt;
  };
  const auto &s = cfg.solver;
  put("max_k", s.max_k);
  put("n", s.n);
  put("tol", s.tol);
  put("seed", s.seed);
  put("resolution", s.resolution);
  put("radius", s.radius);
  put("restarts", s.restarts);
  put("max_iter", s.max_iter);
  put("score", s.score);
  put("beta", s.beta);
  put("cells", s.cells);
  put("samples", s.samples);
  put("curve_points", s.curve_points);
  if (!solver.empty())
    j["solver"] = solver;

  Json output = Json::object();
  if (cfg.output.dir)
    output["dir"] = *cfg.output.dir;
  if (cfg.output.formats)
    output["formats"] = *cfg.output.formats;
  if (!output.empty())
    j["output"] = output;
  if (cfg.sweep)
    j["sweep"] = Json{{"parameter", cfg.sweep->parameter}, {"values", cfg.sweep->values}};
  return j;
}

inline std::string serialize(const ExperimentConfig &cfg) { return to_json(cfg).dump(2) + "\n"; }

/// FNV-1a 64 of the canonical serialisation.
inline std::uint64_t config_hash(const ExperimentConfig &cfg) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : to_json(cfg).dump()) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

} // namespace scoretalk

#endif // SCORETALK_CONFIG_HPP
