#ifndef SCORETALK_REPORT_HPP
#define SCORETALK_REPORT_HPP

// Dispatches a validated ExperimentConfig to the engines and collects
// structured records, delimited tables and a plain-text summary.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "scoretalk/config.hpp"
#include "scoretalk/dynamics.hpp"
#include "scoretalk/finite.hpp"
#include "scoretalk/gaussian.hpp"

#ifndef SCORETALK_VERSION
#define SCORETALK_VERSION "0.1.0"
#endif

namespace scoretalk {

inline constexpr const char *kVersion = SCORETALK_VERSION;

struct Table {
  std::string name; ///< file stem
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;
};

struct ReportBundle {
  Json record;
  std::vector<Table> tables;
  std::string summary;
};

/// Short fixed-precision rendering for summaries; records keep full precision.
inline std::string fmt(double v, int digits = 6) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.*g", digits, v);
  return buf;
}

inline std::string cell(double v) { return std::isfinite(v) ? format_number(v) : ""; }
inline std::string cell(std::size_t v) { return std::to_string(v); }
inline std::string cell(int v) { return std::to_string(v); }
inline std::string cell(bool v) { return v ? "true" : "false"; }

namespace detail {

struct ModeResult {
  Json record;
  std::vector<Table> tables;
  std::vector<std::string> summary;
  Json metrics = Json::object(); ///< flat numbers for sweep rows
};

inline FiniteModel finite_model(const ExperimentConfig &cfg) {
  if (cfg.mode == Mode::two_by_two) {
    const auto &p = *cfg.model.pmf;
    return square_model({p[0], p[1], p[2], p[3]});
  }
  std::vector<Point> states;
  for (const auto &s : *cfg.model.states)
    states.push_back(s.size() == 1 ? Point(s[0]) : Point(s[0], s[1]));
  return FiniteModel(std::move(states), *cfg.model.pmf);
}

inline GaussianModel gaussian_model(const ExperimentConfig &cfg) {
  const auto &s = *cfg.model.sigma;
  return GaussianModel(s.s11, s.s22, s.s12);
}

inline Json point_json(const Point &p) {
  return p.dim == 1 ? Json::array({p[0]}) : Json::array({p[0], p[1]});
}

inline std::string point_text(const Point &p) {
  return p.dim == 1 ? "(" + fmt(p[0], 4) + ")" : "(" + fmt(p[0], 4) + "," + fmt(p[1], 4) + ")";
}

inline std::string ranks_text(const OrderedScore &s) {
  std::string out;
  for (int r : s.ranks())
    out += (out.empty() ? "" : " ") + std::to_string(r);
  return out;
}

inline Json deviation_json(const FiniteModel &m, const Deviation &d) {
  return Json{{"state_index", d.state}, {"state", point_json(m.state(d.state))}, {"rank", d.rank}};
}

inline Json commitment_json(const CommitmentGap &g) {
  return Json{{"optimal_payoff", g.optimal_payoff},
              {"best_credible_payoff", g.best_credible_payoff},
              {"gap", g.gap},
              {"best_credible_score", g.best_credible.ranks()}};
}

inline std::string gap_text(double gap, double tol) { return gap > tol ? "gap > 0" : "gap = 0"; }

inline ModeResult run_finite(const ExperimentConfig &cfg) {
  const FiniteModel model = finite_model(cfg);
  const PayoffWeights w(cfg.phi_or_default());
  const int max_k = cfg.solver.max_k_or_default(model.size());
  const double tol = cfg.solver.tol_or_default();
  const auto rows = score_table(model, w, max_k, tol);
  const auto opt = optimal_scores(model, w, max_k);
  const auto gap = commitment_gap(model, w, max_k, tol);

  ModeResult r;
  Table t{"scores", {"partition_id", "ranks", "messages", "payoff", "credible", "min_slack"}, {}};
  Json scores = Json::array();
  for (const auto &row : rows) {
    scores.push_back(Json{{"partition_id", row.partition_id},
                          {"ranks", row.score.ranks()},
                          {"messages", row.score.messages()},
                          {"payoff", row.payoff},
                          {"credible", row.credible},
                          {"min_slack", row.min_slack}});
    t.rows.push_back({cell(row.partition_id), ranks_text(row.score), cell(row.score.messages()), cell(row.payoff),
                      cell(row.credible), cell(row.min_slack)});
  }
  Json argmax = Json::array();
  bool any_credible = false;
  for (const auto &s : opt.argmax) {
    const auto rep = check_credibility(model, s, w, tol);
    any_credible = any_credible || rep.credible;
    Json item{{"ranks", s.ranks()}, {"credible", rep.credible}, {"min_slack", rep.min_slack()}};
    if (rep.best_deviation)
      item["best_deviation"] = deviation_json(model, *rep.best_deviation);
    argmax.push_back(item);
  }
  r.record = Json{{"states", model.size()},
                  {"max_k", max_k},
                  {"scores", scores},
                  {"optimal", Json{{"payoff", opt.payoff}, {"argmax", argmax}}},
                  {"commitment", commitment_json(gap)}};
  r.tables.push_back(std::move(t));
  r.summary = {"scores enumerated: " + std::to_string(rows.size()) + " (max_k " + std::to_string(max_k) + ")",
               "optimal payoff: " + fmt(opt.payoff) + " (" + std::to_string(opt.argmax.size()) + " optimal score" +
                   (opt.argmax.size() == 1 ? "" : "s") + ", first ranks " + ranks_text(opt.argmax.front()) + ")",
               std::string("optimal credible: ") + (any_credible ? "yes" : "no"),
               "best credible payoff: " + fmt(gap.best_credible_payoff) + " (ranks " +
                   ranks_text(gap.best_credible) + ")",
               "value of commitment: " + fmt(gap.gap) + " (" + gap_text(gap.gap, tol) + ")"};
  r.metrics = Json{{"optimal_payoff", gap.optimal_payoff},
                   {"best_credible_payoff", gap.best_credible_payoff},
                   {"gap", gap.gap}};
  return r;
}

inline ModeResult run_two_by_two(const ExperimentConfig &cfg) {
  const auto &p = *cfg.model.pmf;
  const SquarePmf f{p[0], p[1], p[2], p[3]};
  const PayoffWeights w(cfg.phi_or_default());
  const double tol = cfg.solver.tol_or_default();
  const auto rep = two_by_two_analysis(f, w);
  const FiniteModel model = square_model(f);
  const auto gap = commitment_gap(model, w, 4, tol);

  ModeResult r;
  r.record = Json{{"pmf", {{"f00", f[0]}, {"f10", f[1]}, {"f01", f[2]}, {"f11", f[3]}}},
                  {"payoffs", {{"s_D", rep.u_D}, {"s_d", rep.u_d}, {"s_1", rep.u_1}, {"s_2", rep.u_2}}},
                  {"optimal", to_string(rep.optimal_label)},
                  {"credible_optimal", rep.credible_optimal},
                  {"ratio", rep.ratio},
                  {"credible_ratio_interval", {kCredibleRatioLow, 1.0 / kCredibleRatioLow}},
                  {"commitment", commitment_json(gap)}};
  std::string deviation;
  if (rep.optimal_label != SquareOptimum::tie) {
    const auto score = rep.optimal_label == SquareOptimum::s_d ? score_d() : score_D();
    const auto audit = check_credibility(model, score, w, tol);
    r.record["min_slack"] = audit.min_slack();
    if (audit.best_deviation) {
      r.record["best_deviation"] = deviation_json(model, *audit.best_deviation);
      deviation = "best deviation: state " + point_text(model.state(audit.best_deviation->state)) + " to rank " +
                  std::to_string(audit.best_deviation->rank) + " (slack " + fmt(audit.min_slack()) + ")";
    }
  }
  Table t{"payoffs", {"score", "payoff"}, {}};
  for (const auto &[name, u] : {std::pair{"s_D", rep.u_D}, {"s_d", rep.u_d}, {"s_1", rep.u_1}, {"s_2", rep.u_2}})
    t.rows.push_back({name, cell(u)});
  r.tables.push_back(std::move(t));

  r.summary = {std::string("optimal: ") + to_string(rep.optimal_label) + "; credible: " +
                   (rep.credible_optimal ? "yes" : "no") + "; " + gap_text(gap.gap, tol),
               "payoffs: s_D " + fmt(rep.u_D) + ", s_d " + fmt(rep.u_d) + ", s_1 " + fmt(rep.u_1) + ", s_2 " +
                   fmt(rep.u_2),
               "ratio " + fmt(rep.ratio) + " against credible interval [" + fmt(kCredibleRatioLow) + ", " +
                   fmt(1.0 / kCredibleRatioLow) + "]",
               "gap: " + fmt(gap.gap) + " (best credible payoff " + fmt(gap.best_credible_payoff) + ")"};
  if (!deviation.empty())
    r.summary.push_back(deviation);
  r.metrics = Json{{"optimal_payoff", gap.optimal_payoff},
                   {"best_credible_payoff", gap.best_credible_payoff},
                   {"gap", gap.gap}};
  return r;
}

inline ModeResult run_gaussian(const ExperimentConfig &cfg, unsigned threads) {
  const GaussianModel g = gaussian_model(cfg);
  const PayoffWeights w(cfg.phi_or_default());
  const auto rep = credible_linear_scores(g, w);

  ModeResult r;
  Table t{"linear_scores", {"role", "beta1", "beta2", "q", "payoff", "residual"}, {}};
  Json scores = Json::array();
  for (std::size_t i : {rep.best_index, rep.worst_index}) {
    const auto &s = rep.scores[i];
    const char *role = i == rep.best_index ? "best" : "worst";
    const double payoff = exante_linear_payoff(s, g, w);
    const double residual = fixed_point_residual(s, g, w);
    scores.push_back(Json{{"role", role},
                          {"direction", {s[0], s[1]}},
                          {"q", rep.eigenvalues[i]},
                          {"payoff", payoff},
                          {"residual", residual}});
    t.rows.push_back({role, cell(s[0]), cell(s[1]), cell(rep.eigenvalues[i]), cell(payoff), cell(residual)});
    r.summary.push_back(std::string(role) + ": direction (" + fmt(s[0], 4) + "," + fmt(s[1], 4) + "), q " +
                        fmt(rep.eigenvalues[i]) + ", payoff " + fmt(payoff));
  }
  r.record = Json{{"sigma", {{"s11", g.var1()}, {"s22", g.var2()}, {"s12", g.cov12()}}},
                  {"prior_loss", g.prior_loss(w)},
                  {"credible_scores", scores},
                  {"degenerate_all_directions", rep.degenerate_all_directions}};
  if (g.cov12() != 0.0) {
    const auto ratios = credible_ratios(g, w);
    r.record["ratios"] = {ratios[0], ratios[1]};
  }
  r.tables.push_back(std::move(t));

  const auto points = static_cast<std::size_t>(cfg.solver.curve_points.value_or(360));
  Table curve{"curve", {"angle", "q", "payoff"}, {}};
  for (const auto &sample : rayleigh_curve(g, w, points))
    curve.rows.push_back({cell(sample.angle), cell(sample.q), cell(sample.q - g.prior_loss(w))});
  r.tables.push_back(std::move(curve));

  const auto &best = rep.best();
  r.metrics = Json{{"best_angle", best.angle()},
                   {"q_best", rep.eigenvalues[rep.best_index]},
                   {"q_worst", rep.eigenvalues[rep.worst_index]},
                   {"payoff_best", exante_linear_payoff(best, g, w)},
                   {"payoff_worst", exante_linear_payoff(rep.worst(), g, w)}};

  if (cfg.solver.cells || cfg.solver.samples) {
    const LinearScore beta = cfg.solver.beta ? LinearScore((*cfg.solver.beta)[0], (*cfg.solver.beta)[1]) : best;
    const auto cells = static_cast<std::size_t>(cfg.solver.cells.value_or(2));
    const CoarselyLinearScore coarse(beta, equiprobable_cuts(beta, g, cells));
    const double exact = coarsely_linear_payoff(coarse, g, w);
    Json c{{"direction", {beta[0], beta[1]}}, {"cells", cells}, {"cuts", coarse.cuts()}, {"payoff", exact}};
    r.summary.push_back("coarsely linear, " + std::to_string(cells) + " equiprobable cells along (" + fmt(beta[0], 4) +
                        "," + fmt(beta[1], 4) + "): payoff " + fmt(exact));
    r.metrics["coarse_payoff"] = exact;
    if (cfg.solver.samples) {
      const auto est = mc_payoff([&](const Vec2 &t) { return coarse.cell(t); }, cells, g, w,
                                 static_cast<std::size_t>(*cfg.solver.samples), *cfg.solver.seed, threads);
      c["monte_carlo"] = Json{{"samples", *cfg.solver.samples},
                              {"estimate", est.estimate},
                              {"standard_error", est.standard_error},
                              {"excluded", est.excluded},
                              {"z", (est.estimate - exact) / est.standard_error}};
      r.summary.push_back("monte carlo: " + fmt(est.estimate) + " +- " + fmt(est.standard_error, 3) + " (" +
                          std::to_string(*cfg.solver.samples) + " samples)");
      r.metrics["mc_payoff"] = est.estimate;
    }
    r.record["coarsely_linear"] = c;
  }
  return r;
}

inline Json report_json(const FiniteModel *model, const EquilibriumReport &rep) {
  Json j{{"credible", rep.credible},
         {"exante_payoff", rep.exante_payoff},
         {"min_slack", rep.min_slack()},
         {"best_response_gap", rep.best_response_gap}};
  if (rep.best_deviation) {
    if (model)
      j["best_deviation"] = deviation_json(*model, *rep.best_deviation);
    else
      j["best_deviation"] = Json{{"state_index", rep.best_deviation->state}, {"rank", rep.best_deviation->rank}};
  }
  return j;
}

inline ModeResult run_lloyd(const ExperimentConfig &cfg, unsigned threads) {
  const PayoffWeights w(cfg.phi_or_default());
  const bool gaussian = cfg.model.sigma.has_value();
  std::optional<DiscretizedPrior> prior;
  std::optional<FiniteModel> model;
  PointSet ps;
  if (gaussian) {
    prior.emplace(gaussian_model(cfg), static_cast<std::size_t>(cfg.solver.resolution.value_or(200)),
                  cfg.solver.radius.value_or(5.0));
    ps = prior->points();
  } else {
    model.emplace(finite_model(cfg));
    ps = PointSet::from(*model);
  }
  LloydOptions opt;
  opt.messages = static_cast<std::size_t>(cfg.solver.n.value_or(2));
  opt.tol = cfg.solver.tol.value_or(1e-12);
  opt.max_iter = static_cast<std::size_t>(cfg.solver.max_iter.value_or(10000));
  opt.threads = threads;
  const auto restarts = static_cast<std::size_t>(cfg.solver.restarts.value_or(1));
  const auto states = lloyd_restarts(ps, w, opt, restarts, cfg.solver.seed.value_or(0));

  std::size_t chosen = best_objective(states);
  bool chosen_is_score = !gaussian;
  if (gaussian) {
    if (const auto s = best_score_fixed_point(states, *prior)) {
      chosen = *s;
      chosen_is_score = true;
    }
  }
  const LloydState &st = states[chosen];
  const auto audit = ic_audit(st, ps, w, cfg.solver.tol_or_default());

  ModeResult r;
  Json runs = Json::array();
  for (std::size_t i = 0; i < states.size(); ++i) {
    Json run{{"restart", i},
             {"objective", states[i].objective},
             {"iterations", states[i].iterations},
             {"converged", states[i].converged},
             {"monotone", states[i].monotone},
             {"reseeds", states[i].reseeds}};
    if (gaussian)
      run["lattice_score"] = is_lattice_score(states[i], *prior).feasible;
    runs.push_back(run);
  }
  Json actions = Json::array();
  Table at{"actions", {"message", "a1", "a2", "mass"}, {}};
  std::vector<double> mass(st.actions.size(), 0.0);
  for (std::size_t i = 0; i < ps.size(); ++i)
    mass[static_cast<std::size_t>(st.assignment[i])] += ps.weights[i];
  for (std::size_t k = 0; k < st.actions.size(); ++k) {
    actions.push_back(Json{{"message", k}, {"action", point_json(st.actions[k])}, {"mass", mass[k]}});
    at.rows.push_back({cell(k), cell(st.actions[k][0]), ps.dim == 2 ? cell(st.actions[k][1]) : "", cell(mass[k])});
  }
  Table trace{"trace", {"iteration", "objective"}, {}};
  for (std::size_t i = 0; i < st.trace.size(); ++i)
    trace.rows.push_back({cell(i + 1), cell(st.trace[i])});

  Table raster{"raster", {}, {}};
  if (gaussian) {
    raster.columns = {"ix", "iy", "theta1", "theta2", "message"};
    const std::size_t res = prior->resolution();
    for (std::size_t ix = 0; ix < res; ++ix)
      for (std::size_t iy = 0; iy < res; ++iy) {
        const std::size_t i = prior->index(ix, iy);
        raster.rows.push_back({cell(ix), cell(iy), cell(ps.points[i][0]), cell(ps.points[i][1]), cell(st.assignment[i])});
      }
  } else {
    raster.columns = {"state", "theta1", "theta2", "message"};
    for (std::size_t i = 0; i < ps.size(); ++i)
      raster.rows.push_back({cell(i), cell(ps.points[i][0]), ps.dim == 2 ? cell(ps.points[i][1]) : "",
                             cell(st.assignment[i])});
  }

  r.record = Json{{"prior", gaussian ? "discretized-gaussian" : "finite"},
                  {"messages", opt.messages},
                  {"restarts", runs},
                  {"chosen_restart", chosen},
                  {"chosen_is_score", chosen_is_score},
                  {"objective", st.objective},
                  {"iterations", st.iterations},
                  {"converged", st.converged},
                  {"monotone", st.monotone},
                  {"actions", actions},
                  {"audit", report_json(model ? &*model : nullptr, audit)}};
  if (gaussian)
    r.record["resolution"] = prior->resolution();
  r.summary = {"messages: " + std::to_string(opt.messages) + ", restarts: " + std::to_string(restarts) +
                   ", chosen restart " + std::to_string(chosen) + (chosen_is_score ? "" : " (not a score)"),
               "objective: " + fmt(st.objective) + " after " + std::to_string(st.iterations) + " iterations" +
                   (st.converged ? "" : " (not converged)"),
               std::string("audit: credible ") + (audit.credible ? "yes" : "no") + ", min slack " +
                   fmt(audit.min_slack()) + ", best-response gap " + fmt(audit.best_response_gap)};
  const std::size_t overall = best_objective(states);
  r.record["best_restart"] = overall;
  if (overall != chosen)
    r.summary.push_back("best fixed point overall: restart " + std::to_string(overall) + ", objective " +
                        fmt(states[overall].objective) + " (not a score)");
  if (!st.converged)
    r.record["warning"] = "max_iter reached before convergence";
  r.metrics = Json{{"objective", st.objective}, {"credible", audit.credible}, {"min_slack", audit.min_slack()}};
  if (gaussian) {
    const auto d = shape_diagnostics(st, *prior, w);
    Json bounds = Json::array();
    for (const auto &b : d.boundaries)
      bounds.push_back(Json{{"messages", {b.first, b.second}}, {"points", b.points}, {"normal_angle", b.normal_angle}});
    r.record["shape"] = Json{{"centroid_collinearity_residual", d.centroid_collinearity_residual},
                             {"boundary_parallelism_spread", d.boundary_parallelism_spread},
                             {"boundaries", bounds},
                             {"boundaries_skipped", d.boundaries_skipped}};
    r.summary.push_back("shape: collinearity residual " + fmt(d.centroid_collinearity_residual, 3) +
                        ", parallelism spread " + fmt(d.boundary_parallelism_spread, 3) + " rad");
    r.metrics["collinearity"] = d.centroid_collinearity_residual;
    r.metrics["parallelism"] = d.boundary_parallelism_spread;
  }
  r.tables.push_back(std::move(at));
  r.tables.push_back(std::move(trace));
  r.tables.push_back(std::move(raster));
  return r;
}

inline ModeResult run_score_audit(const ExperimentConfig &cfg) {
  const FiniteModel model = finite_model(cfg);
  const PayoffWeights w(cfg.phi_or_default());
  const OrderedScore score(std::vector<int>(cfg.solver.score->begin(), cfg.solver.score->end()));
  const auto ivp = check_ivp(model, score);
  const auto rep = check_credibility(model, score, w, cfg.solver.tol_or_default());

  ModeResult r;
  Json ivp_json{{"feasible", ivp.feasible}};
  if (ivp.witness_failure)
    ivp_json["witness"] = Json{{"high", ivp.witness_failure->high},
                               {"low", ivp.witness_failure->low},
                               {"rank", ivp.witness_failure->rank}};
  Table t{"slacks", {"state", "rank", "ic_slack"}, {}};
  for (std::size_t i = 0; i < model.size(); ++i)
    t.rows.push_back({cell(i), cell(score.rank(i)), cell(rep.ic_slack[i])});
  r.record = Json{{"score", score.ranks()}, {"ivp", ivp_json}, {"audit", report_json(&model, rep)},
                  {"ic_slack", rep.ic_slack}};
  r.tables.push_back(std::move(t));
  r.summary = {std::string("score: ") + (ivp.feasible ? "satisfies" : "violates") + " the intermediate value property",
               "payoff: " + fmt(rep.exante_payoff),
               std::string("credible: ") + (rep.credible ? "yes" : "no") + " (min slack " + fmt(rep.min_slack()) + ")"};
  if (ivp.witness_failure)
    r.summary.push_back("ivp witness: states " + point_text(model.state(ivp.witness_failure->high)) + " and " +
                        point_text(model.state(ivp.witness_failure->low)) + ", rank " +
                        std::to_string(ivp.witness_failure->rank) + " missing from their box");
  if (rep.best_deviation)
    r.summary.push_back("best deviation: state " + point_text(model.state(rep.best_deviation->state)) + " to rank " +
                        std::to_string(rep.best_deviation->rank));
  r.metrics = Json{{"payoff", rep.exante_payoff}, {"credible", rep.credible}, {"min_slack", rep.min_slack()},
                   {"ivp", ivp.feasible}};
  return r;
}

inline ModeResult run_mode(const ExperimentConfig &cfg, unsigned threads) {
  switch (cfg.mode) {
  case Mode::finite:
    return run_finite(cfg);
  case Mode::two_by_two:
    return run_two_by_two(cfg);
  case Mode::gaussian:
    return run_gaussian(cfg, threads);
  case Mode::lloyd:
    return run_lloyd(cfg, threads);
  case Mode::audit:
    return cfg.solver.score ? run_score_audit(cfg) : run_lloyd(cfg, threads);
  }
  throw InvalidInput("unknown mode");
}

inline Json provenance(const ExperimentConfig &cfg) {
  Json p{{"tool", "scoretalk"}, {"version", kVersion}, {"config_hash", hex64(config_hash(cfg))}};
  p["seed"] = cfg.solver.seed ? Json(*cfg.solver.seed) : Json(nullptr);
  return p;
}

inline std::string provenance_line(const ExperimentConfig &cfg) {
  return std::string("scoretalk ") + kVersion + "; config " + hex64(config_hash(cfg)) + "; seed " +
         (cfg.solver.seed ? std::to_string(*cfg.solver.seed) : std::string("none"));
}

inline std::string join_summary(const ExperimentConfig &cfg, const std::vector<std::string> &lines) {
  std::string s = "# " + provenance_line(cfg) + "\nmode: " + to_string(cfg.mode) + "\n";
  for (const auto &l : lines)
    s += l + "\n";
  return s;
}

} // namespace detail

/// Runs a single experiment.
inline ReportBundle run(const ExperimentConfig &cfg, unsigned threads = 1) {
  auto r = detail::run_mode(cfg, threads);
  ReportBundle b;
  b.record = Json{{"provenance", detail::provenance(cfg)}, {"config", to_json(cfg)}, {"mode", to_string(cfg.mode)}};
  b.record["result"] = std::move(r.record);
  b.tables = std::move(r.tables);
  b.summary = detail::join_summary(cfg, r.summary);
  return b;
}

inline ExperimentConfig with_sweep_value(ExperimentConfig cfg, const std::string &parameter, double v) {
  if (parameter == "phi")
    cfg.phi = v;
  else if (parameter == "s12")
    cfg.model.sigma->s12 = v;
  else if (parameter == "n")
    cfg.solver.n = static_cast<std::int64_t>(v);
  else
    throw InvalidInput("sweep: unknown parameter " + parameter);
  cfg.sweep.reset();
  return cfg;
}

/// Runs the config once per sweep value; one metrics row per value.
inline ReportBundle run_sweep(const ExperimentConfig &cfg, unsigned threads = 1) {
  if (!cfg.sweep)
    throw ConfigError({"sweep: block required for the sweep command"});
  const auto &sw = *cfg.sweep;
  Table t{"sweep", {sw.parameter}, {}};
  Json rows = Json::array();
  std::vector<std::string> lines;
  for (double v : sw.values) {
    const auto one = detail::run_mode(with_sweep_value(cfg, sw.parameter, v), threads);
    if (t.columns.size() == 1)
      for (const auto &[key, value] : one.metrics.items())
        t.columns.push_back(key);
    std::vector<std::string> row{format_number(v)};
    std::string line = sw.parameter + " = " + fmt(v) + ":";
    for (const auto &[key, value] : one.metrics.items()) {
      row.push_back(value.is_boolean() ? cell(value.get<bool>()) : cell(value.get<double>()));
      line += " " + key + " " + (value.is_boolean() ? cell(value.get<bool>()) : fmt(value.get<double>()));
    }
    t.rows.push_back(std::move(row));
    Json entry{{"value", v}};
    entry["metrics"] = one.metrics;
    entry["result"] = one.record;
    rows.push_back(entry);
    lines.push_back(line);
  }
  ReportBundle b;
  b.record = Json{{"provenance", detail::provenance(cfg)}, {"config", to_json(cfg)}, {"mode", to_string(cfg.mode)}};
  b.record["sweep"] = Json{{"parameter", sw.parameter}, {"rows", rows}};
  b.tables.push_back(std::move(t));
  b.summary = detail::join_summary(cfg, lines);
  return b;
}

inline std::string render_csv(const Table &t, const ExperimentConfig &cfg) {
  std::string s = "# " + detail::provenance_line(cfg) + "\n";
  const auto line = [&](const std::vector<std::string> &v) {
    for (std::size_t i = 0; i < v.size(); ++i)
      s += (i ? "," : "") + v[i];
    s += "\n";
  };
  line(t.columns);
  for (const auto &r : t.rows)
    line(r);
  return s;
}

/// Writes results.json, one CSV per table and summary.txt into `dir`.
/// Returns the paths written.
inline std::vector<std::filesystem::path> write_bundle(const ReportBundle &b, const ExperimentConfig &cfg,
                                                       const std::filesystem::path &dir) {
  std::filesystem::create_directories(dir);
  std::vector<std::filesystem::path> written;
  const auto put = [&](const std::filesystem::path &p, const std::string &text) {
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    out << text;
    if (!out)
      throw std::runtime_error("cannot write " + p.string());
    written.push_back(p);
  };
  if (cfg.output.wants("json"))
    put(dir / "results.json", b.record.dump(2) + "\n");
  if (cfg.output.wants("csv"))
    for (const auto &t : b.tables)
      put(dir / (t.name + ".csv"), render_csv(t, cfg));
  if (cfg.output.wants("txt"))
    put(dir / "summary.txt", b.summary);
  return written;
}

} // namespace scoretalk

#endif // SCORETALK_REPORT_HPP
