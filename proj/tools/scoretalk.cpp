#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "scoretalk/report.hpp"

namespace {

enum Exit { kOk = 0, kConfigError = 2, kNumericalFailure = 3 };

constexpr const char *kOutDirEnv = "SCORETALK_OUT_DIR";

struct Options {
  std::string config;
  std::string out_dir;
  std::optional<std::uint64_t> seed;
  unsigned threads = 1;
};

void add_common(CLI::App *cmd, Options &o) {
  cmd->add_option("config", o.config, "experiment config (JSON)")->required();
  cmd->add_option("--out-dir", o.out_dir, std::string("output directory (default: $") + kOutDirEnv +
                                              ", then output.dir, then ./out)");
  cmd->add_option("--seed", o.seed, "override solver.seed");
  cmd->add_option("--threads", o.threads, "worker threads for grid and Monte Carlo work")->check(CLI::Range(1U, 256U));
}

scoretalk::ExperimentConfig load(const Options &o, std::optional<scoretalk::Mode> force_mode) {
  std::ifstream in(o.config, std::ios::binary);
  if (!in)
    throw scoretalk::ConfigError({"config: cannot read " + o.config});
  std::stringstream ss;
  ss << in.rdbuf();
  scoretalk::Json doc;
  try {
    doc = scoretalk::Json::parse(ss.str());
  } catch (const scoretalk::Json::parse_error &e) {
    throw scoretalk::ConfigError({std::string("config: not valid JSON: ") + e.what()});
  }
  if (doc.is_object()) {
    if (o.seed) {
      if (!doc.contains("solver"))
        doc["solver"] = scoretalk::Json::object();
      if (doc["solver"].is_object())
        doc["solver"]["seed"] = *o.seed;
    }
    if (force_mode)
      doc["mode"] = scoretalk::to_string(*force_mode);
  }
  return scoretalk::parse_config_json(doc);
}

std::filesystem::path out_dir(const Options &o, const scoretalk::ExperimentConfig &cfg) {
  if (!o.out_dir.empty())
    return o.out_dir;
  if (const char *env = std::getenv(kOutDirEnv); env && *env)
    return env;
  return cfg.output.dir.value_or("out");
}

int execute(const Options &o, const std::string &command) {
  try {
    const auto cfg = load(o, command == "audit" ? std::optional(scoretalk::Mode::audit) : std::nullopt);
    const auto bundle = command == "sweep" ? scoretalk::run_sweep(cfg, o.threads) : scoretalk::run(cfg, o.threads);
    const auto dir = out_dir(o, cfg);
    scoretalk::write_bundle(bundle, cfg, dir);
    std::cout << bundle.summary << "outputs: " << dir.string() << "\n";
    return kOk;
  } catch (const scoretalk::ConfigError &e) {
    std::cerr << e.what() << "\n";
    return kConfigError;
  } catch (const scoretalk::InvalidInput &e) {
    std::cerr << "invalid input: " << e.what() << "\n";
    return kConfigError;
  } catch (const scoretalk::Refusal &e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return kNumericalFailure;
  } catch (const std::exception &e) {
    std::cerr << "error: " << e.what() << "\n";
    return kNumericalFailure;
  }
}

} // namespace

int main(int argc, char **argv) {
  CLI::App app{"Credible scores: enumeration, linear equilibria and Lloyd dynamics"};
  app.set_version_flag("--version", std::string(scoretalk::kVersion));
  app.require_subcommand(1);
  Options solve, audit, sweep;
  add_common(app.add_subcommand("solve", "run the experiment in the config's mode"), solve);
  add_common(app.add_subcommand("audit", "audit a given score (finite) or a Lloyd fixed point (sigma)"), audit);
  add_common(app.add_subcommand("sweep", "run the config over the values of its sweep block"), sweep);
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError &e) {
    return app.exit(e) == 0 ? kOk : kConfigError;
  }
  const auto *cmd = app.get_subcommands().front();
  const std::string name = cmd->get_name();
  return execute(name == "solve" ? solve : name == "audit" ? audit : sweep, name);
}
