// geoflow: flow, entropy, verify {derivative,identities,pinched}, jensen.
// Exit 0 when every check passes, 1 on a failed check or numerical error,
// 2 on usage or configuration errors.

#include <CLI11.hpp>

#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>

#include "geoflow/errors.hpp"
#include "geoflow/experiments.hpp"

using namespace geoflow;

namespace {

struct Common {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  bool quiet = false;
};

int report(const ExperimentResult& r) {
  std::string failed;
  for (const auto& c : r.checks) {
    std::printf("%s %s: %s\n", c.pass ? "PASS" : "FAIL", c.name.c_str(), c.detail.c_str());
    if (!c.pass) failed += (failed.empty() ? "" : ", ") + c.name;
  }
  if (!failed.empty()) {
    std::fprintf(stderr, "failed checks: %s\n", failed.c_str());
    return 1;
  }
  return 0;
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write output file: " + path);
  out << text;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Geodesic flow, entropy and Ricci flow on the Bolza surface"};
  app.fallthrough();
  app.require_subcommand(1);
  Common opt;
  std::uint64_t seed = 0;
  app.add_option("--config", opt.config, "key = value configuration file");
  app.add_option("--out", opt.out, "CSV output path");
  auto* seed_opt = app.add_option("--seed", seed, "RNG seed (overrides the config)");
  app.add_flag("--quiet", opt.quiet, "only print check lines");

  auto* flow = app.add_subcommand("flow", "normalized Ricci flow with checkpoints");
  auto* entropy = app.add_subcommand("entropy", "Liouville entropy of the initial field");
  auto* verify = app.add_subcommand("verify", "formula checks");
  verify->require_subcommand(1);
  auto* derivative = verify->add_subcommand("derivative", "entropy and mean root curvature derivatives");
  auto* identities = verify->add_subcommand("identities", "pointwise identities and the Riccati mean");
  auto* pinched = verify->add_subcommand("pinched", "pinching bound and the pinched decomposition");
  auto* jensen = app.add_subcommand("jensen", "property sweep of the Jensen-type inequality");
  for (auto* s : {flow, entropy, jensen, derivative, identities, pinched}) s->fallthrough();
  verify->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }
  if (*seed_opt) opt.seed = seed;

  FlowConfig cfg;
  try {
    if (!opt.config.empty()) cfg = load_config(opt.config);
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  if (opt.seed) cfg.seed = *opt.seed;

  std::string name;
  if (flow->parsed()) name = "flow";
  else if (entropy->parsed()) name = "entropy";
  else if (jensen->parsed()) name = "jensen";
  else if (derivative->parsed()) name = "verify_derivative";
  else if (identities->parsed()) name = "verify_identities";
  else name = "verify_pinched";
  const std::string out_path = opt.out.empty() ? name + ".csv" : opt.out;

  const auto t0 = std::chrono::steady_clock::now();
  try {
    ExperimentResult r;
    if (name == "flow") {
      std::ofstream live(out_path, std::ios::binary);
      if (!live) throw ConfigError("cannot write output file: " + out_path);
      r = run_flow_experiment(cfg, &live, [&](const FlowCheckpoint& c) {
        if (opt.quiet) return;
        std::printf("eps %.3f  h %.6f +- %.2e  kappa %.8f  K [%.4f, %.4f]  pinch %.5f  dh %.3e +- %.1e (fd %.3e)\n",
                    c.epsilon, c.entropy.mean, c.entropy.stderr_, c.kappa, c.k_min, c.k_max, c.pinching_ratio,
                    c.dh_formula.mean, c.dh_formula.stderr_, c.dh_fd.mean);
        std::fflush(stdout);
      });
    } else {
      if (name == "entropy") r = run_entropy(cfg);
      else if (name == "jensen") r = run_jensen(cfg);
      else if (name == "verify_derivative") r = run_verify_derivative(cfg);
      else if (name == "verify_identities") r = run_verify_identities(cfg);
      else r = run_verify_pinched(cfg);
      write_file(out_path, r.csv);
    }
    if (!opt.quiet) {
      if (name == "entropy") std::printf("%s", r.csv.c_str());
      const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      std::printf("wrote %s (%.1f s)\n", out_path.c_str(), secs);
    }
    return report(r);
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const Error& e) {
    std::fprintf(stderr, "FAIL %s: numerical error: %s\n", name.c_str(), e.what());
    return 1;
  }
}
