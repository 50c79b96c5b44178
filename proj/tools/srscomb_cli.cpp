#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "srscomb/app.hpp"

namespace {

using namespace srscomb;

RunConfig load(const std::string& path, const std::optional<std::uint64_t>& seed) {
  RunConfig c = path.empty() ? RunConfig{} : load_run_config(path);
  if (seed) c.seed = *seed;
  return c;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App cli{"Transient SRS comb simulator: ensembles, second moments, virtual interferometry and statistics"};
  cli.require_subcommand(1);
  cli.set_version_flag("--version", app::kVersion);

  std::string config, out_dir, ensemble_path;
  std::optional<std::uint64_t> seed;
  int threads = 0;
  bool coarse = false, mutate = false;

  auto common = [&](CLI::App* sub, bool needs_out) {
    sub->add_option("-c,--config", config, "run configuration (JSON); defaults apply when omitted")->check(CLI::ExistingFile);
    auto* o = sub->add_option("-o,--out", out_dir, "output directory");
    if (needs_out) o->required();
    sub->add_option("--seed", seed, "override the master seed");
  };
  auto add_threads = [&](CLI::App* sub) { sub->add_option("-j,--threads", threads, "worker threads, 0 = all cores; results do not depend on it")->check(CLI::NonNegativeNumber); };

  auto* simulate = cli.add_subcommand("simulate", "run a shot ensemble and store it with a manifest");
  common(simulate, true);
  add_threads(simulate);
  auto* moments = cli.add_subcommand("moments", "exact second moments of the two-mode pulse");
  common(moments, true);
  auto* analyze = cli.add_subcommand("analyze", "virtual interferometer and statistics on a stored ensemble");
  common(analyze, true);
  add_threads(analyze);
  analyze->add_option("-e,--ensemble", ensemble_path, "ensemble file written by simulate")->required()->check(CLI::ExistingFile);
  auto* fig2 = cli.add_subcommand("reproduce-fig2", "ensemble, fringe fits, visibility and phase histograms in one run");
  common(fig2, true);
  add_threads(fig2);
  auto* fig3b = cli.add_subcommand("reproduce-fig3b", "pump, Stokes and anti-Stokes pulse shapes with the S/AS correlation coefficient");
  common(fig3b, true);
  auto* oracle = cli.add_subcommand("oracle-check", "Bessel oracle, reference solver and Manley-Rowe suites");
  oracle->add_option("-o,--out", out_dir, "write oracle_report.json here instead of stdout");
  oracle->add_flag("--coarse", coarse, "small grids; reports the measured convergence order");
  oracle->add_flag("--mutate-delta-beta-sign", mutate, "fixture: integrate with the phase-mismatch sign flipped");

  try {
    cli.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = cli.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (simulate->parsed()) {
      app::cmd_simulate(load(config, seed), out_dir, threads);
    } else if (moments->parsed()) {
      app::cmd_moments(load(config, seed), out_dir);
    } else if (analyze->parsed()) {
      app::cmd_analyze(load(config, seed), ensemble_path, out_dir, threads);
    } else if (fig2->parsed()) {
      const json s = app::cmd_reproduce_fig2(load(config, seed), out_dir, threads);
      for (const auto& p : s.at("pairs"))
        if (p.contains("experimental_resultant"))
          std::cout << "Phi_{" << p.at("n") << "," << p.at("m") << "} resultant: simulated " << p.value("resultant", json(nullptr)).dump()
                    << ", experimental " << p.at("experimental_resultant").dump() << '\n';
    } else if (fig3b->parsed()) {
      const json s = app::cmd_reproduce_fig3b(load(config, seed), out_dir);
      std::cout << "min C over central 80% energy: " << s.at("configured").at("min_correlation_central").dump() << " (configured mismatch), "
                << s.at("matched").at("min_correlation_central").dump() << " (matched)\n";
    } else if (oracle->parsed()) {
      OracleCheckOptions o;
      o.coarse = coarse;
      o.mutate_delta_beta_sign = mutate;
      return app::cmd_oracle_check(o, out_dir, std::cout) ? 0 : 1;
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return e.exit_code();
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
