// qvdp: steady-state analysis, single trajectories, ensembles and sweeps of
// two dissipatively coupled quantum Van der Pol oscillators.

#include "qvdp/config.hpp"
#include "qvdp/errors.hpp"
#include "qvdp/output.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>

namespace {

using namespace qvdp;

struct Flags {
  std::string config, preset, out, format;
  std::optional<std::uint64_t> seed, traj;
  std::optional<int> threads;
};

RunConfig build_config(const Flags& f) {
  RunConfig cfg;
  if (!f.preset.empty()) cfg = preset(f.preset);
  if (!f.config.empty()) cfg = load_config(f.config, cfg);
  if (f.seed) cfg.ensemble.master_seed = *f.seed;
  if (f.traj) cfg.ensemble.n_trajectories = *f.traj;
  if (f.threads) cfg.ensemble.threads = *f.threads;
  if (!f.out.empty()) cfg.out_dir = f.out;
  if (!f.format.empty()) cfg.format = f.format == "json" ? Format::json : Format::csv;
  cfg.validate();
  return cfg;
}

void report_files(const std::vector<std::filesystem::path>& files) {
  for (const auto& f : files) std::cerr << "wrote " << f.string() << '\n';
}

int cmd_steady(const RunConfig& cfg) {
  report_files(write_report(cfg, steady_report(cfg), cfg.out_dir));
  return 0;
}

int cmd_trajectory(RunConfig cfg, const Flags& flags) {
  const VdpParams p = cfg.params();
  const LindbladModel model = build_vdp_model(p, cfg.space());
  const EnsembleConfig e = cfg.ensemble.resolved(p, model);
  e.validate();
  const Density pi = steady_state(p, model);
  const std::uint64_t n = flags.traj.value_or(1);
  cfg.ensemble.n_trajectories = n;
  std::vector<TrajectoryRecord> records;
  for (std::uint64_t i = 0; i < n; ++i) {
    const NoiseStream noise(e.master_seed, i);
    records.push_back(
        run_trajectory(model, sample_initial(pi, noise), *e.total_time, *e.sample_interval, e.integrator, noise));
  }
  report_files(write_report(cfg, trajectory_report(cfg, records), cfg.out_dir));
  return 0;
}

int cmd_ensemble(const RunConfig& cfg) {
  const VdpParams p = cfg.params();
  const LindbladModel model = build_vdp_model(p, cfg.space());
  const EnsembleResult r = run_ensemble(model, p, cfg.ensemble);
  std::cerr << r.trajectories.size() - r.failed.size() << " trajectories, " << r.failed.size() << " failed\n";
  report_files(write_report(cfg, ensemble_report(cfg, r), cfg.out_dir));
  return 0;
}

int cmd_sweep(const RunConfig& cfg) {
  if (cfg.sweep.empty()) throw ConfigError("sweep", "no grid points given");
  const std::optional<EnsembleConfig> ens = cfg.analytic_only ? std::nullopt : std::optional(cfg.ensemble);
  const SweepResult r = sweep(cfg.params(), cfg.space(), cfg.grid(), ens);
  int failed = 0;
  for (const auto& e : r.entries)
    if (e.error) {
      ++failed;
      std::cerr << "point (" << e.point.detuning << ", " << e.point.coupling << ", " << e.point.theta
                << ") failed: " << *e.error << '\n';
    }
  report_files(write_report(cfg, sweep_report(cfg, r), cfg.out_dir));
  return failed == 0 ? 0 : 3;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Quantum Van der Pol synchronization: steady states, trajectories, ensembles, sweeps"};
  app.require_subcommand(1);
  app.fallthrough();

  Flags flags;
  app.add_option("--config", flags.config, "JSON config, or an output file to re-run from its metadata");
  app.add_option("--preset", flags.preset, "fig1, fig2a, fig2b, fig2c, fig3, figS1, figS2a or figS2b");
  app.add_option("--seed", flags.seed, "master seed");
  app.add_option("--traj", flags.traj, "number of trajectories");
  app.add_option("--out", flags.out, "output directory");
  app.add_option("--format", flags.format, "csv or json")->check(CLI::IsMember({"csv", "json"}));
  app.add_option("--threads", flags.threads, "worker threads (0 = all cores)");

  auto* steady = app.add_subcommand("steady", "steady state, C_pi, phase, populations; closed-form grid for sweeps");
  auto* trajectory = app.add_subcommand("trajectory", "time series of the indicators along trajectories");
  auto* ensemble = app.add_subcommand("ensemble", "distributions over steady-state trajectories");
  auto* sweep_cmd = app.add_subcommand("sweep", "ensemble statistics over a parameter grid");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    const RunConfig cfg = build_config(flags);
    if (steady->parsed()) return cmd_steady(cfg);
    if (trajectory->parsed()) return cmd_trajectory(cfg, flags);
    if (ensemble->parsed()) return cmd_ensemble(cfg);
    if (sweep_cmd->parsed()) return cmd_sweep(cfg);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return 3;
  } catch (const std::invalid_argument& e) {
    std::cerr << "invalid input: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 2;
}
