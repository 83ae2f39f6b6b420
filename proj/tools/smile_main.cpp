#include <CLI11.hpp>

#include <cstdlib>
#include <iostream>

#include "smile/experiments.hpp"
#include "smile/io.hpp"
#include "smile/parallel.hpp"

namespace {

using namespace smile;

struct CommonOpts {
  std::string config_path;
  std::string outdir = "out";
  std::vector<std::string> overrides;  // key=value
  std::uint64_t seed = 0;
  bool seed_set = false;
};

ExperimentConfig resolveConfig(const CommonOpts& opts) {
  Config c = opts.config_path.empty() ? Config() : Config::load(opts.config_path);
  for (const auto& ov : opts.overrides) {
    const size_t eq = ov.find('=');
    if (eq == std::string::npos)
      throw CLI::ValidationError("--set", "expected key=value, got: " + ov);
    c.set(ov.substr(0, eq), ov.substr(eq + 1));
  }
  if (opts.seed_set) c.set("seed", std::to_string(opts.seed));
  ExperimentConfig cfg = ExperimentConfig::fromConfig(c);
  cfg.validate();
  return cfg;
}

void printResolved(const ExperimentConfig& cfg) {
  std::cout << "# resolved configuration\n" << cfg.toConfig().serialize() << std::flush;
}

void addCommon(CLI::App* cmd, CommonOpts& opts) {
  cmd->add_option("-c,--config", opts.config_path, "configuration file (key = value sections)");
  cmd->add_option("-o,--out", opts.outdir, "output directory");
  cmd->add_option("--set", opts.overrides, "override a config key, e.g. --set sampling.R=6");
  auto* s = cmd->add_option("--seed", opts.seed, "global seed (default 0)");
  cmd->callback([&opts, s]() { opts.seed_set = s->count() > 0; });
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"SMILE extended-FOV simultaneous-multislice simulation toolkit"};
  app.require_subcommand(1);

  CommonOpts phantom_o, simulate_o, recon_o, theory_o, study_o, compare_o;
  std::string simulate_in = "out", recon_in = "out";
  std::vector<int> study_rs{3, 4, 5, 6, 7, 8};
  bool study_no_ga = false;

  auto* cmd_phantom = app.add_subcommand("phantom", "generate phantom, coil maps and reference");
  addCommon(cmd_phantom, phantom_o);

  auto* cmd_sim = app.add_subcommand("simulate", "forward-encode a stored phantom");
  addCommon(cmd_sim, simulate_o);
  cmd_sim->add_option("-i,--in", simulate_in, "directory holding phantom.smle/maps.smle");

  auto* cmd_recon = app.add_subcommand("recon", "reconstruct stored k-space");
  addCommon(cmd_recon, recon_o);
  cmd_recon->add_option("-i,--in", recon_in, "directory holding kspace.smle/mask.txt");

  auto* cmd_theory = app.add_subcommand("theory-sweep", "kernel-existence sufficiency sweep");
  addCommon(cmd_theory, theory_o);

  auto* cmd_study = app.add_subcommand("sampling-study", "masks, PSFs and g-factor maps per R");
  addCommon(cmd_study, study_o);
  cmd_study->add_option("--R", study_rs, "acceleration list");
  cmd_study->add_flag("--no-ga", study_no_ga, "skip the GA mask family");

  auto* cmd_compare = app.add_subcommand("compare", "SMILE vs CAIPI at matched PE budget");
  addCommon(cmd_compare, compare_o);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help
    app.exit(e);
    return 2;
  }

  try {
    if (*cmd_phantom) {
      auto cfg = resolveConfig(phantom_o);
      printResolved(cfg);
      runPhantomCmd(cfg, phantom_o.outdir);
      std::cout << "wrote phantom artifacts to " << phantom_o.outdir << "\n";
    } else if (*cmd_sim) {
      auto cfg = resolveConfig(simulate_o);
      printResolved(cfg);
      runSimulateCmd(cfg, simulate_in, simulate_o.outdir);
      std::cout << "wrote k-space artifacts to " << simulate_o.outdir << "\n";
    } else if (*cmd_recon) {
      auto cfg = resolveConfig(recon_o);
      printResolved(cfg);
      runReconCmd(cfg, recon_in, recon_o.outdir);
      std::cout << "wrote reconstruction artifacts to " << recon_o.outdir << "\n";
    } else if (*cmd_theory) {
      auto cfg = resolveConfig(theory_o);
      printResolved(cfg);
      auto res = runTheorySweep(theory_o.outdir);
      std::cout << "theory-sweep rows: " << res.rows.size() << ", violations: " << res.violations
                << "\n";
      if (res.violations != 0) return 1;
    } else if (*cmd_study) {
      auto cfg = resolveConfig(study_o);
      printResolved(cfg);
      cfg.toConfig().save(study_o.outdir + "/resolved.cfg");
      auto res = runSamplingStudy(cfg, study_rs, !study_no_ga, study_o.outdir);
      std::cout << "sampling-study entries: " << res.entries.size() << "\n";
    } else if (*cmd_compare) {
      auto cfg = resolveConfig(compare_o);
      printResolved(cfg);
      auto res = runCompare(cfg, compare_o.outdir);
      if (!res.smile.failed)
        std::cout << "SMILE  SER " << formatDouble(res.smile.metrics.ser_aggregate) << " dB ("
                  << formatDouble(res.smile.recon.wall_seconds) << " s)\n";
      else
        std::cout << "SMILE arm FAILED: " << res.smile.error << "\n";
      if (!res.caipi.failed)
        std::cout << "CAIPI  SER " << formatDouble(res.caipi.metrics.ser_aggregate) << " dB ("
                  << formatDouble(res.caipi.recon.wall_seconds) << " s)\n";
      else
        std::cout << "CAIPI arm FAILED: " << res.caipi.error << "\n";
      if (res.smile.failed || res.caipi.failed) return 1;
      std::cout << "SER gap " << formatDouble(res.ser_gap_db) << " dB\n";
    }
  } catch (const std::invalid_argument& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
