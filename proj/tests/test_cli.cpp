#include <doctest.h>

#include <filesystem>
#include <unistd.h>
#include <algorithm>

#include "smile/experiments.hpp"
#include "smile/io.hpp"

using namespace smile;
namespace fs = std::filesystem;

namespace {
struct TmpDir {
  fs::path path;
  explicit TmpDir(const std::string& tag) {
    path = fs::temp_directory_path() / ("smile_cli_" + tag + "_" + std::to_string(::getpid()));
    fs::create_directories(path);
  }
  ~TmpDir() { fs::remove_all(path); }
  std::string str() const { return path.string(); }
};

ExperimentConfig tinyConfig() {
  ExperimentConfig cfg;
  cfg.phantom.ny = cfg.phantom.nx = 24;
  cfg.phantom.mb = 2;
  cfg.n = 2;
  cfg.R = 2;
  cfg.coils.nc = 4;
  cfg.coils.cx = cfg.coils.cy = 5;
  cfg.mask_generator = MaskGenerator::Cava;
  cfg.noise_sigma_frac = 0.01;
  cfg.recon.max_iters = 60;
  return cfg;
}
}  // namespace

TEST_CASE("config: parse, override, serialize round trip") {
  const std::string text =
      "seed = 7\n"
      "[phantom]\n"
      "ny = 24  # comment\n"
      "nx = 24\n"
      "mb = 2\n"
      "[sampling]\n"
      "R = 2\n"
      "generator = cava\n";
  Config c = Config::parse(text);
  CHECK(c.getUint("seed", 0) == 7);
  CHECK(c.getInt("phantom.ny", 0) == 24);
  CHECK(c.getString("sampling.generator", "") == "cava");

  const Config c2 = Config::parse(c.serialize());
  CHECK(c2.entries() == c.entries());

  CHECK_THROWS_AS(Config::parse("novalue\n"), std::invalid_argument);
  CHECK_THROWS_AS(Config::parse("[unclosed\n"), std::invalid_argument);
}

TEST_CASE("experiment config round trips through Config") {
  ExperimentConfig cfg = tinyConfig();
  cfg.seed = 9;
  cfg.ga.population = 12;
  const ExperimentConfig back = ExperimentConfig::fromConfig(cfg.toConfig());
  CHECK(back.toConfig().serialize() == cfg.toConfig().serialize());
}

TEST_CASE("config validation catches bad geometry") {
  ExperimentConfig cfg = tinyConfig();
  cfg.n = 1;  // < MB
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = tinyConfig();
  cfg.R = 1000;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
}

TEST_CASE("phantom -> simulate -> recon pipeline is deterministic end to end") {
  const ExperimentConfig cfg = tinyConfig();
  TmpDir d1("p1"), d2("p2");

  runPhantomCmd(cfg, d1.str());
  runSimulateCmd(cfg, d1.str(), d1.str());
  runReconCmd(cfg, d1.str(), d1.str());

  // re-run from the recorded resolved config into a fresh directory
  const ExperimentConfig cfg2 =
      ExperimentConfig::fromConfig(Config::load(d1.str() + "/resolved.cfg"));
  runPhantomCmd(cfg2, d2.str());
  runSimulateCmd(cfg2, d2.str(), d2.str());
  runReconCmd(cfg2, d2.str(), d2.str());

  for (const char* f : {"phantom.smle", "maps.smle", "reference.smle", "kspace.smle", "mask.txt",
                        "recon.smle", "metrics.csv", "resolved.cfg"}) {
    CHECK(readTextFile(d1.str() + "/" + f) == readTextFile(d2.str() + "/" + f));
  }
}

TEST_CASE("compare enforces the matched PE-line budget") {
  ExperimentConfig cfg = tinyConfig();
  cfg.R = 4;  // net R multiple of MB=2 -> in-plane R=2, budgets 12 vs 12
  const CompareOutcome out = runCompare(cfg, "", false);
  CHECK(out.budget_smile == out.budget_caipi);
  CHECK(!out.smile.failed);
  CHECK(!out.caipi.failed);

  cfg.R = 3;  // not a multiple of MB
  CHECK_THROWS_AS(runCompare(cfg, "", false), std::invalid_argument);
}

TEST_CASE("theory sweep emits every grid row") {
  TmpDir d("sweep");
  const auto res = runTheorySweep(d.str());
  CHECK(res.rows.size() == 3 * 9 * 64);
  CHECK(res.violations == 0);
  const std::string csv = readTextFile(d.str() + "/theory_sweep.csv");
  size_t lines = std::count(csv.begin(), csv.end(), '\n');
  CHECK(lines == res.rows.size() + 1);
}
