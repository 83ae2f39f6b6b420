#include "smile/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <memory>
#include <sstream>

#include "smile/fft.hpp"
#include "smile/io.hpp"
#include "smile/parallel.hpp"
#include "smile/rng.hpp"

namespace smile {

namespace {

PhantomStyle styleFromName(const std::string& s) {
  if (s == "ellipses") return PhantomStyle::Ellipses;
  if (s == "ring-and-disks") return PhantomStyle::RingAndDisks;
  throw std::invalid_argument("unknown phantom style: " + s);
}
const char* styleName(PhantomStyle s) {
  return s == PhantomStyle::Ellipses ? "ellipses" : "ring-and-disks";
}

ReconMethod methodFromName(const std::string& s) {
  if (s == "cg_sense") return ReconMethod::CgSense;
  if (s == "grappa_uniform") return ReconMethod::GrappaUniform;
  if (s == "slice_grappa") return ReconMethod::SliceGrappa;
  throw std::invalid_argument("unknown recon method: " + s);
}
const char* methodName(ReconMethod m) {
  switch (m) {
    case ReconMethod::CgSense: return "cg_sense";
    case ReconMethod::GrappaUniform: return "grappa_uniform";
    case ReconMethod::SliceGrappa: return "slice_grappa";
  }
  return "cg_sense";
}

}  // namespace

ExperimentConfig ExperimentConfig::fromConfig(const Config& c) {
  ExperimentConfig e;
  e.phantom.ny = c.getInt("phantom.ny", e.phantom.ny);
  e.phantom.nx = c.getInt("phantom.nx", e.phantom.nx);
  e.phantom.mb = c.getInt("phantom.mb", e.phantom.mb);
  e.phantom.style = styleFromName(c.getString("phantom.style", styleName(e.phantom.style)));
  e.phantom.seed = c.getUint("phantom.seed", e.phantom.seed);
  e.phantom.slice_rotation_deg = c.getDouble("phantom.slice_rotation_deg", e.phantom.slice_rotation_deg);
  e.phantom.contrast_jitter = c.getDouble("phantom.contrast_jitter", e.phantom.contrast_jitter);

  e.coils.nc = c.getInt("coils.nc", e.coils.nc);
  e.coils.cx = c.getInt("coils.cx", e.coils.cx);
  e.coils.cy = c.getInt("coils.cy", e.coils.cy);
  e.coils.similarity = c.getDouble("coils.similarity", e.coils.similarity);
  e.coils.seed = c.getUint("coils.seed", e.coils.seed);

  e.n = c.getInt("geometry.n", e.n);
  e.R = c.getInt("sampling.R", e.R);
  e.mask_generator =
      maskGeneratorFromName(c.getString("sampling.generator", maskGeneratorName(e.mask_generator)));
  e.mask_seed = c.getUint("sampling.seed", e.mask_seed);
  e.mask_frame = c.getInt("sampling.frame", e.mask_frame);
  e.mask_offset = c.getInt("sampling.offset", e.mask_offset);
  e.noise_sigma_frac = c.getDouble("sampling.noise_sigma_frac", e.noise_sigma_frac);
  e.noise_seed = c.getUint("sampling.noise_seed", e.noise_seed);

  e.recon.method = methodFromName(c.getString("recon.method", methodName(e.recon.method)));
  e.recon.lambda = c.getDouble("recon.lambda", e.recon.lambda);
  e.recon.max_iters = c.getInt("recon.max_iters", e.recon.max_iters);
  e.recon.cg_tolerance = c.getDouble("recon.cg_tolerance", e.recon.cg_tolerance);
  e.recon.ex = c.getInt("recon.ex", e.recon.ex);
  e.recon.ey = c.getInt("recon.ey", e.recon.ey);
  e.recon_kernel_auto = c.getBool("recon.kernel_auto", e.recon_kernel_auto);

  e.gfactor_trials = c.getInt("metrics.gfactor_trials", e.gfactor_trials);
  e.support_threshold = c.getDouble("metrics.support_threshold", e.support_threshold);
  e.ssim_window = c.getInt("metrics.ssim_window", e.ssim_window);

  e.ga.population = c.getInt("ga.population", e.ga.population);
  e.ga.generations = c.getInt("ga.generations", e.ga.generations);
  e.ga.mutation_rate = c.getDouble("ga.mutation_rate", e.ga.mutation_rate);
  e.ga.crossover_rate = c.getDouble("ga.crossover_rate", e.ga.crossover_rate);
  e.ga.elitism_count = c.getInt("ga.elitism_count", e.ga.elitism_count);
  e.ga.fitness_trials = c.getInt("ga.fitness_trials", e.ga.fitness_trials);
  e.ga.seed = c.getUint("ga.seed", e.ga.seed);
  e.ga_fitness_cg_iters = c.getInt("ga.fitness_cg_iters", e.ga_fitness_cg_iters);
  e.ga_fitness_column_stride = c.getInt("ga.fitness_column_stride", e.ga_fitness_column_stride);

  e.seed = c.getUint("seed", e.seed);
  return e;
}

Config ExperimentConfig::toConfig() const {
  Config c;
  c.set("phantom.ny", std::to_string(phantom.ny));
  c.set("phantom.nx", std::to_string(phantom.nx));
  c.set("phantom.mb", std::to_string(phantom.mb));
  c.set("phantom.style", styleName(phantom.style));
  c.set("phantom.seed", std::to_string(phantom.seed));
  c.set("phantom.slice_rotation_deg", formatDouble(phantom.slice_rotation_deg));
  c.set("phantom.contrast_jitter", formatDouble(phantom.contrast_jitter));
  c.set("coils.nc", std::to_string(coils.nc));
  c.set("coils.cx", std::to_string(coils.cx));
  c.set("coils.cy", std::to_string(coils.cy));
  c.set("coils.similarity", formatDouble(coils.similarity));
  c.set("coils.seed", std::to_string(coils.seed));
  c.set("geometry.n", std::to_string(n));
  c.set("sampling.R", std::to_string(R));
  c.set("sampling.generator", maskGeneratorName(mask_generator));
  c.set("sampling.seed", std::to_string(mask_seed));
  c.set("sampling.frame", std::to_string(mask_frame));
  c.set("sampling.offset", std::to_string(mask_offset));
  c.set("sampling.noise_sigma_frac", formatDouble(noise_sigma_frac));
  c.set("sampling.noise_seed", std::to_string(noise_seed));
  c.set("recon.method", methodName(recon.method));
  c.set("recon.lambda", formatDouble(recon.lambda));
  c.set("recon.max_iters", std::to_string(recon.max_iters));
  c.set("recon.cg_tolerance", formatDouble(recon.cg_tolerance));
  c.set("recon.ex", std::to_string(recon.ex));
  c.set("recon.ey", std::to_string(recon.ey));
  c.set("recon.kernel_auto", recon_kernel_auto ? "true" : "false");
  c.set("metrics.gfactor_trials", std::to_string(gfactor_trials));
  c.set("metrics.support_threshold", formatDouble(support_threshold));
  c.set("metrics.ssim_window", std::to_string(ssim_window));
  c.set("ga.population", std::to_string(ga.population));
  c.set("ga.generations", std::to_string(ga.generations));
  c.set("ga.mutation_rate", formatDouble(ga.mutation_rate));
  c.set("ga.crossover_rate", formatDouble(ga.crossover_rate));
  c.set("ga.elitism_count", std::to_string(ga.elitism_count));
  c.set("ga.fitness_trials", std::to_string(ga.fitness_trials));
  c.set("ga.seed", std::to_string(ga.seed));
  c.set("ga.fitness_cg_iters", std::to_string(ga_fitness_cg_iters));
  c.set("ga.fitness_column_stride", std::to_string(ga_fitness_column_stride));
  c.set("seed", std::to_string(seed));
  return c;
}

void ExperimentConfig::validate() const {
  if (n < 1) throw std::invalid_argument("config: n must be >= 1");
  if (n < phantom.mb)
    throw std::invalid_argument("config: uniform no-overlap placement needs n >= MB");
  if (R < 1 || R > n * phantom.ny) throw std::invalid_argument("config: need 1 <= R <= n*N_y");
}

Experiment buildExperiment(const ExperimentConfig& cfg) {
  cfg.validate();
  Experiment exp;
  exp.cfg = cfg;
  PhantomSpec ps = cfg.phantom;
  ps.seed = hashKey(cfg.seed, 0x7068 /* ph */, cfg.phantom.seed);
  exp.phantom = makePhantom(ps);
  CoilSpec cs = cfg.coils;
  cs.seed = hashKey(cfg.seed, 0x636F /* co */, cfg.coils.seed);
  exp.maps = makeCoilMaps(cs, cfg.phantom.mb, cfg.phantom.ny, cfg.phantom.nx);
  exp.reference = sumOfSquaresReference(exp.phantom, exp.maps);
  exp.offsets = uniformOffsets(cfg.phantom.mb, cfg.phantom.ny);
  exp.geometry = makeSenseGeometry(exp.maps, cfg.n, exp.offsets);
  return exp;
}

SamplingMask makeMask(const ExperimentConfig& cfg, int npe) {
  switch (cfg.mask_generator) {
    case MaskGenerator::Uniform: return uniformMask(npe, cfg.R, cfg.mask_offset);
    case MaskGenerator::Random: return randomMask(npe, cfg.R, cfg.mask_seed);
    case MaskGenerator::Poisson: return poissonMask(npe, cfg.R, cfg.mask_seed);
    case MaskGenerator::Cava: return cavaMask(npe, cfg.R, cfg.mask_frame, cfg.mask_seed);
    case MaskGenerator::Full: return fullMask(npe);
    case MaskGenerator::Ga:
      throw std::invalid_argument("makeMask: run the GA explicitly to obtain a ga mask");
  }
  throw std::invalid_argument("makeMask: unknown generator");
}

KSpaceData smileAcquire(const Experiment& exp, const SamplingMask& mask) {
  const ExtendedImage ext =
      assembleExtended(exp.phantom, exp.maps, exp.cfg.n, exp.offsets);
  double sigma = 0;
  if (exp.cfg.noise_sigma_frac > 0) {
    double mx = 0;
    for (size_t i = 0; i < ext.data.size(); ++i)
      mx = std::max(mx, std::abs(ext.data.data()[i]));
    sigma = exp.cfg.noise_sigma_frac * mx;
  }
  return smileForward(ext, mask, sigma, hashKey(exp.cfg.seed, 0x6E6F /* no */, exp.cfg.noise_seed));
}

Array2R extendedSupport(const Experiment& exp) {
  Array2R sup(exp.geometry.eny(), exp.geometry.nx);
  for (int s = 0; s < exp.phantom.mb(); ++s)
    for (int y = 0; y < exp.phantom.ny(); ++y)
      for (int x = 0; x < exp.phantom.nx(); ++x)
        sup(exp.offsets[s] + y, x) = std::abs(exp.reference.data(s, y, x));
  return sup;
}

// ---------------------------------------------------------------- theory

TheorySweepOutcome runTheorySweep(const std::string& outdir) {
  const std::vector<int> ncs{2, 4, 8};
  const std::vector<int> cs{3, 5, 7};
  const int grid = 32;
  TheorySweepOutcome out;

  for (int nc : ncs)
    for (int cy : cs)
      for (int cx : cs) {
        // exact band-limited maps and a generic full-support image
        CoilSpec spec;
        spec.nc = nc;
        spec.cx = cx;
        spec.cy = cy;
        spec.similarity = 0;
        spec.seed = hashKey(0x5357ULL, nc, static_cast<std::uint64_t>(cy) * 100 + cx);
        const CoilMapSet maps = makeCoilMaps(spec, 1, grid, grid);
        Array2C img(grid, grid);
        for (int y = 0; y < grid; ++y)
          for (int x = 0; x < grid; ++x)
            img(y, x) = gaussianAt(hashKey(0x494DULL, static_cast<std::uint64_t>(y) * grid + x));
        KSpaceData data;
        data.data = Array3C(nc, grid, grid);
        data.grid = GridKind::Collapsed;
        data.base_ny = grid;
        Array2C t(grid, grid);
        for (int c = 0; c < nc; ++c) {
          for (int y = 0; y < grid; ++y)
            for (int x = 0; x < grid; ++x) t(y, x) = maps.maps(c, 0, y, x) * img(y, x);
          fft2c(t.data(), data.data.plane(c), grid, grid);
        }
        const ACSRegion full_region{0, grid, 0, grid};

        std::vector<TheorySweepRow> rows(64);
        parallelFor(64, [&](std::int64_t i) {
          const int ex = static_cast<int>(i) / 8 + 1;
          const int ey = static_cast<int>(i) % 8 + 1;
          TheorySweepRow row;
          row.nc = nc;
          row.cx = cx;
          row.cy = cy;
          row.ex = ex;
          row.ey = ey;
          row.inequality = kernelSizeSufficient(ex, ey, nc, cx, cy);
          const auto A = buildCalibrationMatrix(data, full_region, ex, ey);
          row.min_ratio = minSingularRatio(A);
          row.kernel_found = row.min_ratio <= 1e-8;
          rows[i] = row;
        });
        for (const auto& r : rows) {
          out.rows.push_back(r);
          if (r.inequality && !r.kernel_found) ++out.violations;
        }
      }

  if (!outdir.empty()) {
    std::vector<std::vector<std::string>> rows;
    for (const auto& r : out.rows)
      rows.push_back({std::to_string(r.nc), std::to_string(r.cx), std::to_string(r.cy),
                      std::to_string(r.ex), std::to_string(r.ey), r.inequality ? "1" : "0",
                      formatDouble(r.min_ratio), r.kernel_found ? "1" : "0"});
    writeCsv(outdir + "/theory_sweep.csv", "nc,cx,cy,ex,ey,inequality,min_singular_ratio,kernel_found",
             rows);
    std::ostringstream sum;
    sum << "rows = " << out.rows.size() << "\nviolations = " << out.violations << "\n";
    writeTextFile(outdir + "/theory_summary.txt", sum.str());
  }
  return out;
}

// ---------------------------------------------------------------- fitness

std::function<double(const SamplingMask&)> makeGaFitness(const Experiment& exp,
                                                         const ExperimentConfig& cfg) {
  auto support = std::make_shared<Array2R>(extendedSupport(exp));
  auto geom = &exp.geometry;
  // evaluated columns: stride over the readout, restricted to the support
  auto columns = std::make_shared<std::vector<int>>();
  {
    const double thr = cfg.support_threshold * support->max();
    for (int x = 0; x < exp.geometry.nx; x += std::max(1, cfg.ga_fitness_column_stride)) {
      bool any = false;
      for (int y = 0; y < exp.geometry.eny() && !any; ++y) any = (*support)(y, x) > thr;
      if (any) columns->push_back(x);
    }
    if (columns->empty()) columns->push_back(exp.geometry.nx / 2);
  }
  const std::uint64_t seed = hashKey(cfg.seed, 0x6669 /* fi */, cfg.ga.seed);
  auto fit = std::make_shared<ColumnGFitness>(exp.geometry, *columns, cfg.ga.fitness_trials,
                                              cfg.ga_fitness_cg_iters, seed, *support,
                                              cfg.support_threshold);
  (void)geom;
  return [fit, support, columns](const SamplingMask& mask) { return (*fit)(mask); };
}

GaRunOutcome runGaOptimize(const ExperimentConfig& cfg, const std::string& outdir) {
  Experiment exp = buildExperiment(cfg);
  const int npe = cfg.n * cfg.phantom.ny;
  auto fitness = makeGaFitness(exp, cfg);

  // seeded initial population: uniform offsets, Poisson, CAVA frames, random
  std::vector<SamplingMask> seeds;
  for (int off = 0; off < cfg.R && static_cast<int>(seeds.size()) < cfg.ga.population / 4 + 1;
       ++off) {
    auto m = uniformMask(npe, cfg.R, off);
    if (m.count() == maskBudget(npe, cfg.R)) seeds.push_back(m);
  }
  for (int k = 0; k < 4; ++k) seeds.push_back(poissonMask(npe, cfg.R, hashKey(cfg.ga.seed, 1, k)));
  for (int f = 0; f < 4; ++f) seeds.push_back(cavaMask(npe, cfg.R, f, cfg.ga.seed));
  for (int k = 0; k < 4; ++k) seeds.push_back(randomMask(npe, cfg.R, hashKey(cfg.ga.seed, 2, k)));

  GaRunOutcome out;
  out.result = gaOptimize(cfg.ga, fitness, seeds);
  for (const auto& s : seeds) out.seed_fitness.push_back(fitness(s));
  out.best_seed_fitness = *std::min_element(out.seed_fitness.begin(), out.seed_fitness.end());
  const auto uni = uniformMask(npe, cfg.R, 0);
  out.uniform_fitness =
      uni.count() == maskBudget(npe, cfg.R) ? fitness(uni) : out.seed_fitness.front();

  if (!outdir.empty()) {
    writeMasks(outdir + "/ga_mask.txt", {out.result.best});
    std::vector<std::vector<std::string>> rows;
    for (size_t g = 0; g < out.result.best_fitness_trace.size(); ++g)
      rows.push_back({std::to_string(g), formatDouble(out.result.best_fitness_trace[g])});
    writeCsv(outdir + "/ga_trace.csv", "generation,best_fitness", rows);
  }
  return out;
}

// ---------------------------------------------------------------- sampling study

SamplingStudyOutcome runSamplingStudy(const ExperimentConfig& cfg, const std::vector<int>& Rs,
                                      bool with_ga, const std::string& outdir) {
  Experiment exp = buildExperiment(cfg);
  const int npe = cfg.n * cfg.phantom.ny;
  const Array2R support = extendedSupport(exp);

  SamplingStudyOutcome out;
  for (int R : Rs) {
    ExperimentConfig rcfg = cfg;
    rcfg.R = R;
    std::vector<std::pair<std::string, SamplingMask>> fams;
    fams.emplace_back("uniform", uniformMask(npe, R, 0));
    fams.emplace_back("poisson", poissonMask(npe, R, cfg.mask_seed));
    fams.emplace_back("cava", cavaMask(npe, R, 0, cfg.mask_seed));
    fams.emplace_back("random", randomMask(npe, R, cfg.mask_seed));
    if (with_ga) {
      auto ga = runGaOptimize(rcfg, "");
      fams.emplace_back("ga", ga.result.best);
    }

    for (auto& [name, mask] : fams) {
      SenseGFactorSetup setup;
      setup.geom = &exp.geometry;
      setup.mask = mask;
      setup.cg_iters = 30;
      setup.support = support;
      setup.support_threshold = cfg.support_threshold;
      const GFactorMap g =
          senseGFactor(setup, cfg.gfactor_trials, hashKey(cfg.seed, 0x6766, R));
      SamplingStudyOutcome::Entry e;
      e.R = R;
      e.family = name;
      e.mask = mask;
      e.psf = psfSideLobes(maskPSF(mask));
      e.mean_g = g.mean_g;
      out.entries.push_back(e);

      if (!outdir.empty()) {
        const std::string base = outdir + "/R" + std::to_string(R) + "_" + name;
        writeMasks(base + "_mask.txt", {mask});
        const auto psf = maskPSF(mask);
        Array2R pm(1, static_cast<int>(psf.size()));
        for (size_t i = 0; i < psf.size(); ++i) pm(0, static_cast<int>(i)) = std::abs(psf[i]);
        exportMagnitude(base + "_psf.pgm", pm, 0, 1);
        exportMagnitude(base + "_gmap.pgm", g.g);
      }
    }
  }

  if (!outdir.empty()) {
    std::vector<std::vector<std::string>> rows;
    for (const auto& e : out.entries)
      rows.push_back({std::to_string(e.R), e.family, std::to_string(e.mask.count()),
                      formatDouble(e.mean_g), formatDouble(e.psf.max_side),
                      std::to_string(e.psf.visible), std::to_string(e.psf.dominant)});
    writeCsv(outdir + "/sampling_study.csv",
             "R,family,lines,mean_g,psf_max_side,psf_visible_lobes,psf_dominant_lobes", rows);
  }
  return out;
}

// ---------------------------------------------------------------- compare

namespace {

// Per-slice CAIPI calibration acquisitions (noiseless, phases applied).
// Calibration is a separate scan: same coils, different image content
// (different contrast), the way slice-separation kernels are calibrated in
// practice. Kernel content-dependence therefore shows up honestly.
std::vector<KSpaceData> caipiCalibration(const Experiment& exp, const CaipiPhaseTable& phases) {
  PhantomSpec cal_spec = exp.cfg.phantom;
  cal_spec.seed = hashKey(exp.cfg.seed, 0x6361 /* ca */, exp.cfg.phantom.seed + 1);
  cal_spec.contrast_jitter = std::min(0.5, cal_spec.contrast_jitter + 0.15);
  const SliceStack cal_content = makePhantom(cal_spec);

  std::vector<KSpaceData> out;
  const int mb = exp.phantom.mb();
  const SamplingMask full = fullMask(exp.phantom.ny());
  for (int s = 0; s < mb; ++s) {
    SliceStack solo(mb, exp.phantom.ny(), exp.phantom.nx());
    for (int y = 0; y < exp.phantom.ny(); ++y)
      for (int x = 0; x < exp.phantom.nx(); ++x) solo.data(s, y, x) = cal_content.data(s, y, x);
    out.push_back(caipiForward(solo, exp.maps, phases, full, 0.0, 0));
  }
  return out;
}

int autoKernel(double opt) {
  int k = static_cast<int>(std::ceil(opt));
  if (k < 2) k = 2;
  if (k > 24) k = 24;
  return k;
}

}  // namespace

CompareOutcome runCompare(const ExperimentConfig& cfg, const std::string& outdir,
                          bool with_leakage) {
  Experiment exp = buildExperiment(cfg);
  const int mb = cfg.phantom.mb, ny = cfg.phantom.ny;
  const int npe_ext = cfg.n * ny;
  CompareOutcome out;

  // matched PE-line budget: net R on the extended grid vs in-plane R_in = R/MB
  if (cfg.R % mb != 0)
    throw std::invalid_argument("compare: net R must be a multiple of MB for the CAIPI arm");
  const int r_in = cfg.R / mb;
  SamplingMask smile_mask = makeMask(cfg, npe_ext);
  SamplingMask caipi_mask = r_in == 1 ? fullMask(ny) : uniformMask(ny, r_in, 0);
  out.budget_smile = smile_mask.count();
  out.budget_caipi = caipi_mask.count();
  if (out.budget_smile != out.budget_caipi)
    throw std::runtime_error("compare: PE-line budgets do not match: " +
                             std::to_string(out.budget_smile) + " vs " +
                             std::to_string(out.budget_caipi));

  // kernel sizes from the optimal-size rule (single-slice support bound)
  ReconConfig caipi_cfg = cfg.recon;
  if (cfg.recon_kernel_auto) {
    const auto opt = optimalKernelSize(cfg.coils.cx, cfg.coils.cy, cfg.coils.nc);
    caipi_cfg.ex = autoKernel(opt[0]);
    caipi_cfg.ey = autoKernel(opt[1]);
  }

  const CaipiPhaseTable phases = caipiPhaseTable(ny, mb);
  const std::uint64_t noise_seed = hashKey(cfg.seed, 0x6E6F, cfg.noise_seed);

  // shared noise scale: fraction of the extended image peak
  const ExtendedImage ext = assembleExtended(exp.phantom, exp.maps, cfg.n, exp.offsets);
  double sigma = 0;
  if (cfg.noise_sigma_frac > 0) {
    double mx = 0;
    for (size_t i = 0; i < ext.data.size(); ++i)
      mx = std::max(mx, std::abs(ext.data.data()[i]));
    sigma = cfg.noise_sigma_frac * mx;
  }

  // ---- SMILE arm: extended-FOV acquisition + CG-SENSE
  out.smile.name = "smile_cg_sense";
  try {
    const KSpaceData ks = smileForward(ext, smile_mask, sigma, noise_seed);
    out.smile.recon = cgSense(ks, exp.geometry, smile_mask, cfg.recon);
    out.smile.metrics = computeMetrics(exp.reference, out.smile.recon.slices);
    out.smile.metrics.recon_seconds = out.smile.recon.wall_seconds;
  } catch (const std::exception& e) {
    out.smile.failed = true;
    out.smile.error = e.what();
  }

  // ---- CAIPI arm: collapsed acquisition + slice-GRAPPA (+ in-plane GRAPPA)
  out.caipi.name = r_in > 1 ? "caipi_slice_grappa_plus_grappa" : "caipi_slice_grappa";
  try {
    const KSpaceData caipi_ks =
        caipiForward(exp.phantom, exp.maps, phases, caipi_mask, sigma, hashKey(noise_seed, 1));
    const auto calib = caipiCalibration(exp, phases);
    out.caipi.recon = sliceGrappa(caipi_ks, calib, phases, exp.maps, caipi_mask, caipi_cfg);
    out.caipi.metrics = computeMetrics(exp.reference, out.caipi.recon.slices);
    out.caipi.metrics.recon_seconds = out.caipi.recon.wall_seconds;
  } catch (const std::exception& e) {
    out.caipi.failed = true;
    out.caipi.error = e.what();
  }

  if (!out.smile.failed && !out.caipi.failed)
    out.ser_gap_db = out.smile.metrics.ser_aggregate - out.caipi.metrics.ser_aggregate;

  // ---- leakage at the same settings, noiseless
  if (with_leakage && !out.smile.failed && !out.caipi.failed) {
    auto smile_pipe = [&](const SliceStack& content) {
      const ExtendedImage e2 = assembleExtended(content, exp.maps, cfg.n, exp.offsets);
      const KSpaceData k2 = smileForward(e2, smile_mask, 0.0, 0);
      return cgSense(k2, exp.geometry, smile_mask, cfg.recon).slices;
    };
    auto caipi_pipe = [&](const SliceStack& content) {
      const KSpaceData k2 = caipiForward(content, exp.maps, phases, caipi_mask, 0.0, 0);
      const auto calib = caipiCalibration(exp, phases);
      return sliceGrappa(k2, calib, phases, exp.maps, caipi_mask, caipi_cfg).slices;
    };
    out.smile.metrics.leakage = leakageMatrix(smile_pipe, exp.phantom);
    out.caipi.metrics.leakage = leakageMatrix(caipi_pipe, exp.phantom);
    auto maxOff = [](const std::vector<std::vector<double>>& L) {
      double m = 0;
      for (size_t s = 0; s < L.size(); ++s)
        for (size_t t = 0; t < L.size(); ++t)
          if (s != t) m = std::max(m, L[s][t]);
      return m;
    };
    out.smile_max_offdiag = maxOff(out.smile.metrics.leakage);
    out.caipi_max_offdiag = maxOff(out.caipi.metrics.leakage);
  }

  if (!outdir.empty()) {
    cfg.toConfig().save(outdir + "/resolved.cfg");
    for (const CompareArm* arm : {&out.smile, &out.caipi}) {
      if (arm->failed) {
        writeTextFile(outdir + "/" + arm->name + "_FAILED.txt", arm->error + "\n");
        continue;
      }
      writeArray(outdir + "/" + arm->name + "_slices.smle", arm->recon.slices.data);
      writeMetricsCsv(outdir + "/" + arm->name + "_metrics.csv", arm->metrics);
      writeMetricsSummary(outdir + "/" + arm->name + "_summary.txt", arm->name, arm->metrics);
      if (!arm->metrics.leakage.empty())
        writeLeakageCsv(outdir + "/" + arm->name + "_leakage.csv", arm->metrics.leakage);
      exportMagnitude(outdir + "/" + arm->name + "_mosaic.pgm", magnitudeMosaic(arm->recon.slices));
      const auto err = errorMap(exp.reference, arm->recon.slices, 1.0);
      for (size_t s = 0; s < err.maps.size(); ++s)
        exportMagnitude(outdir + "/" + arm->name + "_error_s" + std::to_string(s) + ".pgm",
                        err.maps[s]);
    }
    writeMasks(outdir + "/smile_mask.txt", {smile_mask});
    writeMasks(outdir + "/caipi_mask.txt", {caipi_mask});
  }
  return out;
}

// ---------------------------------------------------------------- plumbing

void runPhantomCmd(const ExperimentConfig& cfg, const std::string& outdir) {
  Experiment exp = buildExperiment(cfg);
  writeArray(outdir + "/phantom.smle", exp.phantom.data);
  writeArray(outdir + "/maps.smle", exp.maps.maps);
  writeArray(outdir + "/reference.smle", exp.reference.data);
  exportMagnitude(outdir + "/phantom_mosaic.pgm", magnitudeMosaic(exp.phantom));
  cfg.toConfig().save(outdir + "/resolved.cfg");
}

void runSimulateCmd(const ExperimentConfig& cfg, const std::string& indir,
                    const std::string& outdir) {
  Experiment exp = buildExperiment(cfg);
  {  // verify the inputs exist and match the config-generated objects
    const Array3C ph = readArray3(indir + "/phantom.smle");
    if (ph.n0() != exp.phantom.mb() || ph.n1() != exp.phantom.ny() || ph.n2() != exp.phantom.nx())
      throw std::invalid_argument("simulate: phantom.smle does not match the config geometry");
  }
  const SamplingMask mask = makeMask(cfg, cfg.n * cfg.phantom.ny);
  const KSpaceData ks = smileAcquire(exp, mask);
  writeArray(outdir + "/kspace.smle", ks.data);
  writeMasks(outdir + "/mask.txt", {mask});
  cfg.toConfig().save(outdir + "/resolved.cfg");
}

void runReconCmd(const ExperimentConfig& cfg, const std::string& indir,
                 const std::string& outdir) {
  Experiment exp = buildExperiment(cfg);
  const auto frames = readMasks(indir + "/mask.txt");
  const SamplingMask& mask = frames.front();
  KSpaceData ks;
  ks.data = readArray3(indir + "/kspace.smle");
  ks.grid = GridKind::Extended;
  ks.base_ny = cfg.phantom.ny;
  ks.extension_factor = cfg.n;
  ks.mask = mask;
  const ReconResult rec = cgSense(ks, exp.geometry, mask, cfg.recon);
  writeArray(outdir + "/recon.smle", rec.slices.data);
  exportMagnitude(outdir + "/recon_mosaic.pgm", magnitudeMosaic(rec.slices));
  const MetricsReport rep = computeMetrics(exp.reference, rec.slices);
  writeMetricsCsv(outdir + "/metrics.csv", rep);
  cfg.toConfig().save(outdir + "/resolved.cfg");
}

}  // namespace smile
