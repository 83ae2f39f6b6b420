// Micro-benchmark comparing the production kernels against their serial
// reference implementations, and the OpenMP paths against single-thread runs.
#include <chrono>
#include <cstdio>

#include "smile/experiments.hpp"
#include "smile/fft.hpp"
#include "smile/parallel.hpp"
#include "smile/reference.hpp"
#include "smile/rng.hpp"

using namespace smile;
using Clock = std::chrono::steady_clock;

namespace {

double timeIt(int reps, const std::function<void()>& fn) {
  fn();  // warm-up (plan creation etc.)
  const auto t0 = Clock::now();
  for (int i = 0; i < reps; ++i) fn();
  return std::chrono::duration<double, std::milli>(Clock::now() - t0).count() / reps;
}

}  // namespace

int main() {
  std::printf("%-44s %10s %10s %8s\n", "kernel", "ref[ms]", "opt[ms]", "speedup");

  // FFT vs naive DFT
  {
    Array2C img(64, 64);
    for (int y = 0; y < 64; ++y)
      for (int x = 0; x < 64; ++x) img(y, x) = gaussianAt(hashKey(1, y * 64 + x));
    const double t_ref = timeIt(1, [&] { ref::dft2c(img, true); });
    const double t_fft = timeIt(50, [&] { fft2c(img); });
    std::printf("%-44s %10.3f %10.3f %8.1fx\n", "fft2c 64x64 (naive DFT vs FFTW)", t_ref, t_fft,
                t_ref / t_fft);
  }

  ExperimentConfig cfg;
  cfg.phantom.ny = cfg.phantom.nx = 128;
  cfg.phantom.mb = 3;
  cfg.n = 3;
  cfg.R = 6;
  Experiment exp = buildExperiment(cfg);
  const SamplingMask mask = cavaMask(384, 6, 0, 0);

  // 2D CG-SENSE vs per-column solver (identical solutions, fixed iterations)
  {
    const KSpaceData ks = smileAcquire(exp, mask);
    ReconConfig rc;
    rc.max_iters = 12;
    rc.cg_tolerance = 0;
    const double t2d = timeIt(3, [&] { cgSenseImage(ks, exp.geometry, mask, rc); });
    ColumnSenseSolver solver(exp.geometry, mask, 0.0, 12);
    Array2C u(exp.geometry.eny(), exp.geometry.nx);
    const double t1d = timeIt(3, [&] { solver.solve(ks, {}, u); });
    std::printf("%-44s %10.3f %10.3f %8.1fx\n", "CG-SENSE 12 iters (2D op vs per-column)", t2d,
                t1d, t2d / t1d);
    std::vector<int> cols;
    for (int x = 32; x < 96; x += 8) cols.push_back(x);
    const double tsub = timeIt(3, [&] { solver.solve(ks, cols, u); });
    std::printf("%-44s %10.3f %10.3f %8.1fx\n", "  per-column, 8-col fitness subset", t1d, tsub,
                t1d / tsub);
  }

  // matched filter: reference formula vs production (same algorithm)
  {
    Array3C coil(cfg.coils.nc, 128, 128);
    for (int c = 0; c < cfg.coils.nc; ++c)
      for (int y = 0; y < 128; ++y)
        for (int x = 0; x < 128; ++x)
          coil(c, y, x) = exp.maps.maps(c, 0, y, x) * exp.phantom.data(0, y, x);
    const double t_ref = timeIt(10, [&] { ref::matchedFilterDirect(coil, exp.maps.maps, 0); });
    const double t_opt = timeIt(10, [&] { matchedFilterCombine(coil, exp.maps, 0); });
    std::printf("%-44s %10.3f %10.3f %8.1fx\n", "matched-filter combine 128x128x8", t_ref, t_opt,
                t_ref / t_opt);
  }

  // g-factor trials: serial vs OpenMP (identical results by construction)
  {
    SenseGFactorSetup setup;
    setup.geom = &exp.geometry;
    setup.mask = mask;
    setup.cg_iters = 10;
    setup.support = extendedSupport(exp);
    std::vector<int> cols;
    for (int x = 32; x < 96; x += 8) cols.push_back(x);
    setup.columns = cols;
    const int saved = maxThreads();
    setMaxThreads(1);
    const double t_serial = timeIt(1, [&] { senseGFactor(setup, 16, 7); });
    setMaxThreads(saved);
    const double t_par = timeIt(1, [&] { senseGFactor(setup, 16, 7); });
    std::printf("%-44s %10.3f %10.3f %8.1fx (threads=%d)\n", "pseudo-replica g, 16 trials",
                t_serial, t_par, t_serial / t_par, saved);
  }

  // GA fitness path: full-array pseudo-replica vs the compact column evaluator
  {
    SenseGFactorSetup setup;
    setup.geom = &exp.geometry;
    setup.mask = mask;
    setup.cg_iters = 12;
    setup.support = extendedSupport(exp);
    std::vector<int> cols;
    for (int x = 32; x < 96; x += 8) cols.push_back(x);
    setup.columns = cols;
    const double t_full = timeIt(1, [&] { senseGFactor(setup, 16, 7); });
    ColumnGFitness fit(exp.geometry, cols, 16, 12, 7, setup.support, 0.05);
    const double t_fit = timeIt(3, [&] { fit(mask); });
    std::printf("%-44s %10.3f %10.3f %8.1fx\n", "GA fitness eval (array path vs compact)",
                t_full, t_fit, t_full / t_fit);
  }

  return 0;
}
