#pragma once

#include <functional>

#include "smile/recon.hpp"
#include "smile/types.hpp"

namespace smile {

/// Signal-to-error ratio in dB, 20*log10(||ref|| / ||ref - recon||), computed
/// on magnitudes over the object support (reference magnitude above
/// support_threshold * max). Exact equality returns the documented 300 dB cap.
double ser(const SliceStack& reference, const SliceStack& recon,
           double support_threshold = 0.05);

constexpr double kSerCapDb = 300.0;

struct SsimStats {
  double ssim = 0;       // mean local SSIM over the support
  double luminance = 0;  // mean local luminance term
  double contrast = 0;
  double structure = 0;
};

/// Mean local SSIM on magnitude images normalized to [0,1]; square window,
/// standard constants (k1 = 0.01, k2 = 0.03) with dynamic range L.
SsimStats ssimStats(const Array2R& reference, const Array2R& recon, int window = 7,
                    double k1 = 0.01, double k2 = 0.03, double L = 1.0,
                    double support_threshold = 0.05);
double ssim(const Array2R& reference, const Array2R& recon, int window = 7, double k1 = 0.01,
            double k2 = 0.03, double L = 1.0);

/// Per-slice SSIM of magnitude stacks, each normalized by the shared max.
std::vector<double> ssimPerSlice(const SliceStack& reference, const SliceStack& recon,
                                 int window = 7);

struct ErrorMaps {
  std::vector<Array2R> maps;  // |ref - recon| per slice
  double scale = 1.0;         // display scale recorded for provenance
};
ErrorMaps errorMap(const SliceStack& reference, const SliceStack& recon, double scale = 1.0);

struct GFactorMap {
  Array2R g;  // over the unknown grid; 0 where not evaluated
  double mean_g = 0;
  double max_g = 0;
  int trials = 0;
  int dropped = 0;
  int R = 1;
};

/// Per-pixel std over noise-only reconstructions; trial seeds split from
/// (seed, arm). Throwing handles drop their trial; fewer than 2 usable
/// trials is an error. Deterministic regardless of thread count.
Array2R pseudoReplicaStd(const std::function<Array2C(std::uint64_t)>& recon, int trials,
                         std::uint64_t seed, std::uint64_t arm, int ny, int nx,
                         int* dropped = nullptr);

/// Generic pseudo multiple replica: each handle reconstructs one noise-only
/// realization (trial seeds are split deterministically from `seed`).
/// g = std(accelerated) / (std(full) * sqrt(R)) per pixel, reported where the
/// support magnitude exceeds support_threshold * max. Throwing handles drop
/// the trial; more than 25% drops is an error.
GFactorMap gFactorPseudoReplica(const std::function<Array2C(std::uint64_t)>& recon_accel,
                                const std::function<Array2C(std::uint64_t)>& recon_full, int R,
                                int trials, std::uint64_t seed, const Array2R& support,
                                double support_threshold = 0.05);

/// SENSE-specific pseudo-replica for a PE mask over the extended grid.
/// Uniform lattice masks (NY % R == 0) reconstruct with the classical direct
/// unfolding; arbitrary masks use per-column CG-SENSE. `columns` restricts
/// the evaluated readout columns (empty = all).
struct SenseGFactorSetup {
  const SenseGeometry* geom = nullptr;
  SamplingMask mask;
  double lambda = 0;
  int cg_iters = 30;
  std::vector<int> columns;
  Array2R support;  // (NY, nx) reference magnitude on the unknown grid
  double support_threshold = 0.05;
  bool allow_unfold = true;
  const Array2R* full_std = nullptr;  // reuse a precomputed reference std
};
GFactorMap senseGFactor(const SenseGFactorSetup& setup, int trials, std::uint64_t seed);

/// Fully-sampled reference std for senseGFactor, reusable across masks with
/// the same geometry (the reference does not depend on the mask under test).
Array2R senseFullStd(const SenseGeometry& geom, double lambda, int cg_iters,
                     const std::vector<int>& columns, int trials, std::uint64_t seed);

/// Compact mean-g evaluator for mask search. Works column-by-column with
/// noise drawn directly in the hybrid (ky, x) domain (white noise is
/// invariant under the unitary readout transform), and caches the
/// fully-sampled reference std across calls. Intended as GA fitness; the
/// reporting-grade senseGFactor keeps the k-space noise definition.
class ColumnGFitness {
public:
  ColumnGFitness(const SenseGeometry& geom, std::vector<int> columns, int trials, int cg_iters,
                 std::uint64_t seed, const Array2R& support, double support_threshold);

  double operator()(const SamplingMask& mask) const;

  const std::vector<int>& columns() const { return columns_; }

private:
  const SenseGeometry* geom_;
  std::vector<int> columns_;
  int trials_, cg_iters_;
  std::uint64_t seed_;
  std::vector<std::vector<int>> roi_rows_;      // per column: Y indices inside the support
  std::vector<std::vector<double>> full_std_;   // per column: reference std at those rows
};

/// Impulse-content slice-leakage matrix: reconstruct content placed in slice
/// s only and record L[s][t] = ||recon slice t|| / ||recon slice s||.
std::vector<std::vector<double>> leakageMatrix(
    const std::function<SliceStack(const SliceStack&)>& pipeline, const SliceStack& content);

struct MetricsReport {
  std::vector<double> ser_per_slice;
  double ser_aggregate = 0;
  std::vector<double> ssim_per_slice;
  double ssim_mean = 0;
  double mean_g = -1, max_g = -1;                // negative = not computed
  std::vector<std::vector<double>> leakage;      // empty = not computed
  double recon_seconds = 0;                      // console-only, never serialized
};

MetricsReport computeMetrics(const SliceStack& reference, const SliceStack& recon);

/// CSV: one row per slice plus an aggregate row (wall time excluded so files
/// are bit-reproducible).
void writeMetricsCsv(const std::string& path, const MetricsReport& report);
void writeLeakageCsv(const std::string& path, const std::vector<std::vector<double>>& L);
void writeMetricsSummary(const std::string& path, const std::string& title,
                         const MetricsReport& report);

}  // namespace smile
