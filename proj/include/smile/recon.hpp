#pragma once

#include <Eigen/Dense>

#include "smile/model.hpp"
#include "smile/types.hpp"

namespace smile {

enum class ReconMethod { CgSense, GrappaUniform, SliceGrappa };

struct ReconConfig {
  ReconMethod method = ReconMethod::CgSense;
  double lambda = 0.0;
  int max_iters = 200;
  double cg_tolerance = 1e-8;
  int ex = 4, ey = 4;  // kernel extent for the GRAPPA-family methods
};

struct ReconResult {
  SliceStack slices;
  int iterations = 0;
  double final_residual = 0;
  double wall_seconds = 0;
  bool converged = true;
  bool overlap_flagged = false;
};

/// Unknown-grid geometry for SENSE: per-coil maps over the (possibly
/// extended) image grid plus the slice layout used to cut the result.
struct SenseGeometry {
  Array3C ext_maps;  // (nc, NY, nx), zero outside placed segments
  int slice_ny = 0;
  int nx = 0;
  std::vector<int> slice_offsets;
  bool overlapping = false;

  int nc() const { return ext_maps.n0(); }
  int eny() const { return ext_maps.n1(); }
};

SenseGeometry makeSenseGeometry(const CoilMapSet& maps, int n, const std::vector<int>& offsets,
                                bool allow_overlap = false);

/// Conjugate-gradient SENSE on the normal equations
/// (A^H A + lambda I) u = A^H d with A = P_mask F diag(maps); matrix-free.
ReconResult cgSense(const KSpaceData& kspace, const SenseGeometry& geom,
                    const SamplingMask& mask, const ReconConfig& cfg);

/// Extended-grid solution before slice cutting (same solver as cgSense).
Array2C cgSenseImage(const KSpaceData& kspace, const SenseGeometry& geom,
                     const SamplingMask& mask, const ReconConfig& cfg, int* iters = nullptr,
                     double* resid = nullptr);

/// Classical direct SENSE unfolding for a uniform lattice mask (NY % R == 0).
/// Solves the per-pixel alias systems by unregularized normal equations, so a
/// degenerate system honestly blows up instead of being silently filtered.
Array2C senseUnfoldUniform(const KSpaceData& kspace, const SenseGeometry& geom,
                           const SamplingMask& mask);

/// PE-only undersampling decouples along the readout after an x-direction
/// inverse FFT; this solver runs independent 1D CG-SENSE problems per column.
/// Converges to the same least-squares solution as cgSense (the iterates
/// differ, since CG inner products are per-column here), and is much cheaper
/// when only a subset of columns is needed (g-factor fitness).
class ColumnSenseSolver {
public:
  ColumnSenseSolver(const SenseGeometry& geom, const SamplingMask& mask, double lambda,
                    int iters);

  /// kspace -> hybrid (ky, x) domain; solves the requested columns and writes
  /// them into out (NY, nx); untouched columns stay zero.
  void solve(const KSpaceData& kspace, const std::vector<int>& columns, Array2C& out) const;

  /// Single column from hybrid-domain data laid out (coil, ky) contiguously.
  void solveColumn(int x, const Cx* hybrid_col, Cx* u) const;

  int eny() const { return eny_; }
  int nc() const { return nc_; }

private:
  const SenseGeometry* geom_;
  std::vector<std::uint8_t> keep_;
  double lambda_;
  int iters_;
  int nc_, eny_, nx_;
};

struct GrappaKernels {
  int R = 1, offset = 0;
  int ex = 0, ey = 0, nc = 0;
  // one weight matrix per target offset r = 1..R-1: (nc) x (ex*ey*nc)
  std::vector<Eigen::MatrixXcd> weights;
};

/// Trains uniform-lattice GRAPPA prediction kernels on a fully sampled
/// calibration block (nc, ny, nx).
GrappaKernels trainGrappaKernels(const Array3C& calib, int R, int ex, int ey);

/// Fills missing lines of a uniformly undersampled k-space; sampled lines
/// pass through unchanged. Line indices wrap circularly, consistent with the
/// discrete periodic signal model.
KSpaceData applyGrappa(const KSpaceData& kspace, const SamplingMask& mask,
                       const GrappaKernels& kernels);

/// Spec-facing wrapper: calibration extracted from the ACS region of the
/// input k-space itself.
KSpaceData grappaUniform(const KSpaceData& kspace, const struct ACSRegion& acs, int R,
                         const ReconConfig& cfg);

/// Slice-GRAPPA baseline for CAIPI data: one kernel per (slice, coil) mapping
/// collapsed k-space neighborhoods (on the sampled lattice) to that slice's
/// k-space; optional in-plane GRAPPA afterwards; matched-filter combine.
/// Calibration inputs are the per-slice acquisitions with their CAIPI phases
/// applied (as acquired); `phases` is used to demodulate after separation.
ReconResult sliceGrappa(const KSpaceData& caipi_kspace,
                        const std::vector<KSpaceData>& per_slice_calib,
                        const CaipiPhaseTable& phases, const CoilMapSet& maps,
                        const SamplingMask& inplane_mask, const ReconConfig& cfg);

}  // namespace smile
