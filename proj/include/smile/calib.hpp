#pragma once

#include <Eigen/Dense>

#include "smile/types.hpp"

namespace smile {

/// Kernel-size bookkeeping. cy is the support bound on the single-slice
/// grid; dy the bound on the n-times extended grid (dy = n*cy for maps that
/// extend periodically, and never less than cy).
struct KernelSizeSpec {
  int cx = 0, cy = 0;
  int dy = 0;
  int nc = 0;
  int ex = 0, ey = 0;
};

/// Sufficient condition for an annihilating kernel of size [ex, ey, nc] to
/// exist when a [cx, cy] rectangle bounds the map support: more kernel
/// unknowns than convolution-output constraints, ex*ey*nc > (cx+ex-1)(cy+ey-1).
bool kernelSizeSufficient(int ex, int ey, int nc, int cx, int cy);
bool kernelSizeSufficient(const KernelSizeSpec& spec);  // uses dy in place of cy

/// Real-relaxed smallest kernel size (1+sqrt(nc))/(nc-1) * [cx-1, cy-1];
/// pass dy for the extended grid.
std::array<double, 2> optimalKernelSize(int cx, int cy, int nc);

/// Fully sampled rectangle of central k-space, half-open index ranges.
struct ACSRegion {
  int ky0 = 0, ky1 = 0;
  int kx0 = 0, kx1 = 0;
  int height() const { return ky1 - ky0; }
  int width() const { return kx1 - kx0; }
};

/// Centered ACS covering `lines` PE rows and `cols` readout columns.
ACSRegion centeredACS(int nky, int nkx, int lines, int cols);

/// Sliding-window calibration matrix: one row per valid [ex, ey] window
/// position inside the region, one column per kernel tap. Column order is
/// coil-fastest, then ky, then kx: col = (wx*ey + wy)*nc + c.
Eigen::MatrixXcd buildCalibrationMatrix(const KSpaceData& kspace, const ACSRegion& region, int ex,
                                        int ey);

struct Kernel {
  Eigen::VectorXcd coeffs;  // [ex*ey*nc], column order as above
  double residual = 0;      // singular value of the calibration matrix
};

enum class KernelKind { Annihilating, Prediction };

struct KernelSet {
  int ex = 0, ey = 0, nc = 0;
  KernelKind kind = KernelKind::Annihilating;
  std::vector<Kernel> kernels;
};

/// Nullspace kernels: right singular vectors with singular value at most
/// threshold * sigma_max. Annihilating kernels are rescaled so the center tap
/// of the strongest coil is exactly -1.
KernelSet estimateKernels(const Eigen::MatrixXcd& calib, double threshold, int ex, int ey, int nc);

/// Smallest/largest singular value ratio of the calibration matrix (0 when
/// the matrix has more columns than rows).
double minSingularRatio(const Eigen::MatrixXcd& calib);

/// Max relative residual of the kernels applied as valid convolution over the
/// full k-space (not just the ACS): ||A k|| / (||k-space|| per window norm).
double annihilationResidual(const KSpaceData& kspace, const KernelSet& kernels);

/// Low-resolution coil maps from an apodized zero-filled ACS reconstruction,
/// per-pixel normalized. Returns a single-"slice" map set on the k-space grid.
CoilMapSet estimateCoilMapsFromACS(const KSpaceData& kspace, const ACSRegion& region);

/// Kernel container: "<base>.smle" stores the stacked coefficients as a
/// (num_kernels, ex*ey*nc) complex array; "<base>.spec.cfg" stores the
/// KernelSizeSpec, kind, and per-kernel residuals. Coefficients round to the
/// container precision (complex64).
void writeKernelSet(const std::string& path_base, const KernelSet& kernels,
                    const KernelSizeSpec& spec);
std::pair<KernelSet, KernelSizeSpec> readKernelSet(const std::string& path_base);

}  // namespace smile
