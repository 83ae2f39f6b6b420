#pragma once

#include "smile/types.hpp"

namespace smile {

std::vector<int> uniformOffsets(int mb, int ny);

/// Places coil-weighted slices at the given PE offsets inside an n*ny
/// extended FOV; rows outside the placed segments stay zero.
ExtendedImage assembleExtended(const SliceStack& slices, const CoilMapSet& maps, int n,
                               const std::vector<int>& offsets, bool allow_overlap = false);

/// Per-coil centered FFT of the extended image, PE rows kept where the mask
/// is true, iid complex Gaussian noise of std noise_sigma on sampled entries.
KSpaceData smileForward(const ExtendedImage& ext, const SamplingMask& mask, double noise_sigma,
                        std::uint64_t seed);

/// Per-(line, slice) phase table. The standard scheme phi(l, s) =
/// -2*pi*s*(l mod mb)/mb shifts slice s by s*N_y inside the mb-extended FOV.
struct CaipiPhaseTable {
  int npe = 0, mb = 1;
  std::vector<double> phase;  // row-major (line, slice)
  double at(int line, int s) const { return phase[static_cast<size_t>(line) * mb + s]; }
};

CaipiPhaseTable caipiPhaseTable(int npe, int mb);
CaipiPhaseTable zeroPhaseTable(int npe, int mb);

/// PhaseOnly models RF phase cycling: line m' is the sum of the slices' own
/// k-space lines weighted by exp(i*phi(m', s)). FovShift additionally applies
/// the sub-grid readout modulation of a gradient-blip implementation, which
/// makes the acquisition an exact sheared-lattice subset of the extended-FOV
/// spectrum (see caipiSmileFactor).
enum class CaipiModulation { PhaseOnly, FovShift };

KSpaceData caipiForward(const SliceStack& slices, const CoilMapSet& maps,
                        const CaipiPhaseTable& phases, const SamplingMask& inplane_mask,
                        double noise_sigma, std::uint64_t seed,
                        CaipiModulation mod = CaipiModulation::PhaseOnly);

/// CAIPI-SMILE equivalence, for even N_y and uniform offsets s*N_y:
///   caipi_fovshift(line l) = factor(l) * extended_kspace(n*l + l mod n)
/// with factor(l) = sqrt(n) * (-1)^((n-1)*(l - N_y/2) + (l mod n)).
Cx caipiSmileFactor(int n, int ny, int line);

/// k-space of maps(c,s) * slices(s) for every (coil, slice) pair, collapsed grid.
Array4C sliceSpectra(const SliceStack& slices, const CoilMapSet& maps);

}  // namespace smile
