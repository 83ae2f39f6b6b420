#pragma once

#include "smile/types.hpp"

namespace smile {

enum class PhantomStyle { Ellipses, RingAndDisks };

struct PhantomSpec {
  int ny = 128;
  int nx = 128;
  int mb = 3;
  PhantomStyle style = PhantomStyle::Ellipses;
  std::uint64_t seed = 0;
  double slice_rotation_deg = 14.0;  // base rotation between adjacent slices
  double contrast_jitter = 0.30;     // per-slice amplitude variation
};

struct CoilSpec {
  int nc = 8;
  int cx = 7;  // k-space support along readout
  int cy = 7;  // k-space support along PE
  double similarity = 0.65;  // adjacent slices see similar coil profiles
  std::uint64_t seed = 0;
};

/// Deterministic multi-slice phantom, real-valued in [0,1], global max 1,
/// zero border of at least 2 pixels on every side.
SliceStack makePhantom(const PhantomSpec& spec);

/// Coil maps drawn as random complex coefficients inside a centered
/// [cx, cy] k-space rectangle, so the discrete support bound is exact.
/// similarity blends a shared coefficient draw with per-slice draws.
CoilMapSet makeCoilMaps(const CoilSpec& spec, int mb, int ny, int nx);

/// Matched-filter coil combine with per-pixel normalization; equals the
/// true slice magnitude exactly for data consistent with the maps.
SliceStack sumOfSquaresReference(const SliceStack& slices, const CoilMapSet& maps);

/// Matched-filter combine of per-coil images against per-slice maps.
Array2C matchedFilterCombine(const Array3C& coil_images, const CoilMapSet& maps, int slice);

}  // namespace smile
