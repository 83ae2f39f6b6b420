#include "smile/model.hpp"

#include <cmath>

#include "smile/fft.hpp"
#include "smile/parallel.hpp"
#include "smile/rng.hpp"

namespace smile {

namespace {
constexpr double kTwoPi = 6.283185307179586476925286766559;

void addMaskedNoise(KSpaceData& ks, double noise_sigma, std::uint64_t seed) {
  const auto& mask = *ks.mask;
  const int nc = ks.nc(), nky = ks.nky(), nkx = ks.nkx();
  for (int c = 0; c < nc; ++c)
    for (int ky = 0; ky < nky; ++ky) {
      Cx* row = ks.data.plane(c) + static_cast<size_t>(ky) * nkx;
      if (!mask.at(ky)) {
        for (int kx = 0; kx < nkx; ++kx) row[kx] = Cx(0, 0);
        continue;
      }
      if (noise_sigma > 0) {
        const std::uint64_t base = (static_cast<std::uint64_t>(c) * nky + ky) * nkx;
        for (int kx = 0; kx < nkx; ++kx)
          row[kx] += noise_sigma * gaussianAt(hashKey(seed, base + kx));
      }
    }
}
}  // namespace

std::vector<int> uniformOffsets(int mb, int ny) {
  std::vector<int> o(mb);
  for (int s = 0; s < mb; ++s) o[s] = s * ny;
  return o;
}

ExtendedImage assembleExtended(const SliceStack& slices, const CoilMapSet& maps, int n,
                               const std::vector<int>& offsets, bool allow_overlap) {
  const int mb = slices.mb(), ny = slices.ny(), nx = slices.nx();
  if (maps.mb() != mb || maps.ny() != ny || maps.nx() != nx)
    throw std::invalid_argument("assembleExtended: maps/slices shape mismatch");
  if (static_cast<int>(offsets.size()) != mb)
    throw std::invalid_argument("assembleExtended: need one offset per slice");
  const int eny = n * ny;
  for (int s = 0; s < mb; ++s) {
    if (offsets[s] < 0 || offsets[s] + ny > eny)
      throw std::invalid_argument("assembleExtended: segment exceeds the extended FOV");
    if (s > 0 && offsets[s] <= offsets[s - 1])
      throw std::invalid_argument("assembleExtended: offsets must be strictly increasing");
  }
  if (!allow_overlap) {
    for (int s = 1; s < mb; ++s)
      if (offsets[s] < offsets[s - 1] + ny)
        throw std::invalid_argument("assembleExtended: overlapping slice placement");
  }

  ExtendedImage out;
  out.data = Array3C(maps.nc(), eny, nx);
  out.extension_factor = n;
  out.slice_ny = ny;
  out.slice_offsets = offsets;
  for (int c = 0; c < maps.nc(); ++c)
    for (int s = 0; s < mb; ++s)
      for (int y = 0; y < ny; ++y)
        for (int x = 0; x < nx; ++x)
          out.data(c, offsets[s] + y, x) += maps.maps(c, s, y, x) * slices.data(s, y, x);
  return out;
}

KSpaceData smileForward(const ExtendedImage& ext, const SamplingMask& mask, double noise_sigma,
                        std::uint64_t seed) {
  if (mask.npe() != ext.eny())
    throw std::invalid_argument("smileForward: mask length must equal the extended PE size");
  KSpaceData ks;
  ks.data = Array3C(ext.nc(), ext.eny(), ext.nx());
  ks.grid = GridKind::Extended;
  ks.base_ny = ext.slice_ny;
  ks.extension_factor = ext.extension_factor;
  ks.mask = mask;
  parallelFor(ext.nc(), [&](std::int64_t c) {
    fft2c(ext.data.plane(static_cast<int>(c)), ks.data.plane(static_cast<int>(c)), ext.eny(),
          ext.nx());
  });
  addMaskedNoise(ks, noise_sigma, seed);
  return ks;
}

CaipiPhaseTable caipiPhaseTable(int npe, int mb) {
  CaipiPhaseTable t;
  t.npe = npe;
  t.mb = mb;
  t.phase.resize(static_cast<size_t>(npe) * mb);
  for (int l = 0; l < npe; ++l)
    for (int s = 0; s < mb; ++s)
      t.phase[static_cast<size_t>(l) * mb + s] = -kTwoPi * s * (l % mb) / mb;
  return t;
}

CaipiPhaseTable zeroPhaseTable(int npe, int mb) {
  CaipiPhaseTable t;
  t.npe = npe;
  t.mb = mb;
  t.phase.assign(static_cast<size_t>(npe) * mb, 0.0);
  return t;
}

Array4C sliceSpectra(const SliceStack& slices, const CoilMapSet& maps) {
  const int nc = maps.nc(), mb = slices.mb(), ny = slices.ny(), nx = slices.nx();
  Array4C spec(nc, mb, ny, nx);
  Array2C tmp(ny, nx);
  for (int c = 0; c < nc; ++c)
    for (int s = 0; s < mb; ++s) {
      for (int y = 0; y < ny; ++y)
        for (int x = 0; x < nx; ++x) tmp(y, x) = maps.maps(c, s, y, x) * slices.data(s, y, x);
      fft2c(tmp.data(), spec.plane(c, s), ny, nx);
    }
  return spec;
}

KSpaceData caipiForward(const SliceStack& slices, const CoilMapSet& maps,
                        const CaipiPhaseTable& phases, const SamplingMask& inplane_mask,
                        double noise_sigma, std::uint64_t seed, CaipiModulation mod) {
  const int nc = maps.nc(), mb = slices.mb(), ny = slices.ny(), nx = slices.nx();
  if (phases.npe != ny || phases.mb != mb)
    throw std::invalid_argument("caipiForward: phase table shape mismatch");
  if (inplane_mask.npe() != ny)
    throw std::invalid_argument("caipiForward: in-plane mask length must equal N_y");

  KSpaceData ks;
  ks.data = Array3C(nc, ny, nx);
  ks.grid = GridKind::Collapsed;
  ks.base_ny = ny;
  ks.extension_factor = 1;
  ks.mask = inplane_mask;

  const int ncosets = (mod == CaipiModulation::FovShift) ? mb : 1;
  Array2C tmp(ny, nx), spec(ny, nx);
  for (int r = 0; r < ncosets; ++r) {
    // FovShift: lines l with l mod mb == r see the object modulated by the
    // sub-grid ramp exp(-2*pi*i*r*y/(mb*ny)); PhaseOnly uses the plain object.
    for (int c = 0; c < nc; ++c)
      for (int s = 0; s < mb; ++s) {
        for (int y = 0; y < ny; ++y) {
          const Cx ramp =
              (mod == CaipiModulation::FovShift)
                  ? std::polar(1.0, -kTwoPi * r * y / (static_cast<double>(mb) * ny))
                  : Cx(1, 0);
          for (int x = 0; x < nx; ++x)
            tmp(y, x) = maps.maps(c, s, y, x) * slices.data(s, y, x) * ramp;
        }
        fft2c(tmp.data(), spec.data(), ny, nx);
        for (int l = 0; l < ny; ++l) {
          if (ncosets > 1 && l % mb != r) continue;
          const Cx w = std::polar(1.0, phases.at(l, s));
          Cx* dst = ks.data.plane(c) + static_cast<size_t>(l) * nx;
          const Cx* src = spec.data() + static_cast<size_t>(l) * nx;
          for (int x = 0; x < nx; ++x) dst[x] += w * src[x];
        }
      }
  }
  addMaskedNoise(ks, noise_sigma, seed);
  return ks;
}

Cx caipiSmileFactor(int n, int ny, int line) {
  const int mu = line - ny / 2;
  const int r = line % n;
  const int sign_exp = (((n - 1) * mu + r) % 2 + 2) % 2;
  const double s = sign_exp == 0 ? 1.0 : -1.0;
  return Cx(std::sqrt(static_cast<double>(n)) * s, 0.0);
}

}  // namespace smile
