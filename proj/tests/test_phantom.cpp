#include <doctest.h>

#include "smile/fft.hpp"
#include "smile/phantom.hpp"
#include "smile/reference.hpp"
#include "smile/rng.hpp"

using namespace smile;

namespace {
double relStackDiff(const SliceStack& a, const SliceStack& b) {
  double num = 0, den = 0;
  for (size_t i = 0; i < a.data.size(); ++i) {
    num += std::norm(a.data.data()[i] - b.data.data()[i]);
    den += std::norm(a.data.data()[i]);
  }
  return std::sqrt(num / den);
}
}  // namespace

TEST_CASE("phantom: normalization, determinism, zero border") {
  PhantomSpec spec;
  spec.ny = spec.nx = 64;
  spec.mb = 1;
  spec.seed = 0;
  const SliceStack p = makePhantom(spec);
  double mx = 0;
  for (size_t i = 0; i < p.data.size(); ++i) mx = std::max(mx, std::abs(p.data.data()[i]));
  CHECK(mx == doctest::Approx(1.0));

  const SliceStack p2 = makePhantom(spec);
  CHECK(relStackDiff(p, p2) == 0.0);

  for (int y = 0; y < 64; ++y)
    for (int x = 0; x < 64; ++x)
      if (y < 2 || y >= 62 || x < 2 || x >= 62) CHECK(std::abs(p.data(0, y, x)) == 0.0);
}

TEST_CASE("phantom: slices and seeds differ") {
  PhantomSpec spec;
  spec.ny = spec.nx = 64;
  spec.mb = 3;
  spec.seed = 0;
  const SliceStack a = makePhantom(spec);
  spec.seed = 1;
  const SliceStack b = makePhantom(spec);
  CHECK(relStackDiff(a, b) >= 0.05);

  // pairwise slice difference
  for (int s = 0; s < 3; ++s)
    for (int t = s + 1; t < 3; ++t) {
      double num = 0, den = 0;
      for (int y = 0; y < 64; ++y)
        for (int x = 0; x < 64; ++x) {
          num += std::norm(a.data(s, y, x) - a.data(t, y, x));
          den += std::norm(a.data(s, y, x));
        }
      CHECK(std::sqrt(num / den) >= 0.05);
    }
}

TEST_CASE("phantom: ring-and-disks style works and differs from ellipses") {
  PhantomSpec spec;
  spec.ny = spec.nx = 48;
  spec.mb = 2;
  spec.style = PhantomStyle::RingAndDisks;
  const SliceStack p = makePhantom(spec);
  double mx = 0;
  for (size_t i = 0; i < p.data.size(); ++i) mx = std::max(mx, std::abs(p.data.data()[i]));
  CHECK(mx == doctest::Approx(1.0));
}

TEST_CASE("coil maps: exact band limitation and independence") {
  CoilSpec spec;
  spec.nc = 4;
  spec.cx = spec.cy = 5;
  spec.seed = 3;
  const CoilMapSet maps = makeCoilMaps(spec, 2, 32, 32);
  CHECK(maps.support_cx == 5);

  // out-of-support spectral energy is zero to machine precision
  Array2C img(32, 32), k(32, 32);
  for (int c = 0; c < 4; ++c)
    for (int s = 0; s < 2; ++s) {
      for (int y = 0; y < 32; ++y)
        for (int x = 0; x < 32; ++x) img(y, x) = maps.maps(c, s, y, x);
      fft2c(img.data(), k.data(), 32, 32);
      double inside = 0, outside = 0;
      for (int y = 0; y < 32; ++y)
        for (int x = 0; x < 32; ++x) {
          const bool in = y >= 16 - 2 && y <= 16 + 2 && x >= 16 - 2 && x <= 16 + 2;
          (in ? inside : outside) += std::norm(k(y, x));
        }
      CHECK(outside <= 1e-24 * inside);
    }
}

TEST_CASE("coil maps: similarity endpoints") {
  CoilSpec spec;
  spec.nc = 3;
  spec.cx = spec.cy = 5;
  spec.similarity = 1.0;
  const CoilMapSet same = makeCoilMaps(spec, 3, 24, 24);
  for (int c = 0; c < 3; ++c)
    for (int s = 1; s < 3; ++s)
      for (int y = 0; y < 24; ++y)
        for (int x = 0; x < 24; ++x)
          CHECK(same.maps(c, s, y, x) == same.maps(c, 0, y, x));

  spec.similarity = 0.0;
  const CoilMapSet diff = makeCoilMaps(spec, 2, 24, 24);
  double d = 0;
  for (int y = 0; y < 24; ++y)
    for (int x = 0; x < 24; ++x) d += std::abs(diff.maps(0, 0, y, x) - diff.maps(0, 1, y, x));
  CHECK(d > 1e-3);
}

TEST_CASE("coil maps: infeasible coil count is rejected") {
  CoilSpec spec;
  spec.nc = 8;
  spec.cx = spec.cy = 2;  // 4 < 8
  CHECK_THROWS_AS(makeCoilMaps(spec, 1, 16, 16), std::invalid_argument);
}

TEST_CASE("matched-filter reference: identity, scale invariance, oracle") {
  PhantomSpec ps;
  ps.ny = ps.nx = 32;
  ps.mb = 1;
  SliceStack slice = makePhantom(ps);

  // single coil with map == 1
  CoilMapSet one(2, 1, 32, 32);
  for (int c = 0; c < 2; ++c)
    for (int y = 0; y < 32; ++y)
      for (int x = 0; x < 32; ++x) one.maps(c, 0, y, x) = Cx(c == 0 ? 1 : 0.5, 0);
  const SliceStack ref1 = sumOfSquaresReference(slice, one);
  for (int y = 0; y < 32; ++y)
    for (int x = 0; x < 32; ++x)
      CHECK(std::abs(ref1.data(0, y, x)) ==
            doctest::Approx(std::abs(slice.data(0, y, x))).epsilon(1e-12));

  // scaling all maps by 2 leaves the reference unchanged
  CoilSpec cs;
  cs.nc = 2;
  cs.cx = cs.cy = 5;
  CoilMapSet maps = makeCoilMaps(cs, 1, 32, 32);
  const SliceStack r1 = sumOfSquaresReference(slice, maps);
  for (size_t i = 0; i < maps.maps.size(); ++i) maps.maps.data()[i] *= 2.0;
  const SliceStack r2 = sumOfSquaresReference(slice, maps);
  for (size_t i = 0; i < r1.data.size(); ++i)
    CHECK(std::abs(r1.data.data()[i] - r2.data.data()[i]) < 1e-12);

  // brute-force per-pixel formula
  Array3C coil(2, 32, 32);
  for (int c = 0; c < 2; ++c)
    for (int y = 0; y < 32; ++y)
      for (int x = 0; x < 32; ++x) coil(c, y, x) = maps.maps(c, 0, y, x) * slice.data(0, y, x);
  const Array2C direct = ref::matchedFilterDirect(coil, maps.maps, 0);
  const Array2C prod = matchedFilterCombine(coil, maps, 0);
  for (size_t i = 0; i < direct.size(); ++i)
    CHECK(std::abs(direct.data()[i] - prod.data()[i]) < 1e-12);
}
