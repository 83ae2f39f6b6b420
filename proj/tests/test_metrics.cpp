#include <doctest.h>

#include "smile/metrics.hpp"
#include "smile/model.hpp"
#include "smile/phantom.hpp"
#include "smile/reference.hpp"
#include "smile/rng.hpp"
#include "smile/sampling.hpp"

using namespace smile;

namespace {
SliceStack phantom3(int ny = 48, int nx = 48, int mb = 1) {
  PhantomSpec ps;
  ps.ny = ny;
  ps.nx = nx;
  ps.mb = mb;
  return makePhantom(ps);
}
}  // namespace

TEST_CASE("ser: exact match caps, zero recon gives 0 dB, 10% error gives 20 dB") {
  SliceStack ref = phantom3();
  CHECK(ser(ref, ref) == kSerCapDb);

  SliceStack zero(1, 48, 48);
  CHECK(ser(ref, zero) == doctest::Approx(0.0).epsilon(1e-12));

  // recon = ref + e with |e| = |ref|/10 pointwise on the support
  SliceStack off(1, 48, 48);
  for (size_t i = 0; i < ref.data.size(); ++i)
    off.data.data()[i] = ref.data.data()[i] * 1.1;
  CHECK(ser(ref, off) == doctest::Approx(20.0).epsilon(1e-9));

  CHECK_THROWS_AS(ser(zero, zero), std::invalid_argument);
}

TEST_CASE("ser and ssim ignore a global complex phase of the recon") {
  SliceStack ref = phantom3();
  SliceStack rot(1, 48, 48);
  const Cx ph = std::polar(1.0, 1.234);
  for (size_t i = 0; i < ref.data.size(); ++i) rot.data.data()[i] = ref.data.data()[i] * ph;
  CHECK(ser(ref, rot) == kSerCapDb);
  CHECK(ssimPerSlice(ref, rot)[0] == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("ssim: identical images, inverted phantom, constant shift") {
  SliceStack ref = phantom3();
  Array2R a(48, 48);
  for (int y = 0; y < 48; ++y)
    for (int x = 0; x < 48; ++x) a(y, x) = std::abs(ref.data(0, y, x));

  CHECK(ssim(a, a) == doctest::Approx(1.0));

  Array2R inv(48, 48);
  for (int y = 0; y < 48; ++y)
    for (int x = 0; x < 48; ++x) inv(y, x) = 1.0 - a(y, x);
  CHECK(ssim(a, inv) < 0.5);

  Array2R scaled(48, 48), shifted(48, 48);
  for (int y = 0; y < 48; ++y)
    for (int x = 0; x < 48; ++x) {
      scaled(y, x) = 0.6 * a(y, x);
      shifted(y, x) = scaled(y, x) + 0.3;  // stays inside [0, 1]
    }
  const SsimStats st = ssimStats(scaled, shifted);
  CHECK(st.luminance < 1.0);
  CHECK(st.structure > 0.999999);

  Array2R small(4, 4);
  CHECK_THROWS_AS(ssim(small, small, 7), std::invalid_argument);
}

TEST_CASE("ssim matches the reference implementation on full support") {
  Array2R a(24, 24), b(24, 24);
  for (int y = 0; y < 24; ++y)
    for (int x = 0; x < 24; ++x) {
      a(y, x) = 0.5 + 0.3 * std::sin(0.3 * y) * std::cos(0.2 * x);
      b(y, x) = a(y, x) + 0.05 * std::sin(0.9 * (y + x));
    }
  const double prod = ssimStats(a, b, 7, 0.01, 0.03, 1.0, 0.0).ssim;
  const double refv = ref::ssimDirect(a, b, 7, 0.01, 0.03, 1.0);
  CHECK(prod == doctest::Approx(refv).epsilon(1e-10));
}

TEST_CASE("errorMap: zeros for identical inputs, scale recorded") {
  SliceStack ref = phantom3();
  const ErrorMaps em = errorMap(ref, ref, 1.24);
  CHECK(em.scale == 1.24);
  CHECK(em.maps[0].max() == 0.0);
}

TEST_CASE("errorMap is consistent with ser on a 2-pixel toy") {
  SliceStack a(1, 2, 2), b(1, 2, 2);
  a.data(0, 0, 0) = Cx(1, 0);
  a.data(0, 0, 1) = Cx(1, 0);
  b.data(0, 0, 0) = Cx(0.9, 0);
  b.data(0, 0, 1) = Cx(1.1, 0);
  const ErrorMaps em = errorMap(a, b);
  CHECK(em.maps[0](0, 0) == doctest::Approx(0.1));
  CHECK(em.maps[0](0, 1) == doctest::Approx(0.1));
  // ser = 20*log10(sqrt(2)/sqrt(0.02)) = 20 dB over the support
  CHECK(ser(a, b, 0.0) == doctest::Approx(20.0).epsilon(1e-6));
}

TEST_CASE("leakage: MB=1 trivially gives [[1]]; unbiased pipeline is identity") {
  SliceStack content = phantom3(32, 32, 1);
  auto identity = [](const SliceStack& s) { return s; };
  const auto L1 = leakageMatrix(identity, content);
  REQUIRE(L1.size() == 1);
  CHECK(L1[0][0] == doctest::Approx(1.0));

  SliceStack content3 = phantom3(32, 32, 3);
  const auto L3 = leakageMatrix(identity, content3);
  for (int s = 0; s < 3; ++s)
    for (int t = 0; t < 3; ++t) {
      if (s == t)
        CHECK(L3[s][t] == doctest::Approx(1.0));
      else
        CHECK(L3[s][t] == 0.0);
    }

  SliceStack empty(2, 32, 32);
  CHECK_THROWS_AS(leakageMatrix(identity, empty), std::runtime_error);
}

TEST_CASE("gFactorPseudoReplica: R=1 sanity and trial-count stability") {
  // small SENSE geometry
  PhantomSpec ps;
  ps.ny = ps.nx = 24;
  ps.mb = 2;
  const SliceStack ph = makePhantom(ps);
  CoilSpec cs;
  cs.nc = 4;
  cs.cx = cs.cy = 5;
  const CoilMapSet maps = makeCoilMaps(cs, 2, 24, 24);
  const auto geom = makeSenseGeometry(maps, 2, uniformOffsets(2, 24));
  Array2R support(48, 24);
  const SliceStack ref = sumOfSquaresReference(ph, maps);
  for (int s = 0; s < 2; ++s)
    for (int y = 0; y < 24; ++y)
      for (int x = 0; x < 24; ++x) support(s * 24 + y, x) = std::abs(ref.data(s, y, x));

  SenseGFactorSetup setup;
  setup.geom = &geom;
  setup.mask = fullMask(48);
  setup.mask.R = 1;
  setup.support = support;
  const GFactorMap g1 = senseGFactor(setup, 64, 3);
  CHECK(g1.mean_g > 0.9);
  CHECK(g1.mean_g < 1.1);

  // deterministic per seed
  const GFactorMap g1b = senseGFactor(setup, 64, 3);
  CHECK(g1b.mean_g == g1.mean_g);

  // accelerated case: doubling trials moves the mean by < 10%
  setup.mask = uniformMask(48, 2, 0);
  setup.allow_unfold = false;
  setup.cg_iters = 20;
  const GFactorMap g32 = senseGFactor(setup, 32, 4);
  const GFactorMap g64 = senseGFactor(setup, 64, 4);
  CHECK(std::abs(g64.mean_g - g32.mean_g) / g64.mean_g < 0.10);
}

TEST_CASE("gFactorPseudoReplica: failing trials are dropped, too many fail hard") {
  Array2R support(8, 8);
  for (int y = 0; y < 8; ++y)
    for (int x = 0; x < 8; ++x) support(y, x) = 1.0;
  int calls = 0;
  auto flaky = [&calls](std::uint64_t ts) {
    Array2C u(8, 8);
    if (ts % 10 == 0) throw std::runtime_error("boom");
    for (size_t i = 0; i < u.size(); ++i) u.data()[i] = gaussianAt(hashKey(ts, i));
    return u;
  };
  auto good = [](std::uint64_t ts) {
    Array2C u(8, 8);
    for (size_t i = 0; i < u.size(); ++i) u.data()[i] = gaussianAt(hashKey(ts, i));
    return u;
  };
  const auto g = gFactorPseudoReplica(flaky, good, 2, 16, 5, support, 0.0);
  CHECK(g.trials == 16);
  (void)calls;

  auto always_bad = [](std::uint64_t) -> Array2C { throw std::runtime_error("nope"); };
  CHECK_THROWS_AS(gFactorPseudoReplica(always_bad, good, 2, 8, 5, support, 0.0),
                  std::runtime_error);
}

TEST_CASE("metrics report CSV has per-slice rows plus aggregate") {
  SliceStack ref = phantom3(32, 32, 3);
  const MetricsReport rep = computeMetrics(ref, ref);
  REQUIRE(rep.ser_per_slice.size() == 3);
  CHECK(rep.ser_aggregate == kSerCapDb);
  CHECK(rep.ssim_mean == doctest::Approx(1.0));
}
