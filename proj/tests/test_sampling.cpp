#include <doctest.h>

#include <cmath>
#include <set>

#include "smile/fft.hpp"
#include "smile/sampling.hpp"
#include "smile/types.hpp"

using namespace smile;

TEST_CASE("uniformMask examples") {
  const auto m = uniformMask(12, 3, 0);
  std::vector<int> idx;
  for (int i = 0; i < 12; ++i)
    if (m.at(i)) idx.push_back(i);
  CHECK(idx == std::vector<int>{0, 3, 6, 9});

  CHECK(uniformMask(12, 1, 0).count() == 12);

  const auto m2 = uniformMask(12, 4, 1);
  std::vector<int> idx2;
  for (int i = 0; i < 12; ++i)
    if (m2.at(i)) idx2.push_back(i);
  CHECK(idx2 == std::vector<int>{1, 5, 9});

  CHECK_THROWS_AS(uniformMask(12, 4, 4), std::invalid_argument);
}

TEST_CASE("budget invariant across generators") {
  for (int npe : {16, 24, 384})
    for (int R : {1, 2, 3, 4, 6, 8}) {
      const int budget = maskBudget(npe, R);
      CHECK(randomMask(npe, R, 7).count() == budget);
      CHECK(poissonMask(npe, R, 7).count() == budget);
      CHECK(cavaMask(npe, R, 0, 7).count() == budget);
      CHECK(budget >= 1);
    }
}

TEST_CASE("maskBudget ties break to floor") {
  CHECK(maskBudget(10, 4) == 2);  // 2.5 -> 2
  CHECK(maskBudget(12, 4) == 3);
  CHECK(maskBudget(13, 4) == 3);  // 3.25 -> 3
  CHECK(maskBudget(15, 4) == 4);  // 3.75 -> 4
}

TEST_CASE("poissonMask keeps the minimum gap") {
  const auto m = poissonMask(16, 4, 5);
  CHECK(!m.gap_fallback);
  std::vector<int> idx;
  for (int i = 0; i < 16; ++i)
    if (m.at(i)) idx.push_back(i);
  for (size_t i = 1; i < idx.size(); ++i) CHECK(idx[i] - idx[i - 1] >= 2);
}

TEST_CASE("random/poisson/cava are deterministic per seed") {
  CHECK(randomMask(64, 4, 9).keep == randomMask(64, 4, 9).keep);
  CHECK(poissonMask(64, 4, 9).keep == poissonMask(64, 4, 9).keep);
  CHECK(cavaMask(64, 4, 2, 9).keep == cavaMask(64, 4, 2, 9).keep);
  CHECK(randomMask(64, 4, 9).keep != randomMask(64, 4, 10).keep);
}

TEST_CASE("R=1 gives a full mask") {
  CHECK(randomMask(20, 1, 3).count() == 20);
  CHECK(poissonMask(20, 1, 3).count() == 20);
}

TEST_CASE("cava: per-frame budgets, no within-frame repeats, coverage") {
  // N_PE=16, R=4, frames 0..7: 4 lines per frame by construction
  std::set<int> seen;
  for (int f = 0; f < 8; ++f) {
    const auto m = cavaMask(16, 4, f, 0);
    CHECK(m.count() == 4);  // no repeats within a frame: count equals budget
    for (int i = 0; i < 16; ++i)
      if (m.at(i)) seen.insert(i);
  }
  CHECK(seen.size() == 16);  // fully sampled time-average

  // consecutive frames are complementary (golden-ratio continuation)
  const auto f0 = cavaMask(16, 4, 0, 0);
  const auto f1 = cavaMask(16, 4, 1, 0);
  int overlap = 0;
  for (int i = 0; i < 16; ++i) overlap += (f0.at(i) && f1.at(i));
  CHECK(overlap <= 1);
}

TEST_CASE("cava: center density exceeds edge density") {
  // aggregate many frames and compare central vs edge occupancy
  std::vector<int> hits(96, 0);
  for (int f = 0; f < 32; ++f) {
    const auto m = cavaMask(96, 4, f, 1);
    for (int i = 0; i < 96; ++i) hits[i] += m.at(i);
  }
  double center = 0, edge = 0;
  for (int i = 0; i < 96; ++i) {
    if (std::abs(i - 48) <= 12)
      center += hits[i];
    else if (std::abs(i - 48) >= 36)
      edge += hits[i];
  }
  CHECK(center / 25.0 > edge / 25.0);
}

TEST_CASE("maskPSF: full mask is a discrete delta") {
  const auto psf = maskPSF(fullMask(32));
  CHECK(std::abs(psf[16] - Cx(1, 0)) < 1e-12);
  for (int i = 0; i < 32; ++i)
    if (i != 16) CHECK(std::abs(psf[i]) < 1e-12);
}

TEST_CASE("maskPSF: uniform R=4 gives 4 equal peaks spaced N/4") {
  const auto psf = maskPSF(uniformMask(64, 4, 0));
  int peaks = 0;
  for (int i = 0; i < 64; ++i) {
    if (std::abs(psf[i]) > 0.5) {
      ++peaks;
      CHECK(std::abs(std::abs(psf[i]) - 1.0) < 1e-12);
      CHECK((i - 32) % 16 == 0);
    } else {
      CHECK(std::abs(psf[i]) < 1e-12);
    }
  }
  CHECK(peaks == 4);
}

TEST_CASE("PSF main lobe carries the sample count") {
  // before normalization the center of the PSF is count/sqrt(N)
  for (int R : {2, 3, 5}) {
    const auto m = randomMask(64, R, 11);
    std::vector<Cx> in(64), out(64);
    for (int i = 0; i < 64; ++i) in[i] = m.at(i) ? Cx(1, 0) : Cx(0, 0);
    ifft1c(in.data(), out.data(), 64);
    CHECK(std::abs(out[32] - Cx(m.count() / 8.0, 0)) < 1e-12);
  }
}

TEST_CASE("psfSideLobes classifies uniform vs scattered masks") {
  const auto uni = psfSideLobes(maskPSF(uniformMask(384, 4, 0)));
  CHECK(uni.dominant == 3);  // R-1 alias lobes
  const auto rnd = psfSideLobes(maskPSF(randomMask(384, 6, 3)));
  CHECK(rnd.dominant == 0);  // diffuse pedestal only
  CHECK(rnd.max_side < 0.5);
}

TEST_CASE("gaOptimize: generations=0 returns the best seed") {
  auto fitness = [](const SamplingMask& m) {
    // prefer masks whose first sampled index is late
    for (int i = 0; i < m.npe(); ++i)
      if (m.at(i)) return static_cast<double>(-i);
    return 0.0;
  };
  std::vector<SamplingMask> seeds;
  for (int off = 0; off < 4; ++off) seeds.push_back(uniformMask(16, 4, off));
  GAConfig cfg;
  cfg.population = 8;
  cfg.generations = 0;
  cfg.seed = 1;
  const auto res = gaOptimize(cfg, fitness, seeds);
  double best = 1e9;
  for (const auto& s : seeds) best = std::min(best, fitness(s));
  CHECK(res.best_fitness == best);
}

TEST_CASE("gaOptimize: trace is non-increasing and budget is preserved") {
  auto fitness = [](const SamplingMask& m) {
    // smooth synthetic objective: distance of the sample comb from uniform
    double f = 0;
    int prev = -1;
    for (int i = 0; i < m.npe(); ++i)
      if (m.at(i)) {
        if (prev >= 0) f += std::abs((i - prev) - 4.0);
        prev = i;
      }
    return f;
  };
  std::vector<SamplingMask> seeds{randomMask(32, 4, 1), randomMask(32, 4, 2),
                                  poissonMask(32, 4, 3), cavaMask(32, 4, 0, 4)};
  GAConfig cfg;
  cfg.population = 12;
  cfg.generations = 15;
  cfg.seed = 5;
  const auto res = gaOptimize(cfg, fitness, seeds);
  REQUIRE(res.best_fitness_trace.size() == 16);
  for (size_t i = 1; i < res.best_fitness_trace.size(); ++i)
    CHECK(res.best_fitness_trace[i] <= res.best_fitness_trace[i - 1]);
  CHECK(res.best.count() == maskBudget(32, 4));
  CHECK(res.best_fitness <= fitness(seeds[0]));

  // determinism
  const auto res2 = gaOptimize(cfg, fitness, seeds);
  CHECK(res2.best.keep == res.best.keep);
}

TEST_CASE("gaOptimize: non-finite fitness is ranked worst; all-bad seeds abort") {
  int calls = 0;
  auto fitness = [&calls](const SamplingMask& m) {
    ++calls;
    if (m.at(0)) return std::numeric_limits<double>::quiet_NaN();
    return 1.0;
  };
  std::vector<SamplingMask> seeds{uniformMask(16, 4, 0), uniformMask(16, 4, 1)};
  GAConfig cfg;
  cfg.population = 6;
  cfg.generations = 2;
  cfg.seed = 2;
  const auto res = gaOptimize(cfg, fitness, seeds);
  CHECK(!res.best.at(0));

  auto all_bad = [](const SamplingMask&) { return std::numeric_limits<double>::infinity(); };
  CHECK_THROWS_AS(gaOptimize(cfg, all_bad, seeds), std::runtime_error);
}
