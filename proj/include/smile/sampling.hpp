#pragma once

#include <functional>

#include "smile/types.hpp"

namespace smile {

SamplingMask fullMask(int npe);

/// Keeps indices congruent to offset modulo R.
SamplingMask uniformMask(int npe, int R, int offset = 0);

/// Exact-budget sample without replacement.
SamplingMask randomMask(int npe, int R, std::uint64_t seed);

/// Jittered-stride pattern with a minimum gap of floor(R/2) between samples;
/// if the gap is infeasible for the budget the largest feasible gap is used
/// and gap_fallback is set.
SamplingMask poissonMask(int npe, int R, std::uint64_t seed);

// CAVA golden-ratio variable-density pattern. Single source of truth for the
// index sequence: with g = (sqrt(5)-1)/2, warp a = 0.6 and a global sample
// counter t = frame*budget + j (j = 0..budget-1),
//   p = frac((t+1)*g + frac((seed mod 997)*g))
//   w = frac(p + a*sin(2*pi*p)/(2*pi))       (densifies the k-space center)
//   index = floor(w*N_PE), collisions resolved by the nearest free slot,
//           probing index+d before index-d for d = 0,1,2,...
// Consecutive frames continue the golden sequence, so they fill
// complementary lines and the union over enough frames covers every index.
SamplingMask cavaMask(int npe, int R, int frame, std::uint64_t seed);

/// Centered inverse DFT of the 0/1 mask, main lobe normalized to 1.
std::vector<Cx> maskPSF(const SamplingMask& mask);

/// Side-lobe structure of |PSF|: local maxima (circular) outside the main
/// lobe. `visible` counts lobes >= visibility*main, `dominant` counts lobes
/// >= dominance*main.
struct PsfSideLobes {
  double max_side = 0;
  int visible = 0;
  int dominant = 0;
  std::vector<int> dominant_positions;
};
PsfSideLobes psfSideLobes(const std::vector<Cx>& psf, double visibility = 0.10,
                          double dominance = 0.50);

struct GAConfig {
  int population = 50;
  int generations = 50;
  double mutation_rate = 0.08;
  double crossover_rate = 0.9;
  int elitism_count = 2;
  int fitness_trials = 16;
  std::uint64_t seed = 0;
};

struct GAResult {
  SamplingMask best;
  double best_fitness = 0;
  std::vector<double> best_fitness_trace;  // best-ever after each generation
  int evaluations = 0;
};

/// Fixed-budget genetic search. One-point crossover on the sorted index set
/// with random add/remove budget repair, per-index swap mutation, elitism.
/// Deterministic for a given seed; fitness results are gathered by index, so
/// parallel fitness evaluation cannot change the outcome. Individuals with
/// non-finite fitness rank worst; a generation with no finite fitness aborts.
GAResult gaOptimize(const GAConfig& cfg, const std::function<double(const SamplingMask&)>& fitness,
                    const std::vector<SamplingMask>& seeds);

}  // namespace smile
