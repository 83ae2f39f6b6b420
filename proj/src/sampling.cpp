#include "smile/sampling.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>

#include "smile/fft.hpp"
#include "smile/parallel.hpp"
#include "smile/rng.hpp"

namespace smile {

namespace {
constexpr double kTwoPi = 6.283185307179586476925286766559;
constexpr double kGolden = 0.61803398874989484820458683436564;

SamplingMask fromIndices(int npe, const std::vector<int>& idx) {
  SamplingMask m;
  m.keep.assign(npe, 0);
  for (int i : idx) m.keep[i] = 1;
  return m;
}
}  // namespace

SamplingMask fullMask(int npe) {
  SamplingMask m;
  m.keep.assign(npe, 1);
  m.R = 1;
  m.generator = MaskGenerator::Full;
  return m;
}

SamplingMask uniformMask(int npe, int R, int offset) {
  if (R < 1 || R > npe) throw std::invalid_argument("uniformMask: need 1 <= R <= N_PE");
  if (offset < 0 || offset >= R) throw std::invalid_argument("uniformMask: need 0 <= offset < R");
  SamplingMask m;
  m.keep.assign(npe, 0);
  for (int i = offset; i < npe; i += R) m.keep[i] = 1;
  m.R = R;
  m.offset = offset;
  m.generator = MaskGenerator::Uniform;
  return m;
}

SamplingMask randomMask(int npe, int R, std::uint64_t seed) {
  const int budget = maskBudget(npe, R);
  auto rng = sequentialRng(hashKey(seed, 0x72616E64ULL));
  std::vector<int> all(npe);
  std::iota(all.begin(), all.end(), 0);
  for (int i = 0; i < budget; ++i) {
    std::uniform_int_distribution<int> pick(i, npe - 1);
    std::swap(all[i], all[pick(rng)]);
  }
  auto m = fromIndices(npe, std::vector<int>(all.begin(), all.begin() + budget));
  m.R = R;
  m.seed = seed;
  m.generator = MaskGenerator::Random;
  return m;
}

SamplingMask poissonMask(int npe, int R, std::uint64_t seed) {
  const int budget = maskBudget(npe, R);
  int gap = R / 2;
  bool fallback = false;
  // largest feasible minimum gap for this budget
  if (gap > 0 && static_cast<long long>(budget) * (gap + 1) > npe) {
    gap = npe / budget - 1;
    if (gap < 0) gap = 0;
    fallback = true;
  }
  auto rng = sequentialRng(hashKey(seed, 0x706F6973ULL));
  const double stride = static_cast<double>(npe) / budget;
  std::vector<int> idx(budget);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  // jittered stride: floor(i*stride + u) with u in [0, stride - gap + 1)
  // keeps consecutive samples at least `gap` apart
  const double jitter_room = stride - gap + 1;
  for (int i = 0; i < budget; ++i) {
    double j = jitter_room > 0 ? u(rng) * jitter_room : 0.0;
    idx[i] = std::min(npe - 1, static_cast<int>(std::floor(i * stride + j)));
  }
  // remove accidental duplicates (possible only in degenerate geometries)
  std::sort(idx.begin(), idx.end());
  idx.erase(std::unique(idx.begin(), idx.end()), idx.end());
  while (static_cast<int>(idx.size()) < budget) {
    std::uniform_int_distribution<int> pick(0, npe - 1);
    int c = pick(rng);
    if (!std::binary_search(idx.begin(), idx.end(), c)) {
      idx.insert(std::upper_bound(idx.begin(), idx.end(), c), c);
      fallback = true;
    }
  }
  auto m = fromIndices(npe, idx);
  m.R = R;
  m.seed = seed;
  m.gap_fallback = fallback;
  m.generator = MaskGenerator::Poisson;
  return m;
}

SamplingMask cavaMask(int npe, int R, int frame, std::uint64_t seed) {
  if (R < 1 || R > npe) throw std::invalid_argument("cavaMask: need 1 <= R <= N_PE");
  const int budget = maskBudget(npe, R);
  const double warp = 0.6;
  const double s0 = std::fmod(static_cast<double>(seed % 997) * kGolden, 1.0);
  SamplingMask m;
  m.keep.assign(npe, 0);
  long long t = static_cast<long long>(frame) * budget;
  for (int j = 0; j < budget; ++j, ++t) {
    double p = std::fmod((t + 1) * kGolden + s0, 1.0);
    double w = std::fmod(p + warp * std::sin(kTwoPi * p) / kTwoPi + 1.0, 1.0);
    int idx = static_cast<int>(std::floor(w * npe)) % npe;
    for (int d = 0;; ++d) {
      const int up = (idx + d) % npe;
      if (!m.keep[up]) {
        m.keep[up] = 1;
        break;
      }
      const int dn = ((idx - d) % npe + npe) % npe;
      if (!m.keep[dn]) {
        m.keep[dn] = 1;
        break;
      }
    }
  }
  m.R = R;
  m.seed = seed;
  m.frame = frame;
  m.generator = MaskGenerator::Cava;
  return m;
}

std::vector<Cx> maskPSF(const SamplingMask& mask) {
  const int n = mask.npe();
  std::vector<Cx> in(n), out(n);
  for (int i = 0; i < n; ++i) in[i] = mask.at(i) ? Cx(1, 0) : Cx(0, 0);
  ifft1c(in.data(), out.data(), n);
  const Cx main = out[n / 2];
  const double mm = std::abs(main);
  if (mm > 0)
    for (auto& v : out) v /= mm;
  return out;
}

PsfSideLobes psfSideLobes(const std::vector<Cx>& psf, double visibility, double dominance) {
  const int n = static_cast<int>(psf.size());
  const int center = n / 2;
  std::vector<double> a(n);
  for (int i = 0; i < n; ++i) a[i] = std::abs(psf[i]);
  PsfSideLobes out;
  for (int i = 0; i < n; ++i) {
    if (std::abs(i - center) <= 1) continue;  // main lobe and shoulders
    const double left = a[(i - 1 + n) % n], right = a[(i + 1) % n];
    if (a[i] < left || a[i] < right) continue;  // circular local maximum
    out.max_side = std::max(out.max_side, a[i]);
    if (a[i] >= visibility) ++out.visible;
    if (a[i] >= dominance) {
      ++out.dominant;
      out.dominant_positions.push_back(i);
    }
  }
  return out;
}

namespace {

using Indices = std::vector<int>;  // sorted sampled indices

Indices maskIndices(const SamplingMask& m) {
  Indices v;
  for (int i = 0; i < m.npe(); ++i)
    if (m.at(i)) v.push_back(i);
  return v;
}

// One-point crossover on the sorted index sets, then repair to the exact
// budget by random removal/addition.
Indices crossover(const Indices& a, const Indices& b, int npe, std::mt19937_64& rng) {
  const int budget = static_cast<int>(a.size());
  std::uniform_int_distribution<int> cutd(1, budget - 1);
  const int cut = budget > 1 ? cutd(rng) : 1;
  std::vector<std::uint8_t> keep(npe, 0);
  for (int i = 0; i < cut; ++i) keep[a[i]] = 1;
  for (int i = cut; i < budget; ++i) keep[b[i]] = 1;
  Indices child;
  for (int i = 0; i < npe; ++i)
    if (keep[i]) child.push_back(i);
  // repair
  while (static_cast<int>(child.size()) > budget) {
    std::uniform_int_distribution<int> pick(0, static_cast<int>(child.size()) - 1);
    child.erase(child.begin() + pick(rng));
  }
  while (static_cast<int>(child.size()) < budget) {
    std::uniform_int_distribution<int> pick(0, npe - 1);
    const int c = pick(rng);
    if (!keep[c]) {
      keep[c] = 1;
      child.insert(std::upper_bound(child.begin(), child.end(), c), c);
    }
  }
  return child;
}

// Swap mutation: move sampled indices to free positions.
void mutate(Indices& ind, int npe, double rate, std::mt19937_64& rng) {
  std::vector<std::uint8_t> keep(npe, 0);
  for (int i : ind) keep[i] = 1;
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::uniform_int_distribution<int> pick(0, npe - 1);
  bool changed = false;
  for (auto& i : ind) {
    if (u(rng) >= rate) continue;
    for (int tries = 0; tries < 64; ++tries) {
      const int c = pick(rng);
      if (!keep[c]) {
        keep[i] = 0;
        keep[c] = 1;
        i = c;
        changed = true;
        break;
      }
    }
  }
  if (changed) std::sort(ind.begin(), ind.end());
}

}  // namespace

GAResult gaOptimize(const GAConfig& cfg, const std::function<double(const SamplingMask&)>& fitness,
                    const std::vector<SamplingMask>& seeds) {
  if (cfg.population < 4) throw std::invalid_argument("gaOptimize: population must be >= 4");
  if (cfg.generations < 0) throw std::invalid_argument("gaOptimize: generations must be >= 0");
  if (cfg.elitism_count < 1) throw std::invalid_argument("gaOptimize: elitism_count must be >= 1");
  if (seeds.empty()) throw std::invalid_argument("gaOptimize: need at least one seed mask");
  const int npe = seeds.front().npe();
  const int R = seeds.front().R;
  const int budget = seeds.front().count();
  for (const auto& s : seeds)
    if (s.npe() != npe || s.R != R || s.count() != budget)
      throw std::invalid_argument("gaOptimize: seed masks must share N_PE, R and budget");

  auto rng = sequentialRng(hashKey(cfg.seed, 0x6761ULL));

  std::vector<Indices> pop;
  for (const auto& s : seeds) {
    pop.push_back(maskIndices(s));
    if (static_cast<int>(pop.size()) == cfg.population) break;
  }
  // fill the remaining population with budget-preserving mutants of the seeds
  int k = 0;
  while (static_cast<int>(pop.size()) < cfg.population) {
    Indices ind = pop[k++ % seeds.size()];
    mutate(ind, npe, 0.25, rng);
    pop.push_back(std::move(ind));
  }

  SamplingMask proto;
  proto.keep.assign(npe, 0);
  proto.R = R;
  proto.generator = MaskGenerator::Ga;
  proto.seed = cfg.seed;
  auto toMask = [&](const Indices& ind) {
    SamplingMask m = proto;
    std::fill(m.keep.begin(), m.keep.end(), 0);
    for (int i : ind) m.keep[i] = 1;
    return m;
  };

  std::map<Indices, double> cache;
  int evaluations = 0;
  auto evalAll = [&](const std::vector<Indices>& inds) {
    std::vector<double> fit(inds.size());
    std::vector<int> todo;
    for (size_t i = 0; i < inds.size(); ++i) {
      auto it = cache.find(inds[i]);
      if (it != cache.end())
        fit[i] = it->second;
      else
        todo.push_back(static_cast<int>(i));
    }
    std::vector<double> fresh(todo.size());
    parallelFor(static_cast<std::int64_t>(todo.size()), [&](std::int64_t j) {
      double v;
      try {
        v = fitness(toMask(inds[todo[j]]));
      } catch (const std::exception&) {
        v = std::numeric_limits<double>::infinity();
      }
      fresh[j] = std::isfinite(v) ? v : std::numeric_limits<double>::infinity();
    });
    for (size_t j = 0; j < todo.size(); ++j) {
      cache[inds[todo[j]]] = fresh[j];
      fit[todo[j]] = fresh[j];
      ++evaluations;
    }
    return fit;
  };

  auto fit = evalAll(pop);
  auto rank = [&](const std::vector<Indices>& p, const std::vector<double>& f) {
    std::vector<int> order(p.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int i, int j) {
      if (f[i] != f[j]) return f[i] < f[j];
      return p[i] < p[j];  // deterministic tie-break: lexicographic mask order
    });
    return order;
  };

  auto order = rank(pop, fit);
  if (!std::isfinite(fit[order[0]]))
    throw std::runtime_error("gaOptimize: no seed individual has finite fitness");

  GAResult res;
  Indices best_ind = pop[order[0]];
  double best_fit = fit[order[0]];
  res.best_fitness_trace.push_back(best_fit);

  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int gen = 0; gen < cfg.generations; ++gen) {
    std::vector<Indices> next;
    for (int e = 0; e < cfg.elitism_count && e < cfg.population; ++e) next.push_back(pop[order[e]]);
    auto tournament = [&]() -> const Indices& {
      std::uniform_int_distribution<int> pick(0, cfg.population - 1);
      const int a = pick(rng), b = pick(rng);
      const bool a_better =
          fit[a] < fit[b] || (fit[a] == fit[b] && pop[a] <= pop[b]);
      return pop[a_better ? a : b];
    };
    while (static_cast<int>(next.size()) < cfg.population) {
      Indices child;
      if (u(rng) < cfg.crossover_rate) {
        child = crossover(tournament(), tournament(), npe, rng);
      } else {
        child = tournament();
      }
      mutate(child, npe, cfg.mutation_rate, rng);
      if (static_cast<int>(child.size()) != budget)
        throw std::logic_error("gaOptimize: operator broke the sample budget");
      next.push_back(std::move(child));
    }
    pop = std::move(next);
    fit = evalAll(pop);
    order = rank(pop, fit);
    if (!std::isfinite(fit[order[0]]))
      throw std::runtime_error("gaOptimize: generation collapsed to non-finite fitness");
    if (fit[order[0]] < best_fit ||
        (fit[order[0]] == best_fit && pop[order[0]] < best_ind)) {
      best_fit = fit[order[0]];
      best_ind = pop[order[0]];
    }
    res.best_fitness_trace.push_back(best_fit);
  }

  res.best = toMask(best_ind);
  res.best_fitness = best_fit;
  res.evaluations = evaluations;
  return res;
}

}  // namespace smile
