#include "smile/metrics.hpp"

#include <cmath>
#include <limits>
#include <sstream>
#include <memory>

#include "smile/fft.hpp"
#include "smile/sampling.hpp"
#include "smile/io.hpp"
#include "smile/parallel.hpp"
#include "smile/rng.hpp"

namespace smile {

namespace {

void checkSameShape(const SliceStack& a, const SliceStack& b, const char* who) {
  if (a.mb() != b.mb() || a.ny() != b.ny() || a.nx() != b.nx())
    throw std::invalid_argument(std::string(who) + ": shape mismatch");
}

}  // namespace

double ser(const SliceStack& reference, const SliceStack& recon, double support_threshold) {
  checkSameShape(reference, recon, "ser");
  double ref_max = 0;
  for (size_t i = 0; i < reference.data.size(); ++i)
    ref_max = std::max(ref_max, std::abs(reference.data.data()[i]));
  if (ref_max <= 0) throw std::invalid_argument("ser: zero reference");
  const double thr = support_threshold * ref_max;
  double num = 0, den = 0;
  for (size_t i = 0; i < reference.data.size(); ++i) {
    const double r = std::abs(reference.data.data()[i]);
    if (r <= thr) continue;
    const double e = r - std::abs(recon.data.data()[i]);
    num += r * r;
    den += e * e;
  }
  if (num <= 0) throw std::invalid_argument("ser: empty support");
  if (den <= 0) return kSerCapDb;
  const double db = 10.0 * std::log10(num / den);
  return std::min(db, kSerCapDb);
}

SsimStats ssimStats(const Array2R& reference, const Array2R& recon, int window, double k1,
                    double k2, double L, double support_threshold) {
  const int ny = reference.ny(), nx = reference.nx();
  if (recon.ny() != ny || recon.nx() != nx) throw std::invalid_argument("ssim: shape mismatch");
  if (window > ny || window > nx) throw std::invalid_argument("ssim: window larger than image");
  const double C1 = (k1 * L) * (k1 * L);
  const double C2 = (k2 * L) * (k2 * L);
  const double C3 = C2 / 2;
  const double thr = support_threshold * reference.max();
  const int n = window * window;

  double sum_s = 0, sum_l = 0, sum_c = 0, sum_st = 0;
  long long count = 0;
  for (int y0 = 0; y0 + window <= ny; ++y0)
    for (int x0 = 0; x0 + window <= nx; ++x0) {
      const int yc = y0 + window / 2, xc = x0 + window / 2;
      if (reference(yc, xc) <= thr) continue;
      double mx = 0, my = 0;
      for (int y = 0; y < window; ++y)
        for (int x = 0; x < window; ++x) {
          mx += reference(y0 + y, x0 + x);
          my += recon(y0 + y, x0 + x);
        }
      mx /= n;
      my /= n;
      double vx = 0, vy = 0, cxy = 0;
      for (int y = 0; y < window; ++y)
        for (int x = 0; x < window; ++x) {
          const double dx = reference(y0 + y, x0 + x) - mx;
          const double dy = recon(y0 + y, x0 + x) - my;
          vx += dx * dx;
          vy += dy * dy;
          cxy += dx * dy;
        }
      vx /= n - 1;
      vy /= n - 1;
      cxy /= n - 1;
      const double sx = std::sqrt(std::max(0.0, vx)), sy = std::sqrt(std::max(0.0, vy));
      const double lum = (2 * mx * my + C1) / (mx * mx + my * my + C1);
      const double con = (2 * sx * sy + C2) / (vx + vy + C2);
      const double str = (cxy + C3) / (sx * sy + C3);
      sum_s += ((2 * mx * my + C1) * (2 * cxy + C2)) / ((mx * mx + my * my + C1) * (vx + vy + C2));
      sum_l += lum;
      sum_c += con;
      sum_st += str;
      ++count;
    }
  if (count == 0) throw std::invalid_argument("ssim: no windows inside the support");
  SsimStats out;
  out.ssim = sum_s / count;
  out.luminance = sum_l / count;
  out.contrast = sum_c / count;
  out.structure = sum_st / count;
  return out;
}

double ssim(const Array2R& reference, const Array2R& recon, int window, double k1, double k2,
            double L) {
  return ssimStats(reference, recon, window, k1, k2, L).ssim;
}

std::vector<double> ssimPerSlice(const SliceStack& reference, const SliceStack& recon,
                                 int window) {
  checkSameShape(reference, recon, "ssimPerSlice");
  double mx = 0;
  for (size_t i = 0; i < reference.data.size(); ++i)
    mx = std::max(mx, std::abs(reference.data.data()[i]));
  if (mx <= 0) throw std::invalid_argument("ssimPerSlice: zero reference");
  std::vector<double> out;
  for (int s = 0; s < reference.mb(); ++s) {
    Array2R a(reference.ny(), reference.nx()), b(reference.ny(), reference.nx());
    for (int y = 0; y < reference.ny(); ++y)
      for (int x = 0; x < reference.nx(); ++x) {
        a(y, x) = std::abs(reference.data(s, y, x)) / mx;
        b(y, x) = std::min(1.0, std::abs(recon.data(s, y, x)) / mx);
      }
    out.push_back(ssimStats(a, b, window).ssim);
  }
  return out;
}

ErrorMaps errorMap(const SliceStack& reference, const SliceStack& recon, double scale) {
  checkSameShape(reference, recon, "errorMap");
  ErrorMaps out;
  out.scale = scale;
  for (int s = 0; s < reference.mb(); ++s) {
    Array2R m(reference.ny(), reference.nx());
    for (int y = 0; y < reference.ny(); ++y)
      for (int x = 0; x < reference.nx(); ++x)
        m(y, x) = std::abs(std::abs(reference.data(s, y, x)) - std::abs(recon.data(s, y, x)));
    out.maps.push_back(std::move(m));
  }
  return out;
}

Array2R pseudoReplicaStd(const std::function<Array2C(std::uint64_t)>& recon, int trials,
                         std::uint64_t seed, std::uint64_t arm, int ny, int nx, int* dropped) {
  if (trials < 2) throw std::invalid_argument("pseudoReplicaStd: need trials >= 2");
  std::vector<Array2C> results(trials);
  std::vector<std::uint8_t> ok(trials, 0);
  parallelFor(trials, [&](std::int64_t t) {
    try {
      results[t] = recon(hashKey(seed, arm, static_cast<std::uint64_t>(t)));
      ok[t] = 1;
    } catch (const std::exception&) {
      ok[t] = 0;
    }
  });
  // per-pixel std over trials, accumulated in deterministic trial order
  Array2R sd(ny, nx);
  int used = 0;
  std::vector<Cx> mean(static_cast<size_t>(ny) * nx, Cx(0, 0));
  for (int t = 0; t < trials; ++t) {
    if (!ok[t]) {
      if (dropped) ++*dropped;
      continue;
    }
    ++used;
    if (results[t].ny() != ny || results[t].nx() != nx)
      throw std::runtime_error("pseudoReplicaStd: recon shape mismatch");
    for (size_t i = 0; i < mean.size(); ++i) mean[i] += results[t].data()[i];
  }
  if (used < 2) throw std::runtime_error("pseudoReplicaStd: too few usable trials");
  for (auto& m : mean) m /= static_cast<double>(used);
  for (size_t i = 0; i < mean.size(); ++i) {
    double acc = 0;
    for (int t = 0; t < trials; ++t) {
      if (!ok[t]) continue;
      acc += std::norm(results[t].data()[i] - mean[i]);
    }
    sd.data()[i] = std::sqrt(acc / (used - 1));
  }
  return sd;
}

GFactorMap gFactorPseudoReplica(const std::function<Array2C(std::uint64_t)>& recon_accel,
                                const std::function<Array2C(std::uint64_t)>& recon_full, int R,
                                int trials, std::uint64_t seed, const Array2R& support,
                                double support_threshold) {
  const int ny = support.ny(), nx = support.nx();
  int dropped = 0;
  const Array2R sd_acc = pseudoReplicaStd(recon_accel, trials, seed, 0xACC0ULL, ny, nx, &dropped);
  const Array2R sd_full = pseudoReplicaStd(recon_full, trials, seed, 0xF0F0ULL, ny, nx, &dropped);
  if (dropped * 4 > trials * 2)  // > 25% of the 2*trials reconstructions
    throw std::runtime_error("gFactorPseudoReplica: more than 25% of trials failed");

  GFactorMap out;
  out.g = Array2R(ny, nx);
  out.trials = trials;
  out.dropped = dropped;
  out.R = R;
  const double thr = support_threshold * support.max();
  const double sqrtR = std::sqrt(static_cast<double>(R));
  double sum = 0;
  long long cnt = 0;
  for (int y = 0; y < ny; ++y)
    for (int x = 0; x < nx; ++x) {
      if (support(y, x) <= thr || !(sd_full(y, x) > 0) || !std::isfinite(sd_full(y, x))) continue;
      // a non-finite accelerated std means the reconstruction is singular
      // there: the g-factor is degenerate (reported as +inf)
      const double g = std::isfinite(sd_acc(y, x))
                           ? sd_acc(y, x) / (sd_full(y, x) * sqrtR)
                           : std::numeric_limits<double>::infinity();
      out.g(y, x) = g;
      sum += g;
      out.max_g = std::max(out.max_g, g);
      ++cnt;
    }
  if (cnt == 0) throw std::runtime_error("gFactorPseudoReplica: empty support");
  out.mean_g = sum / cnt;
  return out;
}

GFactorMap senseGFactor(const SenseGFactorSetup& setup, int trials, std::uint64_t seed) {
  const SenseGeometry& geom = *setup.geom;
  const int nc = geom.nc(), ny = geom.eny(), nx = geom.nx;
  const int R = setup.mask.R;

  bool lattice = setup.allow_unfold && ny % R == 0;
  if (lattice) {
    int offset = -1;
    for (int y = 0; y < ny && offset < 0; ++y)
      if (setup.mask.at(y)) offset = y % R;
    for (int y = 0; y < ny && lattice; ++y)
      if (setup.mask.at(y) != (y % R == offset)) lattice = false;
  }

  std::vector<int> cols = setup.columns;
  if (cols.empty())
    for (int x = 0; x < nx; ++x) cols.push_back(x);

  // restrict the ROI to the evaluated columns
  Array2R roi(ny, nx);
  {
    std::vector<std::uint8_t> used(nx, 0);
    for (int x : cols) used[x] = 1;
    for (int y = 0; y < ny; ++y)
      for (int x = 0; x < nx; ++x) roi(y, x) = used[x] ? setup.support(y, x) : 0.0;
  }

  auto makeNoise = [&](const SamplingMask& m, std::uint64_t trial_seed) {
    KSpaceData ks;
    ks.data = Array3C(nc, ny, nx);
    ks.grid = GridKind::Extended;
    ks.base_ny = geom.slice_ny;
    ks.extension_factor = ny / std::max(1, geom.slice_ny);
    ks.mask = m;
    for (int c = 0; c < nc; ++c)
      for (int y = 0; y < ny; ++y) {
        if (!m.at(y)) continue;
        Cx* row = ks.data.plane(c) + static_cast<size_t>(y) * nx;
        const std::uint64_t base = (static_cast<std::uint64_t>(c) * ny + y) * nx;
        for (int x = 0; x < nx; ++x) row[x] = gaussianAt(hashKey(trial_seed, base + x));
      }
    return ks;
  };

  const SamplingMask full = fullMask(ny);

  std::function<Array2C(std::uint64_t)> accel, fullrec;
  if (lattice) {
    accel = [&](std::uint64_t ts) {
      return senseUnfoldUniform(makeNoise(setup.mask, ts), geom, setup.mask);
    };
    fullrec = [&](std::uint64_t ts) {
      return senseUnfoldUniform(makeNoise(full, ts), geom, full);
    };
  } else {
    // per-column CG with a fixed iteration budget
    auto solver_a = std::make_shared<ColumnSenseSolver>(geom, setup.mask, setup.lambda,
                                                        setup.cg_iters);
    auto solver_f =
        std::make_shared<ColumnSenseSolver>(geom, full, setup.lambda, setup.cg_iters);
    accel = [&, solver_a](std::uint64_t ts) {
      Array2C u(ny, nx);
      solver_a->solve(makeNoise(setup.mask, ts), cols, u);
      return u;
    };
    fullrec = [&, solver_f](std::uint64_t ts) {
      Array2C u(ny, nx);
      solver_f->solve(makeNoise(full, ts), cols, u);
      return u;
    };
  }

  int dropped = 0;
  const Array2R sd_acc = pseudoReplicaStd(accel, trials, seed, 0xACC0ULL, ny, nx, &dropped);
  const Array2R sd_full = setup.full_std
                              ? *setup.full_std
                              : pseudoReplicaStd(fullrec, trials, seed, 0xF0F0ULL, ny, nx, &dropped);
  if (dropped * 4 > trials * 2)
    throw std::runtime_error("senseGFactor: more than 25% of trials failed");

  GFactorMap out;
  out.g = Array2R(ny, nx);
  out.max_g = 0;
  out.trials = trials;
  out.dropped = dropped;
  out.R = R;
  const double thr = setup.support_threshold * roi.max();
  const double sqrtR = std::sqrt(static_cast<double>(R));
  double sum = 0;
  long long cnt = 0;
  for (int y = 0; y < ny; ++y)
    for (int x = 0; x < nx; ++x) {
      if (roi(y, x) <= thr || !(sd_full(y, x) > 0) || !std::isfinite(sd_full(y, x))) continue;
      const double g = std::isfinite(sd_acc(y, x))
                           ? sd_acc(y, x) / (sd_full(y, x) * sqrtR)
                           : std::numeric_limits<double>::infinity();
      out.g(y, x) = g;
      sum += g;
      out.max_g = std::max(out.max_g, g);
      ++cnt;
    }
  if (cnt == 0) throw std::runtime_error("senseGFactor: empty support");
  out.mean_g = sum / cnt;
  return out;
}

Array2R senseFullStd(const SenseGeometry& geom, double lambda, int cg_iters,
                     const std::vector<int>& columns, int trials, std::uint64_t seed) {
  const int nc = geom.nc(), ny = geom.eny(), nx = geom.nx;
  const SamplingMask full = fullMask(ny);
  auto solver = std::make_shared<ColumnSenseSolver>(geom, full, lambda, cg_iters);
  auto recon = [&, solver](std::uint64_t ts) {
    KSpaceData ks;
    ks.data = Array3C(nc, ny, nx);
    ks.grid = GridKind::Extended;
    ks.base_ny = geom.slice_ny;
    ks.extension_factor = ny / std::max(1, geom.slice_ny);
    ks.mask = full;
    for (int c = 0; c < nc; ++c)
      for (int y = 0; y < ny; ++y) {
        Cx* row = ks.data.plane(c) + static_cast<size_t>(y) * nx;
        const std::uint64_t base = (static_cast<std::uint64_t>(c) * ny + y) * nx;
        for (int x = 0; x < nx; ++x) row[x] = gaussianAt(hashKey(ts, base + x));
      }
    Array2C u(ny, nx);
    solver->solve(ks, columns, u);
    return u;
  };
  return pseudoReplicaStd(recon, trials, seed, 0xF0F0ULL, ny, nx);
}

namespace {

// one noise-only trial of a single column: fills u(Y)
void columnNoiseTrial(const ColumnSenseSolver& solver, const SamplingMask& mask, int x, int nx,
                      int nc, int eny, std::uint64_t trial_seed, std::vector<Cx>& d,
                      std::vector<Cx>& u) {
  for (int c = 0; c < nc; ++c)
    for (int y = 0; y < eny; ++y) {
      const std::uint64_t key = (static_cast<std::uint64_t>(c) * eny + y) * nx + x;
      d[static_cast<size_t>(c) * eny + y] =
          mask.at(y) ? gaussianAt(hashKey(trial_seed, key)) : Cx(0, 0);
    }
  solver.solveColumn(x, d.data(), u.data());
}

std::vector<double> columnTrialStd(const std::vector<std::vector<Cx>>& trials, int eny) {
  const int T = static_cast<int>(trials.size());
  std::vector<double> sd(eny);
  for (int y = 0; y < eny; ++y) {
    Cx mean(0, 0);
    for (int t = 0; t < T; ++t) mean += trials[t][y];
    mean /= static_cast<double>(T);
    double acc = 0;
    for (int t = 0; t < T; ++t) acc += std::norm(trials[t][y] - mean);
    sd[y] = std::sqrt(acc / (T - 1));
  }
  return sd;
}

}  // namespace

ColumnGFitness::ColumnGFitness(const SenseGeometry& geom, std::vector<int> columns, int trials,
                               int cg_iters, std::uint64_t seed, const Array2R& support,
                               double support_threshold)
    : geom_(&geom), columns_(std::move(columns)), trials_(trials), cg_iters_(cg_iters),
      seed_(seed) {
  const int nc = geom.nc(), eny = geom.eny(), nx = geom.nx;
  const double thr = support_threshold * support.max();
  const SamplingMask full = fullMask(eny);
  ColumnSenseSolver solver(geom, full, 0.0, cg_iters_);
  roi_rows_.resize(columns_.size());
  full_std_.resize(columns_.size());
  parallelFor(static_cast<std::int64_t>(columns_.size()), [&](std::int64_t i) {
    const int x = columns_[i];
    for (int y = 0; y < eny; ++y)
      if (support(y, x) > thr) roi_rows_[i].push_back(y);
    std::vector<std::vector<Cx>> runs(trials_, std::vector<Cx>(eny));
    std::vector<Cx> d(static_cast<size_t>(nc) * eny);
    for (int t = 0; t < trials_; ++t)
      columnNoiseTrial(solver, full, x, nx, nc, eny,
                       hashKey(seed_, 0xF0F0ULL, static_cast<std::uint64_t>(t)), d, runs[t]);
    const auto sd = columnTrialStd(runs, eny);
    for (int y : roi_rows_[i]) full_std_[i].push_back(sd[y]);
  });
}

double ColumnGFitness::operator()(const SamplingMask& mask) const {
  const int nc = geom_->nc(), eny = geom_->eny(), nx = geom_->nx;
  if (mask.npe() != eny) throw std::invalid_argument("ColumnGFitness: mask length mismatch");
  ColumnSenseSolver solver(*geom_, mask, 0.0, cg_iters_);
  const double sqrtR = std::sqrt(static_cast<double>(mask.R));
  std::vector<double> col_sums(columns_.size(), 0.0);
  std::vector<long long> col_counts(columns_.size(), 0);
  parallelFor(static_cast<std::int64_t>(columns_.size()), [&](std::int64_t i) {
    const int x = columns_[i];
    std::vector<std::vector<Cx>> runs(trials_, std::vector<Cx>(eny));
    std::vector<Cx> d(static_cast<size_t>(nc) * eny);
    for (int t = 0; t < trials_; ++t)
      columnNoiseTrial(solver, mask, x, nx, nc, eny,
                       hashKey(seed_, 0xACC0ULL, static_cast<std::uint64_t>(t)), d, runs[t]);
    const auto sd = columnTrialStd(runs, eny);
    for (size_t k = 0; k < roi_rows_[i].size(); ++k) {
      const double sf = full_std_[i][k];
      if (sf <= 0) continue;
      col_sums[i] += sd[roi_rows_[i][k]] / (sf * sqrtR);
      ++col_counts[i];
    }
  });
  double sum = 0;
  long long cnt = 0;
  for (size_t i = 0; i < columns_.size(); ++i) {
    sum += col_sums[i];
    cnt += col_counts[i];
  }
  if (cnt == 0) throw std::runtime_error("ColumnGFitness: empty support");
  return sum / cnt;
}

std::vector<std::vector<double>> leakageMatrix(
    const std::function<SliceStack(const SliceStack&)>& pipeline, const SliceStack& content) {
  const int mb = content.mb();
  std::vector<std::vector<double>> L(mb, std::vector<double>(mb, 0.0));
  for (int s = 0; s < mb; ++s) {
    SliceStack solo(mb, content.ny(), content.nx());
    for (int y = 0; y < content.ny(); ++y)
      for (int x = 0; x < content.nx(); ++x) solo.data(s, y, x) = content.data(s, y, x);
    SliceStack rec = pipeline(solo);
    if (rec.mb() != mb) throw std::runtime_error("leakageMatrix: pipeline changed MB");
    std::vector<double> energy(mb, 0.0);
    for (int t = 0; t < mb; ++t) {
      double e = 0;
      for (int y = 0; y < rec.ny(); ++y)
        for (int x = 0; x < rec.nx(); ++x) e += std::norm(rec.data(t, y, x));
      energy[t] = std::sqrt(e);
    }
    if (energy[s] <= 0) throw std::runtime_error("leakageMatrix: zero diagonal energy");
    for (int t = 0; t < mb; ++t) L[s][t] = energy[t] / energy[s];
  }
  return L;
}

MetricsReport computeMetrics(const SliceStack& reference, const SliceStack& recon) {
  checkSameShape(reference, recon, "computeMetrics");
  MetricsReport rep;
  rep.ser_aggregate = ser(reference, recon);
  for (int s = 0; s < reference.mb(); ++s) {
    SliceStack r1(1, reference.ny(), reference.nx()), c1(1, reference.ny(), reference.nx());
    for (int y = 0; y < reference.ny(); ++y)
      for (int x = 0; x < reference.nx(); ++x) {
        r1.data(0, y, x) = reference.data(s, y, x);
        c1.data(0, y, x) = recon.data(s, y, x);
      }
    rep.ser_per_slice.push_back(ser(r1, c1));
  }
  rep.ssim_per_slice = ssimPerSlice(reference, recon);
  double acc = 0;
  for (double v : rep.ssim_per_slice) acc += v;
  rep.ssim_mean = acc / rep.ssim_per_slice.size();
  return rep;
}

void writeMetricsCsv(const std::string& path, const MetricsReport& rep) {
  std::vector<std::vector<std::string>> rows;
  for (size_t s = 0; s < rep.ser_per_slice.size(); ++s)
    rows.push_back({std::to_string(s), formatDouble(rep.ser_per_slice[s]),
                    formatDouble(rep.ssim_per_slice[s])});
  rows.push_back({"aggregate", formatDouble(rep.ser_aggregate), formatDouble(rep.ssim_mean)});
  writeCsv(path, "slice,ser_db,ssim", rows);
}

void writeMetricsSummary(const std::string& path, const std::string& title,
                         const MetricsReport& rep) {
  std::ostringstream os;
  os << "method = " << title << "\n";
  os << "ser_db_aggregate = " << formatDouble(rep.ser_aggregate) << "\n";
  for (size_t s = 0; s < rep.ser_per_slice.size(); ++s)
    os << "ser_db_slice_" << s << " = " << formatDouble(rep.ser_per_slice[s]) << "\n";
  os << "ssim_mean = " << formatDouble(rep.ssim_mean) << "\n";
  for (size_t s = 0; s < rep.ssim_per_slice.size(); ++s)
    os << "ssim_slice_" << s << " = " << formatDouble(rep.ssim_per_slice[s]) << "\n";
  if (rep.mean_g >= 0) {
    os << "gfactor_mean = " << formatDouble(rep.mean_g) << "\n";
    os << "gfactor_max = " << formatDouble(rep.max_g) << "\n";
  }
  if (!rep.leakage.empty()) {
    double off = 0;
    for (size_t s = 0; s < rep.leakage.size(); ++s)
      for (size_t t = 0; t < rep.leakage.size(); ++t)
        if (s != t) off = std::max(off, rep.leakage[s][t]);
    os << "leakage_max_offdiag = " << formatDouble(off) << "\n";
  }
  writeTextFile(path, os.str());
}

void writeLeakageCsv(const std::string& path, const std::vector<std::vector<double>>& L) {
  std::vector<std::vector<std::string>> rows;
  for (size_t s = 0; s < L.size(); ++s) {
    std::vector<std::string> row{std::to_string(s)};
    for (double v : L[s]) row.push_back(formatDouble(v));
    rows.push_back(row);
  }
  std::string header = "source_slice";
  for (size_t t = 0; t < L.size(); ++t) header += ",into_slice_" + std::to_string(t);
  writeCsv(path, header, rows);
}

}  // namespace smile
