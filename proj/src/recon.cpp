#include "smile/recon.hpp"

#include <chrono>
#include <cmath>

#include "smile/calib.hpp"
#include "smile/fft.hpp"
#include "smile/phantom.hpp"
#include "smile/sampling.hpp"

namespace smile {

namespace {
constexpr double kTwoPi = 6.283185307179586476925286766559;

double vdotReal(const Array2C& a, const Array2C& b) {
  double s = 0;
  const Cx* pa = a.data();
  const Cx* pb = b.data();
  for (size_t i = 0; i < a.size(); ++i)
    s += pa[i].real() * pb[i].real() + pa[i].imag() * pb[i].imag();
  return s;
}

SliceStack cutSlices(const Array2C& u, const SenseGeometry& geom) {
  const int mb = static_cast<int>(geom.slice_offsets.size());
  SliceStack out(mb, geom.slice_ny, geom.nx);
  for (int s = 0; s < mb; ++s)
    for (int y = 0; y < geom.slice_ny; ++y)
      for (int x = 0; x < geom.nx; ++x)
        out.data(s, y, x) = u(geom.slice_offsets[s] + y, x);
  return out;
}

void checkShapes(const KSpaceData& ks, const SenseGeometry& geom, const SamplingMask& mask) {
  if (ks.nc() != geom.nc() || ks.nky() != geom.eny() || ks.nkx() != geom.nx)
    throw std::invalid_argument("cgSense: k-space and geometry shapes are inconsistent");
  if (mask.npe() != geom.eny())
    throw std::invalid_argument("cgSense: mask length must equal the unknown PE size");
}

}  // namespace

SenseGeometry makeSenseGeometry(const CoilMapSet& maps, int n, const std::vector<int>& offsets,
                                bool allow_overlap) {
  const int mb = maps.mb(), ny = maps.ny(), nx = maps.nx();
  if (static_cast<int>(offsets.size()) != mb)
    throw std::invalid_argument("makeSenseGeometry: need one offset per slice");
  const int eny = n * ny;
  SenseGeometry g;
  g.ext_maps = Array3C(maps.nc(), eny, nx);
  g.slice_ny = ny;
  g.nx = nx;
  g.slice_offsets = offsets;
  for (int s = 0; s < mb; ++s) {
    if (offsets[s] < 0 || offsets[s] + ny > eny)
      throw std::invalid_argument("makeSenseGeometry: segment exceeds the extended FOV");
    if (s > 0 && offsets[s] < offsets[s - 1] + ny) {
      if (!allow_overlap)
        throw std::invalid_argument("makeSenseGeometry: overlapping slice placement");
      g.overlapping = true;
    }
  }
  for (int c = 0; c < maps.nc(); ++c)
    for (int s = 0; s < mb; ++s)
      for (int y = 0; y < ny; ++y)
        for (int x = 0; x < nx; ++x) g.ext_maps(c, offsets[s] + y, x) += maps.maps(c, s, y, x);
  return g;
}

namespace {

// b = A^H d ; apply = (A^H A + lambda) u, all matrix-free over the 2D grid.
struct Sense2D {
  const SenseGeometry& geom;
  const std::vector<std::uint8_t>& keep;
  double lambda;
  mutable Array2C t, k;

  Sense2D(const SenseGeometry& g, const SamplingMask& mask, double lam)
      : geom(g), keep(mask.keep), lambda(lam), t(g.eny(), g.nx), k(g.eny(), g.nx) {}

  void adjoint(const Array3C& data, Array2C& out) const {
    const int nc = geom.nc(), ny = geom.eny(), nx = geom.nx;
    for (size_t i = 0; i < out.size(); ++i) out.data()[i] = Cx(0, 0);
    for (int c = 0; c < nc; ++c) {
      ifft2c(data.plane(c), t.data(), ny, nx);
      const Cx* m = geom.ext_maps.plane(c);
      for (size_t i = 0; i < out.size(); ++i) out.data()[i] += std::conj(m[i]) * t.data()[i];
    }
  }

  void normalApply(const Array2C& u, Array2C& out) const {
    const int nc = geom.nc(), ny = geom.eny(), nx = geom.nx;
    for (size_t i = 0; i < out.size(); ++i) out.data()[i] = lambda * u.data()[i];
    for (int c = 0; c < nc; ++c) {
      const Cx* m = geom.ext_maps.plane(c);
      for (size_t i = 0; i < u.size(); ++i) t.data()[i] = m[i] * u.data()[i];
      fft2c(t.data(), k.data(), ny, nx);
      for (int y = 0; y < ny; ++y)
        if (!keep[y]) {
          Cx* row = k.data() + static_cast<size_t>(y) * nx;
          for (int x = 0; x < nx; ++x) row[x] = Cx(0, 0);
        }
      ifft2c(k.data(), t.data(), ny, nx);
      for (size_t i = 0; i < u.size(); ++i) out.data()[i] += std::conj(m[i]) * t.data()[i];
    }
  }
};

}  // namespace

Array2C cgSenseImage(const KSpaceData& kspace, const SenseGeometry& geom,
                     const SamplingMask& mask, const ReconConfig& cfg, int* iters_out,
                     double* resid_out) {
  checkShapes(kspace, geom, mask);
  const int ny = geom.eny(), nx = geom.nx;
  Sense2D op(geom, mask, cfg.lambda);

  Array2C b(ny, nx);
  op.adjoint(kspace.data, b);
  const double bnorm = b.norm();

  Array2C u(ny, nx), r = b, p = b, Ap(ny, nx);
  double rs = vdotReal(r, r);
  int it = 0;
  if (bnorm > 0) {
    for (; it < cfg.max_iters; ++it) {
      if (std::sqrt(rs) / bnorm <= cfg.cg_tolerance) break;
      op.normalApply(p, Ap);
      const double alpha = rs / vdotReal(p, Ap);
      for (size_t i = 0; i < u.size(); ++i) {
        u.data()[i] += alpha * p.data()[i];
        r.data()[i] -= alpha * Ap.data()[i];
      }
      const double rs2 = vdotReal(r, r);
      const double beta = rs2 / rs;
      rs = rs2;
      for (size_t i = 0; i < p.size(); ++i) p.data()[i] = r.data()[i] + beta * p.data()[i];
    }
  }
  if (iters_out) *iters_out = it;
  if (resid_out) *resid_out = bnorm > 0 ? std::sqrt(rs) / bnorm : 0.0;
  return u;
}

ReconResult cgSense(const KSpaceData& kspace, const SenseGeometry& geom, const SamplingMask& mask,
                    const ReconConfig& cfg) {
  const auto t0 = std::chrono::steady_clock::now();
  int iters = 0;
  double resid = 0;
  Array2C u = cgSenseImage(kspace, geom, mask, cfg, &iters, &resid);
  ReconResult res;
  res.slices = cutSlices(u, geom);
  res.iterations = iters;
  res.final_residual = resid;
  res.converged = resid <= cfg.cg_tolerance;
  res.overlap_flagged = geom.overlapping;
  res.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return res;
}

Array2C senseUnfoldUniform(const KSpaceData& kspace, const SenseGeometry& geom,
                           const SamplingMask& mask) {
  checkShapes(kspace, geom, mask);
  const int nc = geom.nc(), ny = geom.eny(), nx = geom.nx;
  const int R = mask.R;
  if (ny % R != 0)
    throw std::invalid_argument("senseUnfoldUniform: R must divide the PE size");
  int offset = -1;
  for (int y = 0; y < ny; ++y)
    if (mask.at(y)) {
      offset = y % R;
      break;
    }
  for (int y = 0; y < ny; ++y)
    if (mask.at(y) != (y % R == offset))
      throw std::invalid_argument("senseUnfoldUniform: mask is not a uniform lattice");

  // zero-filled adjoint image per coil
  Array3C alias(nc, ny, nx);
  {
    Array2C masked(ny, nx);
    for (int c = 0; c < nc; ++c) {
      const Cx* src = kspace.data.plane(c);
      for (int y = 0; y < ny; ++y)
        for (int x = 0; x < nx; ++x)
          masked(y, x) = mask.at(y) ? src[static_cast<size_t>(y) * nx + x] : Cx(0, 0);
      ifft2c(masked.data(), alias.plane(c), ny, nx);
    }
  }

  // With keep = {y : y % R == offset} and centered DFT conventions,
  //   alias_c(y) = (1/R) * sum_j exp(i*theta_j) * maps_c(g_j) * u(g_j),
  //   g_j = (y + j*ny/R) mod ny,  theta_j = 2*pi*(offset - ny/2)*j/R.
  const int shift = ny / R;
  const double theta0 = kTwoPi * (offset - ny / 2) / R;
  Array2C out(ny, nx);
  Eigen::MatrixXcd A(nc, R);
  Eigen::VectorXcd rhs(nc), sol(R);
  for (int y0 = 0; y0 < shift; ++y0) {
    for (int x = 0; x < nx; ++x) {
      for (int j = 0; j < R; ++j) {
        const int g = (y0 + j * shift) % ny;
        const Cx ph = std::polar(1.0 / R, theta0 * j);
        for (int c = 0; c < nc; ++c) A(c, j) = ph * geom.ext_maps(c, g, x);
      }
      for (int c = 0; c < nc; ++c) rhs(c) = alias(c, y0, x);
      // classical SENSE: unregularized normal equations
      sol = (A.adjoint() * A).lu().solve(A.adjoint() * rhs);
      for (int j = 0; j < R; ++j) out((y0 + j * shift) % ny, x) = sol(j);
    }
  }
  return out;
}

ColumnSenseSolver::ColumnSenseSolver(const SenseGeometry& geom, const SamplingMask& mask,
                                     double lambda, int iters)
    : geom_(&geom), keep_(mask.keep), lambda_(lambda), iters_(iters), nc_(geom.nc()),
      eny_(geom.eny()), nx_(geom.nx) {
  if (mask.npe() != eny_) throw std::invalid_argument("ColumnSenseSolver: mask length mismatch");
}

void ColumnSenseSolver::solveColumn(int x, const Cx* d, Cx* u) const {
  const int n = eny_, nc = nc_;
  thread_local std::vector<Cx> buf;
  buf.resize(static_cast<size_t>(nc) * n * 2 + static_cast<size_t>(n) * 4 +
             static_cast<size_t>(nc) * n);
  Cx* t = buf.data();                 // (nc, n) work
  Cx* k = t + static_cast<size_t>(nc) * n;
  Cx* m = k + static_cast<size_t>(nc) * n;  // gathered maps (nc, n)
  Cx* b = m + static_cast<size_t>(nc) * n;
  Cx* r = b + n;
  Cx* p = r + n;
  Cx* Ap = p + n;

  for (int c = 0; c < nc; ++c) {
    const Cx* mp = geom_->ext_maps.plane(c) + x;
    for (int y = 0; y < n; ++y) m[static_cast<size_t>(c) * n + y] = mp[static_cast<size_t>(y) * nx_];
  }

  // b = A^H d
  for (int c = 0; c < nc; ++c) {
    const Cx* src = d + static_cast<size_t>(c) * n;
    Cx* dst = k + static_cast<size_t>(c) * n;
    for (int y = 0; y < n; ++y) dst[y] = keep_[y] ? src[y] : Cx(0, 0);
  }
  fft1cBatch(k, t, n, nc, false);
  for (int y = 0; y < n; ++y) b[y] = Cx(0, 0);
  for (int c = 0; c < nc; ++c)
    for (int y = 0; y < n; ++y) b[y] += std::conj(m[static_cast<size_t>(c) * n + y]) * t[static_cast<size_t>(c) * n + y];

  double bnorm2 = 0;
  for (int y = 0; y < n; ++y) bnorm2 += std::norm(b[y]);
  for (int y = 0; y < n; ++y) {
    u[y] = Cx(0, 0);
    r[y] = b[y];
    p[y] = b[y];
  }
  if (bnorm2 <= 0) return;
  double rs = bnorm2;

  for (int it = 0; it < iters_; ++it) {
    // Ap = (A^H A + lambda) p
    for (int c = 0; c < nc; ++c)
      for (int y = 0; y < n; ++y) t[static_cast<size_t>(c) * n + y] = m[static_cast<size_t>(c) * n + y] * p[y];
    fft1cBatch(t, k, n, nc, true);
    for (int c = 0; c < nc; ++c) {
      Cx* row = k + static_cast<size_t>(c) * n;
      for (int y = 0; y < n; ++y)
        if (!keep_[y]) row[y] = Cx(0, 0);
    }
    fft1cBatch(k, t, n, nc, false);
    for (int y = 0; y < n; ++y) Ap[y] = lambda_ * p[y];
    for (int c = 0; c < nc; ++c)
      for (int y = 0; y < n; ++y) Ap[y] += std::conj(m[static_cast<size_t>(c) * n + y]) * t[static_cast<size_t>(c) * n + y];

    double pAp = 0;
    for (int y = 0; y < n; ++y)
      pAp += p[y].real() * Ap[y].real() + p[y].imag() * Ap[y].imag();
    if (pAp <= 0) break;
    const double alpha = rs / pAp;
    for (int y = 0; y < n; ++y) {
      u[y] += alpha * p[y];
      r[y] -= alpha * Ap[y];
    }
    double rs2 = 0;
    for (int y = 0; y < n; ++y) rs2 += std::norm(r[y]);
    if (rs2 <= 1e-30 * bnorm2) break;
    const double beta = rs2 / rs;
    rs = rs2;
    for (int y = 0; y < n; ++y) p[y] = r[y] + beta * p[y];
  }
}

void ColumnSenseSolver::solve(const KSpaceData& kspace, const std::vector<int>& columns,
                              Array2C& out) const {
  if (kspace.nc() != nc_ || kspace.nky() != eny_ || kspace.nkx() != nx_)
    throw std::invalid_argument("ColumnSenseSolver: k-space shape mismatch");
  // kx -> x, batched over all rows per coil (unsampled rows are zero)
  Array3C hybrid(nc_, eny_, nx_);
  for (int c = 0; c < nc_; ++c)
    fft1cBatch(kspace.data.plane(c), hybrid.plane(c), nx_, eny_, false);

  std::vector<int> cols = columns;
  if (cols.empty()) {
    cols.resize(nx_);
    for (int i = 0; i < nx_; ++i) cols[i] = i;
  }
  for (size_t i = 0; i < out.size(); ++i) out.data()[i] = Cx(0, 0);
  std::vector<Cx> dcol(static_cast<size_t>(nc_) * eny_), ucol(eny_);
  for (int x : cols) {
    for (int c = 0; c < nc_; ++c)
      for (int y = 0; y < eny_; ++y)
        dcol[static_cast<size_t>(c) * eny_ + y] = hybrid(c, y, x);
    solveColumn(x, dcol.data(), ucol.data());
    for (int y = 0; y < eny_; ++y) out(y, x) = ucol[y];
  }
}

GrappaKernels trainGrappaKernels(const Array3C& calib, int R, int ex, int ey) {
  const int nc = calib.n0(), cny = calib.n1(), cnx = calib.n2();
  if (R < 2) throw std::invalid_argument("trainGrappaKernels: R must be >= 2");
  const int shift = (ey - 1) / 2;
  const int span_lo = shift * R;              // lines below the anchor
  const int span_hi = (ey - 1 - shift) * R;   // lines above the anchor
  const int xc = (ex - 1) / 2;
  if (cny < span_lo + span_hi + R || cnx < ex)
    throw std::invalid_argument("trainGrappaKernels: calibration block too small for kernel");

  GrappaKernels out;
  out.R = R;
  out.ex = ex;
  out.ey = ey;
  out.nc = nc;

  const int ntaps = ex * ey * nc;
  for (int r = 1; r < R; ++r) {
    // anchor s0 is the nearest sampled line below the target t = s0 + r
    const int y_lo = span_lo, y_hi = cny - span_hi - r;
    const int x_lo = xc, x_hi = cnx - (ex - 1 - xc);
    const Eigen::Index nrows = static_cast<Eigen::Index>(std::max(0, y_hi - y_lo)) *
                               std::max(0, x_hi - x_lo);
    if (nrows < ntaps)
      throw std::invalid_argument("trainGrappaKernels: not enough calibration data");
    Eigen::MatrixXcd S(nrows, ntaps);
    Eigen::MatrixXcd T(nrows, nc);
    Eigen::Index row = 0;
    for (int s0 = y_lo; s0 < y_hi; ++s0)
      for (int x = x_lo; x < x_hi; ++x, ++row) {
        Eigen::Index col = 0;
        for (int a = 0; a < ex; ++a)
          for (int b = 0; b < ey; ++b) {
            const int yy = s0 + (b - shift) * R;
            const int xx = x + a - xc;
            for (int c = 0; c < nc; ++c, ++col) S(row, col) = calib(c, yy, xx);
          }
        for (int c = 0; c < nc; ++c) T(row, c) = calib(c, s0 + r, x);
      }
    // least squares for all coil targets at once
    Eigen::MatrixXcd StS = S.adjoint() * S;
    Eigen::MatrixXcd W = StS.ldlt().solve(S.adjoint() * T);  // (ntaps, nc)
    out.weights.push_back(W.transpose());                    // (nc, ntaps)
  }
  return out;
}

KSpaceData applyGrappa(const KSpaceData& kspace, const SamplingMask& mask,
                       const GrappaKernels& kr) {
  const int nc = kspace.nc(), ny = kspace.nky(), nx = kspace.nkx();
  if (nc != kr.nc) throw std::invalid_argument("applyGrappa: coil count mismatch");
  if (mask.npe() != ny) throw std::invalid_argument("applyGrappa: mask length mismatch");
  int offset = -1;
  for (int y = 0; y < ny && offset < 0; ++y)
    if (mask.at(y)) offset = y % kr.R;
  for (int y = 0; y < ny; ++y)
    if (mask.at(y) != (y % kr.R == offset))
      throw std::invalid_argument("applyGrappa: mask is not the uniform lattice the kernels expect");

  KSpaceData out = kspace;
  out.mask = fullMask(ny);
  out.mask->R = kspace.mask ? kspace.mask->R : kr.R;
  const int shift = (kr.ey - 1) / 2;
  const int xc = (kr.ex - 1) / 2;
  const int ntaps = kr.ex * kr.ey * kr.nc;
  Eigen::VectorXcd src(ntaps);
  for (int t = 0; t < ny; ++t) {
    if (mask.at(t)) continue;
    const int r = ((t - offset) % kr.R + kr.R) % kr.R;
    const int s0 = t - r;
    const auto& W = kr.weights[r - 1];
    for (int x = 0; x < nx; ++x) {
      Eigen::Index col = 0;
      for (int a = 0; a < kr.ex; ++a)
        for (int b = 0; b < kr.ey; ++b) {
          const int yy = ((s0 + (b - shift) * kr.R) % ny + ny) % ny;  // circular
          const int xx = ((x + a - xc) % nx + nx) % nx;
          for (int c = 0; c < nc; ++c, ++col) src(col) = kspace.data(c, yy, xx);
        }
      const Eigen::VectorXcd pred = W * src;
      for (int c = 0; c < nc; ++c) out.data(c, t, x) = pred(c);
    }
  }
  return out;
}

KSpaceData grappaUniform(const KSpaceData& kspace, const ACSRegion& acs, int R,
                         const ReconConfig& cfg) {
  if (R == 1) return kspace;
  if (!kspace.mask) throw std::invalid_argument("grappaUniform: k-space carries no mask");
  Array3C calib(kspace.nc(), acs.height(), acs.width());
  for (int ky = acs.ky0; ky < acs.ky1; ++ky)
    if (!kspace.mask->at(ky))
      throw std::invalid_argument("grappaUniform: ACS region is not fully sampled");
  for (int c = 0; c < kspace.nc(); ++c)
    for (int y = 0; y < acs.height(); ++y)
      for (int x = 0; x < acs.width(); ++x)
        calib(c, y, x) = kspace.data(c, acs.ky0 + y, acs.kx0 + x);
  const auto kernels = trainGrappaKernels(calib, R, cfg.ex, cfg.ey);
  return applyGrappa(kspace, *kspace.mask, kernels);
}

ReconResult sliceGrappa(const KSpaceData& caipi_kspace,
                        const std::vector<KSpaceData>& per_slice_calib,
                        const CaipiPhaseTable& phases, const CoilMapSet& maps,
                        const SamplingMask& inplane_mask, const ReconConfig& cfg) {
  const auto t0 = std::chrono::steady_clock::now();
  const int nc = caipi_kspace.nc(), ny = caipi_kspace.nky(), nx = caipi_kspace.nkx();
  const int mb = static_cast<int>(per_slice_calib.size());
  if (mb < 1) throw std::invalid_argument("sliceGrappa: need calibration data");
  for (const auto& cal : per_slice_calib)
    if (cal.nc() != nc || cal.nky() != ny || cal.nkx() != nx)
      throw std::invalid_argument("sliceGrappa: calibration grid must match the collapsed grid");
  if (phases.npe != ny || phases.mb != mb)
    throw std::invalid_argument("sliceGrappa: phase table shape mismatch");

  const int R_in = inplane_mask.R;

  // Collapsed calibration = sum of the modulated single-slice acquisitions.
  Array3C collapsed_calib(nc, ny, nx);
  for (int c = 0; c < nc; ++c)
    for (int y = 0; y < ny; ++y)
      for (int x = 0; x < nx; ++x) {
        Cx acc(0, 0);
        for (int s = 0; s < mb; ++s) acc += per_slice_calib[s].data(c, y, x);
        collapsed_calib(c, y, x) = acc;
      }

  const int ex = cfg.ex, ey = cfg.ey;
  const int yc = (ey - 1) / 2, xc = (ex - 1) / 2;
  const int ntaps = ex * ey * nc;
  const int y_lo = yc * R_in, y_hi = ny - (ey - 1 - yc) * R_in;
  const int x_lo = xc, x_hi = nx - (ex - 1 - xc);
  if (y_hi - y_lo < 1 || x_hi - x_lo < 1 ||
      static_cast<long long>(y_hi - y_lo) * (x_hi - x_lo) < ntaps)
    throw std::invalid_argument("sliceGrappa: calibration too small for the kernel size");

  // Sources on the acquired lattice (stride R_in); one LS system shared by
  // all (slice, coil) targets.
  const Eigen::Index nrows = static_cast<Eigen::Index>(y_hi - y_lo) * (x_hi - x_lo);
  Eigen::MatrixXcd S(nrows, ntaps);
  Eigen::MatrixXcd T(nrows, static_cast<Eigen::Index>(mb) * nc);
  Eigen::Index row = 0;
  for (int y = y_lo; y < y_hi; ++y)
    for (int x = x_lo; x < x_hi; ++x, ++row) {
      Eigen::Index col = 0;
      for (int a = 0; a < ex; ++a)
        for (int b = 0; b < ey; ++b) {
          const int yy = y + (b - yc) * R_in;
          const int xx = x + a - xc;
          for (int c = 0; c < nc; ++c, ++col) S(row, col) = collapsed_calib(c, yy, xx);
        }
      for (int s = 0; s < mb; ++s)
        for (int c = 0; c < nc; ++c)
          T(row, static_cast<Eigen::Index>(s) * nc + c) = per_slice_calib[s].data(c, y, x);
    }
  Eigen::MatrixXcd W = (S.adjoint() * S).ldlt().solve(S.adjoint() * T);  // (ntaps, mb*nc)

  // Separate slices at the acquired lines, then demodulate the CAIPI phases.
  std::vector<KSpaceData> sep(mb);
  for (int s = 0; s < mb; ++s) {
    sep[s].data = Array3C(nc, ny, nx);
    sep[s].grid = GridKind::Collapsed;
    sep[s].base_ny = ny;
    sep[s].mask = inplane_mask;
  }
  Eigen::VectorXcd src(ntaps);
  const Eigen::MatrixXcd Wt = W.transpose();  // (mb*nc, ntaps)
  for (int y = 0; y < ny; ++y) {
    if (!inplane_mask.at(y)) continue;
    for (int x = 0; x < nx; ++x) {
      Eigen::Index col = 0;
      for (int a = 0; a < ex; ++a)
        for (int b = 0; b < ey; ++b) {
          const int yy = ((y + (b - yc) * R_in) % ny + ny) % ny;
          const int xx = ((x + a - xc) % nx + nx) % nx;
          for (int c = 0; c < nc; ++c, ++col) src(col) = caipi_kspace.data(c, yy, xx);
        }
      const Eigen::VectorXcd pred = Wt * src;
      for (int s = 0; s < mb; ++s) {
        const Cx dem = std::polar(1.0, -phases.at(y, s));
        for (int c = 0; c < nc; ++c)
          sep[s].data(c, y, x) = dem * pred(static_cast<Eigen::Index>(s) * nc + c);
      }
    }
  }

  // Optional in-plane GRAPPA per separated slice, trained on the demodulated
  // calibration (the single-slice spectra themselves).
  ReconResult res;
  res.slices = SliceStack(mb, ny, nx);
  for (int s = 0; s < mb; ++s) {
    KSpaceData filled = sep[s];
    if (R_in > 1) {
      Array3C cal_s(nc, ny, nx);
      for (int c = 0; c < nc; ++c)
        for (int y = 0; y < ny; ++y) {
          const Cx dem = std::polar(1.0, -phases.at(y, s));
          for (int x = 0; x < nx; ++x) cal_s(c, y, x) = dem * per_slice_calib[s].data(c, y, x);
        }
      const auto kern = trainGrappaKernels(cal_s, R_in, cfg.ex, cfg.ey);
      filled = applyGrappa(sep[s], inplane_mask, kern);
    }
    Array3C imgs(nc, ny, nx);
    for (int c = 0; c < nc; ++c) ifft2c(filled.data.plane(c), imgs.plane(c), ny, nx);
    Array2C comb = matchedFilterCombine(imgs, maps, s);
    for (int y = 0; y < ny; ++y)
      for (int x = 0; x < nx; ++x) res.slices.data(s, y, x) = comb(y, x);
  }
  res.iterations = 0;
  res.final_residual = 0;
  res.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return res;
}

}  // namespace smile
