#include "smile/calib.hpp"

#include <cmath>

#include "smile/config.hpp"
#include "smile/fft.hpp"
#include "smile/io.hpp"

namespace smile {

bool kernelSizeSufficient(int ex, int ey, int nc, int cx, int cy) {
  if (ex < 1 || ey < 1 || nc < 1 || cx < 1 || cy < 1)
    throw std::invalid_argument("kernelSizeSufficient: all sizes must be positive");
  const long long lhs = static_cast<long long>(ex) * ey * nc;
  const long long rhs = static_cast<long long>(cx + ex - 1) * (cy + ey - 1);
  return lhs > rhs;
}

bool kernelSizeSufficient(const KernelSizeSpec& s) {
  return kernelSizeSufficient(s.ex, s.ey, s.nc, s.cx, s.dy >= s.cy ? s.dy : s.cy);
}

std::array<double, 2> optimalKernelSize(int cx, int cy, int nc) {
  if (nc < 2) throw std::invalid_argument("optimalKernelSize: undefined for N_c < 2");
  if (cx < 2 || cy < 2) throw std::invalid_argument("optimalKernelSize: need support >= 2");
  const double f = (1.0 + std::sqrt(static_cast<double>(nc))) / (nc - 1);
  return {f * (cx - 1), f * (cy - 1)};
}

ACSRegion centeredACS(int nky, int nkx, int lines, int cols) {
  if (lines < 1 || lines > nky || cols < 1 || cols > nkx)
    throw std::invalid_argument("centeredACS: region exceeds grid");
  ACSRegion r;
  r.ky0 = nky / 2 - lines / 2;
  r.ky1 = r.ky0 + lines;
  r.kx0 = nkx / 2 - cols / 2;
  r.kx1 = r.kx0 + cols;
  return r;
}

Eigen::MatrixXcd buildCalibrationMatrix(const KSpaceData& kspace, const ACSRegion& region, int ex,
                                        int ey) {
  const int nc = kspace.nc(), nky = kspace.nky(), nkx = kspace.nkx();
  if (ex < 1 || ey < 1) throw std::invalid_argument("buildCalibrationMatrix: kernel size >= 1");
  if (region.ky0 < 0 || region.ky1 > nky || region.kx0 < 0 || region.kx1 > nkx ||
      region.height() < 1 || region.width() < 1)
    throw std::invalid_argument("buildCalibrationMatrix: region outside grid");
  const int rows_y = region.height() - ey + 1;
  const int rows_x = region.width() - ex + 1;
  if (rows_y < 1 || rows_x < 1)
    throw std::invalid_argument("buildCalibrationMatrix: region too small; need at least " +
                                std::to_string(ey) + " x " + std::to_string(ex) + " samples");
  if (kspace.mask) {
    for (int ky = region.ky0; ky < region.ky1; ++ky)
      if (!kspace.mask->at(ky))
        throw std::invalid_argument("buildCalibrationMatrix: region is not fully sampled");
  }

  Eigen::MatrixXcd A(static_cast<Eigen::Index>(rows_y) * rows_x,
                     static_cast<Eigen::Index>(ex) * ey * nc);
  Eigen::Index row = 0;
  for (int y = 0; y < rows_y; ++y)
    for (int x = 0; x < rows_x; ++x, ++row) {
      Eigen::Index col = 0;
      for (int wx = 0; wx < ex; ++wx)
        for (int wy = 0; wy < ey; ++wy)
          for (int c = 0; c < nc; ++c, ++col)
            A(row, col) = kspace.data(c, region.ky0 + y + wy, region.kx0 + x + wx);
    }
  return A;
}

double minSingularRatio(const Eigen::MatrixXcd& calib) {
  if (calib.rows() < calib.cols()) return 0.0;
  Eigen::BDCSVD<Eigen::MatrixXcd> svd(calib);
  const auto& s = svd.singularValues();
  if (s(0) <= 0) return 0.0;
  return s(s.size() - 1) / s(0);
}

KernelSet estimateKernels(const Eigen::MatrixXcd& calib, double threshold, int ex, int ey,
                          int nc) {
  if (calib.rows() == 0 || calib.cols() == 0)
    throw std::invalid_argument("estimateKernels: empty calibration matrix");
  if (calib.cols() != static_cast<Eigen::Index>(ex) * ey * nc)
    throw std::invalid_argument("estimateKernels: kernel shape does not match matrix columns");

  Eigen::BDCSVD<Eigen::MatrixXcd> svd(calib, Eigen::ComputeFullV);
  const auto& s = svd.singularValues();
  const double smax = s(0);
  const Eigen::Index ncols = calib.cols();
  const Eigen::Index nsv = s.size();

  KernelSet out;
  out.ex = ex;
  out.ey = ey;
  out.nc = nc;
  out.kind = KernelKind::Annihilating;

  // center tap of the window: (cx_mid*ey + cy_mid)*nc + c
  const Eigen::Index center_base = (static_cast<Eigen::Index>(ex / 2) * ey + ey / 2) * nc;
  for (Eigen::Index i = 0; i < ncols; ++i) {
    const double sv = i < nsv ? s(i) : 0.0;  // columns beyond rank are exact nullspace
    if (sv > threshold * smax) continue;
    Kernel k;
    k.coeffs = svd.matrixV().col(i);
    k.residual = sv;
    // normalize so the strongest center tap is exactly -1
    Eigen::Index best = center_base;
    for (int c = 0; c < nc; ++c)
      if (std::abs(k.coeffs(center_base + c)) > std::abs(k.coeffs(best))) best = center_base + c;
    const Cx ctap = k.coeffs(best);
    if (std::abs(ctap) > 1e-300) {
      k.coeffs *= Cx(-1, 0) / ctap;
      k.coeffs(best) = Cx(-1, 0);
    }
    out.kernels.push_back(std::move(k));
  }
  return out;
}

double annihilationResidual(const KSpaceData& kspace, const KernelSet& ks) {
  if (ks.kernels.empty()) throw std::invalid_argument("annihilationResidual: no kernels");
  const int nc = kspace.nc(), nky = kspace.nky(), nkx = kspace.nkx();
  if (nc != ks.nc) throw std::invalid_argument("annihilationResidual: coil count mismatch");
  const int rows_y = nky - ks.ey + 1, rows_x = nkx - ks.ex + 1;
  if (rows_y < 1 || rows_x < 1) throw std::invalid_argument("annihilationResidual: grid too small");

  // RMS window norm so the residual is relative to local signal level
  double knorm2 = 0;
  for (int c = 0; c < nc; ++c)
    for (int y = 0; y < nky; ++y)
      for (int x = 0; x < nkx; ++x) knorm2 += std::norm(kspace.data(c, y, x));
  const double win_rms =
      std::sqrt(knorm2 * ks.ex * ks.ey / (static_cast<double>(nky) * nkx));

  double worst = 0;
  for (const auto& k : ks.kernels) {
    for (int y = 0; y < rows_y; ++y)
      for (int x = 0; x < rows_x; ++x) {
        Cx acc(0, 0);
        Eigen::Index col = 0;
        for (int wx = 0; wx < ks.ex; ++wx)
          for (int wy = 0; wy < ks.ey; ++wy)
            for (int c = 0; c < nc; ++c, ++col)
              acc += k.coeffs(col) * kspace.data(c, y + wy, x + wx);
        worst = std::max(worst, std::abs(acc));
      }
  }
  return win_rms > 0 ? worst / win_rms : worst;
}

CoilMapSet estimateCoilMapsFromACS(const KSpaceData& kspace, const ACSRegion& region) {
  const int nc = kspace.nc(), nky = kspace.nky(), nkx = kspace.nkx();
  if (region.ky0 < 0 || region.ky1 > nky || region.kx0 < 0 || region.kx1 > nkx ||
      region.height() < 1 || region.width() < 1)
    throw std::invalid_argument("estimateCoilMapsFromACS: region outside grid");
  if (kspace.mask) {
    for (int ky = region.ky0; ky < region.ky1; ++ky)
      if (!kspace.mask->at(ky))
        throw std::invalid_argument("estimateCoilMapsFromACS: unsampled rows inside the ACS");
  }

  // Apodization: cosine taper on the ACS boundary of each partial dimension;
  // full-width dimensions keep weight 1 so a full-k-space "ACS" reproduces
  // the data exactly.
  const int h = region.height(), w = region.width();
  std::vector<double> wy(h, 1.0), wx(w, 1.0);
  auto taper = [](std::vector<double>& v, int full) {
    const int n = static_cast<int>(v.size());
    if (n >= full) return;
    const int edge = std::max(1, n / 4);
    for (int i = 0; i < edge; ++i) {
      const double t = 0.5 * (1.0 - std::cos(M_PI * (i + 1) / (edge + 1)));
      v[i] *= t;
      v[n - 1 - i] *= t;
    }
  };
  taper(wy, nky);
  taper(wx, nkx);

  CoilMapSet out(nc, 1, nky, nkx);
  out.support_cx = w;
  out.support_cy = h;
  Array2C zf(nky, nkx), img(nky, nkx);
  Array3C lowres(nc, nky, nkx);
  for (int c = 0; c < nc; ++c) {
    for (size_t i = 0; i < zf.size(); ++i) zf.data()[i] = Cx(0, 0);
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x)
        zf(region.ky0 + y, region.kx0 + x) =
            kspace.data(c, region.ky0 + y, region.kx0 + x) * wy[y] * wx[x];
    ifft2c(zf.data(), img.data(), nky, nkx);
    for (int y = 0; y < nky; ++y)
      for (int x = 0; x < nkx; ++x) lowres(c, y, x) = img(y, x);
  }

  double rss_max = 0;
  Array2R rss(nky, nkx);
  for (int y = 0; y < nky; ++y)
    for (int x = 0; x < nkx; ++x) {
      double r = 0;
      for (int c = 0; c < nc; ++c) r += std::norm(lowres(c, y, x));
      rss(y, x) = std::sqrt(r);
      rss_max = std::max(rss_max, rss(y, x));
    }
  const double floor_rss = 1e-8 * rss_max;
  for (int c = 0; c < nc; ++c)
    for (int y = 0; y < nky; ++y)
      for (int x = 0; x < nkx; ++x)
        out.maps(c, 0, y, x) = lowres(c, y, x) / std::max(rss(y, x), floor_rss);
  return out;
}

void writeKernelSet(const std::string& path_base, const KernelSet& ks,
                    const KernelSizeSpec& spec) {
  if (ks.kernels.empty()) throw std::invalid_argument("writeKernelSet: empty kernel set");
  const int taps = ks.ex * ks.ey * ks.nc;
  Array2C coeffs(static_cast<int>(ks.kernels.size()), taps);
  for (size_t k = 0; k < ks.kernels.size(); ++k) {
    if (ks.kernels[k].coeffs.size() != taps)
      throw std::invalid_argument("writeKernelSet: coefficient size mismatch");
    for (int t = 0; t < taps; ++t) coeffs(static_cast<int>(k), t) = ks.kernels[k].coeffs(t);
  }
  writeArray(path_base + ".smle", coeffs);

  Config c;
  c.set("kernel.ex", std::to_string(ks.ex));
  c.set("kernel.ey", std::to_string(ks.ey));
  c.set("kernel.nc", std::to_string(ks.nc));
  c.set("kernel.kind", ks.kind == KernelKind::Annihilating ? "annihilating" : "prediction");
  c.set("kernel.count", std::to_string(ks.kernels.size()));
  c.set("spec.cx", std::to_string(spec.cx));
  c.set("spec.cy", std::to_string(spec.cy));
  c.set("spec.dy", std::to_string(spec.dy));
  c.set("spec.nc", std::to_string(spec.nc));
  c.set("spec.ex", std::to_string(spec.ex));
  c.set("spec.ey", std::to_string(spec.ey));
  for (size_t k = 0; k < ks.kernels.size(); ++k)
    c.set("residual.k" + std::to_string(k), formatDouble(ks.kernels[k].residual));
  c.save(path_base + ".spec.cfg");
}

std::pair<KernelSet, KernelSizeSpec> readKernelSet(const std::string& path_base) {
  const Array2C coeffs = readArray2(path_base + ".smle");
  const Config c = Config::load(path_base + ".spec.cfg");
  KernelSet ks;
  ks.ex = c.getInt("kernel.ex", 0);
  ks.ey = c.getInt("kernel.ey", 0);
  ks.nc = c.getInt("kernel.nc", 0);
  const std::string kind = c.getString("kernel.kind", "annihilating");
  ks.kind = kind == "prediction" ? KernelKind::Prediction : KernelKind::Annihilating;
  const int taps = ks.ex * ks.ey * ks.nc;
  if (coeffs.nx() != taps || coeffs.ny() != c.getInt("kernel.count", -1))
    throw UnsupportedFile("readKernelSet: spec does not match the coefficient array");
  for (int k = 0; k < coeffs.ny(); ++k) {
    Kernel kr;
    kr.coeffs.resize(taps);
    for (int t = 0; t < taps; ++t) kr.coeffs(t) = coeffs(k, t);
    kr.residual = c.getDouble("residual.k" + std::to_string(k), 0.0);
    ks.kernels.push_back(std::move(kr));
  }
  KernelSizeSpec spec;
  spec.cx = c.getInt("spec.cx", 0);
  spec.cy = c.getInt("spec.cy", 0);
  spec.dy = c.getInt("spec.dy", 0);
  spec.nc = c.getInt("spec.nc", 0);
  spec.ex = c.getInt("spec.ex", 0);
  spec.ey = c.getInt("spec.ey", 0);
  return {std::move(ks), spec};
}

}  // namespace smile
