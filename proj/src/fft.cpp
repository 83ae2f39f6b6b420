#include "smile/fft.hpp"

#include <fftw3.h>

#include <cmath>
#include <map>
#include <mutex>
#include <stdexcept>
#include <vector>

namespace smile {

namespace {

// One cached FFTW plan per (ny, nx, sign). Plans are created unaligned so
// they can execute on any buffer via the new-array interface; FFTW_ESTIMATE
// keeps plan selection deterministic across runs.
struct PlanCache {
  std::mutex mu;
  std::map<std::tuple<int, int, int>, fftw_plan> plans2d;
  std::map<std::tuple<int, int, int>, fftw_plan> plans1d;  // (n, howmany, sign)

  fftw_plan get2d(int ny, int nx, int sign) {
    std::lock_guard<std::mutex> lock(mu);
    auto key = std::make_tuple(ny, nx, sign);
    auto it = plans2d.find(key);
    if (it != plans2d.end()) return it->second;
    std::vector<Cx> tmp(static_cast<size_t>(ny) * nx);
    fftw_plan p = fftw_plan_dft_2d(ny, nx, reinterpret_cast<fftw_complex*>(tmp.data()),
                                   reinterpret_cast<fftw_complex*>(tmp.data()), sign,
                                   FFTW_ESTIMATE | FFTW_UNALIGNED);
    plans2d[key] = p;
    return p;
  }

  fftw_plan get1d(int n, int howmany, int sign) {
    std::lock_guard<std::mutex> lock(mu);
    auto key = std::make_tuple(n, howmany, sign);
    auto it = plans1d.find(key);
    if (it != plans1d.end()) return it->second;
    std::vector<Cx> tmp(static_cast<size_t>(n) * howmany);
    fftw_plan p = fftw_plan_many_dft(1, &n, howmany,
                                     reinterpret_cast<fftw_complex*>(tmp.data()), nullptr, 1, n,
                                     reinterpret_cast<fftw_complex*>(tmp.data()), nullptr, 1, n,
                                     sign, FFTW_ESTIMATE | FFTW_UNALIGNED);
    plans1d[key] = p;
    return p;
  }
};

PlanCache& cache() {
  static PlanCache c;
  return c;
}

// out[k] = in[(k + shift) mod n] along both axes; ifftshift uses
// shift = floor(n/2), fftshift uses shift = ceil(n/2) on the output side.
void rollCopy2d(const Cx* in, Cx* out, int ny, int nx, int sy, int sx, double scale) {
  for (int y = 0; y < ny; ++y) {
    const int ys = (y + sy) % ny;
    const Cx* src = in + static_cast<size_t>(ys) * nx;
    Cx* dst = out + static_cast<size_t>(y) * nx;
    for (int x = 0; x < nx; ++x) dst[x] = src[(x + sx) % nx] * scale;
  }
}

// Per-thread scratch so the hot paths do not allocate.
std::pair<Cx*, Cx*> scratch(size_t n) {
  thread_local std::vector<Cx> a, b;
  if (a.size() < n) {
    a.resize(n);
    b.resize(n);
  }
  return {a.data(), b.data()};
}

void transform2d(const Cx* in, Cx* out, int ny, int nx, int sign) {
  if (ny < 2 || nx < 2) throw std::invalid_argument("fft2c: dimensions must be >= 2");
  const size_t n = static_cast<size_t>(ny) * nx;
  auto [pa, pb] = scratch(n);
  // ifftshift: index 0 <- center floor(n/2)
  rollCopy2d(in, pa, ny, nx, ny / 2, nx / 2, 1.0);
  fftw_execute_dft(cache().get2d(ny, nx, sign), reinterpret_cast<fftw_complex*>(pa),
                   reinterpret_cast<fftw_complex*>(pb));
  const double scale = 1.0 / std::sqrt(static_cast<double>(n));
  // fftshift: center floor(n/2) <- index 0, i.e. roll by ceil(n/2)
  rollCopy2d(pb, out, ny, nx, (ny + 1) / 2, (nx + 1) / 2, scale);
}

}  // namespace

void fft2c(const Cx* in, Cx* out, int ny, int nx) { transform2d(in, out, ny, nx, FFTW_FORWARD); }
void ifft2c(const Cx* in, Cx* out, int ny, int nx) { transform2d(in, out, ny, nx, FFTW_BACKWARD); }

Array2C fft2c(const Array2C& img) {
  Array2C out(img.ny(), img.nx());
  fft2c(img.data(), out.data(), img.ny(), img.nx());
  return out;
}

Array2C ifft2c(const Array2C& ks) {
  Array2C out(ks.ny(), ks.nx());
  ifft2c(ks.data(), out.data(), ks.ny(), ks.nx());
  return out;
}

Array3C fft2cAll(const Array3C& a) {
  Array3C out(a.n0(), a.n1(), a.n2());
  for (int i = 0; i < a.n0(); ++i) fft2c(a.plane(i), out.plane(i), a.n1(), a.n2());
  return out;
}

Array3C ifft2cAll(const Array3C& a) {
  Array3C out(a.n0(), a.n1(), a.n2());
  for (int i = 0; i < a.n0(); ++i) ifft2c(a.plane(i), out.plane(i), a.n1(), a.n2());
  return out;
}

void fft1cBatch(const Cx* in, Cx* out, int n, int howmany, bool forward) {
  if (n < 2) throw std::invalid_argument("fft1c: length must be >= 2");
  const size_t total = static_cast<size_t>(n) * howmany;
  auto [pa, pb] = scratch(total);
  const int s_in = n / 2, s_out = (n + 1) / 2;
  for (int h = 0; h < howmany; ++h) {
    const Cx* src = in + static_cast<size_t>(h) * n;
    Cx* dst = pa + static_cast<size_t>(h) * n;
    for (int i = 0; i < n; ++i) dst[i] = src[(i + s_in) % n];
  }
  fftw_execute_dft(cache().get1d(n, howmany, forward ? FFTW_FORWARD : FFTW_BACKWARD),
                   reinterpret_cast<fftw_complex*>(pa), reinterpret_cast<fftw_complex*>(pb));
  const double scale = 1.0 / std::sqrt(static_cast<double>(n));
  for (int h = 0; h < howmany; ++h) {
    const Cx* src = pb + static_cast<size_t>(h) * n;
    Cx* dst = out + static_cast<size_t>(h) * n;
    for (int i = 0; i < n; ++i) dst[i] = src[(i + s_out) % n] * scale;
  }
}

void fft1c(const Cx* in, Cx* out, int n) { fft1cBatch(in, out, n, 1, true); }
void ifft1c(const Cx* in, Cx* out, int n) { fft1cBatch(in, out, n, 1, false); }

}  // namespace smile
