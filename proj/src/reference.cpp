#include "smile/reference.hpp"

#include <cmath>

namespace smile::ref {

Array2C dft2c(const Array2C& img, bool forward) {
  const int ny = img.ny(), nx = img.nx();
  const int cy = ny / 2, cx = nx / 2;
  const double sign = forward ? -1.0 : 1.0;
  const double scale = 1.0 / std::sqrt(static_cast<double>(ny) * nx);
  Array2C out(ny, nx);
  for (int ky = 0; ky < ny; ++ky)
    for (int kx = 0; kx < nx; ++kx) {
      Cx acc(0, 0);
      for (int y = 0; y < ny; ++y)
        for (int x = 0; x < nx; ++x) {
          const double ph = sign * 2.0 * M_PI *
                            (static_cast<double>(ky - cy) * (y - cy) / ny +
                             static_cast<double>(kx - cx) * (x - cx) / nx);
          acc += img(y, x) * Cx(std::cos(ph), std::sin(ph));
        }
      out(ky, kx) = acc * scale;
    }
  return out;
}

Array2C matchedFilterDirect(const Array3C& coil_images, const Array4C& maps, int slice) {
  const int nc = maps.n0(), ny = maps.n2(), nx = maps.n3();
  Array2C out(ny, nx);
  for (int y = 0; y < ny; ++y)
    for (int x = 0; x < nx; ++x) {
      Cx num(0, 0);
      double den = 0;
      for (int c = 0; c < nc; ++c) {
        num += std::conj(maps(c, slice, y, x)) * coil_images(c, y, x);
        den += std::norm(maps(c, slice, y, x));
      }
      out(y, x) = den > 0 ? num / den : Cx(0, 0);
    }
  return out;
}

double ssimDirect(const Array2R& a, const Array2R& b, int window, double k1, double k2,
                  double L) {
  const int ny = a.ny(), nx = a.nx();
  const double C1 = (k1 * L) * (k1 * L), C2 = (k2 * L) * (k2 * L);
  const int n = window * window;
  double sum = 0;
  long long count = 0;
  for (int y0 = 0; y0 + window <= ny; ++y0)
    for (int x0 = 0; x0 + window <= nx; ++x0) {
      double mx = 0, my = 0;
      for (int y = 0; y < window; ++y)
        for (int x = 0; x < window; ++x) {
          mx += a(y0 + y, x0 + x);
          my += b(y0 + y, x0 + x);
        }
      mx /= n;
      my /= n;
      double vx = 0, vy = 0, cxy = 0;
      for (int y = 0; y < window; ++y)
        for (int x = 0; x < window; ++x) {
          vx += (a(y0 + y, x0 + x) - mx) * (a(y0 + y, x0 + x) - mx);
          vy += (b(y0 + y, x0 + x) - my) * (b(y0 + y, x0 + x) - my);
          cxy += (a(y0 + y, x0 + x) - mx) * (b(y0 + y, x0 + x) - my);
        }
      vx /= n - 1;
      vy /= n - 1;
      cxy /= n - 1;
      sum += ((2 * mx * my + C1) * (2 * cxy + C2)) / ((mx * mx + my * my + C1) * (vx + vy + C2));
      ++count;
    }
  return sum / count;
}

}  // namespace smile::ref
