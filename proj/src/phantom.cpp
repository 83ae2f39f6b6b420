#include "smile/phantom.hpp"

#include <Eigen/Dense>

#include <cmath>

#include "smile/fft.hpp"
#include "smile/rng.hpp"

namespace smile {

namespace {

struct Ellipse {
  double cy, cx;    // center in [-1, 1] coordinates
  double ay, ax;    // semi-axes
  double angle;     // radians
  double amplitude; // additive
};

// Shepp-Logan-flavoured base set, kept well inside the unit box so the
// rasterized phantom has a clean zero border.
std::vector<Ellipse> baseEllipses() {
  return {
      {0.00, 0.00, 0.80, 0.62, 0.0, 1.00},
      {0.00, 0.00, 0.72, 0.55, 0.0, -0.70},
      {0.00, 0.25, 0.30, 0.12, 0.35, -0.20},
      {0.00, -0.25, 0.35, 0.14, -0.35, -0.20},
      {-0.30, 0.00, 0.18, 0.18, 0.0, 0.25},
      {0.25, 0.00, 0.10, 0.10, 0.0, 0.30},
      {0.45, 0.18, 0.06, 0.06, 0.0, 0.35},
      {0.45, -0.18, 0.06, 0.06, 0.0, 0.35},
  };
}

void rasterize(Array3C& out, int slice, const std::vector<Ellipse>& shapes, double rot) {
  const int ny = out.n1(), nx = out.n2();
  const double cr = std::cos(rot), sr = std::sin(rot);
  for (int y = 0; y < ny; ++y) {
    const double v = 2.0 * (y - (ny - 1) / 2.0) / ny;
    for (int x = 0; x < nx; ++x) {
      const double u = 2.0 * (x - (nx - 1) / 2.0) / nx;
      // rotate the whole slice about the origin
      const double vr = cr * v - sr * u;
      const double ur = sr * v + cr * u;
      double val = 0;
      for (const auto& e : shapes) {
        const double dv = vr - e.cy, du = ur - e.cx;
        const double ce = std::cos(e.angle), se = std::sin(e.angle);
        const double pv = (ce * dv - se * du) / e.ay;
        const double pu = (se * dv + ce * du) / e.ax;
        if (pv * pv + pu * pu <= 1.0) val += e.amplitude;
      }
      out(slice, y, x) = val < 0 ? 0.0 : val;
    }
  }
}

std::vector<Ellipse> ringAndDisks(std::mt19937_64& rng) {
  std::vector<Ellipse> shapes;
  shapes.push_back({0, 0, 0.82, 0.82, 0, 0.55});   // outer disk
  shapes.push_back({0, 0, 0.66, 0.66, 0, -0.25});  // makes the ring
  std::uniform_real_distribution<double> upos(-0.45, 0.45);
  std::uniform_real_distribution<double> urad(0.05, 0.16);
  std::uniform_real_distribution<double> uamp(0.25, 0.75);
  for (int i = 0; i < 5; ++i)
    shapes.push_back({upos(rng), upos(rng), urad(rng), urad(rng), 0, uamp(rng)});
  return shapes;
}

}  // namespace

SliceStack makePhantom(const PhantomSpec& spec) {
  if (spec.ny < 16 || spec.nx < 16) throw std::invalid_argument("makePhantom: grid must be >= 16x16");
  if (spec.mb < 1 || spec.mb > 8) throw std::invalid_argument("makePhantom: MB must be in [1, 8]");

  SliceStack out(spec.mb, spec.ny, spec.nx);
  auto rng = sequentialRng(spec.seed);
  for (int s = 0; s < spec.mb; ++s) {
    std::vector<Ellipse> shapes = spec.style == PhantomStyle::Ellipses
                                      ? baseEllipses()
                                      : ringAndDisks(rng);
    std::uniform_real_distribution<double> jit(-spec.contrast_jitter, spec.contrast_jitter);
    for (size_t i = 1; i < shapes.size(); ++i) {
      shapes[i].amplitude *= 1.0 + jit(rng);
    }
    const double rot = (spec.slice_rotation_deg * s + 7.0 * jit(rng)) * M_PI / 180.0;
    rasterize(out.data, s, shapes, rot);
  }
  double mx = 0;
  for (size_t i = 0; i < out.data.size(); ++i) mx = std::max(mx, std::abs(out.data.data()[i]));
  if (mx > 0)
    for (size_t i = 0; i < out.data.size(); ++i) out.data.data()[i] /= mx;

  // shapes live inside |u|,|v| <= 0.9, which leaves > 2 border pixels for
  // any grid >= 16; enforce anyway so the support precondition is hard.
  for (int s = 0; s < spec.mb; ++s)
    for (int y = 0; y < spec.ny; ++y)
      for (int x = 0; x < spec.nx; ++x)
        if (y < 2 || y >= spec.ny - 2 || x < 2 || x >= spec.nx - 2) out.data(s, y, x) = 0.0;
  return out;
}

CoilMapSet makeCoilMaps(const CoilSpec& spec, int mb, int ny, int nx) {
  if (spec.nc < 2) throw std::invalid_argument("makeCoilMaps: need N_c >= 2");
  if (spec.cx > nx || spec.cy > ny)
    throw std::invalid_argument("makeCoilMaps: support exceeds grid");
  if (spec.cx < 1 || spec.cy < 1) throw std::invalid_argument("makeCoilMaps: support must be >= 1");
  if (spec.nc > spec.cx * spec.cy)
    throw std::invalid_argument("makeCoilMaps: N_c > C_x*C_y cannot give independent maps");
  if (spec.similarity < 0 || spec.similarity > 1)
    throw std::invalid_argument("makeCoilMaps: similarity must be in [0, 1]");

  CoilMapSet out(spec.nc, mb, ny, nx);
  out.support_cx = spec.cx;
  out.support_cy = spec.cy;

  const int y0 = ny / 2 - spec.cy / 2;
  const int x0 = nx / 2 - spec.cx / 2;
  Array2C kbox(ny, nx);

  // coefficient draws: one shared set plus one per slice, blended
  const int ncoef = spec.cy * spec.cx;
  std::vector<std::vector<Cx>> shared(spec.nc, std::vector<Cx>(ncoef));
  for (int c = 0; c < spec.nc; ++c)
    for (int i = 0; i < ncoef; ++i)
      shared[c][i] = gaussianAt(hashKey(spec.seed, 0x5348u * 131 + c, i));

  for (int s = 0; s < mb; ++s) {
    for (int c = 0; c < spec.nc; ++c) {
      for (size_t i = 0; i < kbox.size(); ++i) kbox.data()[i] = Cx(0, 0);
      for (int j = 0; j < spec.cy; ++j)
        for (int i = 0; i < spec.cx; ++i) {
          const Cx own = gaussianAt(hashKey(spec.seed, (s + 1) * 1000003ULL + c, j * spec.cx + i));
          kbox(y0 + j, x0 + i) =
              spec.similarity * shared[c][j * spec.cx + i] + (1.0 - spec.similarity) * own;
        }
      Array2C img = ifft2c(kbox);
      for (int y = 0; y < ny; ++y)
        for (int x = 0; x < nx; ++x) out.maps(c, s, y, x) = img(y, x);
    }
  }

  // Global scale so the mean root-sum-of-squares is 1. Per-pixel
  // normalization would destroy the exact band limitation, so the
  // matched-filter combine carries the per-pixel factor instead.
  double rss_sum = 0;
  for (int s = 0; s < mb; ++s)
    for (int y = 0; y < ny; ++y)
      for (int x = 0; x < nx; ++x) {
        double r = 0;
        for (int c = 0; c < spec.nc; ++c) r += std::norm(out.maps(c, s, y, x));
        rss_sum += std::sqrt(r);
      }
  const double scale = rss_sum / (static_cast<double>(mb) * ny * nx);
  if (scale > 0)
    for (size_t i = 0; i < out.maps.size(); ++i) out.maps.data()[i] /= scale;

  // linear-independence check on the stacked vectorized maps
  const size_t cols = static_cast<size_t>(mb) * ny * nx;
  Eigen::MatrixXcd gram(spec.nc, spec.nc);
  for (int a = 0; a < spec.nc; ++a)
    for (int b = a; b < spec.nc; ++b) {
      Cx acc(0, 0);
      const Cx* pa = out.maps.data() + a * cols;
      const Cx* pb = out.maps.data() + b * cols;
      for (size_t i = 0; i < cols; ++i) acc += std::conj(pa[i]) * pb[i];
      gram(a, b) = acc;
      gram(b, a) = std::conj(acc);
    }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> eig(gram);
  const double smin = std::sqrt(std::max(0.0, eig.eigenvalues()(0)));
  const double smax = std::sqrt(std::max(0.0, eig.eigenvalues()(spec.nc - 1)));
  if (!(smin > 1e-8 * smax))
    throw std::runtime_error("makeCoilMaps: generated maps are not linearly independent");
  return out;
}

Array2C matchedFilterCombine(const Array3C& coil_images, const CoilMapSet& maps, int slice) {
  const int nc = maps.nc(), ny = maps.ny(), nx = maps.nx();
  if (coil_images.n0() != nc || coil_images.n1() != ny || coil_images.n2() != nx)
    throw std::invalid_argument("matchedFilterCombine: shape mismatch");
  Array2C out(ny, nx);
  for (int y = 0; y < ny; ++y)
    for (int x = 0; x < nx; ++x) {
      Cx num(0, 0);
      double den = 0;
      for (int c = 0; c < nc; ++c) {
        const Cx m = maps.maps(c, slice, y, x);
        num += std::conj(m) * coil_images(c, y, x);
        den += std::norm(m);
      }
      out(y, x) = den > 0 ? num / den : Cx(0, 0);
    }
  return out;
}

SliceStack sumOfSquaresReference(const SliceStack& slices, const CoilMapSet& maps) {
  if (slices.mb() != maps.mb() || slices.ny() != maps.ny() || slices.nx() != maps.nx())
    throw std::invalid_argument("sumOfSquaresReference: shape mismatch");
  SliceStack out(slices.mb(), slices.ny(), slices.nx());
  for (int s = 0; s < slices.mb(); ++s) {
    Array3C coil(maps.nc(), slices.ny(), slices.nx());
    for (int c = 0; c < maps.nc(); ++c)
      for (int y = 0; y < slices.ny(); ++y)
        for (int x = 0; x < slices.nx(); ++x)
          coil(c, y, x) = maps.maps(c, s, y, x) * slices.data(s, y, x);
    Array2C comb = matchedFilterCombine(coil, maps, s);
    for (int y = 0; y < slices.ny(); ++y)
      for (int x = 0; x < slices.nx(); ++x) out.data(s, y, x) = std::abs(comb(y, x));
  }
  return out;
}

}  // namespace smile
