#include <doctest.h>

#include "smile/fft.hpp"
#include "smile/reference.hpp"
#include "smile/rng.hpp"

using namespace smile;

namespace {
Array2C randomImage(int ny, int nx, std::uint64_t seed) {
  Array2C a(ny, nx);
  for (int y = 0; y < ny; ++y)
    for (int x = 0; x < nx; ++x) a(y, x) = gaussianAt(hashKey(seed, y * 1000 + x));
  return a;
}
double relDiff(const Array2C& a, const Array2C& b) {
  double num = 0, den = 0;
  for (size_t i = 0; i < a.size(); ++i) {
    num += std::norm(a.data()[i] - b.data()[i]);
    den += std::norm(a.data()[i]);
  }
  return std::sqrt(num / den);
}
}  // namespace

TEST_CASE("fft2c: constant image concentrates in the center bin") {
  Array2C ones(8, 8);
  for (size_t i = 0; i < ones.size(); ++i) ones.data()[i] = Cx(1, 0);
  Array2C k = fft2c(ones);
  for (int y = 0; y < 8; ++y)
    for (int x = 0; x < 8; ++x) {
      if (y == 4 && x == 4)
        CHECK(std::abs(k(y, x) - Cx(8, 0)) < 1e-12);
      else
        CHECK(std::abs(k(y, x)) < 1e-12);
    }
}

TEST_CASE("fft2c: round trip is identity to 1e-12") {
  Array2C img = randomImage(16, 16, 1);
  CHECK(relDiff(ifft2c(fft2c(img)), img) < 1e-12);
}

TEST_CASE("fft2c: Parseval") {
  Array2C img = randomImage(32, 32, 2);
  CHECK(fft2c(img).norm() == doctest::Approx(img.norm()).epsilon(1e-12));
}

TEST_CASE("fft2c matches the naive centered DFT oracle") {
  for (auto [ny, nx] : {std::pair{16, 12}, std::pair{9, 7}, std::pair{12, 12}}) {
    Array2C img = randomImage(ny, nx, 40 + ny);
    Array2C fast = fft2c(img);
    Array2C slow = ref::dft2c(img, true);
    CHECK(relDiff(fast, slow) < 1e-11);
    Array2C ifast = ifft2c(img);
    Array2C islow = ref::dft2c(img, false);
    CHECK(relDiff(ifast, islow) < 1e-11);
  }
}

TEST_CASE("fft2c rejects degenerate dimensions") {
  Array2C bad(1, 8);
  CHECK_THROWS_AS(fft2c(bad), std::invalid_argument);
}

TEST_CASE("fft1c: delta spectrum of the full comb") {
  const int n = 16;
  std::vector<Cx> in(n, Cx(1, 0)), out(n);
  ifft1c(in.data(), out.data(), n);
  CHECK(std::abs(out[n / 2] - Cx(std::sqrt(16.0), 0)) < 1e-12);
  for (int i = 0; i < n; ++i)
    if (i != n / 2) CHECK(std::abs(out[i]) < 1e-12);
}

TEST_CASE("fft1cBatch agrees with per-line transforms") {
  const int n = 24, batch = 5;
  std::vector<Cx> in(n * batch), a(n * batch), b(n);
  for (int i = 0; i < n * batch; ++i) in[i] = gaussianAt(hashKey(9, i));
  fft1cBatch(in.data(), a.data(), n, batch, true);
  for (int h = 0; h < batch; ++h) {
    fft1c(in.data() + h * n, b.data(), n);
    for (int i = 0; i < n; ++i) CHECK(std::abs(a[h * n + i] - b[i]) < 1e-12);
  }
}
