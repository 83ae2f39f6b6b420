#pragma once

#include <array>
#include <complex>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <vector>

namespace smile {

using Cx = std::complex<double>;

/// Row-major complex 2D array (ny, nx).
class Array2C {
public:
  Array2C() = default;
  Array2C(int ny, int nx) : ny_(ny), nx_(nx), d_(static_cast<size_t>(ny) * nx) {}

  int ny() const { return ny_; }
  int nx() const { return nx_; }
  size_t size() const { return d_.size(); }

  Cx& operator()(int y, int x) { return d_[static_cast<size_t>(y) * nx_ + x]; }
  const Cx& operator()(int y, int x) const { return d_[static_cast<size_t>(y) * nx_ + x]; }

  Cx* data() { return d_.data(); }
  const Cx* data() const { return d_.data(); }

  double norm() const;

private:
  int ny_ = 0, nx_ = 0;
  std::vector<Cx> d_;
};

/// Row-major complex 3D array (n0, n1, n2); n0 is usually coil or slice.
class Array3C {
public:
  Array3C() = default;
  Array3C(int n0, int n1, int n2)
      : n0_(n0), n1_(n1), n2_(n2), d_(static_cast<size_t>(n0) * n1 * n2) {}

  int n0() const { return n0_; }
  int n1() const { return n1_; }
  int n2() const { return n2_; }
  size_t size() const { return d_.size(); }
  size_t planeSize() const { return static_cast<size_t>(n1_) * n2_; }

  Cx& operator()(int i, int y, int x) {
    return d_[(static_cast<size_t>(i) * n1_ + y) * n2_ + x];
  }
  const Cx& operator()(int i, int y, int x) const {
    return d_[(static_cast<size_t>(i) * n1_ + y) * n2_ + x];
  }

  Cx* plane(int i) { return d_.data() + static_cast<size_t>(i) * planeSize(); }
  const Cx* plane(int i) const { return d_.data() + static_cast<size_t>(i) * planeSize(); }

  Cx* data() { return d_.data(); }
  const Cx* data() const { return d_.data(); }

  double norm() const;

private:
  int n0_ = 0, n1_ = 0, n2_ = 0;
  std::vector<Cx> d_;
};

/// Row-major complex 4D array (n0, n1, n2, n3), e.g. (coil, slice, y, x).
class Array4C {
public:
  Array4C() = default;
  Array4C(int n0, int n1, int n2, int n3)
      : n0_(n0), n1_(n1), n2_(n2), n3_(n3),
        d_(static_cast<size_t>(n0) * n1 * n2 * n3) {}

  int n0() const { return n0_; }
  int n1() const { return n1_; }
  int n2() const { return n2_; }
  int n3() const { return n3_; }
  size_t size() const { return d_.size(); }

  Cx& operator()(int a, int b, int y, int x) {
    return d_[((static_cast<size_t>(a) * n1_ + b) * n2_ + y) * n3_ + x];
  }
  const Cx& operator()(int a, int b, int y, int x) const {
    return d_[((static_cast<size_t>(a) * n1_ + b) * n2_ + y) * n3_ + x];
  }

  Cx* plane(int a, int b) {
    return d_.data() + (static_cast<size_t>(a) * n1_ + b) * n2_ * n3_;
  }
  const Cx* plane(int a, int b) const {
    return d_.data() + (static_cast<size_t>(a) * n1_ + b) * n2_ * n3_;
  }

  Cx* data() { return d_.data(); }
  const Cx* data() const { return d_.data(); }

private:
  int n0_ = 0, n1_ = 0, n2_ = 0, n3_ = 0;
  std::vector<Cx> d_;
};

/// Real 2D array, row-major.
class Array2R {
public:
  Array2R() = default;
  Array2R(int ny, int nx) : ny_(ny), nx_(nx), d_(static_cast<size_t>(ny) * nx) {}

  int ny() const { return ny_; }
  int nx() const { return nx_; }
  size_t size() const { return d_.size(); }

  double& operator()(int y, int x) { return d_[static_cast<size_t>(y) * nx_ + x]; }
  const double& operator()(int y, int x) const { return d_[static_cast<size_t>(y) * nx_ + x]; }

  double* data() { return d_.data(); }
  const double* data() const { return d_.data(); }

  double max() const;

private:
  int ny_ = 0, nx_ = 0;
  std::vector<double> d_;
};

/// Per-slice complex images of the imaged object, indexed (slice, y, x).
struct SliceStack {
  Array3C data;
  double pixel_size = 1.0;

  SliceStack() = default;
  SliceStack(int mb, int ny, int nx) : data(mb, ny, nx) {
    if (mb < 1 || ny < 2 || nx < 2)
      throw std::invalid_argument("SliceStack: need MB >= 1 and grid >= 2x2");
  }

  int mb() const { return data.n0(); }
  int ny() const { return data.n1(); }
  int nx() const { return data.n2(); }
};

/// Complex coil sensitivity maps per coil and slice, (coil, slice, y, x),
/// with a declared k-space support bound [C_x, C_y] on the single-slice grid.
struct CoilMapSet {
  Array4C maps;
  int support_cx = 0;
  int support_cy = 0;

  CoilMapSet() = default;
  CoilMapSet(int nc, int mb, int ny, int nx) : maps(nc, mb, ny, nx) {
    if (nc < 2) throw std::invalid_argument("CoilMapSet: need N_c >= 2");
  }

  int nc() const { return maps.n0(); }
  int mb() const { return maps.n1(); }
  int ny() const { return maps.n2(); }
  int nx() const { return maps.n3(); }
};

/// Coil-weighted image over the PE-extended FOV, (coil, Y, x).
struct ExtendedImage {
  Array3C data;               // (coil, n*ny, nx)
  int extension_factor = 1;   // n
  int slice_ny = 0;           // PE extent of one slice segment
  std::vector<int> slice_offsets;

  int nc() const { return data.n0(); }
  int eny() const { return data.n1(); }
  int nx() const { return data.n2(); }
};

enum class GridKind { Collapsed, Extended };

enum class MaskGenerator { Uniform, Random, Poisson, Cava, Ga, Full };

const char* maskGeneratorName(MaskGenerator g);
MaskGenerator maskGeneratorFromName(const std::string& name);

/// Boolean PE sampling pattern with declared acceleration R.
struct SamplingMask {
  std::vector<std::uint8_t> keep;
  int R = 1;
  MaskGenerator generator = MaskGenerator::Full;
  std::uint64_t seed = 0;
  int offset = 0;
  int frame = 0;
  bool gap_fallback = false;  // poisson: requested gap was infeasible

  int npe() const { return static_cast<int>(keep.size()); }
  int count() const {
    int c = 0;
    for (auto k : keep) c += (k != 0);
    return c;
  }
  bool at(int i) const { return keep[i] != 0; }
};

/// Multi-coil complex k-space, (coil, ky, kx).
struct KSpaceData {
  Array3C data;
  GridKind grid = GridKind::Collapsed;
  int base_ny = 0;            // single-slice PE extent
  int extension_factor = 1;   // 1 for collapsed
  std::optional<SamplingMask> mask;

  int nc() const { return data.n0(); }
  int nky() const { return data.n1(); }
  int nkx() const { return data.n2(); }
};

/// Sample budget shared by all mask generators: round(npe / R), ties to floor.
int maskBudget(int npe, int R);

}  // namespace smile
