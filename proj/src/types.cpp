#include "smile/types.hpp"

#include <cmath>

namespace smile {

namespace {
double normOf(const Cx* d, size_t n) {
  double s = 0;
  for (size_t i = 0; i < n; ++i) s += std::norm(d[i]);
  return std::sqrt(s);
}
}  // namespace

double Array2C::norm() const { return normOf(d_.data(), d_.size()); }
double Array3C::norm() const { return normOf(d_.data(), d_.size()); }

double Array2R::max() const {
  double m = 0;
  for (double v : d_) m = std::max(m, v);
  return m;
}

const char* maskGeneratorName(MaskGenerator g) {
  switch (g) {
    case MaskGenerator::Uniform: return "uniform";
    case MaskGenerator::Random: return "random";
    case MaskGenerator::Poisson: return "poisson";
    case MaskGenerator::Cava: return "cava";
    case MaskGenerator::Ga: return "ga";
    case MaskGenerator::Full: return "full";
  }
  return "unknown";
}

MaskGenerator maskGeneratorFromName(const std::string& name) {
  if (name == "uniform") return MaskGenerator::Uniform;
  if (name == "random") return MaskGenerator::Random;
  if (name == "poisson") return MaskGenerator::Poisson;
  if (name == "cava") return MaskGenerator::Cava;
  if (name == "ga") return MaskGenerator::Ga;
  if (name == "full") return MaskGenerator::Full;
  throw std::invalid_argument("unknown mask generator: " + name);
}

int maskBudget(int npe, int R) {
  if (R < 1 || R > npe) throw std::invalid_argument("maskBudget: need 1 <= R <= N_PE");
  const int twice = 2 * npe;
  int b;
  if (twice % R == 0 && (twice / R) % 2 == 1) {
    b = (twice / R - 1) / 2;  // exact .5 ties go down
  } else {
    b = static_cast<int>(std::lround(static_cast<double>(npe) / R));
  }
  return b < 1 ? 1 : b;
}

}  // namespace smile
