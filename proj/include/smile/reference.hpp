#pragma once

#include "smile/types.hpp"

namespace smile::ref {

/// Naive O(N^2 M^2) centered unitary DFT; the serial reference the FFT path
/// is tested against.
Array2C dft2c(const Array2C& img, bool forward);

/// Direct per-pixel matched-filter combine written from the formula.
Array2C matchedFilterDirect(const Array3C& coil_images, const Array4C& maps, int slice);

/// Straight-line SSIM over the full image (no support restriction), used to
/// cross-check the production implementation on small inputs.
double ssimDirect(const Array2R& a, const Array2R& b, int window, double k1, double k2, double L);

}  // namespace smile::ref
