#pragma once

#include "smile/types.hpp"

namespace smile {

// Centered unitary DFT conventions used throughout: the DC component lives at
// index floor(N/2) in every dimension and ||fft2c(x)|| = ||x||. Concretely,
// fft2c = fftshift o FFT o ifftshift scaled by 1/sqrt(Ny*Nx).

void fft2c(const Cx* in, Cx* out, int ny, int nx);
void ifft2c(const Cx* in, Cx* out, int ny, int nx);

Array2C fft2c(const Array2C& img);
Array2C ifft2c(const Array2C& ks);

/// Per-plane transforms of a (batch, ny, nx) array.
Array3C fft2cAll(const Array3C& a);
Array3C ifft2cAll(const Array3C& a);

void fft1c(const Cx* in, Cx* out, int n);
void ifft1c(const Cx* in, Cx* out, int n);

/// Batched 1D transforms along the PE axis used by the per-column SENSE
/// solver: `howmany` contiguous lines of length n, forward or inverse,
/// centered and unitary. Plans are cached per (n, howmany, direction).
void fft1cBatch(const Cx* in, Cx* out, int n, int howmany, bool forward);

}  // namespace smile
