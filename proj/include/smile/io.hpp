#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "smile/types.hpp"

namespace smile {

struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct CorruptFile : IoError {
  using IoError::IoError;
};
struct UnsupportedFile : IoError {
  using IoError::IoError;
};

std::uint32_t crc32(const std::uint8_t* data, size_t n, std::uint32_t seed = 0);

/// Writes bytes to a temporary file in the same directory, then renames.
void atomicWriteFile(const std::string& path, const std::string& bytes);

// "SMLE" container: magic, u16 version, u16 dtype tag (1 = complex64),
// u32 ndim, u64 dims[], little-endian interleaved float32 (re, im) payload,
// trailing CRC32 over everything before it. Computation runs in double;
// files store complex64.
void writeArray(const std::string& path, const Cx* data, const std::vector<std::uint64_t>& dims);

struct LoadedArray {
  std::vector<std::uint64_t> dims;
  std::vector<Cx> data;
};
LoadedArray readArray(const std::string& path);

void writeArray(const std::string& path, const Array2C& a);
void writeArray(const std::string& path, const Array3C& a);
void writeArray(const std::string& path, const Array4C& a);
Array2C readArray2(const std::string& path);
Array3C readArray3(const std::string& path);
Array4C readArray4(const std::string& path);

/// Mask text format: header line "# npe=<n> R=<r> generator=<g> seed=<s>",
/// then one 0/1 line per frame.
void writeMasks(const std::string& path, const std::vector<SamplingMask>& frames);
std::vector<SamplingMask> readMasks(const std::string& path);

/// 8-bit grayscale PGM with windowing [lo, hi]; the window used is recorded
/// in a sidecar "<path>.window.txt". hi <= lo means auto [0, max].
void exportMagnitude(const std::string& path, const Array2R& mag, double lo = 0, double hi = -1);

/// Side-by-side mosaic of per-slice magnitudes, width = mb * nx.
Array2R magnitudeMosaic(const SliceStack& s);
Array2R magnitude(const Array2C& a);

void writeTextFile(const std::string& path, const std::string& text);
std::string readTextFile(const std::string& path);

/// CSV with fixed, locale-independent formatting (deterministic output).
void writeCsv(const std::string& path, const std::string& header,
              const std::vector<std::vector<std::string>>& rows);

std::string formatDouble(double v);

}  // namespace smile
