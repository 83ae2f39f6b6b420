#include "smile/io.hpp"

#include <array>
#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace smile {

namespace {

constexpr char kMagic[4] = {'S', 'M', 'L', 'E'};
constexpr std::uint16_t kVersion = 1;
constexpr std::uint16_t kDtypeComplex64 = 1;

std::array<std::uint32_t, 256> makeCrcTable() {
  std::array<std::uint32_t, 256> t{};
  for (std::uint32_t i = 0; i < 256; ++i) {
    std::uint32_t c = i;
    for (int k = 0; k < 8; ++k) c = (c & 1) ? 0xEDB88320u ^ (c >> 1) : c >> 1;
    t[i] = c;
  }
  return t;
}

template <class T>
void appendLE(std::string& out, T v) {
  for (size_t i = 0; i < sizeof(T); ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

void appendF32(std::string& out, float f) {
  std::uint32_t bits;
  std::memcpy(&bits, &f, 4);
  appendLE(out, bits);
}

template <class T>
T readLE(const std::string& s, size_t& off) {
  if (off + sizeof(T) > s.size()) throw CorruptFile("truncated file");
  T v = 0;
  for (size_t i = 0; i < sizeof(T); ++i)
    v |= static_cast<T>(static_cast<std::uint8_t>(s[off + i])) << (8 * i);
  off += sizeof(T);
  return v;
}

}  // namespace

std::uint32_t crc32(const std::uint8_t* data, size_t n, std::uint32_t seed) {
  static const auto table = makeCrcTable();
  std::uint32_t c = seed ^ 0xFFFFFFFFu;
  for (size_t i = 0; i < n; ++i) c = table[(c ^ data[i]) & 0xFF] ^ (c >> 8);
  return c ^ 0xFFFFFFFFu;
}

void atomicWriteFile(const std::string& path, const std::string& bytes) {
  namespace fs = std::filesystem;
  fs::path p(path);
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  const std::string tmp = path + ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw IoError("cannot open for write: " + tmp);
    f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!f) throw IoError("write failed: " + tmp);
  }
  fs::rename(tmp, path);
}

void writeArray(const std::string& path, const Cx* data, const std::vector<std::uint64_t>& dims) {
  if (dims.empty()) throw std::invalid_argument("writeArray: empty dims");
  std::uint64_t n = 1;
  for (auto d : dims) {
    if (d == 0) throw std::invalid_argument("writeArray: zero-sized dimension");
    n *= d;
  }
  std::string out;
  out.reserve(24 + 8 * dims.size() + 8 * n);
  out.append(kMagic, 4);
  appendLE(out, kVersion);
  appendLE(out, kDtypeComplex64);
  appendLE(out, static_cast<std::uint32_t>(dims.size()));
  for (auto d : dims) appendLE(out, d);
  for (std::uint64_t i = 0; i < n; ++i) {
    appendF32(out, static_cast<float>(data[i].real()));
    appendF32(out, static_cast<float>(data[i].imag()));
  }
  const std::uint32_t c = crc32(reinterpret_cast<const std::uint8_t*>(out.data()), out.size());
  appendLE(out, c);
  atomicWriteFile(path, out);
}

LoadedArray readArray(const std::string& path) {
  const std::string s = readTextFile(path);
  if (s.size() < 4 || std::memcmp(s.data(), kMagic, 4) != 0)
    throw CorruptFile("bad magic: " + path);
  if (s.size() < 16) throw CorruptFile("truncated file: " + path);
  const std::uint32_t stored =
      static_cast<std::uint8_t>(s[s.size() - 4]) | static_cast<std::uint8_t>(s[s.size() - 3]) << 8 |
      static_cast<std::uint8_t>(s[s.size() - 2]) << 16 |
      static_cast<std::uint32_t>(static_cast<std::uint8_t>(s[s.size() - 1])) << 24;
  const std::uint32_t computed =
      crc32(reinterpret_cast<const std::uint8_t*>(s.data()), s.size() - 4);
  if (stored != computed) throw CorruptFile("CRC mismatch: " + path);

  size_t off = 4;
  const auto version = readLE<std::uint16_t>(s, off);
  if (version != kVersion) throw UnsupportedFile("unsupported version");
  const auto dtype = readLE<std::uint16_t>(s, off);
  if (dtype != kDtypeComplex64) throw UnsupportedFile("unsupported dtype tag");
  const auto ndim = readLE<std::uint32_t>(s, off);
  if (ndim == 0 || ndim > 16) throw CorruptFile("bad dimension count");
  LoadedArray la;
  std::uint64_t n = 1;
  for (std::uint32_t i = 0; i < ndim; ++i) {
    la.dims.push_back(readLE<std::uint64_t>(s, off));
    if (la.dims.back() == 0) throw CorruptFile("zero-sized dimension");
    n *= la.dims.back();
  }
  if (s.size() != off + 8 * n + 4) throw CorruptFile("payload length mismatch: " + path);
  la.data.resize(n);
  for (std::uint64_t i = 0; i < n; ++i) {
    std::uint32_t re = readLE<std::uint32_t>(s, off);
    std::uint32_t im = readLE<std::uint32_t>(s, off);
    float fr, fi;
    std::memcpy(&fr, &re, 4);
    std::memcpy(&fi, &im, 4);
    la.data[i] = Cx(fr, fi);
  }
  return la;
}

void writeArray(const std::string& path, const Array2C& a) {
  writeArray(path, a.data(), {static_cast<std::uint64_t>(a.ny()), static_cast<std::uint64_t>(a.nx())});
}
void writeArray(const std::string& path, const Array3C& a) {
  writeArray(path, a.data(),
             {static_cast<std::uint64_t>(a.n0()), static_cast<std::uint64_t>(a.n1()),
              static_cast<std::uint64_t>(a.n2())});
}
void writeArray(const std::string& path, const Array4C& a) {
  writeArray(path, a.data(),
             {static_cast<std::uint64_t>(a.n0()), static_cast<std::uint64_t>(a.n1()),
              static_cast<std::uint64_t>(a.n2()), static_cast<std::uint64_t>(a.n3())});
}

Array2C readArray2(const std::string& path) {
  auto la = readArray(path);
  if (la.dims.size() != 2) throw UnsupportedFile("expected 2-D array: " + path);
  Array2C a(static_cast<int>(la.dims[0]), static_cast<int>(la.dims[1]));
  std::copy(la.data.begin(), la.data.end(), a.data());
  return a;
}

Array3C readArray3(const std::string& path) {
  auto la = readArray(path);
  if (la.dims.size() != 3) throw UnsupportedFile("expected 3-D array: " + path);
  Array3C a(static_cast<int>(la.dims[0]), static_cast<int>(la.dims[1]),
            static_cast<int>(la.dims[2]));
  std::copy(la.data.begin(), la.data.end(), a.data());
  return a;
}

Array4C readArray4(const std::string& path) {
  auto la = readArray(path);
  if (la.dims.size() != 4) throw UnsupportedFile("expected 4-D array: " + path);
  Array4C a(static_cast<int>(la.dims[0]), static_cast<int>(la.dims[1]),
            static_cast<int>(la.dims[2]), static_cast<int>(la.dims[3]));
  std::copy(la.data.begin(), la.data.end(), a.data());
  return a;
}

void writeMasks(const std::string& path, const std::vector<SamplingMask>& frames) {
  if (frames.empty()) throw std::invalid_argument("writeMasks: no frames");
  std::ostringstream os;
  const auto& f0 = frames.front();
  os << "# npe=" << f0.npe() << " R=" << f0.R << " generator=" << maskGeneratorName(f0.generator)
     << " seed=" << f0.seed << "\n";
  for (const auto& f : frames) {
    if (f.npe() != f0.npe()) throw std::invalid_argument("writeMasks: frame length mismatch");
    for (int i = 0; i < f.npe(); ++i) os << (f.at(i) ? '1' : '0');
    os << "\n";
  }
  atomicWriteFile(path, os.str());
}

std::vector<SamplingMask> readMasks(const std::string& path) {
  std::istringstream is(readTextFile(path));
  std::string line;
  if (!std::getline(is, line) || line.rfind("# npe=", 0) != 0)
    throw CorruptFile("bad mask header: " + path);
  int npe = 0, R = 1;
  char gen[32] = {0};
  std::uint64_t seed = 0;
  if (std::sscanf(line.c_str(), "# npe=%d R=%d generator=%31s seed=%" SCNu64, &npe, &R, gen,
                  &seed) != 4)
    throw CorruptFile("bad mask header: " + path);
  std::vector<SamplingMask> frames;
  int frame = 0;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    if (static_cast<int>(line.size()) != npe) throw CorruptFile("mask line length mismatch");
    SamplingMask m;
    m.keep.resize(npe);
    for (int i = 0; i < npe; ++i) {
      if (line[i] != '0' && line[i] != '1') throw CorruptFile("mask line must be 0/1");
      m.keep[i] = line[i] == '1';
    }
    m.R = R;
    m.generator = maskGeneratorFromName(gen);
    m.seed = seed;
    m.frame = frame++;
    frames.push_back(std::move(m));
  }
  if (frames.empty()) throw CorruptFile("mask file has no frames: " + path);
  return frames;
}

void exportMagnitude(const std::string& path, const Array2R& mag, double lo, double hi) {
  for (int y = 0; y < mag.ny(); ++y)
    for (int x = 0; x < mag.nx(); ++x)
      if (!std::isfinite(mag(y, x)))
        throw std::invalid_argument("exportMagnitude: non-finite value at (" + std::to_string(y) +
                                    "," + std::to_string(x) + ")");
  if (hi <= lo) {
    lo = 0;
    hi = mag.max();
    if (hi <= 0) hi = 1;
  }
  std::ostringstream os;
  os << "P5\n" << mag.nx() << " " << mag.ny() << "\n255\n";
  for (int y = 0; y < mag.ny(); ++y)
    for (int x = 0; x < mag.nx(); ++x) {
      double v = (mag(y, x) - lo) / (hi - lo);
      v = v < 0 ? 0 : (v > 1 ? 1 : v);
      os.put(static_cast<char>(static_cast<int>(std::lround(v * 255.0))));
    }
  atomicWriteFile(path, os.str());
  atomicWriteFile(path + ".window.txt",
                  "lo = " + formatDouble(lo) + "\nhi = " + formatDouble(hi) + "\n");
}

Array2R magnitude(const Array2C& a) {
  Array2R m(a.ny(), a.nx());
  for (int y = 0; y < a.ny(); ++y)
    for (int x = 0; x < a.nx(); ++x) m(y, x) = std::abs(a(y, x));
  return m;
}

Array2R magnitudeMosaic(const SliceStack& s) {
  Array2R m(s.ny(), s.mb() * s.nx());
  for (int sl = 0; sl < s.mb(); ++sl)
    for (int y = 0; y < s.ny(); ++y)
      for (int x = 0; x < s.nx(); ++x) m(y, sl * s.nx() + x) = std::abs(s.data(sl, y, x));
  return m;
}

void writeTextFile(const std::string& path, const std::string& text) {
  atomicWriteFile(path, text);
}

std::string readTextFile(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open: " + path);
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

void writeCsv(const std::string& path, const std::string& header,
              const std::vector<std::vector<std::string>>& rows) {
  std::ostringstream os;
  os << header << "\n";
  for (const auto& r : rows) {
    for (size_t i = 0; i < r.size(); ++i) os << (i ? "," : "") << r[i];
    os << "\n";
  }
  atomicWriteFile(path, os.str());
}

std::string formatDouble(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}

}  // namespace smile
