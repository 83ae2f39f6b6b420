#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <unistd.h>

#include "smile/io.hpp"
#include "smile/rng.hpp"
#include "smile/sampling.hpp"

using namespace smile;
namespace fs = std::filesystem;

namespace {
struct TmpDir {
  fs::path path;
  TmpDir() {
    path = fs::temp_directory_path() / ("smile_io_test_" + std::to_string(::getpid()));
    fs::create_directories(path);
  }
  ~TmpDir() { fs::remove_all(path); }
  std::string file(const std::string& name) const { return (path / name).string(); }
};
}  // namespace

TEST_CASE("array container round trip is bit exact at container precision") {
  TmpDir tmp;
  Array3C a(3, 5, 7);
  for (size_t i = 0; i < a.size(); ++i) a.data()[i] = gaussianAt(hashKey(3, i));
  writeArray(tmp.file("a.smle"), a);
  const Array3C b = readArray3(tmp.file("a.smle"));
  REQUIRE(b.n0() == 3);
  REQUIRE(b.n1() == 5);
  REQUIRE(b.n2() == 7);
  // read values match the input at float32 precision
  for (size_t i = 0; i < a.size(); ++i)
    CHECK(std::abs(a.data()[i] - b.data()[i]) <= 1e-6 * std::abs(a.data()[i]));

  // a second write/read cycle is bit-stable: same bytes, same values
  writeArray(tmp.file("b.smle"), b);
  const Array3C c = readArray3(tmp.file("b.smle"));
  for (size_t i = 0; i < b.size(); ++i) CHECK(b.data()[i] == c.data()[i]);
  writeArray(tmp.file("b2.smle"), b);
  CHECK(readTextFile(tmp.file("b.smle")) == readTextFile(tmp.file("b2.smle")));
}

TEST_CASE("truncated and corrupted files are rejected") {
  TmpDir tmp;
  Array2C a(4, 4);
  for (size_t i = 0; i < a.size(); ++i) a.data()[i] = Cx(1, -1);
  writeArray(tmp.file("a.smle"), a);
  std::string bytes = readTextFile(tmp.file("a.smle"));

  writeTextFile(tmp.file("trunc.smle"), bytes.substr(0, bytes.size() / 2));
  CHECK_THROWS_AS(readArray(tmp.file("trunc.smle")), CorruptFile);

  std::string flipped = bytes;
  flipped[20] ^= 0x01;
  writeTextFile(tmp.file("flip.smle"), flipped);
  CHECK_THROWS_AS(readArray(tmp.file("flip.smle")), CorruptFile);

  std::string badmagic = bytes;
  badmagic[0] = 'X';
  writeTextFile(tmp.file("magic.smle"), badmagic);
  CHECK_THROWS_AS(readArray(tmp.file("magic.smle")), CorruptFile);
}

TEST_CASE("empty dims are rejected on write") {
  TmpDir tmp;
  Cx v(0, 0);
  CHECK_THROWS_AS(writeArray(tmp.file("e.smle"), &v, {}), std::invalid_argument);
  CHECK_THROWS_AS(writeArray(tmp.file("e.smle"), &v, {0, 3}), std::invalid_argument);
}

TEST_CASE("mask text format round trips") {
  TmpDir tmp;
  std::vector<SamplingMask> frames;
  for (int f = 0; f < 3; ++f) frames.push_back(cavaMask(24, 3, f, 17));
  writeMasks(tmp.file("m.txt"), frames);
  const auto back = readMasks(tmp.file("m.txt"));
  REQUIRE(back.size() == 3);
  for (int f = 0; f < 3; ++f) {
    CHECK(back[f].keep == frames[f].keep);
    CHECK(back[f].R == 3);
    CHECK(back[f].generator == MaskGenerator::Cava);
    CHECK(back[f].seed == 17);
  }
}

TEST_CASE("magnitude export windows and mosaics") {
  TmpDir tmp;
  Array2R zero(8, 8);
  exportMagnitude(tmp.file("z.pgm"), zero);
  const std::string pgm = readTextFile(tmp.file("z.pgm"));
  CHECK(pgm.rfind("P5", 0) == 0);
  // all payload bytes are black
  const size_t header_end = pgm.find("255\n") + 4;
  for (size_t i = header_end; i < pgm.size(); ++i) CHECK(pgm[i] == 0);

  SliceStack s(3, 4, 5);
  Array2R mosaic = magnitudeMosaic(s);
  CHECK(mosaic.nx() == 3 * 5);
  CHECK(mosaic.ny() == 4);

  Array2R bad(2, 2);
  bad(0, 0) = std::nan("");
  CHECK_THROWS_AS(exportMagnitude(tmp.file("bad.pgm"), bad), std::invalid_argument);
}

TEST_CASE("crc32 matches the standard test vector") {
  const char* s = "123456789";
  CHECK(crc32(reinterpret_cast<const std::uint8_t*>(s), 9) == 0xCBF43926u);
}
