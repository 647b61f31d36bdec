#include <doctest.h>

#include <array>
#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "rss/dataset.hpp"
#include "rss/error.hpp"
#include "rss/io.hpp"
#include "rss/rng.hpp"
#include "test_util.hpp"

namespace fs = std::filesystem;
using namespace rss;

namespace {

Dataset random_dataset(Index n, Index p, std::uint64_t seed, bool with_geometry) {
  auto rng = derive_stream(seed, 99);
  RowMatrix X(n, p);
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < p; ++j) X(i, j) = rng.normal() * 1e3;
  }
  Labels y(n);
  for (Index i = 0; i < n; ++i) y[i] = rng.uniform() < 0.5 ? 1 : -1;
  std::optional<GridGeometry> geom;
  if (with_geometry) {
    // p distinct cells of a 7x8x9 grid, in shuffled order
    std::vector<Coord> cells;
    for (int z = 0; z < 9; ++z)
      for (int yy = 0; yy < 8; ++yy)
        for (int x = 0; x < 7; ++x) cells.push_back({x, yy, z});
    rng.shuffle(cells);
    cells.resize(static_cast<std::size_t>(p));
    geom.emplace(GridDims{7, 8, 9}, cells);
  }
  return Dataset(std::move(X), std::move(y), std::move(geom));
}

}  // namespace

TEST_CASE("derive_stream is deterministic and separates stream ids") {
  std::array<std::uint8_t, 32> a{}, b{}, c{};
  auto s1 = derive_stream(42, 0);
  auto s2 = derive_stream(42, 0);
  auto s3 = derive_stream(42, 1);
  s1.fill_bytes(a);
  s2.fill_bytes(b);
  s3.fill_bytes(c);
  CHECK(a == b);
  CHECK(a != c);
}

TEST_CASE("RngStream (42, 7) reproduces a frozen sequence") {
  // Frozen from a reference run; guards the platform-independence contract.
  auto s = derive_stream(42, 7);
  const std::uint64_t first = s.next_u64();
  auto t = derive_stream(42, 7);
  CHECK(t.next_u64() == first);
  CHECK(first == test::kFrozenFirstWord42_7);
}

TEST_CASE("RngStream helpers") {
  auto rng = derive_stream(3, 4);
  SUBCASE("below stays in range and hits every value") {
    std::array<int, 7> seen{};
    for (int i = 0; i < 7000; ++i) {
      const auto v = rng.below(7);
      REQUIRE(v < 7);
      ++seen[v];
    }
    for (int c : seen) CHECK(c > 800);
  }
  SUBCASE("uniform in [0,1)") {
    double sum = 0;
    for (int i = 0; i < 20000; ++i) {
      const double u = rng.uniform();
      REQUIRE(u >= 0.0);
      REQUIRE(u < 1.0);
      sum += u;
    }
    CHECK(sum / 20000 == doctest::Approx(0.5).epsilon(0.02));
  }
  SUBCASE("normal moments") {
    double s1 = 0, s2 = 0;
    const int N = 50000;
    for (int i = 0; i < N; ++i) {
      const double z = rng.normal();
      s1 += z;
      s2 += z * z;
    }
    CHECK(std::abs(s1 / N) < 0.02);
    CHECK(s2 / N == doctest::Approx(1.0).epsilon(0.03));
  }
  SUBCASE("sample without replacement") {
    const auto s = rng.sample_without_replacement(100, 50);
    CHECK(s.size() == 50);
    CHECK(std::is_sorted(s.begin(), s.end()));
    CHECK(std::adjacent_find(s.begin(), s.end()) == s.end());
    CHECK(s.back() < 100);
  }
}

TEST_CASE("Dataset invariants") {
  RowMatrix X = RowMatrix::Zero(2, 2);
  CHECK_THROWS_AS(Dataset(X, Labels::Constant(2, 0)), Error);
  CHECK_THROWS_AS(Dataset(X, Labels::Constant(3, 1)), Error);
  RowMatrix bad = X;
  bad(0, 0) = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(Dataset(bad, Labels::Constant(2, 1)), Error);
  CHECK_THROWS_AS(GridGeometry({2, 2, 1}, {{0, 0, 0}, {0, 0, 0}}), Error);
  CHECK_THROWS_AS(GridGeometry({2, 2, 1}, {{2, 0, 0}}), Error);
  CHECK_THROWS_AS(Dataset(X, Labels::Constant(2, 1), GridGeometry({2, 2, 1}, {{0, 0, 0}})), Error);
}

TEST_CASE("Parcellation rejects unused cluster ids and out-of-range ids") {
  CHECK_NOTHROW(Parcellation({0, 1, 1, 0}, 2));
  CHECK_THROWS_AS(Parcellation({0, 2, 2, 0}, 3), Error);
  CHECK_THROWS_AS(Parcellation({0, 1, 5}, 2), Error);
  CHECK_THROWS_AS(Parcellation({0, -1}, 1), Error);
  const Parcellation parc({1, 0, 1}, 2);
  CHECK(parc.members()[0] == std::vector<std::int32_t>{1});
  CHECK(parc.members()[1] == std::vector<std::int32_t>{0, 2});
}

TEST_CASE("container round-trip is the identity") {
  test::TempDir tmp;
  for (std::uint64_t seed = 0; seed < 8; ++seed) {
    const bool geom = seed % 2 == 0;
    const auto d = random_dataset(1 + static_cast<Index>(seed % 5) * 3, geom ? 50 : 7 + static_cast<Index>(seed), seed, geom);
    const auto dir = tmp.path() / ("d" + std::to_string(seed));
    io::save_dataset(d, dir);
    const auto back = io::load_dataset(dir);
    CHECK(back == d);
    CHECK(back.X().cwiseEqual(d.X()).all());
  }
  SUBCASE("geometry mask order survives") {
    const auto d = random_dataset(10, 50, 123, true);
    io::save_dataset(d, tmp.path() / "g");
    const auto back = io::load_dataset(tmp.path() / "g");
    REQUIRE(back.geometry());
    CHECK(back.geometry()->mask() == d.geometry()->mask());
  }
}

TEST_CASE("container format details") {
  test::TempDir tmp;
  RowMatrix X(4, 3);
  X << 1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12;
  Labels y(4);
  y << 1, -1, 1, -1;
  const Dataset d(X, y);
  const auto dir = tmp.path() / "c";
  io::save_dataset(d, dir);

  const auto manifest = nlohmann::json::parse(std::ifstream(dir / "manifest.json"));
  CHECK(manifest["format"] == "RSSD");
  CHECK(manifest["version"] == 1);
  CHECK(manifest["dtype"] == "f64le");
  CHECK(manifest["layout"] == "row-major");
  CHECK(manifest["grid_dims"].is_null());
  CHECK(manifest["labels"] == nlohmann::json({1, -1, 1, -1}));
  CHECK(fs::file_size(dir / "X.bin") == 4 + 4 * 3 * 8);
  CHECK(!fs::exists(dir / "mask.bin"));

  std::ifstream bin(dir / "X.bin", std::ios::binary);
  std::array<char, 12> head{};
  bin.read(head.data(), head.size());
  CHECK(std::string(head.data(), 4) == "RSS1");
  // X(0, 0) = 1.0 little-endian
  CHECK(static_cast<unsigned char>(head[10]) == 0xF0);
  CHECK(static_cast<unsigned char>(head[11]) == 0x3F);

  const auto back = io::load_dataset(dir);
  CHECK(back.n() == 4);
  CHECK(back.p() == 3);
}

TEST_CASE("load_dataset error paths") {
  test::TempDir tmp;
  RowMatrix X = RowMatrix::Ones(4, 3);
  Labels y(4);
  y << 1, -1, 1, -1;
  const auto dir = tmp.path() / "c";
  io::save_dataset(Dataset(X, y), dir);

  SUBCASE("missing file") { CHECK_THROWS_AS(io::load_dataset(tmp.path() / "nope"), Error); }
  SUBCASE("dimension mismatch: 3 rows in the blob") {
    std::string blob = test::read_bytes(dir / "X.bin");
    blob.resize(4 + 3 * 3 * 8);
    test::write_bytes(dir / "X.bin", blob);
    CHECK_THROWS_WITH_AS(io::load_dataset(dir), doctest::Contains("dimension mismatch"), Error);
  }
  SUBCASE("magic mismatch") {
    std::string blob = test::read_bytes(dir / "X.bin");
    blob[0] = 'X';
    test::write_bytes(dir / "X.bin", blob);
    CHECK_THROWS_WITH_AS(io::load_dataset(dir), doctest::Contains("magic"), Error);
  }
  SUBCASE("label 0") {
    auto m = nlohmann::json::parse(std::ifstream(dir / "manifest.json"));
    m["labels"][2] = 0;
    test::write_bytes(dir / "manifest.json", m.dump());
    CHECK_THROWS_WITH_AS(io::load_dataset(dir), doctest::Contains("label domain"), Error);
  }
  SUBCASE("NaN in matrix") {
    std::string blob = test::read_bytes(dir / "X.bin");
    const std::uint64_t nan_bits = 0x7FF8000000000000ULL;
    for (int b = 0; b < 8; ++b) blob[4 + 8 + b] = static_cast<char>((nan_bits >> (8 * b)) & 0xFF);
    test::write_bytes(dir / "X.bin", blob);
    CHECK_THROWS_AS(io::load_dataset(dir), Error);
  }
}

TEST_CASE("parcellation CSV round-trip") {
  test::TempDir tmp;
  const Parcellation parc({2, 0, 1, 1, 2, 0}, 3);
  io::save_parcellation(parc, tmp.path() / "p.csv");
  CHECK(io::load_parcellation(tmp.path() / "p.csv") == parc);
  CHECK(test::read_bytes(tmp.path() / "p.csv").rfind("feature,cluster\n0,2\n", 0) == 0);
}
