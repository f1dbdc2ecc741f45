#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "clir/container.hpp"
#include "clir/rng.hpp"
#include "doctest.h"

namespace fs = std::filesystem;
using clir::Rng;

TEST_CASE("rng: same seed reproduces the full draw sequence") {
  Rng a(42), b(42);
  for (int i = 0; i < 200; ++i) {
    CHECK(a.uniform() == b.uniform());
    CHECK(a.uniform_int(97) == b.uniform_int(97));
    CHECK(a.normal() == b.normal());
    CHECK(a.gamma(0.7 + i % 5) == b.gamma(0.7 + i % 5));
  }
  CHECK(a.dirichlet(0.5, 7) == b.dirichlet(0.5, 7));
}

TEST_CASE("rng: different seeds diverge") {
  Rng a(1), b(2);
  int same = 0;
  for (int i = 0; i < 100; ++i)
    if (a.raw() == b.raw()) ++same;
  CHECK(same == 0);
}

TEST_CASE("rng: uniform stays in [0,1) and fills the range") {
  Rng r(7);
  double lo = 1.0, hi = 0.0;
  for (int i = 0; i < 10000; ++i) {
    const double u = r.uniform();
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
    lo = std::min(lo, u);
    hi = std::max(hi, u);
  }
  CHECK(lo < 0.01);
  CHECK(hi > 0.99);
}

TEST_CASE("rng: uniform_int covers every residue") {
  Rng r(11);
  std::vector<int> hits(13, 0);
  for (int i = 0; i < 5000; ++i) {
    const auto v = r.uniform_int(13);
    REQUIRE(v < 13);
    ++hits[static_cast<std::size_t>(v)];
  }
  for (int h : hits) CHECK(h > 5000 / 13 / 2);
}

TEST_CASE("rng: normal moments are plausible") {
  Rng r(3);
  double sum = 0.0, sumsq = 0.0;
  const int n = 20000;
  for (int i = 0; i < n; ++i) {
    const double x = r.normal();
    sum += x;
    sumsq += x * x;
  }
  CHECK(std::abs(sum / n) < 0.05);
  CHECK(sumsq / n == doctest::Approx(1.0).epsilon(0.05));
}

TEST_CASE("rng: gamma is positive with mean near the shape") {
  Rng r(5);
  for (double shape : {0.3, 1.0, 4.5}) {
    double sum = 0.0;
    const int n = 20000;
    for (int i = 0; i < n; ++i) {
      const double x = r.gamma(shape);
      REQUIRE(x > 0.0);
      sum += x;
    }
    CHECK(sum / n == doctest::Approx(shape).epsilon(0.05));
  }
}

TEST_CASE("rng: dirichlet samples live on the simplex") {
  Rng r(9);
  for (int rep = 0; rep < 50; ++rep) {
    const auto p = r.dirichlet(0.3, 6);
    REQUIRE(p.size() == 6);
    double sum = 0.0;
    for (double x : p) {
      CHECK(x > 0.0);
      sum += x;
    }
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("rng: categorical respects zero weights and rough proportions") {
  Rng r(13);
  const std::vector<double> w = {0.0, 3.0, 1.0, 0.0};
  std::vector<int> hits(4, 0);
  for (int i = 0; i < 8000; ++i) ++hits[r.categorical(w)];
  CHECK(hits[0] == 0);
  CHECK(hits[3] == 0);
  CHECK(static_cast<double>(hits[1]) / hits[2] == doctest::Approx(3.0).epsilon(0.15));
}

TEST_CASE("bytes: every scalar type round-trips bit-exactly") {
  clir::io::ByteWriter w;
  w.put_u8(0xAB);
  w.put_u16(0xBEEF);
  w.put_u32(0xDEADBEEFu);
  w.put_u64(0x0123456789ABCDEFull);
  w.put_i64(-42);
  w.put_f64(-0.0);
  w.put_f64(0.1);
  w.put_f64(std::numeric_limits<double>::infinity());
  w.put_string("grüße");
  w.put_string("");
  const std::vector<double> xs = {1.5, -2.5, 1e-300};
  w.put_f64_span(xs);
  const std::vector<std::int64_t> is = {-1, 0, 1LL << 40};
  w.put_i64_span(is);

  clir::io::ByteReader r(w.bytes());
  CHECK(r.get_u8() == 0xAB);
  CHECK(r.get_u16() == 0xBEEF);
  CHECK(r.get_u32() == 0xDEADBEEFu);
  CHECK(r.get_u64() == 0x0123456789ABCDEFull);
  CHECK(r.get_i64() == -42);
  const double neg_zero = r.get_f64();
  CHECK(neg_zero == 0.0);
  CHECK(std::signbit(neg_zero));
  CHECK(r.get_f64() == 0.1);
  CHECK(std::isinf(r.get_f64()));
  CHECK(r.get_string() == "grüße");
  CHECK(r.get_string() == "");
  CHECK(r.get_f64_vec(xs.size()) == xs);
  CHECK(r.get_i64_vec(is.size()) == is);
  CHECK(r.exhausted());
}

TEST_CASE("bytes: reading past the end throws") {
  clir::io::ByteWriter w;
  w.put_u16(7);
  clir::io::ByteReader r(w.bytes());
  CHECK(r.get_u16() == 7);
  CHECK_THROWS(r.get_u32());
}

TEST_CASE("container: header and sections round-trip, no tmp file remains") {
  const fs::path path = fs::temp_directory_path() / "clir_test_container.bin";
  clir::io::ContainerHeader header;
  header.type = "demo";
  header.languages = {"de", "en"};
  header.vocab_size = 123;
  header.extra["topics"] = 4;

  clir::io::ByteWriter payload;
  payload.put_f64(3.25);
  payload.put_string("inner");

  clir::io::ContainerWriter writer(path, header);
  writer.add_section("alpha", payload);
  writer.add_section("empty", std::span<const std::uint8_t>{});
  writer.finish();
  CHECK_FALSE(fs::exists(path.string() + ".tmp"));

  clir::io::ContainerReader reader(path);
  CHECK(reader.header().format_version == 1);
  CHECK(reader.header().type == "demo");
  CHECK(reader.header().languages == std::vector<std::string>{"de", "en"});
  CHECK(reader.header().vocab_size == 123);
  CHECK(reader.header_json().at("topics").get<int>() == 4);
  CHECK(reader.has_section("alpha"));
  CHECK(reader.has_section("empty"));
  CHECK_FALSE(reader.has_section("missing"));
  CHECK_THROWS(reader.section("missing"));

  clir::io::ByteReader r(reader.section("alpha"));
  CHECK(r.get_f64() == 3.25);
  CHECK(r.get_string() == "inner");

  CHECK_NOTHROW(clir::io::expect_type(reader, "demo"));
  CHECK_THROWS(clir::io::expect_type(reader, "other"));
  fs::remove(path);
}
