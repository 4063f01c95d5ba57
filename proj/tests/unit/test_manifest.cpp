#include <doctest.h>

#include <fstream>

#include "fabinspect/digest.hpp"
#include "fabinspect/error.hpp"
#include "fabinspect/manifest.hpp"
#include "fabinspect/random.hpp"
#include "oracles.hpp"

using namespace fabinspect;

namespace {

Errc read_error(const std::filesystem::path& path, std::string* message = nullptr) {
  try {
    read_manifest(path);
  } catch (const Error& e) {
    if (message) *message = e.what();
    return e.code();
  }
  FAIL("expected read_manifest to throw");
  return Errc::io;
}

}  // namespace

TEST_SUITE("manifest") {
  TEST_CASE("labels") {
    CHECK(to_string(Label::defect_free) == "defect_free");
    CHECK(parse_label("defective") == Label::defective);
    CHECK_FALSE(parse_label("broken").has_value());
    CHECK(static_cast<int>(Label::defect_free) == 0);
  }

  TEST_CASE("write then read") {
    const auto dir = oracle::scratch_dir("manifest");
    const std::vector<ManifestRow> rows{{"a.pgm", "1", Label::defect_free}, {"sub/b.pgm", "12", Label::defective}};
    write_manifest(dir / "m.csv", rows);
    const auto m = read_manifest(dir / "m.csv");
    CHECK(m.rows == rows);
    CHECK(m.resolve(m.rows[1]) == dir / "sub/b.pgm");
    CHECK(format_manifest(rows) == "path,fabric_type,label\na.pgm,1,defect_free\nsub/b.pgm,12,defective\n");
  }

  TEST_CASE("malformed files name the line") {
    const auto dir = oracle::scratch_dir("manifest_bad");
    std::ofstream(dir / "noheader.csv") << "a.pgm,1,defective\n";
    CHECK(read_error(dir / "noheader.csv") == Errc::config);
    std::ofstream(dir / "fields.csv") << "path,fabric_type,label\na.pgm,1\n";
    std::string msg;
    CHECK(read_error(dir / "fields.csv", &msg) == Errc::config);
    CHECK(msg.find(":2:") != std::string::npos);
    std::ofstream(dir / "label.csv") << "path,fabric_type,label\na.pgm,1,defective\nb.pgm,1,torn\n";
    CHECK(read_error(dir / "label.csv", &msg) == Errc::config);
    CHECK(msg.find(":3:") != std::string::npos);
    CHECK(read_error(dir / "absent.csv") == Errc::missing_file);
  }

  TEST_CASE("fabric type ordering") {
    CHECK(fabric_type_less("2", "10"));
    CHECK_FALSE(fabric_type_less("10", "2"));
    CHECK(fabric_type_less("10", "2a"));
    CHECK(fabric_type_less("cotton", "silk"));
    Manifest m;
    m.rows = {{"x", "10", Label::defective}, {"y", "2", Label::defective}, {"z", "10", Label::defect_free}};
    CHECK(m.fabric_types() == std::vector<std::string>{"2", "10"});
  }
}

TEST_SUITE("random") {
  TEST_CASE("streams are reproducible and distinct") {
    Rng a(5), b(5), c(6);
    for (int i = 0; i < 10; ++i) {
      const auto x = a.next_u64();
      CHECK(x == b.next_u64());
      CHECK(x != c.next_u64());
    }
    CHECK(mix_seed(1, 0) != mix_seed(1, 1));
    CHECK(mix_seed(1, 0) != mix_seed(2, 0));
  }

  TEST_CASE("distribution ranges and moments") {
    Rng rng(9);
    double sum = 0.0, sq = 0.0;
    const int n = 200000;
    for (int i = 0; i < n; ++i) {
      const double u = rng.uniform();
      CHECK_UNARY(u >= 0.0 && u < 1.0);
      CHECK(rng.below(7) < 7);
      const double z = rng.normal();
      sum += z;
      sq += z * z;
    }
    CHECK(std::abs(sum / n) < 0.01);
    CHECK(std::abs(sq / n - 1.0) < 0.02);
  }

  TEST_CASE("shuffle is a permutation") {
    std::vector<int> v(50);
    std::iota(v.begin(), v.end(), 0);
    auto w = v;
    Rng rng(1);
    rng.shuffle(std::span<int>(w));
    CHECK(w != v);
    std::sort(w.begin(), w.end());
    CHECK(w == v);
  }
}

TEST_SUITE("digest") {
  TEST_CASE("FNV-1a reference values") {
    CHECK(fnv1a64("") == 0xcbf29ce484222325ull);
    CHECK(fnv1a64("a") == 0xaf63dc4c8601ec8cull);
    CHECK(fnv1a64("foobar") == 0x85944171f73967e8ull);
    CHECK(to_hex(0xabcull) == "0000000000000abc");
  }

  TEST_CASE("file digest") {
    const auto dir = oracle::scratch_dir("digest");
    std::ofstream(dir / "f.txt", std::ios::binary) << "foobar";
    CHECK(file_digest(dir / "f.txt") == "85944171f73967e8");
  }
}
