#include <doctest.h>

#include "fabinspect/digest.hpp"
#include "fabinspect/error.hpp"
#include "fabinspect/intensity.hpp"
#include "fabinspect/random.hpp"
#include "fabinspect/synthfab.hpp"
#include "fabinspect/uniformity.hpp"
#include "oracles.hpp"

using namespace fabinspect;

namespace {

double mean_abs_diff(const GrayImage& a, const GrayImage& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += std::abs(double(a.pixels()[i]) - double(b.pixels()[i]));
  return s / static_cast<double>(a.size());
}

GrayImage textured(std::uint64_t seed) {
  WeaveParams p;
  p.freq_x = 20;
  p.freq_y = 25;
  p.amplitude = 40;
  p.noise_sigma = 6;
  p.seed = seed;
  return generate_weave(p, 200, 240);
}

}  // namespace

TEST_SUITE("synthfab") {
  TEST_CASE("noise-free weave is the exact product of sines") {
    WeaveParams p;
    p.freq_x = 5;
    p.freq_y = 7;
    p.amplitude = 50;
    p.base = 120;
    const auto img = generate_weave(p, 40, 60);
    for (std::size_t x = 0; x < 40; ++x) {
      for (std::size_t y = 0; y < 60; ++y) {
        const double v = 120 + 50 * std::sin(2 * std::numbers::pi * 5 * x / 40.0) *
                                   std::sin(2 * std::numbers::pi * 7 * y / 60.0);
        CHECK(img(x, y) == static_cast<int>(std::floor(v + 0.5)));
      }
    }
    p.amplitude = 0;
    CHECK(generate_weave(p, 40, 60) == GrayImage(40, 60, 120));
  }

  TEST_CASE("weave validation and determinism") {
    WeaveParams p;
    p.freq_x = 20;
    CHECK_THROWS_AS(generate_weave(p, 40, 60), Error);
    p.freq_x = 5;
    p.base = 240;
    p.amplitude = 30;
    CHECK_THROWS_AS(generate_weave(p, 40, 60), Error);
    CHECK(textured(4) == textured(4));
    CHECK_FALSE(textured(4) == textured(5));
  }

  TEST_CASE("noise matches the requested sigma") {
    WeaveParams p;
    p.amplitude = 0;
    p.base = 128;
    p.noise_sigma = 10;
    for (std::size_t blob : {0u, 9u}) {
      p.blob_scale = blob;
      const auto img = generate_weave(p, 200, 200);
      double s = 0, sq = 0;
      for (auto v : img.pixels()) {
        s += v;
        sq += double(v) * v;
      }
      const double n = static_cast<double>(img.size());
      const double sd = std::sqrt(sq / n - (s / n) * (s / n));
      CHECK(sd == doctest::Approx(10.0).epsilon(0.1));
    }
  }

  TEST_CASE("recovers the generating frequency within one bin") {
    for (auto [fx, fy] : {std::pair{24.0, 30.0}, {12.0, 9.0}, {40.0, 50.0}}) {
      WeaveParams p;
      p.freq_x = fx;
      p.freq_y = fy;
      p.amplitude = 60;
      const auto img = generate_weave(p, 480, 600);
      const auto tf = block_texture_frequency(extract_blocks(img, {})[0]);
      // A 360 block sees fx * 360/480 and fy * 360/600 cycles.
      CHECK(std::abs(tf.value - std::hypot(fx * 0.75, fy * 0.6)) < 1.0);
    }
  }

  TEST_CASE("pressing gradient") {
    const auto img = textured(1);
    CHECK(apply_pressing_gradient(img, 0.0) == img);
    const GrayImage flat(11, 21, 200);
    const auto g = apply_pressing_gradient(flat, 0.25);
    CHECK(g(0, 0) == 150);
    CHECK(g(10, 20) == 150);
    CHECK(g(5, 10) == 200);
    CHECK_THROWS_AS(apply_pressing_gradient(img, 1.5), Error);
  }

  TEST_CASE("intensity adjustment absorbs a gentle pressing gradient") {
    // Pilot runs: weak domes stay well below 8 grey levels of mean absolute
    // difference; strengths of 0.2 and more do not (the dome's higher
    // harmonics survive the five-bin removal).
    Rng rng(11);
    for (int i = 0; i < 10; ++i) {
      WeaveParams p;
      p.freq_x = rng.uniform(6, 40);
      p.freq_y = rng.uniform(6, 50);
      p.amplitude = 40;
      p.base = 120;
      p.seed = i;
      const auto img = generate_weave(p, 480, 600);
      const double mad = mean_abs_diff(adjust_intensity(apply_pressing_gradient(img, 0.05)), adjust_intensity(img));
      CAPTURE(i);
      CHECK(mad < 8.0);
    }
  }

  TEST_CASE("defects stay inside their region") {
    const auto img = textured(2);
    for (auto kind : {DefectKind::hole, DefectKind::missing_yarn, DefectKind::wrinkle}) {
      for (std::uint64_t seed = 0; seed < 6; ++seed) {
        DefectSpec d;
        d.kind = kind;
        d.row = 90 + seed * 3;
        d.col = 110 + seed * 5;
        d.extent = 12 + seed;
        d.intensity_delta = -70;
        const auto out = inject_defect(img, d, seed);
        std::size_t changed = 0;
        for (std::size_t r = 0; r < img.height(); ++r) {
          for (std::size_t c = 0; c < img.width(); ++c) {
            if (out(r, c) == img(r, c)) continue;
            ++changed;
            const double dr = double(r) - double(d.row), dc = double(c) - double(d.col);
            if (kind == DefectKind::hole) {
              CHECK(std::hypot(dr, dc) <= d.extent);
            } else if (kind == DefectKind::missing_yarn) {
              CHECK(std::min(std::abs(dr), std::abs(dc)) <= d.extent / 2);
            } else {
              // Within extent of a segment through the locus.
              CHECK(std::hypot(dr, dc) <= 5 * d.extent);
            }
          }
        }
        CHECK(changed > 0);
      }
    }
  }

  TEST_CASE("minimal defect changes a pixel; bad regions throw") {
    const GrayImage flat(30, 30, 120);
    DefectSpec d;
    d.row = 15;
    d.col = 15;
    d.extent = 3;
    CHECK_FALSE(inject_defect(flat, d, 0) == flat);
    d.extent = 2;
    CHECK_THROWS_AS(inject_defect(flat, d, 0), Error);
    d.extent = 10;
    d.row = 5;
    CHECK_THROWS_AS(inject_defect(flat, d, 0), Error);
  }

  TEST_CASE("a dark hole lowers the block texture frequency") {
    int lowered = 0;
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
      WeaveParams p;
      p.freq_x = 30;
      p.freq_y = 30;
      p.amplitude = 30;
      p.noise_sigma = 4;
      p.seed = seed;
      const auto img = generate_weave(p, 200, 200);
      DefectSpec d;
      d.row = 100;
      d.col = 100;
      d.extent = 40;
      d.intensity_delta = -110;
      const auto holed = inject_defect(img, d, seed);
      if (block_texture_frequency(holed).value < block_texture_frequency(img).value) ++lowered;
    }
    CHECK(lowered == 5);
  }

  TEST_CASE("corpus files, manifest and determinism") {
    CorpusSpec spec;
    auto fams = default_families(10);
    spec.families = {fams[0], fams[4]};
    spec.height = 120;
    spec.width = 150;
    spec.extent_min = 8;
    spec.extent_max = 14;
    spec.families[0].weave.freq_x = 10;
    spec.families[0].weave.freq_y = 12;
    spec.seed = 3;
    const auto a = oracle::scratch_dir("corpus_a");
    const auto b = oracle::scratch_dir("corpus_b");
    const auto rows = generate_corpus(spec, a);
    generate_corpus(spec, b);
    CHECK(rows.size() == 40);
    const auto m = read_manifest(a / "manifest.csv");
    CHECK(m.rows.size() == 40);
    std::size_t files = 0;
    for (const auto& e : std::filesystem::directory_iterator(a)) files += e.path().extension() == ".pgm";
    CHECK(files == 40);
    for (const auto& type : m.fabric_types()) {
      const auto n = std::count_if(m.rows.begin(), m.rows.end(),
                                   [&](const auto& r) { return r.fabric_type == type && r.label == Label::defective; });
      CHECK(n == 10);
    }
    for (const auto& row : rows) CHECK(file_digest(a / row.path) == file_digest(b / row.path));
    CHECK(file_digest(a / "manifest.csv") == file_digest(b / "manifest.csv"));

    spec.seed = 4;
    CHECK_FALSE(generate_sample(spec, 0, Label::defect_free, 0) == load_gray(a / rows[0].path));
  }
}
