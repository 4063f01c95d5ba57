#include <doctest.h>

#include "fabinspect/error.hpp"
#include "fabinspect/random.hpp"
#include "fabinspect/synthfab.hpp"
#include "fabinspect/uniformity.hpp"
#include "oracles.hpp"

using namespace fabinspect;

namespace {

GrayImage cosine_block(std::size_t side, std::size_t f, bool along_rows) {
  GrayImage img(side, side);
  for (std::size_t x = 0; x < side; ++x) {
    for (std::size_t y = 0; y < side; ++y) {
      const double t = static_cast<double>(along_rows ? x : y);
      img(x, y) = quantize(120.0 + 60.0 * std::cos(2.0 * std::numbers::pi * f * t / side));
    }
  }
  return img;
}

}  // namespace

TEST_SUITE("uniformity") {
  TEST_CASE("block grid") {
    const UniformityConfig cfg;
    const std::vector<BlockOrigin> expect{{0, 0}, {0, 120}, {0, 240}, {120, 0}, {120, 120}, {120, 240}};
    CHECK(block_grid(480, 600, cfg) == expect);

    UniformityConfig full;
    full.window = 480;
    CHECK(block_grid(480, 600, full).size() == 2);

    UniformityConfig same;
    same.window = 50;
    Rng rng(1);
    GrayImage img(50, 50);
    for (auto& p : img.pixels()) p = static_cast<std::uint8_t>(rng.below(256));
    const auto blocks = extract_blocks(img, same);
    REQUIRE(blocks.size() == 1);
    CHECK(blocks[0] == img);

    GrayImage big(480, 600);
    for (auto& p : big.pixels()) p = static_cast<std::uint8_t>(rng.below(256));
    const auto six = extract_blocks(big, cfg);
    REQUIRE(six.size() == 6);
    CHECK(six[4](7, 9) == big(127, 129));
    CHECK_THROWS_AS(extract_blocks(GrayImage(100, 400), cfg), Error);
  }

  TEST_CASE("texture frequency of simple blocks") {
    const auto flat = block_texture_frequency(GrayImage(64, 64, 90));
    CHECK(flat.value == 0.0);
    CHECK(flat.featureless);

    for (std::size_t f : {3u, 8u, 20u}) {
      for (bool rows : {true, false}) {
        const auto tf = block_texture_frequency(cosine_block(64, f, rows));
        CHECK(tf.value == doctest::Approx(static_cast<double>(f)).epsilon(1e-9));
        CHECK(tf.points >= 1);
      }
    }
  }

  TEST_CASE("texture frequency bounds and selection budget") {
    Rng rng(5);
    for (int i = 0; i < 10; ++i) {
      GrayImage img(48, 48);
      for (auto& p : img.pixels()) p = static_cast<std::uint8_t>(rng.below(256));
      const auto tf = block_texture_frequency(img);
      CHECK(tf.value >= 0.0);
      CHECK(tf.value <= std::sqrt(2.0) * 24.0);

      // Oracle: sort the non-DC amplitudes and walk the budget.
      auto w = amplitude(dft2(img));
      w(0, 0) = 0.0;
      std::vector<double> a(w.values().begin(), w.values().end());
      std::sort(a.rbegin(), a.rend());
      double sum = 0.0;
      for (double v : a) sum += v;
      const double threshold = sum / 40.0;
      std::size_t t = 0;
      double acc = 0.0;
      while (t < a.size() && acc + a[t] <= threshold) acc += a[t++];
      CHECK(tf.points == std::max<std::size_t>(t, 1));
      CHECK(tf.threshold == doctest::Approx(threshold));
      if (t >= 1) {
        CHECK(tf.selected_sum <= threshold);
        CHECK(threshold < tf.selected_sum + a[t]);
      }
    }
  }

  TEST_CASE("texture frequency invariances") {
    WeaveParams p;
    p.freq_x = 7;
    p.freq_y = 11;
    p.amplitude = 40;
    p.base = 100;
    p.noise_sigma = 5;
    p.seed = 3;
    const auto img = generate_weave(p, 90, 90);
    const double f = block_texture_frequency(img).value;
    GrayImage brighter = img, doubled = img;
    for (auto& v : brighter.pixels()) v = static_cast<std::uint8_t>(v + 50);
    for (auto& v : doubled.pixels()) v = static_cast<std::uint8_t>(std::min(255, 2 * v));
    CHECK(block_texture_frequency(brighter).value == doctest::Approx(f).epsilon(1e-9));
    if (*std::max_element(img.pixels().begin(), img.pixels().end()) <= 127) {
      CHECK(block_texture_frequency(doubled).value == doctest::Approx(f).epsilon(1e-9));
    }
  }

  TEST_CASE("pure product of sines hits the analytic distance") {
    for (std::size_t f : {4u, 8u, 16u, 32u}) {
      WeaveParams p;
      p.freq_x = static_cast<double>(f);
      p.freq_y = static_cast<double>(f);
      p.amplitude = 100;
      p.base = 128;
      const auto tf = block_texture_frequency(generate_weave(p, 360, 360));
      CHECK(std::abs(tf.value - oracle::product_peak_distance(f, f)) < 1e-6);
    }
  }

  TEST_CASE("trimmed mean") {
    const auto t = trimmed_mean({5, 1, 9, 4, 8, 2}, 2);
    CHECK(t.kept == std::vector<std::size_t>{0, 3});
    CHECK(t.score == 4.5);
    for (std::size_t q : {0u, 1u, 2u}) CHECK(trimmed_mean({3, 3, 3, 3, 3}, q).score == 3.0);
    // Ties: the lower index counts as smaller.
    CHECK(trimmed_mean({7, 7, 7, 7}, 1).kept == std::vector<std::size_t>{1, 2});
    try {
      trimmed_mean({1, 2, 3, 4}, 2);
      FAIL("expected insufficient blocks");
    } catch (const Error& e) {
      CHECK(e.code() == Errc::insufficient_blocks);
    }
  }

  TEST_CASE("measure_uniformity keeps two of six blocks by default") {
    WeaveParams p;
    p.freq_x = 30;
    p.freq_y = 40;
    p.noise_sigma = 6;
    p.seed = 4;
    const auto r = measure_uniformity(generate_weave(p, 480, 600));
    CHECK(r.frequencies.size() == 6);
    CHECK(r.kept.size() == 2);
    CHECK(r.score == doctest::Approx((r.frequencies[r.kept[0]] + r.frequencies[r.kept[1]]) / 2));
    CHECK(measure_uniformity(generate_weave(p, 480, 600)).score == r.score);
  }

  TEST_CASE("split by scores") {
    const std::vector<ManifestRow> rows{{"a1", "A", Label::defect_free},
                                        {"a2", "A", Label::defective},
                                        {"b1", "B", Label::defect_free},
                                        {"b2", "B", Label::defective}};
    const auto s = split_by_scores(rows, {10, 0, 3, 99}, 1);
    CHECK(s.train == std::vector<ManifestRow>{rows[0], rows[1]});
    CHECK(s.test == std::vector<ManifestRow>{rows[2], rows[3]});
    REQUIRE(s.ranking.size() == 2);
    CHECK(s.ranking[0].fabric_type == "A");
    CHECK(s.ranking[0].mean_score == 10.0);
    CHECK(s.ranking[1].samples == 1);

    // Ties rank by type id, numerically when both ids are integers.
    const std::vector<ManifestRow> tied{{"x", "10", Label::defect_free},
                                        {"y", "9", Label::defect_free},
                                        {"z", "2", Label::defect_free}};
    const auto t = split_by_scores(tied, {1, 1, 0.5}, 1);
    CHECK(t.ranking[0].fabric_type == "9");
    CHECK(t.train.front().path == "y");
    const auto lowest = split_by_scores(tied, {1, 1, 0.5}, 2);
    CHECK(lowest.test == std::vector<ManifestRow>{tied[2]});

    CHECK_THROWS_AS(split_by_scores(tied, {1, 1, 1}, 3), Error);
    const std::vector<ManifestRow> dirty{{"p", "A", Label::defect_free}, {"q", "B", Label::defective}};
    CHECK_THROWS_AS(split_by_scores(dirty, {1, 1}, 1), Error);
  }

  TEST_CASE("split is a partition regardless of row order") {
    std::vector<ManifestRow> rows;
    std::vector<double> scores;
    Rng rng(8);
    for (int i = 0; i < 30; ++i) {
      rows.push_back({"s" + std::to_string(i), std::to_string(i % 4), i % 3 == 0 ? Label::defective : Label::defect_free});
      scores.push_back(rng.uniform(0, 10));
    }
    const auto s = split_by_scores(rows, scores, 2);
    CHECK(s.train.size() + s.test.size() == rows.size());
    std::vector<std::size_t> order(rows.size());
    std::iota(order.begin(), order.end(), 0);
    std::reverse(order.begin(), order.end());
    std::vector<ManifestRow> rev;
    std::vector<double> rev_scores;
    for (auto i : order) {
      rev.push_back(rows[i]);
      rev_scores.push_back(scores[i]);
    }
    const auto r = split_by_scores(rev, rev_scores, 2);
    for (std::size_t i = 0; i < s.ranking.size(); ++i) {
      CHECK(s.ranking[i].fabric_type == r.ranking[i].fabric_type);
      CHECK(s.ranking[i].mean_score == doctest::Approx(r.ranking[i].mean_score));
    }
  }

  TEST_CASE("fine weave outranks blob noise") {
    const auto dir = oracle::scratch_dir("split_families");
    CorpusSpec spec;
    auto fams = default_families(2);
    spec.families = {fams[0], fams[5]};
    spec.seed = 17;
    generate_corpus(spec, dir);
    const auto s = split_by_uniformity(read_manifest(dir / "manifest.csv"), 1, {}, {});
    CHECK(s.ranking[0].fabric_type == fams[0].fabric_type);
    CHECK(s.ranking[0].mean_score > s.ranking[1].mean_score);
  }
}
