#include <doctest.h>

#include "fabinspect/error.hpp"
#include "fabinspect/random.hpp"
#include "fabinspect/spectral.hpp"
#include "oracles.hpp"

using namespace fabinspect;

namespace {

RealPlane random_plane(std::size_t h, std::size_t w, std::uint64_t seed, double lo = -1.0, double hi = 1.0) {
  Rng rng(seed);
  RealPlane p(h, w);
  for (auto& v : p.values()) v = rng.uniform(lo, hi);
  return p;
}

double max_diff(std::span<const double> a, std::span<const double> b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

}  // namespace

TEST_SUITE("spectral") {
  TEST_CASE("matches the defining sum") {
    for (auto [h, w] : {std::pair{1, 1}, {1, 7}, {6, 10}, {7, 11}, {13, 17}, {16, 9}, {30, 25}, {23, 8}}) {
      const auto p = random_plane(h, w, h * 100 + w);
      const auto s = dft2(p);
      const auto ref = oracle::naive_dft2({p.values().begin(), p.values().end()}, h, w);
      double err = 0.0;
      for (std::size_t i = 0; i < ref.size(); ++i) err = std::max(err, std::abs(ref[i] - s.values()[i]));
      CAPTURE(h);
      CAPTURE(w);
      CHECK(err < 1e-9);
    }
  }

  TEST_CASE("1-D plan agrees with the definition for awkward lengths") {
    for (std::size_t n : {2u, 3u, 5u, 7u, 12u, 49u, 97u, 120u, 360u}) {
      Rng rng(n);
      std::vector<Complex> in(n), out(n);
      for (auto& c : in) c = {rng.uniform(-1, 1), rng.uniform(-1, 1)};
      FftPlan(n).transform(in, out, false);
      double err = 0.0;
      for (std::size_t k = 0; k < n; ++k) {
        Complex acc = 0.0;
        for (std::size_t x = 0; x < n; ++x) {
          acc += in[x] * std::polar(1.0, -2.0 * std::numbers::pi * static_cast<double>((k * x) % n) / n);
        }
        err = std::max(err, std::abs(acc - out[k]));
      }
      CAPTURE(n);
      CHECK(err < 1e-9);
    }
  }

  TEST_CASE("constant plane has only DC") {
    const auto s = dft2(RealPlane(12, 20, 3.25));
    CHECK(std::abs(s(0, 0) - Complex(3.25, 0)) < 1e-12);
    for (std::size_t i = 1; i < s.size(); ++i) CHECK(std::abs(s.values()[i]) < 1e-12);
  }

  TEST_CASE("cosine plane gives two half-amplitude bins") {
    const std::size_t m = 48, n = 30, f = 5;
    RealPlane p(m, n);
    for (std::size_t x = 0; x < m; ++x) {
      for (std::size_t y = 0; y < n; ++y) p(x, y) = std::cos(2.0 * std::numbers::pi * f * x / m);
    }
    const auto w = amplitude(dft2(p));
    for (std::size_t u = 0; u < m; ++u) {
      for (std::size_t v = 0; v < n; ++v) {
        const bool peak = v == 0 && (u == f || u == m - f);
        CHECK(std::abs(w(u, v) - (peak ? 0.5 : 0.0)) < 1e-9);
      }
    }
  }

  TEST_CASE("linearity") {
    const auto p = random_plane(15, 24, 1);
    const auto q = random_plane(15, 24, 2);
    RealPlane mix(15, 24);
    for (std::size_t i = 0; i < mix.size(); ++i) mix.values()[i] = 2.5 * p.values()[i] - 0.75 * q.values()[i];
    const auto a = dft2(p), b = dft2(q), c = dft2(mix);
    for (std::size_t i = 0; i < c.size(); ++i) {
      CHECK(std::abs(c.values()[i] - (2.5 * a.values()[i] - 0.75 * b.values()[i])) < 1e-9);
    }
  }

  TEST_CASE("inverse round trip and realness") {
    const auto p = random_plane(48, 60, 9, 0.0, 255.0);
    const auto r = idft2(dft2(p));
    CHECK(max_diff(r.plane.values(), p.values()) < 1e-9);
    CHECK(r.max_imag_residual < 1e-9);

    Spectrum dc(5, 6);
    dc(0, 0) = 4.0;
    const auto flat = idft2(dc);
    for (double v : flat.plane.values()) CHECK(v == doctest::Approx(4.0).epsilon(1e-12));

    // Breaking Hermitian symmetry shows up as an imaginary residual.
    auto s = dft2(p);
    s(1, 2) = 0.0;
    CHECK(idft2(s).max_imag_residual > 1e-6);
  }

  TEST_CASE("Parseval under forward 1/MN scaling") {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
      const auto p = random_plane(37, 44, seed);
      const auto s = dft2(p);
      double lhs = 0.0, rhs = 0.0;
      for (const auto& c : s.values()) lhs += std::norm(c);
      for (double v : p.values()) rhs += v * v;
      rhs /= static_cast<double>(p.size());
      CHECK(std::abs(lhs - rhs) / rhs < 1e-9);
    }
  }

  TEST_CASE("amplitude symmetry and shift invariance") {
    const std::size_t m = 20, n = 14;
    const auto p = random_plane(m, n, 4);
    const auto w = amplitude(dft2(p));
    for (std::size_t u = 0; u < m; ++u) {
      for (std::size_t v = 0; v < n; ++v) {
        const auto b = hermitian_partner({u, v}, m, n);
        CHECK(std::abs(w(u, v) - w(b.u, b.v)) < 1e-9);
      }
    }
    RealPlane shifted(m, n);
    for (std::size_t x = 0; x < m; ++x) {
      for (std::size_t y = 0; y < n; ++y) shifted((x + 3) % m, (y + 11) % n) = p(x, y);
    }
    CHECK(max_diff(amplitude(dft2(shifted)).values(), w.values()) < 1e-9);
  }

  TEST_CASE("amplitude of simple spectra") {
    Spectrum s(1, 2, {Complex(3, 4), Complex(0, 0)});
    const auto w = amplitude(s);
    CHECK(w(0, 0) == 5.0);
    CHECK(w(0, 1) == 0.0);
    Spectrum conj(1, 2, {Complex(3, -4), Complex(0, 0)});
    CHECK(amplitude(conj)(0, 0) == 5.0);
  }

  TEST_CASE("top-k selection") {
    const AmplitudeSpectrum w(2, 2, {9, 1, 5, 5});
    CHECK(top_k_points(w, 2) == std::vector<Bin>{{0, 0}, {1, 0}});
    CHECK(top_k_points(w, 0).empty());
    CHECK_THROWS_AS(top_k_points(w, 5), Error);

    // k = MN against a full stable sort by (-amplitude, u, v).
    Rng rng(12);
    std::vector<double> vals(7 * 9);
    for (auto& v : vals) v = static_cast<double>(rng.below(10));  // many ties
    const AmplitudeSpectrum big(7, 9, vals);
    std::vector<Bin> expect;
    for (std::size_t u = 0; u < 7; ++u) {
      for (std::size_t v = 0; v < 9; ++v) expect.push_back({u, v});
    }
    std::stable_sort(expect.begin(), expect.end(), [&](Bin a, Bin b) { return big(a.u, a.v) > big(b.u, b.v); });
    CHECK(top_k_points(big, vals.size()) == expect);
    const auto first5 = top_k_points(big, 5);
    CHECK(std::equal(first5.begin(), first5.end(), expect.begin()));
  }

  TEST_CASE("centre shift") {
    CHECK(center_shift_coords(0, 0, 360, 360) == Bin{180, 180});
    CHECK(center_shift_coords(180, 180, 360, 360) == Bin{0, 0});
    for (std::size_t u = 0; u < 8; ++u) {
      for (std::size_t v = 0; v < 6; ++v) {
        const auto once = center_shift_coords(u, v, 8, 6);
        CHECK(center_shift_coords(once.u, once.v, 8, 6) == Bin{u, v});
      }
    }
    CHECK(center_shift_coords(0, 0, 5, 7) == Bin{2, 3});
    CHECK_THROWS_AS(center_shift_coords(5, 0, 5, 7), Error);
  }
}
