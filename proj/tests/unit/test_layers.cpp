#include <doctest.h>

#include "fabinspect/layers.hpp"
#include "fabinspect/random.hpp"
#include "gradcheck.hpp"

using namespace fabinspect;
using namespace fabinspect::nn;

namespace {

std::vector<double> random_values(std::size_t n, Rng& rng, double lo = -1.0, double hi = 1.0) {
  std::vector<double> v(n);
  for (auto& x : v) x = rng.uniform(lo, hi);
  return v;
}

// Direct evaluation of the convolution sum with explicit zero padding.
std::vector<double> conv_oracle(const ConvGeometry& g, const std::vector<double>& in, const std::vector<double>& w,
                                const std::vector<double>& b) {
  const std::size_t ho = g.out_height(), wo = g.out_width(), k = g.kernel;
  std::vector<double> out(g.out_channels * ho * wo);
  for (std::size_t oc = 0; oc < g.out_channels; ++oc) {
    for (std::size_t oy = 0; oy < ho; ++oy) {
      for (std::size_t ox = 0; ox < wo; ++ox) {
        double acc = b[oc];
        for (std::size_t ic = 0; ic < g.in_channels; ++ic) {
          for (std::size_t ky = 0; ky < k; ++ky) {
            for (std::size_t kx = 0; kx < k; ++kx) {
              const long y = static_cast<long>(oy * g.stride + ky) - static_cast<long>(g.pad);
              const long x = static_cast<long>(ox * g.stride + kx) - static_cast<long>(g.pad);
              if (y < 0 || x < 0 || y >= static_cast<long>(g.in_height) || x >= static_cast<long>(g.in_width)) continue;
              acc += w[((oc * g.in_channels + ic) * k + ky) * k + kx] *
                     in[(ic * g.in_height + static_cast<std::size_t>(y)) * g.in_width + static_cast<std::size_t>(x)];
            }
          }
        }
        out[(oc * ho + oy) * wo + ox] = acc;
      }
    }
  }
  return out;
}

double weighted_sum(const std::vector<double>& a, const std::vector<double>& r) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * r[i];
  return s;
}

const ConvGeometry kGeometries[] = {
    {2, 3, 3, 1, 1, 7, 6},   {3, 4, 3, 2, 1, 9, 8},   {2, 3, 1, 2, 0, 8, 7},
    {1, 8, 3, 1, 1, 12, 12}, {5, 6, 3, 1, 1, 11, 13}, {8, 16, 3, 2, 1, 10, 10},
};

}  // namespace

TEST_SUITE("layers") {
  TEST_CASE("convolution forward matches the direct sum") {
    Rng rng(1);
    for (const auto& g : kGeometries) {
      const auto in = random_values(g.in_size(), rng);
      const auto w = random_values(g.weight_count(), rng);
      const auto b = random_values(g.out_channels, rng);
      std::vector<double> out(g.out_size());
      conv2d_forward(g, in, w, b, out);
      const auto ref = conv_oracle(g, in, w, b);
      double err = 0.0;
      for (std::size_t i = 0; i < out.size(); ++i) err = std::max(err, std::abs(out[i] - ref[i]));
      CHECK(err < 1e-12);
    }
  }

  // Both layers are linear in every argument, so the central difference is
  // exact up to rounding; an absolute floor of 1 keeps near-zero entries fair.
  TEST_CASE("convolution backward against finite differences") {
    Rng rng(2);
    const double h = 1e-5;
    for (const auto& g : kGeometries) {
      auto in = random_values(g.in_size(), rng);
      auto w = random_values(g.weight_count(), rng);
      auto b = random_values(g.out_channels, rng);
      const auto r = random_values(g.out_size(), rng);  // L = sum(out * r)
      std::vector<double> dw(w.size()), db(b.size()), din(in.size());
      conv2d_backward(g, in, w, r, dw, db, din);

      auto loss = [&] { return weighted_sum(conv_oracle(g, in, w, b), r); };
      auto check = [&](std::vector<double>& p, const std::vector<double>& grad) {
        double worst = 0.0;
        for (std::size_t i = 0; i < p.size(); ++i) {
          const double saved = p[i];
          p[i] = saved + h;
          const double up = loss();
          p[i] = saved - h;
          const double down = loss();
          p[i] = saved;
          worst = std::max(worst, gradcheck::relative_error(grad[i], (up - down) / (2 * h), 1.0));
        }
        return worst;
      };
      CHECK(check(w, dw) < 1e-6);
      CHECK(check(b, db) < 1e-6);
      CHECK(check(in, din) < 1e-6);
    }
  }

  TEST_CASE("convolution backward accumulates and may skip the input gradient") {
    const ConvGeometry g{2, 2, 3, 1, 1, 5, 5};
    Rng rng(3);
    const auto in = random_values(g.in_size(), rng);
    const auto w = random_values(g.weight_count(), rng);
    const auto d = random_values(g.out_size(), rng);
    std::vector<double> dw1(w.size()), db1(2), dw2(w.size(), 1.0), db2(2, 1.0);
    conv2d_backward(g, in, w, d, dw1, db1, {});
    conv2d_backward(g, in, w, d, dw2, db2, {});
    for (std::size_t i = 0; i < w.size(); ++i) CHECK(dw2[i] == doctest::Approx(dw1[i] + 1.0));
    CHECK(db2[0] == doctest::Approx(db1[0] + 1.0));
  }

  TEST_CASE("dense layer") {
    Rng rng(4);
    const std::size_t ni = 7, no = 5;
    auto in = random_values(ni, rng);
    auto w = random_values(ni * no, rng);
    auto b = random_values(no, rng);
    std::vector<double> out(no);
    dense_forward(ni, no, in, w, b, out);
    for (std::size_t o = 0; o < no; ++o) {
      double acc = b[o];
      for (std::size_t i = 0; i < ni; ++i) acc += w[o * ni + i] * in[i];
      CHECK(out[o] == doctest::Approx(acc).epsilon(1e-14));
    }

    const auto r = random_values(no, rng);
    std::vector<double> dw(w.size()), db(no), din(ni);
    dense_backward(ni, no, in, w, r, dw, db, din);
    auto loss = [&] {
      std::vector<double> o(no);
      dense_forward(ni, no, in, w, b, o);
      return weighted_sum(o, r);
    };
    const double h = 1e-5;
    for (auto [p, g] : {std::pair{&w, &dw}, {&b, &db}, {&in, &din}}) {
      for (std::size_t i = 0; i < p->size(); ++i) {
        const double saved = (*p)[i];
        (*p)[i] = saved + h;
        const double up = loss();
        (*p)[i] = saved - h;
        const double down = loss();
        (*p)[i] = saved;
        CHECK(gradcheck::relative_error((*g)[i], (up - down) / (2 * h), 1.0) < 1e-6);
      }
    }
  }

  TEST_CASE("ReLU and pooling") {
    std::vector<double> v{-1.0, 0.0, 2.0, -0.5, 3.0};
    relu_inplace(v);
    CHECK(v == std::vector<double>{0, 0, 2, 0, 3});
    std::vector<double> g{1, 1, 1, 1, 1};
    relu_backward_inplace(v, g);
    CHECK(g == std::vector<double>{0, 0, 1, 0, 1});

    const std::vector<double> planes{1, 2, 3, 4, 10, 20, 30, 40};
    std::vector<double> pooled(2);
    global_average_pool(2, 4, planes, pooled);
    CHECK(pooled == std::vector<double>{2.5, 25.0});
    std::vector<double> back(8);
    global_average_pool_backward(2, 4, std::vector<double>{4.0, 8.0}, back);
    CHECK(back == std::vector<double>{1, 1, 1, 1, 2, 2, 2, 2});
  }

  TEST_CASE("softmax cross entropy") {
    std::vector<double> d(2);
    CHECK(softmax_cross_entropy(std::vector<double>{0.0, 0.0}, 1, d) == doctest::Approx(std::log(2.0)));
    CHECK(d[0] == doctest::Approx(0.5));
    CHECK(d[1] == doctest::Approx(-0.5));

    Rng rng(5);
    const double h = 1e-5;
    for (int t = 0; t < 20; ++t) {
      std::vector<double> z{rng.uniform(-30, 30), rng.uniform(-30, 30)};
      const std::size_t target = t % 2;
      const double loss = softmax_cross_entropy(z, target, d);
      CHECK(loss >= 0.0);
      CHECK(std::isfinite(loss));
      std::vector<double> scratch(2);
      for (std::size_t i = 0; i < 2; ++i) {
        auto zp = z, zm = z;
        zp[i] += h;
        zm[i] -= h;
        const double fd =
            (softmax_cross_entropy(zp, target, scratch) - softmax_cross_entropy(zm, target, scratch)) / (2 * h);
        CHECK(std::abs(fd - d[i]) < 1e-6);
      }
    }
  }
}
