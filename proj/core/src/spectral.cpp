#include "fabinspect/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include "fabinspect/error.hpp"

namespace fabinspect {

Spectrum::Spectrum(std::size_t height, std::size_t width)
    : height_(height), width_(width), values_(height * width) {}

Spectrum::Spectrum(std::size_t height, std::size_t width, std::vector<Complex> values)
    : height_(height), width_(width), values_(std::move(values)) {
  if (values_.size() != height * width) {
    throw Error(Errc::invalid_argument, "Spectrum value count does not match dimensions");
  }
}

AmplitudeSpectrum::AmplitudeSpectrum(std::size_t height, std::size_t width, std::vector<double> values)
    : height_(height), width_(width), values_(std::move(values)) {
  if (values_.size() != height * width) {
    throw Error(Errc::invalid_argument, "AmplitudeSpectrum value count does not match dimensions");
  }
}

FftPlan::FftPlan(std::size_t n) : n_(n) {
  if (n == 0) {
    throw Error(Errc::invalid_argument, "FFT length must be positive");
  }
  std::size_t rest = n;
  for (std::size_t p : {4u, 2u, 3u, 5u}) {
    while (rest % p == 0) {
      radices_.push_back(p);
      rest /= p;
    }
  }
  for (std::size_t p = 7; p * p <= rest; p += 2) {
    while (rest % p == 0) {
      radices_.push_back(p);
      rest /= p;
    }
  }
  if (rest > 1) radices_.push_back(rest);

  forward_.resize(n);
  backward_.resize(n);
  for (std::size_t k = 0; k < n; ++k) {
    const double phase = -2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(n);
    forward_[k] = Complex(std::cos(phase), std::sin(phase));
    backward_[k] = std::conj(forward_[k]);
  }
}

void FftPlan::transform(std::span<const Complex> in, std::span<Complex> out, bool inverse) const {
  if (in.size() != n_ || out.size() != n_) {
    throw Error(Errc::invalid_argument, "FFT buffer length mismatch");
  }
  if (n_ == 1) {
    out[0] = in[0];
    return;
  }
  work(out.data(), in.data(), 1, 0, inverse ? backward_ : forward_);
}

// Decimation in time: split into `radix` interleaved sub-sequences, transform
// each recursively, then combine.
void FftPlan::work(Complex* out, const Complex* in, std::size_t fstride, std::size_t stage,
                   const std::vector<Complex>& tw) const {
  const std::size_t radix = radices_[stage];
  std::size_t m = n_;
  for (std::size_t s = 0; s <= stage; ++s) m /= radices_[s];

  if (m == 1) {
    for (std::size_t q = 0; q < radix; ++q) out[q] = in[q * fstride];
  } else {
    for (std::size_t q = 0; q < radix; ++q) {
      work(out + q * m, in + q * fstride, fstride * radix, stage + 1, tw);
    }
  }
  butterfly(out, fstride, radix, m, tw);
}

void FftPlan::butterfly(Complex* out, std::size_t fstride, std::size_t radix, std::size_t m,
                        const std::vector<Complex>& tw) const {
  if (radix == 2) {
    for (std::size_t u = 0; u < m; ++u) {
      const Complex t = out[u + m] * tw[u * fstride];
      out[u + m] = out[u] - t;
      out[u] += t;
    }
    return;
  }
  Complex scratch[64];
  std::vector<Complex> heap;
  Complex* s = scratch;
  if (radix > 64) {
    heap.resize(radix);
    s = heap.data();
  }
  for (std::size_t u = 0; u < m; ++u) {
    for (std::size_t q = 0; q < radix; ++q) s[q] = out[u + q * m];
    for (std::size_t q1 = 0; q1 < radix; ++q1) {
      const std::size_t k = u + q1 * m;
      Complex acc = s[0];
      std::size_t twidx = 0;
      for (std::size_t q = 1; q < radix; ++q) {
        twidx += fstride * k;
        twidx %= n_;
        acc += s[q] * tw[twidx];
      }
      out[k] = acc;
    }
  }
}

namespace {

// Row pass then column pass over a row-major buffer.
void transform_2d(std::vector<Complex>& data, std::size_t height, std::size_t width, bool inverse) {
  const FftPlan row_plan(width);
  std::vector<Complex> line(std::max(height, width));
  std::vector<Complex> result(std::max(height, width));
  for (std::size_t r = 0; r < height; ++r) {
    std::span<Complex> row(data.data() + r * width, width);
    std::copy(row.begin(), row.end(), line.begin());
    row_plan.transform({line.data(), width}, row, inverse);
  }
  const FftPlan col_plan(height);
  for (std::size_t c = 0; c < width; ++c) {
    for (std::size_t r = 0; r < height; ++r) line[r] = data[r * width + c];
    col_plan.transform({line.data(), height}, {result.data(), height}, inverse);
    for (std::size_t r = 0; r < height; ++r) data[r * width + c] = result[r];
  }
}

}  // namespace

Spectrum dft2(const RealPlane& plane) {
  const auto h = plane.height();
  const auto w = plane.width();
  if (h * w == 0) {
    throw Error(Errc::invalid_argument, "dft2 of empty plane");
  }
  std::vector<Complex> data(plane.values().begin(), plane.values().end());
  transform_2d(data, h, w, false);
  const double scale = 1.0 / static_cast<double>(h * w);
  for (auto& z : data) z *= scale;
  return Spectrum(h, w, std::move(data));
}

Spectrum dft2(const GrayImage& img) { return dft2(RealPlane::from_image(img)); }

InverseResult idft2(const Spectrum& spectrum) {
  const auto h = spectrum.height();
  const auto w = spectrum.width();
  if (h * w == 0) {
    throw Error(Errc::invalid_argument, "idft2 of empty spectrum");
  }
  std::vector<Complex> data(spectrum.values().begin(), spectrum.values().end());
  transform_2d(data, h, w, true);
  InverseResult result{RealPlane(h, w), 0.0};
  auto values = result.plane.values();
  for (std::size_t i = 0; i < data.size(); ++i) {
    values[i] = data[i].real();
    result.max_imag_residual = std::max(result.max_imag_residual, std::abs(data[i].imag()));
  }
  return result;
}

AmplitudeSpectrum amplitude(const Spectrum& spectrum) {
  std::vector<double> mags(spectrum.size());
  std::transform(spectrum.values().begin(), spectrum.values().end(), mags.begin(),
                 [](const Complex& z) { return std::abs(z); });
  return AmplitudeSpectrum(spectrum.height(), spectrum.width(), std::move(mags));
}

std::vector<Bin> top_k_points(const AmplitudeSpectrum& w, std::size_t k) {
  const std::size_t n = w.size();
  if (k > n) {
    throw Error(Errc::invalid_argument, "top_k_points: k exceeds the number of bins");
  }
  if (k == 0) return {};

  const auto vals = w.values();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  auto by_amplitude = [&](std::size_t a, std::size_t b) {
    return vals[a] != vals[b] ? vals[a] > vals[b] : a < b;
  };

  // Only the k-th value and anything tied with it matter; partial sort enough
  // candidates, then regroup near-equal amplitudes in index order.
  const double peak = *std::max_element(vals.begin(), vals.end());
  const double tol = 1e-9 * peak;
  std::size_t take = std::min(n, k);
  std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(take), order.end(),
                    by_amplitude);
  const double kth = vals[order[take - 1]];
  // Extend with every remaining bin that ties with the k-th value.
  auto tail = std::partition(order.begin() + static_cast<std::ptrdiff_t>(take), order.end(),
                             [&](std::size_t i) { return vals[i] >= kth - tol; });
  std::sort(order.begin() + static_cast<std::ptrdiff_t>(take), tail, by_amplitude);
  const auto candidates = static_cast<std::size_t>(tail - order.begin());

  std::vector<std::size_t> ranked(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(candidates));
  std::size_t group_start = 0;
  for (std::size_t i = 1; i <= ranked.size(); ++i) {
    if (i == ranked.size() || vals[ranked[group_start]] - vals[ranked[i]] > tol) {
      std::sort(ranked.begin() + static_cast<std::ptrdiff_t>(group_start),
                ranked.begin() + static_cast<std::ptrdiff_t>(i));
      group_start = i;
    }
  }

  std::vector<Bin> result;
  result.reserve(k);
  for (std::size_t i = 0; i < k; ++i) {
    result.push_back(Bin{ranked[i] / w.width(), ranked[i] % w.width()});
  }
  return result;
}

Bin center_shift_coords(std::size_t u, std::size_t v, std::size_t height, std::size_t width) {
  if (u >= height || v >= width) {
    throw Error(Errc::invalid_argument, "center_shift_coords: bin outside the spectrum");
  }
  return Bin{(u + height / 2) % height, (v + width / 2) % width};
}

Bin hermitian_partner(Bin bin, std::size_t height, std::size_t width) noexcept {
  return Bin{(height - bin.u) % height, (width - bin.v) % width};
}

}  // namespace fabinspect
