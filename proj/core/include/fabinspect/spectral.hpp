#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include "fabinspect/gray_image.hpp"

namespace fabinspect {

using Complex = std::complex<double>;

/// Complex frequency-domain matrix; bin (u, v) at index u * width + v.
class Spectrum {
 public:
  Spectrum() = default;
  Spectrum(std::size_t height, std::size_t width);
  Spectrum(std::size_t height, std::size_t width, std::vector<Complex> values);

  std::size_t height() const noexcept { return height_; }
  std::size_t width() const noexcept { return width_; }
  std::size_t size() const noexcept { return values_.size(); }

  const Complex& operator()(std::size_t u, std::size_t v) const { return values_[u * width_ + v]; }
  Complex& operator()(std::size_t u, std::size_t v) { return values_[u * width_ + v]; }

  std::span<const Complex> values() const noexcept { return values_; }
  std::span<Complex> values() noexcept { return values_; }

 private:
  std::size_t height_ = 0;
  std::size_t width_ = 0;
  std::vector<Complex> values_;
};

/// Element-wise modulus of a Spectrum.
class AmplitudeSpectrum {
 public:
  AmplitudeSpectrum() = default;
  AmplitudeSpectrum(std::size_t height, std::size_t width, std::vector<double> values);

  std::size_t height() const noexcept { return height_; }
  std::size_t width() const noexcept { return width_; }
  std::size_t size() const noexcept { return values_.size(); }

  double operator()(std::size_t u, std::size_t v) const { return values_[u * width_ + v]; }
  double& operator()(std::size_t u, std::size_t v) { return values_[u * width_ + v]; }

  std::span<const double> values() const noexcept { return values_; }
  std::span<double> values() noexcept { return values_; }

 private:
  std::size_t height_ = 0;
  std::size_t width_ = 0;
  std::vector<double> values_;
};

struct Bin {
  std::size_t u = 0;
  std::size_t v = 0;
  friend bool operator==(const Bin&, const Bin&) = default;
  friend auto operator<=>(const Bin&, const Bin&) = default;
};

/// Mixed-radix 1-D transform plan for one length. Any length is accepted;
/// prime factors are handled by a generic butterfly.
class FftPlan {
 public:
  explicit FftPlan(std::size_t n);

  std::size_t size() const noexcept { return n_; }

  /// Unnormalised transform. `inverse` flips the exponent sign.
  void transform(std::span<const Complex> in, std::span<Complex> out, bool inverse) const;

 private:
  void work(Complex* out, const Complex* in, std::size_t fstride, std::size_t stage,
            const std::vector<Complex>& tw) const;
  void butterfly(Complex* out, std::size_t fstride, std::size_t radix, std::size_t m,
                 const std::vector<Complex>& tw) const;

  std::size_t n_;
  std::vector<std::size_t> radices_;
  std::vector<Complex> forward_;
  std::vector<Complex> backward_;
};

/// F(u,v) = 1/(MN) sum_x sum_y P(x,y) exp(-j 2 pi (ux/M + vy/N)); rows first, then columns.
Spectrum dft2(const RealPlane& plane);
Spectrum dft2(const GrayImage& img);

struct InverseResult {
  RealPlane plane;
  double max_imag_residual = 0.0;
};

/// Unscaled inverse, real part kept: idft2(dft2(P)) == P.
InverseResult idft2(const Spectrum& spectrum);

AmplitudeSpectrum amplitude(const Spectrum& spectrum);

/// The k bins of largest amplitude, descending. Amplitudes equal up to a
/// relative 1e-9 of the largest value are ordered by (u, v) ascending so the
/// selection does not depend on floating-point noise.
std::vector<Bin> top_k_points(const AmplitudeSpectrum& w, std::size_t k);

/// Position of bin (u, v) once DC is moved to (M/2, N/2).
Bin center_shift_coords(std::size_t u, std::size_t v, std::size_t height, std::size_t width);

/// Conjugate-symmetric partner ((M-u) mod M, (N-v) mod N).
Bin hermitian_partner(Bin bin, std::size_t height, std::size_t width) noexcept;

}  // namespace fabinspect
