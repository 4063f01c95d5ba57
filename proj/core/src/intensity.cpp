#include "fabinspect/intensity.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "fabinspect/error.hpp"

namespace fabinspect {

namespace {
// Round-off left by a DFT round trip sits near 1e-13; any real 8-bit
// structure is orders of magnitude larger.
constexpr double kFlatSpan = 1e-9;
}  // namespace

void IntensityConfig::validate() const {
  if (!(target_mean > 0.0 && target_mean < 255.0)) {
    throw Error(Errc::config, "intensity target_mean must lie in (0, 255), got " + std::to_string(target_mean));
  }
}

Spectrum remove_dominant_peaks(const Spectrum& spectrum, const IntensityConfig& cfg) {
  if (cfg.peaks_to_remove > spectrum.size()) {
    throw Error(Errc::invalid_argument, "more peaks to remove than spectrum bins");
  }
  Spectrum out = spectrum;
  const auto peaks = top_k_points(amplitude(spectrum), cfg.peaks_to_remove);
  for (const auto& bin : peaks) {
    out(bin.u, bin.v) = Complex(0.0, 0.0);
    if (cfg.mirror_peaks) {
      const auto partner = hermitian_partner(bin, spectrum.height(), spectrum.width());
      out(partner.u, partner.v) = Complex(0.0, 0.0);
    }
  }
  return out;
}

RealPlane linear_stretch(const RealPlane& plane) {
  const auto values = plane.values();
  const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
  const double pmin = *lo;
  const double pmax = *hi;
  if (!(pmax - pmin > kFlatSpan)) {
    throw Error(Errc::degenerate_input, "degenerate stretch: plane is constant");
  }
  RealPlane out(plane.height(), plane.width());
  auto dst = out.values();
  const double span = pmax - pmin;
  for (std::size_t i = 0; i < values.size(); ++i) {
    dst[i] = (values[i] - pmin) / span * 255.0;
  }
  return out;
}

RealPlane normalize_mean(const RealPlane& plane, double target) {
  const double mean = mean_intensity(plane);
  if (!(mean > 0.0)) {
    throw Error(Errc::degenerate_input, "cannot normalise a plane with nonpositive mean");
  }
  const double scale = target / mean;
  RealPlane out(plane.height(), plane.width());
  auto dst = out.values();
  const auto src = plane.values();
  for (std::size_t i = 0; i < src.size(); ++i) {
    dst[i] = std::clamp(src[i] * scale, 0.0, 255.0);
  }
  return out;
}

GrayImage adjust_intensity(const GrayImage& img, const IntensityConfig& cfg, AdjustmentTrace* trace) {
  cfg.validate();
  if (img.height() < 2 || img.width() < 2) {
    throw Error(Errc::invalid_argument, "intensity adjustment needs an image of at least 2x2");
  }
  const auto spectrum = remove_dominant_peaks(dft2(img), cfg);
  auto inverse = idft2(spectrum);
  auto stretched = linear_stretch(inverse.plane);
  const double scale = cfg.target_mean / mean_intensity(stretched);
  auto scaled = normalize_mean(stretched, cfg.target_mean);

  GrayImage out(img.height(), img.width());
  auto dst = out.pixels();
  const auto src = scaled.values();
  std::transform(src.begin(), src.end(), dst.begin(), quantize);

  if (trace != nullptr) {
    const auto sv = stretched.values();
    trace->clamped = std::any_of(sv.begin(), sv.end(), [&](double v) { return v * scale > 255.0; });
    trace->imag_residual = inverse.max_imag_residual;
    trace->scale = scale;
    trace->filtered = std::move(inverse.plane);
    trace->stretched = std::move(stretched);
    trace->scaled = std::move(scaled);
  }
  return out;
}

GrayImage adjust_intensity(const RgbImage& img, const IntensityConfig& cfg, AdjustmentTrace* trace) {
  return adjust_intensity(rgb_to_gray(img), cfg, trace);
}

}  // namespace fabinspect
