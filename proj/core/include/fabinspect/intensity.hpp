#pragma once

#include <cstddef>

#include "fabinspect/gray_image.hpp"
#include "fabinspect/spectral.hpp"

namespace fabinspect {

struct IntensityConfig {
  std::size_t peaks_to_remove = 5;
  double target_mean = 90.0;
  // Also zero the conjugate partner of every removed bin so the inverse
  // stays (nearly) real.
  bool mirror_peaks = true;

  void validate() const;
};

/// Zeroes the top-k amplitude bins (and their partners when mirroring).
Spectrum remove_dominant_peaks(const Spectrum& spectrum, const IntensityConfig& cfg);

/// Maps [min, max] onto [0, 255]. Throws degenerate_input on a constant plane.
RealPlane linear_stretch(const RealPlane& plane);

/// Scales by target / mean, then clamps to [0, 255]. Throws on a nonpositive mean.
RealPlane normalize_mean(const RealPlane& plane, double target);

/// Intermediate planes of one adjustment run, kept for diagnostics.
struct AdjustmentTrace {
  RealPlane filtered;   // inverse transform after peak removal
  RealPlane stretched;  // after linear stretch
  RealPlane scaled;     // after mean normalisation
  double imag_residual = 0.0;
  double scale = 1.0;   // target / mean of the stretched plane
  bool clamped = false;
};

GrayImage adjust_intensity(const GrayImage& img, const IntensityConfig& cfg = {},
                           AdjustmentTrace* trace = nullptr);
GrayImage adjust_intensity(const RgbImage& img, const IntensityConfig& cfg = {},
                           AdjustmentTrace* trace = nullptr);

}  // namespace fabinspect
