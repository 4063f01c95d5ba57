#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "fabinspect/gray_image.hpp"
#include "fabinspect/intensity.hpp"
#include "fabinspect/manifest.hpp"
#include "fabinspect/spectral.hpp"

namespace fabinspect {

struct UniformityConfig {
  std::size_t window = 360;
  std::size_t stride = 120;
  double threshold_divisor = 40.0;
  std::size_t trim = 2;  // blocks dropped at each end before averaging

  void validate() const;
};

struct BlockOrigin {
  std::size_t row = 0;
  std::size_t col = 0;
  friend bool operator==(const BlockOrigin&, const BlockOrigin&) = default;
};

/// Window origins in row-major order: rows 0, stride, ... up to M - window.
std::vector<BlockOrigin> block_grid(std::size_t height, std::size_t width, const UniformityConfig& cfg);

std::vector<GrayImage> extract_blocks(const GrayImage& img, const UniformityConfig& cfg);

struct TextureFrequency {
  double value = 0.0;          // amplitude-weighted distance from the spectrum centre
  std::size_t points = 0;      // spectral points that entered the weighted sum
  double selected_sum = 0.0;   // their summed amplitude
  double threshold = 0.0;
  bool featureless = false;    // no energy outside DC
};

/// Texture frequency of one block: drop DC, take the strongest bins while
/// their running sum stays within Sum / threshold_divisor (at least one),
/// and average their centred distances weighted by amplitude.
TextureFrequency block_texture_frequency(const GrayImage& block, const UniformityConfig& cfg = {});

struct TrimmedMean {
  std::vector<std::size_t> kept;  // ascending block indices
  double score = 0.0;
};

/// Drops the q lowest and q highest values (ties ordered by index) and
/// averages the rest.
TrimmedMean trimmed_mean(const std::vector<double>& values, std::size_t q);

struct UniformityReport {
  std::vector<BlockOrigin> origins;
  std::vector<double> frequencies;
  std::vector<bool> featureless;
  std::vector<std::size_t> kept;
  double score = 0.0;
};

/// Measures the image as given (callers adjust intensity first).
UniformityReport measure_uniformity(const GrayImage& img, const UniformityConfig& cfg = {});

/// Pipeline form: intensity adjustment followed by measure_uniformity.
UniformityReport measure_adjusted_uniformity(const GrayImage& img, const IntensityConfig& icfg,
                                             const UniformityConfig& ucfg);

struct TypeRanking {
  std::string fabric_type;
  double mean_score = 0.0;
  std::size_t samples = 0;  // defect-free samples averaged
};

struct SplitResult {
  std::vector<ManifestRow> train;
  std::vector<ManifestRow> test;
  std::vector<TypeRanking> ranking;  // best first
};

/// Ranks fabric types by the mean score of their defect-free rows and sends
/// the n_train_types best to the training side. `scores` is parallel to `rows`.
SplitResult split_by_scores(const std::vector<ManifestRow>& rows, const std::vector<double>& scores,
                            std::size_t n_train_types);

/// Loads every defect-free sample, scores it and splits the manifest.
SplitResult split_by_uniformity(const Manifest& manifest, std::size_t n_train_types,
                                const IntensityConfig& icfg, const UniformityConfig& ucfg);

}  // namespace fabinspect
