#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "fabinspect/gray_image.hpp"
#include "fabinspect/manifest.hpp"

namespace fabinspect {

/// Product-of-sines weave plus optional smoothed noise.
struct WeaveParams {
  double freq_x = 24.0;     // cycles over the image height
  double freq_y = 30.0;     // cycles over the image width
  double amplitude = 30.0;
  double base = 120.0;
  double noise_sigma = 0.0;
  std::size_t blob_scale = 0;  // box-kernel width of the noise; 0 = white
  std::uint64_t seed = 0;
  // Pattern placement: pixel shift, and a quarter turn that swaps the axes.
  double offset_x = 0.0;
  double offset_y = 0.0;
  bool rotated = false;

  void validate(std::size_t height, std::size_t width) const;
};

GrayImage generate_weave(const WeaveParams& p, std::size_t height, std::size_t width);

/// Multiplies by the dome 1 - strength * (r / r_max)^2 around `center`
/// (row, col), where r_max reaches the farthest corner.
GrayImage apply_pressing_gradient(const GrayImage& img, std::array<double, 2> center, double strength);

/// Dome centred on the image.
GrayImage apply_pressing_gradient(const GrayImage& img, double strength);

enum class DefectKind { hole, missing_yarn, wrinkle };

std::string to_string(DefectKind kind);

struct DefectSpec {
  DefectKind kind = DefectKind::hole;
  std::size_t row = 0;
  std::size_t col = 0;
  double extent = 20.0;  // radius (hole), band width (missing_yarn), ridge reach (wrinkle)
  double intensity_delta = -80.0;
};

/// Alters only pixels within `extent` of the defect locus. The seed picks the
/// band orientation and the wrinkle angle and length.
GrayImage inject_defect(const GrayImage& img, const DefectSpec& defect, std::uint64_t seed);

struct FamilySpec {
  std::string fabric_type;
  WeaveParams weave;  // seed and placement are drawn per sample
  std::size_t samples_per_label = 10;
};

struct CorpusSpec {
  std::vector<FamilySpec> families;
  std::size_t height = 480;
  std::size_t width = 600;
  std::uint64_t seed = 0;
  double gradient_min = 0.2;
  double gradient_max = 0.4;
  std::array<double, 3> defect_mix{1.0, 1.0, 1.0};  // hole, missing_yarn, wrinkle
  double extent_min = 60.0;
  double extent_max = 100.0;

  void validate() const;
};

/// Six families: four regular fine weaves, then two blobby irregular ones.
std::vector<FamilySpec> default_families(std::size_t samples_per_label = 40);

/// One sample, fully determined by (spec.seed, family, label, index).
GrayImage generate_sample(const CorpusSpec& spec, std::size_t family, Label label, std::size_t index);

/// Manifest rows generate_corpus writes, in file order.
std::vector<ManifestRow> corpus_rows(const CorpusSpec& spec);

/// Writes every sample as PGM plus manifest.csv into `out_dir`.
std::vector<ManifestRow> generate_corpus(const CorpusSpec& spec, const std::filesystem::path& out_dir);

}  // namespace fabinspect
