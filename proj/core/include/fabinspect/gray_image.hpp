#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <variant>
#include <vector>

namespace fabinspect {

/// 8-bit single-channel raster, row-major. Height is the row count.
class GrayImage {
 public:
  GrayImage() = default;
  GrayImage(std::size_t height, std::size_t width, std::uint8_t fill = 0);
  GrayImage(std::size_t height, std::size_t width, std::vector<std::uint8_t> pixels);

  std::size_t height() const noexcept { return height_; }
  std::size_t width() const noexcept { return width_; }
  std::size_t size() const noexcept { return pixels_.size(); }
  bool empty() const noexcept { return pixels_.empty(); }

  std::uint8_t operator()(std::size_t row, std::size_t col) const { return pixels_[row * width_ + col]; }
  std::uint8_t& operator()(std::size_t row, std::size_t col) { return pixels_[row * width_ + col]; }

  std::span<const std::uint8_t> pixels() const noexcept { return pixels_; }
  std::span<std::uint8_t> pixels() noexcept { return pixels_; }

  friend bool operator==(const GrayImage&, const GrayImage&) = default;

 private:
  std::size_t height_ = 0;
  std::size_t width_ = 0;
  std::vector<std::uint8_t> pixels_;
};

struct Rgb {
  std::uint8_t r = 0;
  std::uint8_t g = 0;
  std::uint8_t b = 0;
  friend bool operator==(const Rgb&, const Rgb&) = default;
};

class RgbImage {
 public:
  RgbImage() = default;
  RgbImage(std::size_t height, std::size_t width, std::vector<Rgb> pixels);

  std::size_t height() const noexcept { return height_; }
  std::size_t width() const noexcept { return width_; }
  const Rgb& operator()(std::size_t row, std::size_t col) const { return pixels_[row * width_ + col]; }
  std::span<const Rgb> pixels() const noexcept { return pixels_; }

  friend bool operator==(const RgbImage&, const RgbImage&) = default;

 private:
  std::size_t height_ = 0;
  std::size_t width_ = 0;
  std::vector<Rgb> pixels_;
};

/// Dense matrix of finite doubles, row-major. Intermediate spatial planes
/// of the preprocessing pipeline live here.
class RealPlane {
 public:
  RealPlane() = default;
  RealPlane(std::size_t height, std::size_t width, double fill = 0.0);
  RealPlane(std::size_t height, std::size_t width, std::vector<double> values);

  static RealPlane from_image(const GrayImage& img);

  std::size_t height() const noexcept { return height_; }
  std::size_t width() const noexcept { return width_; }
  std::size_t size() const noexcept { return values_.size(); }

  double operator()(std::size_t row, std::size_t col) const { return values_[row * width_ + col]; }
  double& operator()(std::size_t row, std::size_t col) { return values_[row * width_ + col]; }

  std::span<const double> values() const noexcept { return values_; }
  std::span<double> values() noexcept { return values_; }

 private:
  std::size_t height_ = 0;
  std::size_t width_ = 0;
  std::vector<double> values_;
};

using AnyImage = std::variant<GrayImage, RgbImage>;

/// Reads binary PGM (P5) or PPM (P6) with maxval 255.
AnyImage load_image(const std::filesystem::path& path);

/// Like load_image, converting P6 input to gray.
GrayImage load_gray(const std::filesystem::path& path);

/// Writes binary P5 with header "P5\n<w> <h>\n255\n".
void save_image(const GrayImage& img, const std::filesystem::path& path);

/// Serialises to the exact bytes save_image writes.
std::vector<std::uint8_t> encode_pgm(const GrayImage& img);

/// ITU-R BT.601 luma, rounded half away from zero.
GrayImage rgb_to_gray(const RgbImage& img);

/// Bilinear resampling with pixel-centre alignment and edge clamping.
GrayImage resize_bilinear(const GrayImage& img, std::size_t out_height, std::size_t out_width);

double mean_intensity(const GrayImage& img);
double mean_intensity(const RealPlane& plane);

/// Round half away from zero, then clamp to [0,255].
std::uint8_t quantize(double value) noexcept;

}  // namespace fabinspect
