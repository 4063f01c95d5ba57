#include "fabinspect/gray_image.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <iterator>
#include <string>

#include "fabinspect/error.hpp"

namespace fabinspect {

GrayImage::GrayImage(std::size_t height, std::size_t width, std::uint8_t fill)
    : height_(height), width_(width), pixels_(height * width, fill) {
  if (height == 0 || width == 0) {
    throw Error(Errc::invalid_argument, "GrayImage dimensions must be positive");
  }
}

GrayImage::GrayImage(std::size_t height, std::size_t width, std::vector<std::uint8_t> pixels)
    : height_(height), width_(width), pixels_(std::move(pixels)) {
  if (height == 0 || width == 0) {
    throw Error(Errc::invalid_argument, "GrayImage dimensions must be positive");
  }
  if (pixels_.size() != height * width) {
    throw Error(Errc::invalid_argument, "GrayImage pixel count does not match dimensions");
  }
}

RgbImage::RgbImage(std::size_t height, std::size_t width, std::vector<Rgb> pixels)
    : height_(height), width_(width), pixels_(std::move(pixels)) {
  if (height == 0 || width == 0 || pixels_.size() != height * width) {
    throw Error(Errc::invalid_argument, "RgbImage pixel count does not match dimensions");
  }
}

RealPlane::RealPlane(std::size_t height, std::size_t width, double fill)
    : height_(height), width_(width), values_(height * width, fill) {}

RealPlane::RealPlane(std::size_t height, std::size_t width, std::vector<double> values)
    : height_(height), width_(width), values_(std::move(values)) {
  if (values_.size() != height * width) {
    throw Error(Errc::invalid_argument, "RealPlane value count does not match dimensions");
  }
}

RealPlane RealPlane::from_image(const GrayImage& img) {
  std::vector<double> v(img.pixels().begin(), img.pixels().end());
  return RealPlane(img.height(), img.width(), std::move(v));
}

namespace {

class HeaderReader {
 public:
  HeaderReader(const std::vector<std::uint8_t>& bytes, const std::string& name)
      : bytes_(bytes), name_(name) {}

  void skip_space_and_comments() {
    while (pos_ < bytes_.size()) {
      const auto c = bytes_[pos_];
      if (c == '#') {
        while (pos_ < bytes_.size() && bytes_[pos_] != '\n') ++pos_;
      } else if (std::isspace(c)) {
        ++pos_;
      } else {
        break;
      }
    }
  }

  std::size_t read_uint(const char* field) {
    skip_space_and_comments();
    std::size_t value = 0;
    std::size_t digits = 0;
    while (pos_ < bytes_.size() && std::isdigit(bytes_[pos_])) {
      value = value * 10 + static_cast<std::size_t>(bytes_[pos_] - '0');
      if (value > (1u << 30)) {
        throw Error(Errc::malformed_header, name_ + ": " + field + " out of range");
      }
      ++pos_;
      ++digits;
    }
    if (digits == 0) {
      throw Error(Errc::malformed_header, name_ + ": expected " + field);
    }
    return value;
  }

  // Exactly one whitespace byte separates maxval from the raster.
  void expect_single_space() {
    if (pos_ >= bytes_.size() || !std::isspace(bytes_[pos_])) {
      throw Error(Errc::malformed_header, name_ + ": missing separator before pixel data");
    }
    ++pos_;
  }

  std::size_t position() const noexcept { return pos_; }
  void advance(std::size_t n) noexcept { pos_ += n; }

 private:
  const std::vector<std::uint8_t>& bytes_;
  std::string name_;
  std::size_t pos_ = 0;
};

std::vector<std::uint8_t> read_all(const std::filesystem::path& path) {
  std::error_code ec;
  if (!std::filesystem::is_regular_file(path, ec)) {
    throw Error(Errc::missing_file, "no such image file: " + path.string());
  }
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw Error(Errc::io, "cannot open " + path.string());
  }
  return std::vector<std::uint8_t>(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

}  // namespace

AnyImage load_image(const std::filesystem::path& path) {
  const auto bytes = read_all(path);
  const std::string name = path.string();
  if (bytes.size() < 2 || bytes[0] != 'P' || (bytes[1] != '5' && bytes[1] != '6')) {
    throw Error(Errc::malformed_header, name + ": not a binary PGM (P5) or PPM (P6) file");
  }
  const bool color = bytes[1] == '6';
  HeaderReader reader(bytes, name);
  reader.advance(2);
  const auto width = reader.read_uint("width");
  const auto height = reader.read_uint("height");
  const auto maxval = reader.read_uint("maxval");
  if (width == 0 || height == 0) {
    throw Error(Errc::malformed_header, name + ": zero image dimension");
  }
  if (maxval != 255) {
    throw Error(Errc::unsupported_maxval, name + ": unsupported maxval " + std::to_string(maxval));
  }
  reader.expect_single_space();

  const std::size_t channels = color ? 3 : 1;
  const std::size_t need = width * height * channels;
  const std::size_t offset = reader.position();
  if (bytes.size() - offset < need) {
    throw Error(Errc::truncated_data, name + ": truncated pixel data (" +
                                          std::to_string(bytes.size() - offset) + " of " +
                                          std::to_string(need) + " bytes)");
  }
  const auto* data = bytes.data() + offset;
  if (!color) {
    return GrayImage(height, width, std::vector<std::uint8_t>(data, data + need));
  }
  std::vector<Rgb> px(width * height);
  for (std::size_t i = 0; i < px.size(); ++i) {
    px[i] = Rgb{data[3 * i], data[3 * i + 1], data[3 * i + 2]};
  }
  return RgbImage(height, width, std::move(px));
}

GrayImage load_gray(const std::filesystem::path& path) {
  auto any = load_image(path);
  if (auto* gray = std::get_if<GrayImage>(&any)) {
    return std::move(*gray);
  }
  return rgb_to_gray(std::get<RgbImage>(any));
}

std::vector<std::uint8_t> encode_pgm(const GrayImage& img) {
  const std::string header =
      "P5\n" + std::to_string(img.width()) + " " + std::to_string(img.height()) + "\n255\n";
  std::vector<std::uint8_t> out(header.begin(), header.end());
  out.insert(out.end(), img.pixels().begin(), img.pixels().end());
  return out;
}

void save_image(const GrayImage& img, const std::filesystem::path& path) {
  const auto bytes = encode_pgm(img);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw Error(Errc::io, "cannot open " + path.string() + " for writing");
  }
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) {
    throw Error(Errc::io, "write failed: " + path.string());
  }
}

std::uint8_t quantize(double value) noexcept {
  const double r = std::round(value);
  return static_cast<std::uint8_t>(std::clamp(r, 0.0, 255.0));
}

GrayImage rgb_to_gray(const RgbImage& img) {
  std::vector<std::uint8_t> out(img.pixels().size());
  std::transform(img.pixels().begin(), img.pixels().end(), out.begin(), [](const Rgb& p) {
    return quantize(0.299 * p.r + 0.587 * p.g + 0.114 * p.b);
  });
  return GrayImage(img.height(), img.width(), std::move(out));
}

namespace {

struct Tap {
  std::size_t lo;
  std::size_t hi;
  double frac;
};

std::vector<Tap> bilinear_taps(std::size_t in, std::size_t out) {
  std::vector<Tap> taps(out);
  const double scale = static_cast<double>(in) / static_cast<double>(out);
  const double last = static_cast<double>(in - 1);
  for (std::size_t i = 0; i < out; ++i) {
    const double src = std::clamp((static_cast<double>(i) + 0.5) * scale - 0.5, 0.0, last);
    const auto lo = static_cast<std::size_t>(std::floor(src));
    const auto hi = std::min(lo + 1, in - 1);
    taps[i] = Tap{lo, hi, src - static_cast<double>(lo)};
  }
  return taps;
}

}  // namespace

GrayImage resize_bilinear(const GrayImage& img, std::size_t out_height, std::size_t out_width) {
  if (out_height == 0 || out_width == 0) {
    throw Error(Errc::invalid_argument, "resize target dimensions must be positive");
  }
  if (out_height == img.height() && out_width == img.width()) {
    return img;
  }
  const auto rows = bilinear_taps(img.height(), out_height);
  const auto cols = bilinear_taps(img.width(), out_width);
  GrayImage out(out_height, out_width);
  for (std::size_t r = 0; r < out_height; ++r) {
    const auto& ty = rows[r];
    for (std::size_t c = 0; c < out_width; ++c) {
      const auto& tx = cols[c];
      const double top = img(ty.lo, tx.lo) + tx.frac * (img(ty.lo, tx.hi) - img(ty.lo, tx.lo));
      const double bottom = img(ty.hi, tx.lo) + tx.frac * (img(ty.hi, tx.hi) - img(ty.hi, tx.lo));
      out(r, c) = quantize(top + ty.frac * (bottom - top));
    }
  }
  return out;
}

double mean_intensity(const GrayImage& img) {
  if (img.empty()) {
    throw Error(Errc::invalid_argument, "mean of empty image");
  }
  std::uint64_t sum = 0;
  for (auto p : img.pixels()) sum += p;
  return static_cast<double>(sum) / static_cast<double>(img.size());
}

double mean_intensity(const RealPlane& plane) {
  if (plane.size() == 0) {
    throw Error(Errc::invalid_argument, "mean of empty plane");
  }
  double sum = 0.0;
  for (double v : plane.values()) sum += v;
  return sum / static_cast<double>(plane.size());
}

}  // namespace fabinspect
