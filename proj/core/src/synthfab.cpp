#include "fabinspect/synthfab.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>

#include "fabinspect/error.hpp"
#include "fabinspect/random.hpp"

namespace fabinspect {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

// Circular moving average of width 2 * radius + 1 along rows, then columns.
void box_blur(std::vector<double>& field, std::size_t height, std::size_t width, std::size_t radius) {
  const double norm = 1.0 / static_cast<double>(2 * radius + 1);
  std::vector<double> line(std::max(height, width));
  auto blur_line = [&](std::size_t n, auto&& get, auto&& set) {
    for (std::size_t i = 0; i < n; ++i) line[i] = get(i);
    double sum = 0.0;
    const auto r = static_cast<std::ptrdiff_t>(radius);
    const auto sn = static_cast<std::ptrdiff_t>(n);
    auto wrap = [&](std::ptrdiff_t i) { return static_cast<std::size_t>(((i % sn) + sn) % sn); };
    for (std::ptrdiff_t d = -r; d <= r; ++d) sum += line[wrap(d)];
    for (std::ptrdiff_t i = 0; i < sn; ++i) {
      set(static_cast<std::size_t>(i), sum * norm);
      sum += line[wrap(i + r + 1)] - line[wrap(i - r)];
    }
  };
  for (std::size_t r = 0; r < height; ++r) {
    double* row = field.data() + r * width;
    blur_line(width, [&](std::size_t i) { return row[i]; }, [&](std::size_t i, double v) { row[i] = v; });
  }
  for (std::size_t c = 0; c < width; ++c) {
    blur_line(height, [&](std::size_t i) { return field[i * width + c]; },
              [&](std::size_t i, double v) { field[i * width + c] = v; });
  }
}

std::vector<double> smoothed_noise(std::size_t height, std::size_t width, double sigma, std::size_t blob,
                                   std::uint64_t seed) {
  std::vector<double> field(height * width, 0.0);
  if (sigma <= 0.0) return field;
  Rng rng(seed);
  for (auto& v : field) v = rng.normal();
  if (blob > 1) box_blur(field, height, width, blob / 2);
  double mean = 0.0;
  for (double v : field) mean += v;
  mean /= static_cast<double>(field.size());
  double var = 0.0;
  for (double v : field) var += (v - mean) * (v - mean);
  const double sd = std::sqrt(var / static_cast<double>(field.size()));
  if (sd > 0.0) {
    for (auto& v : field) v = (v - mean) / sd * sigma;
  }
  return field;
}

double smoothstep_weight(double distance, double reach, double core) {
  if (distance >= reach) return 0.0;
  if (distance <= core) return 1.0;
  const double t = (distance - core) / (reach - core);
  const double c = std::cos(0.5 * std::numbers::pi * t);
  return c * c;
}

}  // namespace

void WeaveParams::validate(std::size_t height, std::size_t width) const {
  if (!(freq_x > 0.0 && freq_x < static_cast<double>(height) / 2.0) ||
      !(freq_y > 0.0 && freq_y < static_cast<double>(width) / 2.0)) {
    throw Error(Errc::invalid_argument, "weave frequency must lie strictly between 0 and the Nyquist limit");
  }
  if (amplitude < 0.0 || base - amplitude < 0.0 || base + amplitude > 255.0) {
    throw Error(Errc::invalid_argument, "weave base +/- amplitude must stay within [0, 255]");
  }
  if (noise_sigma < 0.0) {
    throw Error(Errc::invalid_argument, "weave noise_sigma must be nonnegative");
  }
}

GrayImage generate_weave(const WeaveParams& p, std::size_t height, std::size_t width) {
  p.validate(height, width);
  const auto noise = smoothed_noise(height, width, p.noise_sigma, p.blob_scale, p.seed);
  // Per-pixel angular frequency of each factor; a quarter turn swaps the axes
  // each factor runs along while keeping its spatial period.
  const double wx = kTwoPi * p.freq_x / static_cast<double>(height);
  const double wy = kTwoPi * p.freq_y / static_cast<double>(width);
  std::vector<double> along_rows(height);
  std::vector<double> along_cols(width);
  for (std::size_t x = 0; x < height; ++x) {
    const double pos = static_cast<double>(x) + p.offset_x;
    along_rows[x] = p.rotated ? std::sin(wy * pos) : std::sin(wx * pos);
  }
  for (std::size_t y = 0; y < width; ++y) {
    const double pos = static_cast<double>(y) + p.offset_y;
    along_cols[y] = p.rotated ? std::sin(wx * pos) : std::sin(wy * pos);
  }
  GrayImage img(height, width);
  for (std::size_t x = 0; x < height; ++x) {
    for (std::size_t y = 0; y < width; ++y) {
      img(x, y) = quantize(p.base + p.amplitude * along_rows[x] * along_cols[y] + noise[x * width + y]);
    }
  }
  return img;
}

GrayImage apply_pressing_gradient(const GrayImage& img, std::array<double, 2> center, double strength) {
  if (!(strength >= 0.0 && strength <= 1.0)) {
    throw Error(Errc::invalid_argument, "pressing strength must lie in [0, 1]");
  }
  const double h = static_cast<double>(img.height() - 1);
  const double w = static_cast<double>(img.width() - 1);
  double r2_max = 0.0;
  for (double cr : {0.0, h}) {
    for (double cc : {0.0, w}) {
      r2_max = std::max(r2_max, (cr - center[0]) * (cr - center[0]) + (cc - center[1]) * (cc - center[1]));
    }
  }
  GrayImage out = img;
  if (strength == 0.0 || r2_max == 0.0) return out;
  for (std::size_t r = 0; r < img.height(); ++r) {
    const double dr = static_cast<double>(r) - center[0];
    for (std::size_t c = 0; c < img.width(); ++c) {
      const double dc = static_cast<double>(c) - center[1];
      const double factor = 1.0 - strength * (dr * dr + dc * dc) / r2_max;
      out(r, c) = quantize(img(r, c) * factor);
    }
  }
  return out;
}

GrayImage apply_pressing_gradient(const GrayImage& img, double strength) {
  return apply_pressing_gradient(
      img, {static_cast<double>(img.height() - 1) / 2.0, static_cast<double>(img.width() - 1) / 2.0}, strength);
}

std::string to_string(DefectKind kind) {
  switch (kind) {
    case DefectKind::hole: return "hole";
    case DefectKind::missing_yarn: return "missing_yarn";
    case DefectKind::wrinkle: return "wrinkle";
  }
  return "unknown";
}

GrayImage inject_defect(const GrayImage& img, const DefectSpec& d, std::uint64_t seed) {
  if (!(d.extent >= 3.0)) {
    throw Error(Errc::invalid_argument, "defect extent must be at least 3 pixels");
  }
  const double h = static_cast<double>(img.height());
  const double w = static_cast<double>(img.width());
  const double row = static_cast<double>(d.row);
  const double col = static_cast<double>(d.col);
  auto inside = [&](double r, double c, double margin) {
    return r - margin >= 0.0 && r + margin <= h - 1.0 && c - margin >= 0.0 && c + margin <= w - 1.0;
  };
  const double mean = mean_intensity(img);
  Rng rng(seed);
  GrayImage out = img;

  switch (d.kind) {
    case DefectKind::hole: {
      if (!inside(row, col, d.extent)) throw Error(Errc::invalid_argument, "hole region leaves the image");
      const double target = std::clamp(mean + d.intensity_delta, 0.0, 255.0);
      const auto r0 = static_cast<std::size_t>(row - d.extent);
      const auto c0 = static_cast<std::size_t>(col - d.extent);
      for (std::size_t r = r0; r <= static_cast<std::size_t>(row + d.extent); ++r) {
        for (std::size_t c = c0; c <= static_cast<std::size_t>(col + d.extent); ++c) {
          const double dist = std::hypot(static_cast<double>(r) - row, static_cast<double>(c) - col);
          const double wgt = smoothstep_weight(dist, d.extent, 0.6 * d.extent);
          if (wgt > 0.0) out(r, c) = quantize((1.0 - wgt) * img(r, c) + wgt * target);
        }
      }
      break;
    }
    case DefectKind::missing_yarn: {
      const bool horizontal = rng.below(2) == 0;
      const double half = d.extent / 2.0;
      const double centre = horizontal ? row : col;
      const double limit = horizontal ? h : w;
      if (centre - half < 0.0 || centre + half > limit - 1.0) {
        throw Error(Errc::invalid_argument, "missing-yarn band leaves the image");
      }
      const auto lo = static_cast<std::size_t>(std::ceil(centre - half));
      const auto hi = static_cast<std::size_t>(std::floor(centre + half));
      for (std::size_t i = lo; i <= hi; ++i) {
        const double wgt = smoothstep_weight(std::abs(static_cast<double>(i) - centre), half, 0.5 * half);
        if (wgt <= 0.0) continue;
        const std::size_t n = horizontal ? img.width() : img.height();
        for (std::size_t j = 0; j < n; ++j) {
          const std::size_t r = horizontal ? i : j;
          const std::size_t c = horizontal ? j : i;
          const double flattened = mean + (img(r, c) - mean) * 0.15 + d.intensity_delta;
          out(r, c) = quantize((1.0 - wgt) * img(r, c) + wgt * flattened);
        }
      }
      break;
    }
    case DefectKind::wrinkle: {
      if (!inside(row, col, d.extent)) throw Error(Errc::invalid_argument, "wrinkle region leaves the image");
      const double angle = rng.uniform(0.0, std::numbers::pi);
      const double dr = std::sin(angle);
      const double dc = std::cos(angle);
      // Longest half-length (up to 4 extents) whose capsule stays inside.
      double half_len = 4.0 * d.extent;
      while (half_len > 0.0 && !(inside(row + dr * half_len, col + dc * half_len, d.extent) &&
                                 inside(row - dr * half_len, col - dc * half_len, d.extent))) {
        half_len = std::max(0.0, half_len - 1.0);
      }
      const double sigma = d.extent / 3.0;
      const double reach = d.extent;
      const auto r_lo = static_cast<std::size_t>(std::max(0.0, row - half_len - reach));
      const auto r_hi = static_cast<std::size_t>(std::min(h - 1.0, row + half_len + reach));
      const auto c_lo = static_cast<std::size_t>(std::max(0.0, col - half_len - reach));
      const auto c_hi = static_cast<std::size_t>(std::min(w - 1.0, col + half_len + reach));
      for (std::size_t r = r_lo; r <= r_hi; ++r) {
        for (std::size_t c = c_lo; c <= c_hi; ++c) {
          const double pr = static_cast<double>(r) - row;
          const double pc = static_cast<double>(c) - col;
          const double along = std::clamp(pr * dr + pc * dc, -half_len, half_len);
          const double dist = std::hypot(pr - along * dr, pc - along * dc);
          if (dist >= reach) continue;
          out(r, c) = quantize(img(r, c) + d.intensity_delta * std::exp(-dist * dist / (2.0 * sigma * sigma)));
        }
      }
      break;
    }
  }
  return out;
}

void CorpusSpec::validate() const {
  if (families.empty()) throw Error(Errc::config, "corpus needs at least one family");
  for (const auto& f : families) {
    if (f.samples_per_label == 0) throw Error(Errc::config, "family '" + f.fabric_type + "' needs samples_per_label >= 1");
    if (f.fabric_type.empty() || f.fabric_type.find(',') != std::string::npos) {
      throw Error(Errc::config, "fabric type names must be nonempty and contain no commas");
    }
    try {
      f.weave.validate(height, width);
    } catch (const Error& e) {
      throw Error(Errc::config, "family '" + f.fabric_type + "': " + e.what());
    }
  }
  if (height < 8 || width < 8) throw Error(Errc::config, "corpus images must be at least 8x8");
  if (!(gradient_min >= 0.0 && gradient_min <= gradient_max && gradient_max <= 1.0)) {
    throw Error(Errc::config, "corpus gradient range must satisfy 0 <= min <= max <= 1");
  }
  if (!(extent_min >= 3.0 && extent_min <= extent_max)) {
    throw Error(Errc::config, "corpus defect extents must satisfy 3 <= min <= max");
  }
  if (2.0 * extent_max + 2.0 >= static_cast<double>(std::min(height, width))) {
    throw Error(Errc::config, "corpus defect extent too large for the image");
  }
  double mix = 0.0;
  for (double m : defect_mix) {
    if (m < 0.0) throw Error(Errc::config, "defect mix weights must be nonnegative");
    mix += m;
  }
  if (!(mix > 0.0)) throw Error(Errc::config, "defect mix needs a positive weight");
}

std::vector<FamilySpec> default_families(std::size_t samples_per_label) {
  auto family = [&](std::string type, double fx, double fy, double amp, double noise, std::size_t blob) {
    WeaveParams w;
    w.freq_x = fx;
    w.freq_y = fy;
    w.amplitude = amp;
    w.base = 120.0;
    w.noise_sigma = noise;
    w.blob_scale = blob;
    return FamilySpec{std::move(type), w, samples_per_label};
  };
  // The regular weaves sit on whole bins of the 360-pixel uniformity blocks
  // (0.75 and 0.6 of the image frequency), so their peaks stay sharp. Family 5
  // uses the same look half a bin off, where mild blob noise already dominates
  // the smeared peaks. Family 6 is coarse and strongly blotched.
  return {
      family("1", 80.0 / 3.0, 140.0 / 3.0, 10.0, 4.0, 181),
      family("2", 36.0, 110.0 / 3.0, 10.0, 4.0, 181),
      family("3", 32.0, 125.0 / 3.0, 10.0, 4.0, 181),
      family("4", 88.0 / 3.0, 110.0 / 3.0, 10.0, 4.0, 181),
      family("5", 30.0, 37.5, 10.0, 6.0, 181),
      family("6", 9.5, 11.5, 10.0, 18.0, 61),
  };
}

GrayImage generate_sample(const CorpusSpec& spec, std::size_t family, Label label, std::size_t index) {
  const auto& fam = spec.families.at(family);
  const std::uint64_t sample_seed =
      mix_seed(mix_seed(spec.seed, family), static_cast<std::uint64_t>(label) * 1000003ull + index);
  Rng rng(sample_seed);
  const double h = static_cast<double>(spec.height);
  const double w = static_cast<double>(spec.width);

  WeaveParams weave = fam.weave;
  weave.seed = rng.next_u64();
  weave.offset_x = rng.uniform(0.0, h);
  weave.offset_y = rng.uniform(0.0, w);
  weave.rotated = rng.below(2) == 1;
  // A quarter turn must keep both factors below Nyquist on the swapped axes.
  if (weave.rotated && (weave.freq_y / w >= 0.5 || weave.freq_x / h >= 0.5)) weave.rotated = false;
  GrayImage img = generate_weave(weave, spec.height, spec.width);

  const double strength = rng.uniform(spec.gradient_min, spec.gradient_max);
  const std::array<double, 2> centre{(h - 1.0) / 2.0 + rng.uniform(-0.1, 0.1) * h,
                                     (w - 1.0) / 2.0 + rng.uniform(-0.1, 0.1) * w};
  const std::uint64_t defect_seed = rng.next_u64();
  const double pick = rng.uniform() * (spec.defect_mix[0] + spec.defect_mix[1] + spec.defect_mix[2]);
  const double extent = rng.uniform(spec.extent_min, spec.extent_max);
  const double margin = extent + 1.0;
  const double row = rng.uniform(margin, h - 1.0 - margin);
  const double col = rng.uniform(margin, w - 1.0 - margin);
  const double magnitude = rng.uniform(0.0, 1.0);
  const bool raised = rng.below(2) == 1;

  if (label == Label::defective) {
    DefectSpec d;
    if (pick < spec.defect_mix[0]) {
      d.kind = DefectKind::hole;
      d.intensity_delta = -(91.0 + 52.0 * magnitude);
    } else if (pick < spec.defect_mix[0] + spec.defect_mix[1]) {
      d.kind = DefectKind::missing_yarn;
      d.intensity_delta = -(45.5 + 32.5 * magnitude);
    } else {
      d.kind = DefectKind::wrinkle;
      d.intensity_delta = (raised ? 1.0 : -1.0) * (78.0 + 39.0 * magnitude);
    }
    d.extent = extent;
    d.row = static_cast<std::size_t>(row);
    d.col = static_cast<std::size_t>(col);
    img = inject_defect(img, d, defect_seed);
  }
  return apply_pressing_gradient(img, centre, strength);
}

namespace {

std::string sample_file(const std::string& type, Label label, std::size_t index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "_%04zu.pgm", index);
  return "type" + type + "_" + std::string(to_string(label)) + buf;
}

}  // namespace

std::vector<ManifestRow> corpus_rows(const CorpusSpec& spec) {
  std::vector<ManifestRow> rows;
  for (const auto& fam : spec.families) {
    for (Label label : {Label::defect_free, Label::defective}) {
      for (std::size_t i = 0; i < fam.samples_per_label; ++i) {
        rows.push_back(ManifestRow{sample_file(fam.fabric_type, label, i), fam.fabric_type, label});
      }
    }
  }
  return rows;
}

std::vector<ManifestRow> generate_corpus(const CorpusSpec& spec, const std::filesystem::path& out_dir) {
  spec.validate();
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw Error(Errc::io, "cannot create " + out_dir.string() + ": " + ec.message());

  const auto rows = corpus_rows(spec);
  std::size_t n = 0;
  for (std::size_t f = 0; f < spec.families.size(); ++f) {
    for (Label label : {Label::defect_free, Label::defective}) {
      for (std::size_t i = 0; i < spec.families[f].samples_per_label; ++i) {
        save_image(generate_sample(spec, f, label, i), out_dir / rows[n++].path);
      }
    }
  }
  write_manifest(out_dir / "manifest.csv", rows);
  return rows;
}

}  // namespace fabinspect
