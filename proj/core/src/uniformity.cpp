#include "fabinspect/uniformity.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "fabinspect/error.hpp"

namespace fabinspect {

void UniformityConfig::validate() const {
  if (window == 0 || stride == 0) {
    throw Error(Errc::config, "uniformity window and stride must be positive");
  }
  if (!(threshold_divisor > 0.0)) {
    throw Error(Errc::config, "uniformity threshold_divisor must be positive");
  }
}

std::vector<BlockOrigin> block_grid(std::size_t height, std::size_t width, const UniformityConfig& cfg) {
  cfg.validate();
  if (cfg.window > height || cfg.window > width) {
    throw Error(Errc::invalid_argument, "extraction window " + std::to_string(cfg.window) +
                                            " larger than image " + std::to_string(height) + "x" +
                                            std::to_string(width));
  }
  std::vector<BlockOrigin> origins;
  for (std::size_t r = 0; r + cfg.window <= height; r += cfg.stride) {
    for (std::size_t c = 0; c + cfg.window <= width; c += cfg.stride) {
      origins.push_back(BlockOrigin{r, c});
    }
  }
  return origins;
}

std::vector<GrayImage> extract_blocks(const GrayImage& img, const UniformityConfig& cfg) {
  const auto origins = block_grid(img.height(), img.width(), cfg);
  std::vector<GrayImage> blocks;
  blocks.reserve(origins.size());
  for (const auto& o : origins) {
    GrayImage block(cfg.window, cfg.window);
    for (std::size_t r = 0; r < cfg.window; ++r) {
      const auto src = img.pixels().subspan((o.row + r) * img.width() + o.col, cfg.window);
      std::copy(src.begin(), src.end(), block.pixels().begin() + static_cast<std::ptrdiff_t>(r * cfg.window));
    }
    blocks.push_back(std::move(block));
  }
  return blocks;
}

TextureFrequency block_texture_frequency(const GrayImage& block, const UniformityConfig& cfg) {
  cfg.validate();
  auto w = amplitude(dft2(block));
  w(0, 0) = 0.0;

  TextureFrequency result;
  const auto values = w.values();
  const double sum = std::accumulate(values.begin(), values.end(), 0.0);
  result.threshold = sum / cfg.threshold_divisor;
  // Only DFT round-off remains once DC is gone from a constant block.
  if (!(*std::max_element(values.begin(), values.end()) > 1e-9)) {
    result.featureless = true;
    return result;
  }

  // The selected prefix is usually short; grow the ranked candidate list
  // until the running sum crosses the threshold.
  std::vector<Bin> selected;
  std::size_t k = std::min<std::size_t>(64, w.size());
  for (;;) {
    const auto ranked = top_k_points(w, k);
    selected.clear();
    double running = 0.0;
    bool crossed = false;
    for (const auto& bin : ranked) {
      const double a = w(bin.u, bin.v);
      if (running + a > result.threshold) {
        crossed = true;
        break;
      }
      running += a;
      selected.push_back(bin);
    }
    if (crossed || k == w.size()) {
      if (selected.empty()) selected.push_back(ranked.front());
      break;
    }
    k = std::min(k * 4, w.size());
  }

  const double cy = static_cast<double>(block.height() / 2);
  const double cx = static_cast<double>(block.width() / 2);
  double weight_sum = 0.0;
  for (const auto& bin : selected) weight_sum += w(bin.u, bin.v);
  double freq = 0.0;
  for (const auto& bin : selected) {
    const auto shifted = center_shift_coords(bin.u, bin.v, block.height(), block.width());
    const double d = std::hypot(static_cast<double>(shifted.u) - cy, static_cast<double>(shifted.v) - cx);
    freq += w(bin.u, bin.v) / weight_sum * d;
  }
  result.value = freq;
  result.points = selected.size();
  result.selected_sum = weight_sum;
  return result;
}

TrimmedMean trimmed_mean(const std::vector<double>& values, std::size_t q) {
  if (values.size() <= 2 * q) {
    throw Error(Errc::insufficient_blocks, "insufficient blocks: " + std::to_string(values.size()) +
                                               " blocks cannot drop " + std::to_string(q) + " from each end");
  }
  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return values[a] != values[b] ? values[a] < values[b] : a < b;
  });
  TrimmedMean out;
  out.kept.assign(order.begin() + static_cast<std::ptrdiff_t>(q),
                  order.end() - static_cast<std::ptrdiff_t>(q));
  std::sort(out.kept.begin(), out.kept.end());
  double sum = 0.0;
  for (auto i : out.kept) sum += values[i];
  out.score = sum / static_cast<double>(out.kept.size());
  return out;
}

UniformityReport measure_uniformity(const GrayImage& img, const UniformityConfig& cfg) {
  UniformityReport report;
  report.origins = block_grid(img.height(), img.width(), cfg);
  if (report.origins.size() <= 2 * cfg.trim) {
    throw Error(Errc::insufficient_blocks, "insufficient blocks: " + std::to_string(report.origins.size()) +
                                               " blocks with trim " + std::to_string(cfg.trim));
  }
  for (const auto& block : extract_blocks(img, cfg)) {
    const auto tf = block_texture_frequency(block, cfg);
    report.frequencies.push_back(tf.value);
    report.featureless.push_back(tf.featureless);
  }
  auto tm = trimmed_mean(report.frequencies, cfg.trim);
  report.kept = std::move(tm.kept);
  report.score = tm.score;
  return report;
}

UniformityReport measure_adjusted_uniformity(const GrayImage& img, const IntensityConfig& icfg,
                                             const UniformityConfig& ucfg) {
  return measure_uniformity(adjust_intensity(img, icfg), ucfg);
}

SplitResult split_by_scores(const std::vector<ManifestRow>& rows, const std::vector<double>& scores,
                            std::size_t n_train_types) {
  if (rows.size() != scores.size()) {
    throw Error(Errc::invalid_argument, "one score per manifest row required");
  }
  if (rows.empty()) {
    throw Error(Errc::config, "cannot split an empty manifest");
  }
  struct Acc {
    double sum = 0.0;
    std::size_t n = 0;
  };
  auto type_less = [](const std::string& a, const std::string& b) { return fabric_type_less(a, b); };
  std::map<std::string, Acc, decltype(type_less)> per_type(type_less);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    auto& acc = per_type[rows[i].fabric_type];
    if (rows[i].label == Label::defect_free) {
      acc.sum += scores[i];
      ++acc.n;
    }
  }
  if (n_train_types >= per_type.size()) {
    throw Error(Errc::config, "train type count " + std::to_string(n_train_types) +
                                  " must be below the number of fabric types (" +
                                  std::to_string(per_type.size()) + ")");
  }

  SplitResult result;
  for (const auto& [type, acc] : per_type) {
    if (acc.n == 0) {
      throw Error(Errc::config, "fabric type '" + type + "' has no defect-free samples");
    }
    result.ranking.push_back(TypeRanking{type, acc.sum / static_cast<double>(acc.n), acc.n});
  }
  // per_type iterates in type order, so a stable sort leaves ties by identifier.
  std::stable_sort(result.ranking.begin(), result.ranking.end(),
                   [](const TypeRanking& a, const TypeRanking& b) { return a.mean_score > b.mean_score; });

  std::vector<std::string> train_types;
  for (std::size_t i = 0; i < n_train_types; ++i) train_types.push_back(result.ranking[i].fabric_type);
  for (const auto& row : rows) {
    const bool train = std::find(train_types.begin(), train_types.end(), row.fabric_type) != train_types.end();
    (train ? result.train : result.test).push_back(row);
  }
  return result;
}

SplitResult split_by_uniformity(const Manifest& manifest, std::size_t n_train_types,
                                const IntensityConfig& icfg, const UniformityConfig& ucfg) {
  std::vector<double> scores(manifest.rows.size(), 0.0);
  for (std::size_t i = 0; i < manifest.rows.size(); ++i) {
    const auto& row = manifest.rows[i];
    if (row.label != Label::defect_free) continue;
    scores[i] = measure_adjusted_uniformity(load_gray(manifest.resolve(row)), icfg, ucfg).score;
  }
  return split_by_scores(manifest.rows, scores, n_train_types);
}

}  // namespace fabinspect
