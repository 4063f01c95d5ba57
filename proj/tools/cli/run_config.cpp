#include "run_config.hpp"

#include <charconv>
#include <deque>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <type_traits>
#include <sstream>
#include <vector>

#include "fabinspect/error.hpp"

namespace fabinspect::cli {

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

struct Location {
  const std::string& origin;
  std::size_t line;

  [[noreturn]] void fail(const std::string& what) const {
    throw Error(Errc::config, origin + ":" + std::to_string(line) + ": " + what);
  }
};

template <typename T>
T parse_integer(std::string_view text, const Location& at) {
  T value{};
  const auto* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc() || ptr != end) at.fail("expected a nonnegative integer, got '" + std::string(text) + "'");
  return value;
}

double parse_double(std::string_view text, const Location& at) {
  double value = 0.0;
  const auto* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc() || ptr != end) at.fail("expected a number, got '" + std::string(text) + "'");
  return value;
}

bool parse_bool(std::string_view text, const Location& at) {
  if (text == "true" || text == "yes" || text == "1") return true;
  if (text == "false" || text == "no" || text == "0") return false;
  at.fail("expected true or false, got '" + std::string(text) + "'");
}

using Setter = std::function<void(std::string_view, const Location&)>;
using Section = std::map<std::string, Setter, std::less<>>;

template <typename T>
  requires(std::is_unsigned_v<T> && !std::is_same_v<T, bool>)
Setter set(T& field) {
  return [&field](std::string_view v, const Location& at) { field = parse_integer<T>(v, at); };
}
Setter set(double& field) {
  return [&field](std::string_view v, const Location& at) { field = parse_double(v, at); };
}
Setter set(bool& field) {
  return [&field](std::string_view v, const Location& at) { field = parse_bool(v, at); };
}

Section weave_keys(WeaveParams& w) {
  return {{"freq_x", set(w.freq_x)},         {"freq_y", set(w.freq_y)},
          {"amplitude", set(w.amplitude)},   {"base", set(w.base)},
          {"noise_sigma", set(w.noise_sigma)}, {"blob_scale", set(w.blob_scale)}};
}

}  // namespace

RunConfig::RunConfig() { corpus.families = default_families(); }

RunConfig parse_run_config(std::string_view text, const std::string& origin) {
  RunConfig cfg;
  std::optional<std::size_t> corpus_samples;
  // Families declared in the file, with the per-family sample count if given.
  std::deque<std::pair<FamilySpec, std::optional<std::size_t>>> families;
  std::set<std::string, std::less<>> seen_sections;

  const Section intensity{{"peaks_to_remove", set(cfg.intensity.peaks_to_remove)},
                          {"target_mean", set(cfg.intensity.target_mean)},
                          {"mirror_peaks", set(cfg.intensity.mirror_peaks)}};
  const Section uniformity{{"window", set(cfg.uniformity.window)},
                           {"stride", set(cfg.uniformity.stride)},
                           {"threshold_divisor", set(cfg.uniformity.threshold_divisor)},
                           {"trim", set(cfg.uniformity.trim)}};
  const Section train{{"epochs", set(cfg.train.epochs)},       {"batch_size", set(cfg.train.batch_size)},
                      {"lr0", set(cfg.train.lr0)},             {"lr_decay", set(cfg.train.lr_decay)},
                      {"input_side", set(cfg.train.input_side)}};
  const Section ensemble{{"k", set(cfg.ensemble.k)},
                         {"base_seed", set(cfg.ensemble.base_seed)},
                         {"preprocess", set(cfg.ensemble.preprocess)},
                         {"threads", set(cfg.ensemble.threads)}};
  const Section corpus{
      {"height", set(cfg.corpus.height)},
      {"width", set(cfg.corpus.width)},
      {"seed", set(cfg.corpus.seed)},
      {"gradient_min", set(cfg.corpus.gradient_min)},
      {"gradient_max", set(cfg.corpus.gradient_max)},
      {"extent_min", set(cfg.corpus.extent_min)},
      {"extent_max", set(cfg.corpus.extent_max)},
      {"samples_per_label",
       [&](std::string_view v, const Location& at) { corpus_samples = parse_integer<std::size_t>(v, at); }},
      {"defect_mix", [&](std::string_view v, const Location& at) {
         std::array<double, 3> mix{};
         std::size_t n = 0;
         while (true) {
           const auto comma = v.find(',');
           if (n == mix.size()) at.fail("defect_mix takes three weights: hole, missing_yarn, wrinkle");
           mix[n++] = parse_double(trim(v.substr(0, comma)), at);
           if (comma == std::string_view::npos) break;
           v.remove_prefix(comma + 1);
         }
         if (n != mix.size()) at.fail("defect_mix takes three weights: hole, missing_yarn, wrinkle");
         cfg.corpus.defect_mix = mix;
       }}};

  Section family_section;
  const Section* current = nullptr;
  std::string current_name;

  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto eol = text.find('\n', pos);
    std::string_view line = text.substr(pos, eol == std::string_view::npos ? std::string_view::npos : eol - pos);
    pos = eol == std::string_view::npos ? text.size() + 1 : eol + 1;
    ++line_no;
    const Location at{origin, line_no};

    line = trim(line);
    if (line.empty() || line.front() == '#' || line.front() == ';') continue;

    if (line.front() == '[') {
      if (line.back() != ']') at.fail("unterminated section header");
      const auto header = trim(line.substr(1, line.size() - 2));
      std::string name(header);
      if (header.starts_with("family")) {
        const auto rest = header.substr(6);
        const auto type = trim(rest);
        if (type.empty() || rest.front() != ' ') at.fail("family sections need a name: [family <name>]");
        families.push_back({FamilySpec{std::string(type), WeaveParams{}, 1}, std::nullopt});
        auto& fam = families.back();
        family_section = weave_keys(fam.first.weave);
        family_section.emplace("samples_per_label", [&fam](std::string_view v, const Location& l) {
          fam.second = parse_integer<std::size_t>(v, l);
        });
        current = &family_section;
        name = "family " + std::string(type);
      } else if (header == "intensity") {
        current = &intensity;
      } else if (header == "uniformity") {
        current = &uniformity;
      } else if (header == "train") {
        current = &train;
      } else if (header == "ensemble") {
        current = &ensemble;
      } else if (header == "corpus") {
        current = &corpus;
      } else {
        at.fail("unknown section [" + name + "]");
      }
      if (!seen_sections.insert(name).second) at.fail("duplicate section [" + name + "]");
      current_name = name;
      continue;
    }

    const auto eq = line.find('=');
    if (eq == std::string_view::npos) at.fail("expected 'key = value'");
    const auto key = trim(line.substr(0, eq));
    const auto value = trim(line.substr(eq + 1));
    if (current == nullptr) at.fail("key '" + std::string(key) + "' outside any section");
    if (value.empty()) at.fail("key '" + std::string(key) + "' has no value");
    const auto it = current->find(key);
    if (it == current->end()) at.fail("unknown key '" + std::string(key) + "' in [" + current_name + "]");
    it->second(value, at);
  }

  if (!families.empty()) {
    cfg.corpus.families.clear();
    for (auto& [fam, samples] : families) {
      fam.samples_per_label = samples.value_or(corpus_samples.value_or(fam.samples_per_label));
      cfg.corpus.families.push_back(std::move(fam));
    }
  } else if (corpus_samples) {
    for (auto& fam : cfg.corpus.families) fam.samples_per_label = *corpus_samples;
  }

  try {
    cfg.intensity.validate();
    cfg.uniformity.validate();
    cfg.train.validate();
    cfg.corpus.validate();
  } catch (const Error& e) {
    throw Error(Errc::config, origin + ": " + e.what());
  }
  if (cfg.ensemble.k == 0 || cfg.ensemble.k % 2 == 0) {
    throw Error(Errc::config, origin + ": ensemble k must be odd, got " + std::to_string(cfg.ensemble.k));
  }
  return cfg;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::missing_file, "cannot open config " + path.string());
  std::ostringstream text;
  text << in.rdbuf();
  return parse_run_config(text.str(), path.string());
}

std::string format_run_config(const RunConfig& cfg) {
  std::ostringstream s;
  s.precision(17);
  s << std::boolalpha;
  s << "[intensity]\n"
    << "peaks_to_remove = " << cfg.intensity.peaks_to_remove << "\n"
    << "target_mean = " << cfg.intensity.target_mean << "\n"
    << "mirror_peaks = " << cfg.intensity.mirror_peaks << "\n\n";
  s << "[uniformity]\n"
    << "window = " << cfg.uniformity.window << "\n"
    << "stride = " << cfg.uniformity.stride << "\n"
    << "threshold_divisor = " << cfg.uniformity.threshold_divisor << "\n"
    << "trim = " << cfg.uniformity.trim << "\n\n";
  s << "[train]\n"
    << "epochs = " << cfg.train.epochs << "\n"
    << "batch_size = " << cfg.train.batch_size << "\n"
    << "lr0 = " << cfg.train.lr0 << "\n"
    << "lr_decay = " << cfg.train.lr_decay << "\n"
    << "input_side = " << cfg.train.input_side << "\n\n";
  s << "[ensemble]\n"
    << "k = " << cfg.ensemble.k << "\n"
    << "base_seed = " << cfg.ensemble.base_seed << "\n"
    << "preprocess = " << cfg.ensemble.preprocess << "\n"
    << "threads = " << cfg.ensemble.threads << "\n\n";
  const auto& c = cfg.corpus;
  s << "[corpus]\n"
    << "height = " << c.height << "\n"
    << "width = " << c.width << "\n"
    << "seed = " << c.seed << "\n"
    << "gradient_min = " << c.gradient_min << "\n"
    << "gradient_max = " << c.gradient_max << "\n"
    << "defect_mix = " << c.defect_mix[0] << ", " << c.defect_mix[1] << ", " << c.defect_mix[2] << "\n"
    << "extent_min = " << c.extent_min << "\n"
    << "extent_max = " << c.extent_max << "\n";
  for (const auto& f : c.families) {
    s << "\n[family " << f.fabric_type << "]\n"
      << "freq_x = " << f.weave.freq_x << "\n"
      << "freq_y = " << f.weave.freq_y << "\n"
      << "amplitude = " << f.weave.amplitude << "\n"
      << "base = " << f.weave.base << "\n"
      << "noise_sigma = " << f.weave.noise_sigma << "\n"
      << "blob_scale = " << f.weave.blob_scale << "\n"
      << "samples_per_label = " << f.samples_per_label << "\n";
  }
  return s.str();
}

}  // namespace fabinspect::cli
