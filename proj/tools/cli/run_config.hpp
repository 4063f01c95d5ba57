#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

#include "fabinspect/classifier.hpp"
#include "fabinspect/intensity.hpp"
#include "fabinspect/synthfab.hpp"
#include "fabinspect/uniformity.hpp"

namespace fabinspect::cli {

struct EnsembleSettings {
  std::size_t k = 5;
  std::uint64_t base_seed = 0;
  bool preprocess = true;
  std::size_t threads = 0;  // 0 = hardware concurrency
};

/// Everything a command can be configured with. An empty file yields the
/// library defaults; the corpus defaults to the six built-in families.
struct RunConfig {
  IntensityConfig intensity;
  UniformityConfig uniformity;
  TrainConfig train;
  EnsembleSettings ensemble;
  CorpusSpec corpus;

  RunConfig();
};

// Format:
//
//   # comment
//   [train]
//   epochs = 20
//   [family silk]
//   freq_x = 30
//
// Sections: intensity, uniformity, train, ensemble, corpus, family <name>.
// Any [family] section replaces the built-in families. Unknown sections and
// keys are rejected; errors carry "<origin>:<line>:".
RunConfig parse_run_config(std::string_view text, const std::string& origin = "config");
RunConfig load_run_config(const std::filesystem::path& path);

/// Canonical text of a config; parsing it gives the same config back.
std::string format_run_config(const RunConfig& cfg);

}  // namespace fabinspect::cli
