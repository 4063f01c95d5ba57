#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "fabinspect/classifier.hpp"
#include "fabinspect/intensity.hpp"
#include "fabinspect/manifest.hpp"

namespace fabinspect {

/// K independently trained members; member i was seeded with base_seed + i.
struct Ensemble {
  std::vector<ClassifierModel> members;
  std::uint64_t base_seed = 0;
  TrainConfig train_config;       // input side used at inference
  IntensityConfig intensity;      // preprocessing applied before voting
  bool preprocess = true;
};

struct Verdict {
  std::vector<Label> votes;
  Label decision = Label::defect_free;
  std::size_t defective_count = 0;
  std::size_t defect_free_count = 0;
};

/// Strict majority: defective iff more than half of the votes say so.
Verdict majority_vote(std::span<const Label> votes);

struct EnsembleTrainResult {
  Ensemble ensemble;
  std::vector<std::vector<EpochRecord>> curves;  // per member
};

/// Trains K members on the same data. K must be odd. Members run on up to
/// `threads` worker threads (0 = hardware concurrency); results do not
/// depend on scheduling.
EnsembleTrainResult train_ensemble(std::span<const LabeledTensor> dataset, const TrainConfig& cfg, std::size_t k,
                                   std::uint64_t base_seed, std::size_t threads = 0);

/// Optional intensity adjustment, then one vote per member on the same input.
Verdict inspect(const Ensemble& ensemble, const GrayImage& img, bool preprocess);
Verdict inspect(const Ensemble& ensemble, const GrayImage& img);

/// Preprocessed network input for one image.
Tensor prepare_input(const GrayImage& img, const IntensityConfig& icfg, bool preprocess, std::size_t side);

/// Loads, preprocesses and converts every manifest row.
std::vector<LabeledTensor> prepare_dataset(const Manifest& manifest, const IntensityConfig& icfg, bool preprocess,
                                           std::size_t side);

struct ConfusionCounts {
  std::size_t true_positive = 0;   // defective called defective
  std::size_t false_positive = 0;  // defect_free called defective
  std::size_t true_negative = 0;
  std::size_t false_negative = 0;

  std::size_t total() const noexcept { return true_positive + false_positive + true_negative + false_negative; }
  std::size_t correct() const noexcept { return true_positive + true_negative; }
  double accuracy() const noexcept {
    return total() == 0 ? 0.0 : static_cast<double>(correct()) / static_cast<double>(total());
  }
  void record(Label truth, Label decision) noexcept;
};

struct EvaluationError {
  std::string path;
  std::string message;
};

struct EvaluationReport {
  std::vector<std::pair<std::string, ConfusionCounts>> per_type;  // type order
  ConfusionCounts overall;
  std::vector<EvaluationError> errors;
  std::vector<std::string> warnings;
};

EvaluationReport evaluate(const Ensemble& ensemble, const Manifest& manifest);

std::string evaluation_to_json(const EvaluationReport& report);
std::string evaluation_to_csv(const EvaluationReport& report);

/// Directory layout: member_<i>.ckpt files plus ensemble.json.
void save_ensemble(const Ensemble& ensemble, const std::filesystem::path& dir);
Ensemble load_ensemble(const std::filesystem::path& dir);

/// Stable fingerprint of the training and preprocessing settings.
std::string config_digest(const Ensemble& ensemble);

}  // namespace fabinspect
