#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "fabinspect/gray_image.hpp"
#include "fabinspect/layers.hpp"
#include "fabinspect/manifest.hpp"
#include "fabinspect/tensor.hpp"

namespace fabinspect {

/// Widths of the compact residual network:
///   stem 3x3 conv (1 -> stem) + ReLU
///   stage 1: residual block at `stem` channels, identity skip
///   stage 2: residual block at `stage2` channels, stride 2, 1x1 projection skip
///   global average pool -> dense(stage2 -> hidden) + ReLU -> dense(hidden -> 2)
struct Architecture {
  std::size_t stem_channels = 8;
  std::size_t stage2_channels = 16;
  std::size_t hidden = 32;
  friend bool operator==(const Architecture&, const Architecture&) = default;
};

enum class ParamId : std::size_t {
  stem_weight,
  stem_bias,
  stage1_conv1_weight,
  stage1_conv1_bias,
  stage1_conv2_weight,
  stage1_conv2_bias,
  stage2_conv1_weight,
  stage2_conv1_bias,
  stage2_conv2_weight,
  stage2_conv2_bias,
  stage2_proj_weight,
  stage2_proj_bias,
  fc1_weight,
  fc1_bias,
  fc2_weight,
  fc2_bias,
  count
};

struct ParamBlock {
  std::string name;
  std::vector<std::size_t> shape;
  std::size_t offset = 0;
  std::size_t size = 0;
  std::size_t fan_in = 0;  // 0 for biases
};

/// Parameter blocks in checkpoint order.
std::vector<ParamBlock> parameter_layout(const Architecture& arch);

class ClassifierModel {
 public:
  ClassifierModel() = default;
  ClassifierModel(Architecture arch, std::uint64_t seed);

  const Architecture& architecture() const noexcept { return arch_; }
  std::uint64_t seed() const noexcept { return seed_; }
  const std::vector<ParamBlock>& layout() const noexcept { return layout_; }

  std::span<const double> parameters() const noexcept { return params_; }
  std::span<double> parameters() noexcept { return params_; }

  std::span<const double> block(ParamId id) const;
  std::span<double> block(ParamId id);

  friend bool operator==(const ClassifierModel& a, const ClassifierModel& b) {
    return a.arch_ == b.arch_ && a.seed_ == b.seed_ && a.params_ == b.params_;
  }

 private:
  Architecture arch_;
  std::uint64_t seed_ = 0;
  std::vector<ParamBlock> layout_;
  std::vector<double> params_;
};

/// He-normal weights (variance 2 / fan_in) from the seed, zero biases.
ClassifierModel init_model(std::uint64_t seed, const Architecture& arch = {});

/// Every intermediate activation of one forward pass, post-ReLU where a ReLU
/// applies.
struct ForwardTrace {
  std::size_t side = 0;
  std::size_t half = 0;  // spatial side after the stride-2 stage
  std::vector<double> stem;    // [C1][S][S]
  std::vector<double> s1_mid;  // [C1][S][S]
  std::vector<double> s1_out;  // [C1][S][S]
  std::vector<double> s2_mid;  // [C2][S/2][S/2]
  std::vector<double> s2_out;  // [C2][S/2][S/2]
  std::vector<double> pooled;  // [C2]
  std::vector<double> hidden;  // [H]
  std::array<double, 2> logits{};
};

/// Input must be [1, S, S] with S >= 8.
ForwardTrace forward_trace(const ClassifierModel& model, const Tensor& input);
std::array<double, 2> forward(const ClassifierModel& model, const Tensor& input);

struct LabeledTensor {
  Tensor input;
  Label label = Label::defect_free;
};

struct LossAndGradients {
  double loss = 0.0;
  std::vector<double> gradients;  // same layout as ClassifierModel::parameters()
};

/// Mean cross entropy over the batch and its exact gradient.
LossAndGradients loss_and_gradients(const ClassifierModel& model, std::span<const LabeledTensor> batch);

struct TrainConfig {
  std::size_t epochs = 20;
  std::size_t batch_size = 4;
  double lr0 = 0.02;
  double lr_decay = 0.9;
  std::size_t input_side = 96;
  std::uint64_t seed = 0;

  void validate() const;
  /// lr0 * lr_decay^epoch.
  double learning_rate(std::size_t epoch) const;
};

struct EpochRecord {
  std::size_t epoch = 0;
  double learning_rate = 0.0;
  double mean_loss = 0.0;  // sample-weighted, measured before each step
  std::vector<std::size_t> batch_sizes;
};

struct TrainResult {
  ClassifierModel model;
  std::vector<EpochRecord> epochs;
};

/// Plain minibatch SGD. Each epoch shuffles with a generator derived from
/// cfg.seed; the last partial batch is kept.
TrainResult train(ClassifierModel model, std::span<const LabeledTensor> dataset, const TrainConfig& cfg);

struct Prediction {
  std::array<double, 2> logits{};
  Label label = Label::defective;
};

/// argmax over (defect_free, defective); ties go to defective.
Label decide(const std::array<double, 2>& logits) noexcept;

/// Resize to side x side and scale intensities to [0, 1].
Tensor image_to_tensor(const GrayImage& img, std::size_t side);

Prediction predict(const ClassifierModel& model, const GrayImage& img, const TrainConfig& cfg);
Prediction predict_tensor(const ClassifierModel& model, const Tensor& input);

/// Little-endian checkpoint:
///   "FABCNN01" | u32 version | u32 stem | u32 stage2 | u32 hidden | u32 classes
///   | u64 seed | u64 parameter count | f64 parameters... | u64 FNV-1a of all preceding bytes
std::vector<std::uint8_t> encode_checkpoint(const ClassifierModel& model);
ClassifierModel decode_checkpoint(std::span<const std::uint8_t> bytes);
void save_checkpoint(const ClassifierModel& model, const std::filesystem::path& path);
ClassifierModel load_checkpoint(const std::filesystem::path& path);

}  // namespace fabinspect
