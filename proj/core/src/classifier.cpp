#include "fabinspect/classifier.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <iterator>
#include <numeric>

#include "fabinspect/digest.hpp"
#include "fabinspect/error.hpp"
#include "fabinspect/random.hpp"

namespace fabinspect {

std::vector<ParamBlock> parameter_layout(const Architecture& arch) {
  const std::size_t c1 = arch.stem_channels;
  const std::size_t c2 = arch.stage2_channels;
  const std::size_t h = arch.hidden;
  std::vector<ParamBlock> blocks = {
      {"stem.weight", {c1, 1, 3, 3}, 0, 0, 9},
      {"stem.bias", {c1}, 0, 0, 0},
      {"stage1.conv1.weight", {c1, c1, 3, 3}, 0, 0, c1 * 9},
      {"stage1.conv1.bias", {c1}, 0, 0, 0},
      {"stage1.conv2.weight", {c1, c1, 3, 3}, 0, 0, c1 * 9},
      {"stage1.conv2.bias", {c1}, 0, 0, 0},
      {"stage2.conv1.weight", {c2, c1, 3, 3}, 0, 0, c1 * 9},
      {"stage2.conv1.bias", {c2}, 0, 0, 0},
      {"stage2.conv2.weight", {c2, c2, 3, 3}, 0, 0, c2 * 9},
      {"stage2.conv2.bias", {c2}, 0, 0, 0},
      {"stage2.proj.weight", {c2, c1, 1, 1}, 0, 0, c1},
      {"stage2.proj.bias", {c2}, 0, 0, 0},
      {"fc1.weight", {h, c2}, 0, 0, c2},
      {"fc1.bias", {h}, 0, 0, 0},
      {"fc2.weight", {2, h}, 0, 0, h},
      {"fc2.bias", {2}, 0, 0, 0},
  };
  std::size_t offset = 0;
  for (auto& b : blocks) {
    b.offset = offset;
    b.size = Tensor::element_count(b.shape);
    offset += b.size;
  }
  return blocks;
}

ClassifierModel::ClassifierModel(Architecture arch, std::uint64_t seed)
    : arch_(arch), seed_(seed), layout_(parameter_layout(arch)) {
  if (arch.stem_channels == 0 || arch.stage2_channels == 0 || arch.hidden == 0) {
    throw Error(Errc::invalid_argument, "architecture widths must be positive");
  }
  params_.assign(layout_.back().offset + layout_.back().size, 0.0);
}

std::span<const double> ClassifierModel::block(ParamId id) const {
  const auto& b = layout_.at(static_cast<std::size_t>(id));
  return std::span<const double>(params_).subspan(b.offset, b.size);
}

std::span<double> ClassifierModel::block(ParamId id) {
  const auto& b = layout_.at(static_cast<std::size_t>(id));
  return std::span<double>(params_).subspan(b.offset, b.size);
}

ClassifierModel init_model(std::uint64_t seed, const Architecture& arch) {
  ClassifierModel model(arch, seed);
  Rng rng(seed);
  auto params = model.parameters();
  for (const auto& b : model.layout()) {
    if (b.fan_in == 0) continue;
    const double stddev = std::sqrt(2.0 / static_cast<double>(b.fan_in));
    for (std::size_t i = 0; i < b.size; ++i) params[b.offset + i] = rng.normal(0.0, stddev);
  }
  return model;
}

namespace {

struct Geometries {
  nn::ConvGeometry stem, s1c1, s1c2, s2c1, s2c2, proj;
};

Geometries geometries(const Architecture& arch, std::size_t side) {
  const std::size_t c1 = arch.stem_channels;
  const std::size_t c2 = arch.stage2_channels;
  Geometries g;
  g.stem = {1, c1, 3, 1, 1, side, side};
  g.s1c1 = {c1, c1, 3, 1, 1, side, side};
  g.s1c2 = g.s1c1;
  g.s2c1 = {c1, c2, 3, 2, 1, side, side};
  const std::size_t half = g.s2c1.out_height();
  g.s2c2 = {c2, c2, 3, 1, 1, half, half};
  g.proj = {c1, c2, 1, 2, 0, side, side};
  return g;
}

std::size_t checked_side(const Tensor& input) {
  const auto& shape = input.shape();
  if (shape.size() != 3 || shape[0] != 1 || shape[1] != shape[2] || shape[1] < 8) {
    throw Error(Errc::invalid_argument, "classifier input must be a [1, S, S] tensor with S >= 8");
  }
  return shape[1];
}

}  // namespace

ForwardTrace forward_trace(const ClassifierModel& m, const Tensor& input) {
  const std::size_t side = checked_side(input);
  const auto& arch = m.architecture();
  const auto g = geometries(arch, side);
  using P = ParamId;

  ForwardTrace t;
  t.side = side;
  t.half = g.s2c1.out_height();
  t.stem.resize(g.stem.out_size());
  nn::conv2d_forward(g.stem, input.values(), m.block(P::stem_weight), m.block(P::stem_bias), t.stem);
  nn::relu_inplace(t.stem);

  t.s1_mid.resize(g.s1c1.out_size());
  nn::conv2d_forward(g.s1c1, t.stem, m.block(P::stage1_conv1_weight), m.block(P::stage1_conv1_bias), t.s1_mid);
  nn::relu_inplace(t.s1_mid);
  t.s1_out.resize(g.s1c2.out_size());
  nn::conv2d_forward(g.s1c2, t.s1_mid, m.block(P::stage1_conv2_weight), m.block(P::stage1_conv2_bias), t.s1_out);
  for (std::size_t i = 0; i < t.s1_out.size(); ++i) t.s1_out[i] += t.stem[i];
  nn::relu_inplace(t.s1_out);

  t.s2_mid.resize(g.s2c1.out_size());
  nn::conv2d_forward(g.s2c1, t.s1_out, m.block(P::stage2_conv1_weight), m.block(P::stage2_conv1_bias), t.s2_mid);
  nn::relu_inplace(t.s2_mid);
  t.s2_out.resize(g.s2c2.out_size());
  nn::conv2d_forward(g.s2c2, t.s2_mid, m.block(P::stage2_conv2_weight), m.block(P::stage2_conv2_bias), t.s2_out);
  std::vector<double> skip(g.proj.out_size());
  nn::conv2d_forward(g.proj, t.s1_out, m.block(P::stage2_proj_weight), m.block(P::stage2_proj_bias), skip);
  for (std::size_t i = 0; i < t.s2_out.size(); ++i) t.s2_out[i] += skip[i];
  nn::relu_inplace(t.s2_out);

  t.pooled.resize(arch.stage2_channels);
  nn::global_average_pool(arch.stage2_channels, t.half * t.half, t.s2_out, t.pooled);
  t.hidden.resize(arch.hidden);
  nn::dense_forward(arch.stage2_channels, arch.hidden, t.pooled, m.block(P::fc1_weight), m.block(P::fc1_bias),
                    t.hidden);
  nn::relu_inplace(t.hidden);
  nn::dense_forward(arch.hidden, 2, t.hidden, m.block(P::fc2_weight), m.block(P::fc2_bias), t.logits);
  return t;
}

std::array<double, 2> forward(const ClassifierModel& model, const Tensor& input) {
  return forward_trace(model, input).logits;
}

namespace {

// Accumulates one sample's gradient (scaled by `weight`) into `grads`.
double accumulate_sample(const ClassifierModel& m, const LabeledTensor& sample, double weight,
                         std::vector<double>& grads) {
  const auto t = forward_trace(m, sample.input);
  const auto& arch = m.architecture();
  const auto g = geometries(arch, t.side);
  const auto& layout = m.layout();
  auto grad_block = [&](ParamId id) {
    const auto& b = layout[static_cast<std::size_t>(id)];
    return std::span<double>(grads).subspan(b.offset, b.size);
  };
  using P = ParamId;

  std::array<double, 2> d_logits{};
  const double loss = nn::softmax_cross_entropy(t.logits, static_cast<std::size_t>(sample.label), d_logits);
  for (auto& d : d_logits) d *= weight;

  std::vector<double> d_hidden(arch.hidden);
  nn::dense_backward(arch.hidden, 2, t.hidden, m.block(P::fc2_weight), d_logits, grad_block(P::fc2_weight),
                     grad_block(P::fc2_bias), d_hidden);
  nn::relu_backward_inplace(t.hidden, d_hidden);
  std::vector<double> d_pooled(arch.stage2_channels);
  nn::dense_backward(arch.stage2_channels, arch.hidden, t.pooled, m.block(P::fc1_weight), d_hidden,
                     grad_block(P::fc1_weight), grad_block(P::fc1_bias), d_pooled);

  std::vector<double> d_s2(t.s2_out.size());
  nn::global_average_pool_backward(arch.stage2_channels, t.half * t.half, d_pooled, d_s2);
  nn::relu_backward_inplace(t.s2_out, d_s2);

  std::vector<double> d_s2_mid(t.s2_mid.size(), 0.0);
  nn::conv2d_backward(g.s2c2, t.s2_mid, m.block(P::stage2_conv2_weight), d_s2, grad_block(P::stage2_conv2_weight),
                      grad_block(P::stage2_conv2_bias), d_s2_mid);
  nn::relu_backward_inplace(t.s2_mid, d_s2_mid);

  std::vector<double> d_s1(t.s1_out.size(), 0.0);
  nn::conv2d_backward(g.proj, t.s1_out, m.block(P::stage2_proj_weight), d_s2, grad_block(P::stage2_proj_weight),
                      grad_block(P::stage2_proj_bias), d_s1);
  nn::conv2d_backward(g.s2c1, t.s1_out, m.block(P::stage2_conv1_weight), d_s2_mid,
                      grad_block(P::stage2_conv1_weight), grad_block(P::stage2_conv1_bias), d_s1);
  nn::relu_backward_inplace(t.s1_out, d_s1);

  // Identity skip: the stem activation receives d_s1 directly.
  std::vector<double> d_stem = d_s1;
  std::vector<double> d_s1_mid(t.s1_mid.size(), 0.0);
  nn::conv2d_backward(g.s1c2, t.s1_mid, m.block(P::stage1_conv2_weight), d_s1, grad_block(P::stage1_conv2_weight),
                      grad_block(P::stage1_conv2_bias), d_s1_mid);
  nn::relu_backward_inplace(t.s1_mid, d_s1_mid);
  nn::conv2d_backward(g.s1c1, t.stem, m.block(P::stage1_conv1_weight), d_s1_mid, grad_block(P::stage1_conv1_weight),
                      grad_block(P::stage1_conv1_bias), d_stem);
  nn::relu_backward_inplace(t.stem, d_stem);

  nn::conv2d_backward(g.stem, sample.input.values(), m.block(P::stem_weight), d_stem, grad_block(P::stem_weight),
                      grad_block(P::stem_bias), {});
  return loss;
}

}  // namespace

LossAndGradients loss_and_gradients(const ClassifierModel& model, std::span<const LabeledTensor> batch) {
  if (batch.empty()) {
    throw Error(Errc::invalid_argument, "loss_and_gradients needs a nonempty batch");
  }
  LossAndGradients out;
  out.gradients.assign(model.parameters().size(), 0.0);
  const double weight = 1.0 / static_cast<double>(batch.size());
  double total = 0.0;
  for (const auto& sample : batch) total += accumulate_sample(model, sample, weight, out.gradients);
  out.loss = total * weight;
  return out;
}

void TrainConfig::validate() const {
  if (epochs == 0) throw Error(Errc::config, "train epochs must be at least 1");
  if (batch_size == 0) throw Error(Errc::config, "train batch_size must be at least 1");
  if (!(lr0 >= 0.0) || !std::isfinite(lr0)) throw Error(Errc::config, "train lr0 must be a finite nonnegative value");
  if (!(lr_decay > 0.0 && lr_decay <= 1.0)) throw Error(Errc::config, "train lr_decay must lie in (0, 1]");
  if (input_side < 8) throw Error(Errc::config, "train input_side must be at least 8");
}

double TrainConfig::learning_rate(std::size_t epoch) const {
  return lr0 * std::pow(lr_decay, static_cast<double>(epoch));
}

TrainResult train(ClassifierModel model, std::span<const LabeledTensor> dataset, const TrainConfig& cfg) {
  cfg.validate();
  if (dataset.empty()) {
    throw Error(Errc::invalid_argument, "training set is empty");
  }
  const bool has_free = std::any_of(dataset.begin(), dataset.end(),
                                    [](const LabeledTensor& s) { return s.label == Label::defect_free; });
  const bool has_defect = std::any_of(dataset.begin(), dataset.end(),
                                      [](const LabeledTensor& s) { return s.label == Label::defective; });
  if (!has_free || !has_defect) {
    throw Error(Errc::config, "training set must contain both defect_free and defective samples");
  }

  TrainResult result{std::move(model), {}};
  Rng shuffler(mix_seed(cfg.seed, 0x5348));
  std::vector<std::size_t> order(dataset.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::vector<LabeledTensor> batch;

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    EpochRecord record;
    record.epoch = epoch;
    record.learning_rate = cfg.learning_rate(epoch);
    shuffler.shuffle(std::span<std::size_t>(order));

    double loss_sum = 0.0;
    auto params = result.model.parameters();
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t stop = std::min(order.size(), start + cfg.batch_size);
      batch.clear();
      for (std::size_t i = start; i < stop; ++i) batch.push_back(dataset[order[i]]);
      const auto lg = loss_and_gradients(result.model, batch);
      for (std::size_t i = 0; i < params.size(); ++i) params[i] -= record.learning_rate * lg.gradients[i];
      loss_sum += lg.loss * static_cast<double>(batch.size());
      record.batch_sizes.push_back(batch.size());
    }
    record.mean_loss = loss_sum / static_cast<double>(order.size());
    result.epochs.push_back(std::move(record));
  }
  return result;
}

Label decide(const std::array<double, 2>& logits) noexcept {
  return logits[0] > logits[1] ? Label::defect_free : Label::defective;
}

Tensor image_to_tensor(const GrayImage& img, std::size_t side) {
  const auto resized = resize_bilinear(img, side, side);
  Tensor t({1, side, side});
  const auto px = resized.pixels();
  for (std::size_t i = 0; i < px.size(); ++i) t[i] = px[i] / 255.0;
  return t;
}

Prediction predict_tensor(const ClassifierModel& model, const Tensor& input) {
  Prediction p;
  p.logits = forward(model, input);
  p.label = decide(p.logits);
  return p;
}

Prediction predict(const ClassifierModel& model, const GrayImage& img, const TrainConfig& cfg) {
  return predict_tensor(model, image_to_tensor(img, cfg.input_side));
}

namespace {

constexpr char kMagic[8] = {'F', 'A', 'B', 'C', 'N', 'N', '0', '1'};
constexpr std::uint32_t kVersion = 1;

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void put_u64(std::vector<std::uint8_t>& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

class ByteReader {
 public:
  explicit ByteReader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  std::uint64_t get(std::size_t width) {
    if (pos_ + width > bytes_.size()) {
      throw Error(Errc::corrupt_artifact, "checkpoint truncated");
    }
    std::uint64_t v = 0;
    for (std::size_t i = 0; i < width; ++i) v |= static_cast<std::uint64_t>(bytes_[pos_ + i]) << (8 * i);
    pos_ += width;
    return v;
  }
  std::size_t position() const noexcept { return pos_; }

 private:
  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

std::vector<std::uint8_t> encode_checkpoint(const ClassifierModel& model) {
  std::vector<std::uint8_t> out(std::begin(kMagic), std::end(kMagic));
  const auto& arch = model.architecture();
  put_u32(out, kVersion);
  put_u32(out, static_cast<std::uint32_t>(arch.stem_channels));
  put_u32(out, static_cast<std::uint32_t>(arch.stage2_channels));
  put_u32(out, static_cast<std::uint32_t>(arch.hidden));
  put_u32(out, 2);
  put_u64(out, model.seed());
  put_u64(out, model.parameters().size());
  for (double p : model.parameters()) put_u64(out, std::bit_cast<std::uint64_t>(p));
  put_u64(out, fnv1a64(out));
  return out;
}

ClassifierModel decode_checkpoint(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < sizeof kMagic || !std::equal(std::begin(kMagic), std::end(kMagic), bytes.begin())) {
    throw Error(Errc::corrupt_artifact, "checkpoint magic mismatch");
  }
  ByteReader r(bytes.subspan(sizeof kMagic));
  if (r.get(4) != kVersion) throw Error(Errc::corrupt_artifact, "unsupported checkpoint version");
  Architecture arch;
  arch.stem_channels = r.get(4);
  arch.stage2_channels = r.get(4);
  arch.hidden = r.get(4);
  if (r.get(4) != 2) throw Error(Errc::corrupt_artifact, "checkpoint class count must be 2");
  if (arch.stem_channels == 0 || arch.stage2_channels == 0 || arch.hidden == 0 || arch.stem_channels > 4096 ||
      arch.stage2_channels > 4096 || arch.hidden > 4096) {
    throw Error(Errc::corrupt_artifact, "checkpoint architecture out of range");
  }
  const std::uint64_t seed = r.get(8);
  ClassifierModel model(arch, seed);
  if (r.get(8) != model.parameters().size()) {
    throw Error(Errc::corrupt_artifact, "checkpoint parameter count does not match architecture");
  }
  for (auto& p : model.parameters()) {
    p = std::bit_cast<double>(r.get(8));
    if (!std::isfinite(p)) throw Error(Errc::corrupt_artifact, "checkpoint holds a non-finite parameter");
  }
  const std::size_t body = sizeof kMagic + r.position();
  const std::uint64_t stored = r.get(8);
  if (stored != fnv1a64(bytes.first(body))) {
    throw Error(Errc::corrupt_artifact, "checkpoint checksum mismatch");
  }
  if (sizeof kMagic + r.position() != bytes.size()) {
    throw Error(Errc::corrupt_artifact, "trailing bytes after checkpoint");
  }
  return model;
}

void save_checkpoint(const ClassifierModel& model, const std::filesystem::path& path) {
  const auto bytes = encode_checkpoint(model);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(Errc::io, "cannot write checkpoint " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(Errc::io, "write failed: " + path.string());
}

ClassifierModel load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::missing_file, "cannot open checkpoint " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return decode_checkpoint(bytes);
}

}  // namespace fabinspect
