#include "fabinspect/ensemble.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "fabinspect/digest.hpp"
#include "fabinspect/error.hpp"

namespace fabinspect {

using Json = nlohmann::ordered_json;

Verdict majority_vote(std::span<const Label> votes) {
  if (votes.empty()) {
    throw Error(Errc::invalid_argument, "majority vote over zero votes");
  }
  Verdict v;
  v.votes.assign(votes.begin(), votes.end());
  v.defective_count = static_cast<std::size_t>(std::count(votes.begin(), votes.end(), Label::defective));
  v.defect_free_count = votes.size() - v.defective_count;
  v.decision = 2 * v.defective_count > votes.size() ? Label::defective : Label::defect_free;
  return v;
}

EnsembleTrainResult train_ensemble(std::span<const LabeledTensor> dataset, const TrainConfig& cfg, std::size_t k,
                                   std::uint64_t base_seed, std::size_t threads) {
  if (k == 0 || k % 2 == 0) {
    throw Error(Errc::config, "ensemble size must be odd, got " + std::to_string(k));
  }
  cfg.validate();
  EnsembleTrainResult result;
  result.ensemble.base_seed = base_seed;
  result.ensemble.train_config = cfg;
  result.ensemble.members.resize(k);
  result.curves.resize(k);

  auto train_member = [&](std::size_t i) {
    TrainConfig member_cfg = cfg;
    member_cfg.seed = base_seed + i;
    auto trained = train(init_model(member_cfg.seed), dataset, member_cfg);
    result.ensemble.members[i] = std::move(trained.model);
    result.curves[i] = std::move(trained.epochs);
  };

  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = std::min(threads, k);
  if (threads <= 1) {
    for (std::size_t i = 0; i < k; ++i) train_member(i);
    return result;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> failures(k);
  std::vector<std::thread> pool;
  for (std::size_t t = 0; t < threads; ++t) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < k; i = next++) {
        try {
          train_member(i);
        } catch (...) {
          failures[i] = std::current_exception();
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  for (auto& f : failures) {
    if (f) std::rethrow_exception(f);
  }
  return result;
}

Tensor prepare_input(const GrayImage& img, const IntensityConfig& icfg, bool preprocess, std::size_t side) {
  return image_to_tensor(preprocess ? adjust_intensity(img, icfg) : img, side);
}

std::vector<LabeledTensor> prepare_dataset(const Manifest& manifest, const IntensityConfig& icfg, bool preprocess,
                                           std::size_t side) {
  std::vector<LabeledTensor> out;
  out.reserve(manifest.rows.size());
  for (const auto& row : manifest.rows) {
    out.push_back(LabeledTensor{prepare_input(load_gray(manifest.resolve(row)), icfg, preprocess, side), row.label});
  }
  return out;
}

Verdict inspect(const Ensemble& ensemble, const GrayImage& img, bool preprocess) {
  // One preprocessing pass shared by every member.
  const auto input = prepare_input(img, ensemble.intensity, preprocess, ensemble.train_config.input_side);
  std::vector<Label> votes;
  votes.reserve(ensemble.members.size());
  for (const auto& member : ensemble.members) votes.push_back(predict_tensor(member, input).label);
  return majority_vote(votes);
}

Verdict inspect(const Ensemble& ensemble, const GrayImage& img) { return inspect(ensemble, img, ensemble.preprocess); }

void ConfusionCounts::record(Label truth, Label decision) noexcept {
  if (truth == Label::defective) {
    (decision == Label::defective ? true_positive : false_negative)++;
  } else {
    (decision == Label::defective ? false_positive : true_negative)++;
  }
}

EvaluationReport evaluate(const Ensemble& ensemble, const Manifest& manifest) {
  EvaluationReport report;
  const auto types = manifest.fabric_types();
  std::vector<ConfusionCounts> counts(types.size());
  for (const auto& row : manifest.rows) {
    const auto idx = static_cast<std::size_t>(std::find(types.begin(), types.end(), row.fabric_type) - types.begin());
    try {
      const auto verdict = inspect(ensemble, load_gray(manifest.resolve(row)));
      counts[idx].record(row.label, verdict.decision);
      report.overall.record(row.label, verdict.decision);
    } catch (const Error& e) {
      report.errors.push_back(EvaluationError{row.path, e.what()});
    }
  }
  for (std::size_t i = 0; i < types.size(); ++i) {
    if (counts[i].total() == 0) {
      report.warnings.push_back("fabric type '" + types[i] + "' has no evaluated samples; omitted");
      continue;
    }
    report.per_type.emplace_back(types[i], counts[i]);
  }
  return report;
}

namespace {

Json confusion_json(const ConfusionCounts& c) {
  Json j;
  j["samples"] = c.total();
  j["correct"] = c.correct();
  j["accuracy"] = c.accuracy();
  j["true_positive"] = c.true_positive;
  j["false_positive"] = c.false_positive;
  j["true_negative"] = c.true_negative;
  j["false_negative"] = c.false_negative;
  return j;
}

std::string fixed(double v, int digits = 6) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

}  // namespace

std::string evaluation_to_json(const EvaluationReport& report) {
  Json j;
  j["overall"] = confusion_json(report.overall);
  Json types = Json::array();
  for (const auto& [type, c] : report.per_type) {
    Json t = confusion_json(c);
    t["fabric_type"] = type;
    types.push_back(t);
  }
  j["per_type"] = types;
  Json errors = Json::array();
  for (const auto& e : report.errors) errors.push_back(Json{{"path", e.path}, {"message", e.message}});
  j["errors"] = errors;
  j["warnings"] = report.warnings;
  return j.dump(2) + "\n";
}

std::string evaluation_to_csv(const EvaluationReport& report) {
  std::string out = "fabric_type,samples,correct,accuracy,true_positive,false_positive,true_negative,false_negative\n";
  auto line = [&](const std::string& name, const ConfusionCounts& c) {
    out += name + "," + std::to_string(c.total()) + "," + std::to_string(c.correct()) + "," + fixed(c.accuracy()) +
           "," + std::to_string(c.true_positive) + "," + std::to_string(c.false_positive) + "," +
           std::to_string(c.true_negative) + "," + std::to_string(c.false_negative) + "\n";
  };
  for (const auto& [type, c] : report.per_type) line(type, c);
  line("overall", report.overall);
  return out;
}

std::string config_digest(const Ensemble& e) {
  const auto& t = e.train_config;
  const auto& i = e.intensity;
  std::ostringstream s;
  s.precision(17);
  s << "epochs=" << t.epochs << ";batch=" << t.batch_size << ";lr0=" << t.lr0 << ";decay=" << t.lr_decay
    << ";side=" << t.input_side << ";peaks=" << i.peaks_to_remove << ";target=" << i.target_mean
    << ";mirror=" << i.mirror_peaks << ";preprocess=" << e.preprocess << ";k=" << e.members.size()
    << ";base_seed=" << e.base_seed;
  return to_hex(fnv1a64(s.str()));
}

namespace {

constexpr const char* kEnsembleFormat = "fabinspect-ensemble";

std::string member_file(std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "member_%02zu.ckpt", i);
  return buf;
}

[[noreturn]] void corrupt(const std::string& what) { throw Error(Errc::corrupt_artifact, what); }

}  // namespace

void save_ensemble(const Ensemble& e, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error(Errc::io, "cannot create " + dir.string() + ": " + ec.message());

  Json j;
  j["format"] = kEnsembleFormat;
  j["version"] = 1;
  j["k"] = e.members.size();
  j["base_seed"] = e.base_seed;
  j["preprocess"] = e.preprocess;
  j["train"] = Json{{"epochs", e.train_config.epochs},
                    {"batch_size", e.train_config.batch_size},
                    {"lr0", e.train_config.lr0},
                    {"lr_decay", e.train_config.lr_decay},
                    {"input_side", e.train_config.input_side}};
  j["intensity"] = Json{{"peaks_to_remove", e.intensity.peaks_to_remove},
                        {"target_mean", e.intensity.target_mean},
                        {"mirror_peaks", e.intensity.mirror_peaks}};
  Json members = Json::array();
  for (std::size_t i = 0; i < e.members.size(); ++i) {
    const auto bytes = encode_checkpoint(e.members[i]);
    const auto path = dir / member_file(i);
    save_checkpoint(e.members[i], path);
    members.push_back(Json{{"file", member_file(i)}, {"seed", e.members[i].seed()}, {"digest", to_hex(fnv1a64(bytes))}});
  }
  j["members"] = members;
  j["config_digest"] = config_digest(e);

  std::ofstream out(dir / "ensemble.json", std::ios::binary | std::ios::trunc);
  if (!out) throw Error(Errc::io, "cannot write " + (dir / "ensemble.json").string());
  out << j.dump(2) << "\n";
  if (!out) throw Error(Errc::io, "write failed: " + (dir / "ensemble.json").string());
}

Ensemble load_ensemble(const std::filesystem::path& dir) {
  const auto manifest_path = dir / "ensemble.json";
  std::ifstream in(manifest_path);
  if (!in) throw Error(Errc::missing_file, "no ensemble manifest at " + manifest_path.string());
  Json j;
  try {
    j = Json::parse(in);
  } catch (const std::exception& ex) {
    corrupt("ensemble manifest is not valid JSON: " + std::string(ex.what()));
  }
  Ensemble e;
  try {
    if (j.at("format").get<std::string>() != kEnsembleFormat || j.at("version").get<int>() != 1) {
      corrupt("unrecognised ensemble manifest format");
    }
    e.base_seed = j.at("base_seed").get<std::uint64_t>();
    e.preprocess = j.at("preprocess").get<bool>();
    const auto& t = j.at("train");
    e.train_config.epochs = t.at("epochs").get<std::size_t>();
    e.train_config.batch_size = t.at("batch_size").get<std::size_t>();
    e.train_config.lr0 = t.at("lr0").get<double>();
    e.train_config.lr_decay = t.at("lr_decay").get<double>();
    e.train_config.input_side = t.at("input_side").get<std::size_t>();
    const auto& ic = j.at("intensity");
    e.intensity.peaks_to_remove = ic.at("peaks_to_remove").get<std::size_t>();
    e.intensity.target_mean = ic.at("target_mean").get<double>();
    e.intensity.mirror_peaks = ic.at("mirror_peaks").get<bool>();
    const auto k = j.at("k").get<std::size_t>();
    const auto& members = j.at("members");
    if (k == 0 || k % 2 == 0 || members.size() != k) corrupt("ensemble manifest member count is inconsistent");
    for (std::size_t i = 0; i < k; ++i) {
      const auto& m = members.at(i);
      const auto path = dir / m.at("file").get<std::string>();
      std::ifstream cin(path, std::ios::binary);
      if (!cin) corrupt("missing member checkpoint " + path.string());
      std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(cin)), std::istreambuf_iterator<char>());
      if (to_hex(fnv1a64(bytes)) != m.at("digest").get<std::string>()) {
        corrupt("member checkpoint digest mismatch: " + path.string());
      }
      auto model = decode_checkpoint(bytes);
      if (model.seed() != e.base_seed + i) corrupt("member seed does not match base_seed + index");
      e.members.push_back(std::move(model));
    }
  } catch (const nlohmann::json::exception& ex) {
    corrupt("ensemble manifest is missing fields: " + std::string(ex.what()));
  }
  try {
    e.train_config.validate();
    e.intensity.validate();
  } catch (const Error& ex) {
    corrupt(std::string("ensemble manifest holds invalid settings: ") + ex.what());
  }
  if (config_digest(e) != j.value("config_digest", std::string())) {
    corrupt("ensemble config digest mismatch");
  }
  return e;
}

}  // namespace fabinspect
