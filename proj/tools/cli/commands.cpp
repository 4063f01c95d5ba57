#include "commands.hpp"

#include <cstdio>
#include <fstream>
#include <ostream>
#include <set>

#include <CLI11.hpp>
#include <json.hpp>

#include "fabinspect/ensemble.hpp"
#include "fabinspect/gray_image.hpp"
#include "fabinspect/intensity.hpp"
#include "fabinspect/manifest.hpp"
#include "fabinspect/synthfab.hpp"
#include "fabinspect/uniformity.hpp"
#include "run_config.hpp"

namespace fabinspect::cli {

namespace fs = std::filesystem;
using Json = nlohmann::ordered_json;

int exit_code(Errc code) noexcept {
  switch (code) {
    case Errc::config:
    case Errc::invalid_argument:
      return kExitUsage;
    case Errc::io:
    case Errc::missing_file:
    case Errc::malformed_header:
    case Errc::unsupported_maxval:
    case Errc::truncated_data:
      return kExitIo;
    case Errc::degenerate_input:
    case Errc::insufficient_blocks:
      return kExitDegenerate;
    case Errc::corrupt_artifact:
      return kExitCorrupt;
  }
  return 1;
}

namespace {

RunConfig config_from(const std::string& path) { return path.empty() ? RunConfig{} : load_run_config(path); }

void ensure_parent(const fs::path& path) {
  if (path.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(path.parent_path(), ec);
  }
}

void write_text(const fs::path& path, const std::string& text) {
  ensure_parent(path);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(Errc::io, "cannot write " + path.string());
  out << text;
  if (!out) throw Error(Errc::io, "write failed: " + path.string());
}

Manifest nonempty_manifest(const std::string& path) {
  auto m = read_manifest(path);
  if (m.rows.empty()) throw Error(Errc::config, "manifest " + path + " has no rows");
  return m;
}

// Rows keep resolving to the same files when written next to `target`.
std::vector<ManifestRow> rebase(const Manifest& from, std::vector<ManifestRow> rows, const fs::path& target) {
  const fs::path dir = fs::absolute(target).parent_path().lexically_normal();
  for (auto& row : rows) {
    const fs::path p(row.path);
    if (p.is_absolute()) continue;
    const fs::path abs = fs::absolute(from.resolve(row)).lexically_normal();
    row.path = abs.lexically_relative(dir).generic_string();
  }
  return rows;
}

int cmd_synth(const std::string& config, const std::string& out_dir, std::ostream& out) {
  const auto cfg = config_from(config);
  const auto rows = generate_corpus(cfg.corpus, out_dir);
  out << "wrote " << rows.size() << " samples and " << (fs::path(out_dir) / "manifest.csv").string() << "\n";
  return kExitOk;
}

int cmd_preprocess(const std::string& config, const std::string& in, const std::string& out_path,
                   std::ostream& out) {
  const auto cfg = config_from(config);
  AdjustmentTrace trace;
  const auto adjusted = std::visit([&](const auto& img) { return adjust_intensity(img, cfg.intensity, &trace); },
                                   load_image(in));
  save_image(adjusted, out_path);
  char line[160];
  std::snprintf(line, sizeof line, "mean %.3f scale %.6f clamped %s imag_residual %.3g\n", mean_intensity(adjusted),
                trace.scale, trace.clamped ? "yes" : "no", trace.imag_residual);
  out << line;
  return kExitOk;
}

int cmd_uniformity(const std::string& config, const std::string& manifest_path, const std::string& report,
                   const std::string& csv, std::ostream& out) {
  const auto cfg = config_from(config);
  const auto manifest = nonempty_manifest(manifest_path);

  struct TypeStats {
    double sum = 0.0;
    std::size_t n = 0;
    double clean_sum = 0.0;
    std::size_t clean_n = 0;
  };
  std::map<std::string, TypeStats, decltype(&fabric_type_less)> stats(&fabric_type_less);

  Json samples = Json::array();
  std::string table = "path,fabric_type,label,uniformity\n";
  for (const auto& row : manifest.rows) {
    const auto img = load_gray(manifest.resolve(row));
    const auto r = measure_adjusted_uniformity(img, cfg.intensity, cfg.uniformity);
    Json blocks = Json::array();
    for (std::size_t b = 0; b < r.origins.size(); ++b) {
      const bool kept = std::find(r.kept.begin(), r.kept.end(), b) != r.kept.end();
      blocks.push_back(Json{{"row", r.origins[b].row},
                            {"col", r.origins[b].col},
                            {"frequency", r.frequencies[b]},
                            {"featureless", static_cast<bool>(r.featureless[b])},
                            {"kept", kept}});
    }
    samples.push_back(Json{{"path", row.path},
                           {"fabric_type", row.fabric_type},
                           {"label", std::string(to_string(row.label))},
                           {"uniformity", r.score},
                           {"blocks", blocks}});
    auto& s = stats[row.fabric_type];
    s.sum += r.score;
    ++s.n;
    if (row.label == Label::defect_free) {
      s.clean_sum += r.score;
      ++s.clean_n;
    }
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6f", r.score);
    table += row.path + "," + row.fabric_type + "," + std::string(to_string(row.label)) + "," + buf + "\n";
  }

  Json types = Json::array();
  for (const auto& [type, s] : stats) {
    Json t{{"fabric_type", type}, {"samples", s.n}, {"mean_uniformity", s.sum / static_cast<double>(s.n)},
           {"defect_free_samples", s.clean_n}};
    t["defect_free_mean_uniformity"] =
        s.clean_n == 0 ? Json(nullptr) : Json(s.clean_sum / static_cast<double>(s.clean_n));
    types.push_back(t);
    char buf[96];
    std::snprintf(buf, sizeof buf, "type %s: %zu samples, mean uniformity %.3f\n", type.c_str(), s.n,
                  s.sum / static_cast<double>(s.n));
    out << buf;
  }

  Json doc{{"samples", samples}, {"per_type", types}};
  write_text(report, doc.dump(2) + "\n");
  if (!csv.empty()) write_text(csv, table);
  return kExitOk;
}

int cmd_split(const std::string& config, const std::string& manifest_path, std::size_t n_train,
              const std::string& out_train, const std::string& out_test, std::string ranking_path,
              std::ostream& out) {
  const auto cfg = config_from(config);
  const auto manifest = nonempty_manifest(manifest_path);
  const auto split = split_by_uniformity(manifest, n_train, cfg.intensity, cfg.uniformity);

  ensure_parent(out_train);
  ensure_parent(out_test);
  write_manifest(out_train, rebase(manifest, split.train, out_train));
  write_manifest(out_test, rebase(manifest, split.test, out_test));

  if (ranking_path.empty()) ranking_path = (fs::path(out_train).parent_path() / "ranking.csv").string();
  std::string table = "rank,fabric_type,mean_uniformity,defect_free_samples,side\n";
  for (std::size_t i = 0; i < split.ranking.size(); ++i) {
    const auto& r = split.ranking[i];
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6f", r.mean_score);
    table += std::to_string(i + 1) + "," + r.fabric_type + "," + buf + "," + std::to_string(r.samples) + "," +
             (i < n_train ? "train" : "test") + "\n";
  }
  write_text(ranking_path, table);
  out << "train " << split.train.size() << " rows, test " << split.test.size() << " rows\n";
  return kExitOk;
}

int cmd_train(const std::string& config, const std::string& manifest_path, const std::string& out_dir,
              std::optional<std::size_t> threads, std::ostream& out) {
  const auto cfg = config_from(config);
  const auto manifest = nonempty_manifest(manifest_path);
  std::set<Label> labels;
  for (const auto& row : manifest.rows) labels.insert(row.label);
  if (labels.size() < 2) throw Error(Errc::config, "training manifest must contain both labels");

  const auto data = prepare_dataset(manifest, cfg.intensity, cfg.ensemble.preprocess, cfg.train.input_side);
  auto result = train_ensemble(data, cfg.train, cfg.ensemble.k, cfg.ensemble.base_seed,
                               threads.value_or(cfg.ensemble.threads));
  result.ensemble.intensity = cfg.intensity;
  result.ensemble.preprocess = cfg.ensemble.preprocess;
  save_ensemble(result.ensemble, out_dir);

  for (std::size_t i = 0; i < result.curves.size(); ++i) {
    std::string csv = "epoch,learning_rate,mean_loss,batches\n";
    for (const auto& e : result.curves[i]) {
      char buf[128];
      std::snprintf(buf, sizeof buf, "%zu,%.17g,%.17g,%zu\n", e.epoch, e.learning_rate, e.mean_loss,
                    e.batch_sizes.size());
      csv += buf;
    }
    char name[32];
    std::snprintf(name, sizeof name, "loss_member_%02zu.csv", i);
    write_text(fs::path(out_dir) / name, csv);
  }
  write_text(fs::path(out_dir) / "run_config.ini", format_run_config(cfg));
  out << "trained " << result.curves.size() << " members on " << data.size() << " samples into " << out_dir
      << "\n";
  return kExitOk;
}

int cmd_inspect(const std::string& model, const std::string& in, std::ostream& out) {
  const auto ensemble = load_ensemble(model);
  const auto verdict = inspect(ensemble, load_gray(in));
  Json votes = Json::array();
  for (auto v : verdict.votes) votes.push_back(std::string(to_string(v)));
  Json j{{"decision", std::string(to_string(verdict.decision))},
         {"votes", votes},
         {"tally", Json{{"defective", verdict.defective_count}, {"defect_free", verdict.defect_free_count}}}};
  out << j.dump(2) << "\n";
  return kExitOk;
}

int cmd_evaluate(const std::string& model, const std::string& test, const std::string& report,
                 const std::string& csv, std::ostream& out, std::ostream& err) {
  const auto ensemble = load_ensemble(model);
  const auto manifest = nonempty_manifest(test);
  const auto r = evaluate(ensemble, manifest);
  write_text(report, evaluation_to_json(r));
  if (!csv.empty()) write_text(csv, evaluation_to_csv(r));
  for (const auto& e : r.errors) err << "warning: " << e.path << ": " << e.message << "\n";
  out << evaluation_to_csv(r);
  return kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Tactile fabric inspection: preprocessing, uniformity, ensemble training and evaluation",
               "fabinspect"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "fabinspect 0.1.0");

  std::string config, in, output, manifest, report, csv, model, ranking, out_train, out_test;
  std::size_t train_types = 0;
  std::optional<std::size_t> threads;

  auto* synth = app.add_subcommand("synth", "Generate a synthetic tactile corpus");
  synth->add_option("--config", config, "Run config file")->check(CLI::ExistingFile);
  synth->add_option("--out", output, "Output directory")->required();

  auto* pre = app.add_subcommand("preprocess", "Intensity-adjust one image");
  pre->add_option("--config", config, "Run config file")->check(CLI::ExistingFile);
  pre->add_option("--in", in, "Input PGM/PPM")->required();
  pre->add_option("--out", output, "Output PGM")->required();

  auto* uni = app.add_subcommand("uniformity", "Measure uniformity of every manifest sample");
  uni->add_option("--config", config, "Run config file")->check(CLI::ExistingFile);
  uni->add_option("--manifest", manifest, "Dataset manifest CSV")->required();
  uni->add_option("--report", report, "JSON report path")->required();
  uni->add_option("--csv", csv, "Optional per-sample CSV path");

  auto* split = app.add_subcommand("split", "Split a manifest by fabric-type uniformity");
  split->add_option("--config", config, "Run config file")->check(CLI::ExistingFile);
  split->add_option("--manifest", manifest, "Dataset manifest CSV")->required();
  split->add_option("--train-types", train_types, "Number of most uniform types used for training")->required();
  split->add_option("--out-train", out_train, "Training manifest path")->required();
  split->add_option("--out-test", out_test, "Test manifest path")->required();
  split->add_option("--ranking", ranking, "Ranking CSV path (default: ranking.csv beside the training manifest)");

  auto* train = app.add_subcommand("train", "Train the voting ensemble");
  train->add_option("--config", config, "Run config file")->check(CLI::ExistingFile);
  train->add_option("--train", manifest, "Training manifest CSV")->required();
  train->add_option("--out", output, "Checkpoint directory")->required();
  train->add_option("--threads", threads, "Worker threads (0 = all cores)");

  auto* insp = app.add_subcommand("inspect", "Classify one image; prints a JSON verdict");
  insp->add_option("--model", model, "Checkpoint directory")->required();
  insp->add_option("--in", in, "Input PGM/PPM")->required();

  auto* eval = app.add_subcommand("evaluate", "Evaluate the ensemble on a test manifest");
  eval->add_option("--model", model, "Checkpoint directory")->required();
  eval->add_option("--test", manifest, "Test manifest CSV")->required();
  eval->add_option("--report", report, "JSON report path")->required();
  eval->add_option("--csv", csv, "Optional CSV report path");

  std::vector<std::string> rest(args.size() > 1 ? args.begin() + 1 : args.end(), args.end());
  std::reverse(rest.begin(), rest.end());
  try {
    app.parse(rest);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (synth->parsed()) return cmd_synth(config, output, out);
    if (pre->parsed()) return cmd_preprocess(config, in, output, out);
    if (uni->parsed()) return cmd_uniformity(config, manifest, report, csv, out);
    if (split->parsed()) return cmd_split(config, manifest, train_types, out_train, out_test, ranking, out);
    if (train->parsed()) return cmd_train(config, manifest, output, threads, out);
    if (insp->parsed()) return cmd_inspect(model, in, out);
    if (eval->parsed()) return cmd_evaluate(model, manifest, report, csv, out, err);
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return exit_code(e.code());
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  return kExitUsage;
}

}  // namespace fabinspect::cli
