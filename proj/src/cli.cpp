#include "uicq/cli.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <mutex>
#include <ostream>
#include <thread>

#include "CLI11.hpp"
#include "json.hpp"
#include "uicq/error.hpp"
#include "uicq/evalstats.hpp"
#include "uicq/net.hpp"
#include "uicq/synth.hpp"

namespace uicq::cli {

using nlohmann::json;

namespace {

// Flags merged from every subcommand. Only the fields a command reads matter to it.
struct RunConfig {
  int input_size = kDefaultInputSize;
  MetricConfig metric;
  std::vector<double> weights = {1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0};

  // score
  std::vector<std::string> images;
  std::string model_path;
  unsigned jobs = std::max(1u, std::thread::hardware_concurrency());
  bool ordered = false;

  // train / eval
  std::string manifest_path;
  std::string checkpoint_out;
  std::vector<std::string> checkpoints;
  std::string dimension = "score";
  int epochs = TrainConfig{}.epochs;
  double learning_rate = TrainConfig{}.learning_rate;
  int batch_size = TrainConfig{}.batch_size;
  std::uint64_t seed = 1;
  std::size_t offset = 0;
  std::size_t limit = 0;  // 0 = all

  // contrast
  double h1 = 0.0;
  double h2 = 0.0;
  double sweep_step = 1.0;
  bool sweep_full = false;

  // synth
  int count = 0;
  std::string out_dir;
  double noise = DatasetOptions{}.noise;
  bool dims = false;

  // gradcheck
  double fd_step = 1e-4;
  double tolerance = 1e-4;

  QualityWeights quality_weights() const {
    if (weights.size() != 3) {
      throw Error(ErrorCode::InvalidWeights, "--weights needs exactly three values");
    }
    QualityWeights w{weights[0], weights[1], weights[2]};
    w.validate();
    return w;
  }

  void validate() const {
    if (input_size < 1) throw Error(ErrorCode::InvalidArgument, "--size must be positive");
    if (metric.hue_bins < 2) throw Error(ErrorCode::InvalidArgument, "--bins must be at least 2");
    if (metric.grid < 2) throw Error(ErrorCode::InvalidArgument, "--grid must be at least 2");
    quality_weights();
  }
};

void diagnose(std::ostream& err, const std::string& subject, const std::exception& e) {
  err << "uicq: " << subject << ": " << e.what() << '\n';
}

json breakdown_json(const QualityBreakdown& q) {
  return {{"q_hue", q.q_hue},
          {"q_lightness", q.q_lightness},
          {"q_purity", q.q_purity},
          {"q_total", q.q_total},
          {"balance", q.layout.balance},
          {"continuity", q.layout.continuity},
          {"integrity", q.layout.integrity},
          {"unity", q.layout.unity},
          {"entropy_raw", q.entropy_raw},
          {"cv_lightness_raw", q.cv_lightness_raw},
          {"cv_purity_raw", q.cv_purity_raw},
          {"chromatic_fraction", q.chromatic_fraction}};
}

ImageTensor load_resized(const std::filesystem::path& path, int h, int w) {
  return resize_bilinear(read_image(path), h, w);
}

// ---------------------------------------------------------------------------

int cmd_score(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  cfg.validate();
  const QualityWeights weights = cfg.quality_weights();
  std::optional<ModelParams> model;
  if (!cfg.model_path.empty()) model = load_checkpoint(cfg.model_path);

  const std::size_t n = cfg.images.size();
  std::vector<std::optional<std::string>> lines(n);
  std::vector<std::string> errors(n);
  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  std::mutex io;

  auto work = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      const std::string& path = cfg.images[i];
      std::string line;
      std::string error;
      try {
        const ImageTensor raw = read_image(path);
        ScoreRecord rec;
        rec.path = path;
        rec.breakdown = score_image(resize_bilinear(raw, cfg.input_size, cfg.input_size), weights, cfg.metric);
        if (model) {
          rec.cnn_score = forward(resize_bilinear(raw, model->arch.input_height, model->arch.input_width), *model);
        }
        line = format_score_record(rec);
      } catch (const std::exception& e) {
        error = "uicq: " + path + ": " + e.what();
        failed = true;
      }
      std::lock_guard lock(io);
      if (cfg.ordered) {
        if (error.empty()) lines[i] = std::move(line);
        errors[i] = std::move(error);
      } else if (error.empty()) {
        out << line << '\n';
      } else {
        err << error << '\n';
      }
    }
  };

  const unsigned workers = static_cast<unsigned>(std::min<std::size_t>(std::max(1u, cfg.jobs), std::max<std::size_t>(n, 1)));
  if (workers <= 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work);
  }
  if (cfg.ordered) {
    for (std::size_t i = 0; i < n; ++i) {
      if (lines[i]) out << *lines[i] << '\n';
      if (!errors[i].empty()) err << errors[i] << '\n';
    }
  }
  out.flush();
  return failed ? 1 : 0;
}

std::vector<AnnotatedSample> select_samples(const Manifest& m, const RunConfig& cfg) {
  if (cfg.offset > m.samples.size()) {
    throw Error(ErrorCode::InvalidArgument, "--offset is past the end of the manifest");
  }
  const std::size_t avail = m.samples.size() - cfg.offset;
  const std::size_t take = cfg.limit == 0 ? avail : std::min(cfg.limit, avail);
  return {m.samples.begin() + static_cast<std::ptrdiff_t>(cfg.offset),
          m.samples.begin() + static_cast<std::ptrdiff_t>(cfg.offset + take)};
}

double label_of(const AnnotatedSample& s, const std::string& column) {
  if (column == "score") return s.score;
  const auto it = s.dims.find(column);
  if (it == s.dims.end()) {
    throw Error(ErrorCode::MalformedFile, s.path + " has no '" + column + "' rating");
  }
  return it->second;
}

int cmd_train(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  cfg.validate();
  if (cfg.checkpoint_out.empty()) {
    throw Error(ErrorCode::InvalidArgument, "--out is required");
  }
  const Manifest manifest = read_manifest(cfg.manifest_path);
  const auto samples = select_samples(manifest, cfg);
  if (samples.empty()) {
    throw Error(ErrorCode::EmptyDataset, "no samples selected from " + cfg.manifest_path);
  }

  std::vector<TrainingSample> data;
  data.reserve(samples.size());
  for (const auto& s : samples) {
    data.push_back({load_resized(manifest.resolve(s), cfg.input_size, cfg.input_size), label_of(s, cfg.dimension)});
  }

  TrainConfig tc;
  tc.arch = Architecture::standard(cfg.input_size);
  tc.epochs = cfg.epochs;
  tc.learning_rate = cfg.learning_rate;
  tc.batch_size = cfg.batch_size;
  tc.seed = cfg.seed;
  tc.threads = 1;

  TrainResult result = train(data, tc, [&](int epoch, double loss) {
    out << json{{"epoch", epoch}, {"loss", loss}}.dump() << '\n';
    out.flush();
  });
  result.params.target = cfg.dimension;
  save_checkpoint(result.params, cfg.checkpoint_out);
  err << "uicq: wrote " << cfg.checkpoint_out << " (" << result.params.parameter_count() << " parameters, "
      << data.size() << " samples)\n";
  return 0;
}

int cmd_eval(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  cfg.validate();
  if (cfg.checkpoints.empty()) {
    throw Error(ErrorCode::InvalidArgument, "at least one --checkpoint is required");
  }
  const Manifest manifest = read_manifest(cfg.manifest_path);
  const auto samples = select_samples(manifest, cfg);

  std::vector<DimensionScores> dims;
  for (const auto& path : cfg.checkpoints) {
    const ModelParams model = load_checkpoint(path);
    DimensionScores d;
    d.name = model.target;
    for (const auto& s : samples) {
      d.human.push_back(label_of(s, model.target));
      d.model.push_back(forward(load_resized(manifest.resolve(s), model.arch.input_height, model.arch.input_width), model));
    }
    dims.push_back(std::move(d));
  }

  const EvalReport report = consistency_report(dims);
  for (std::size_t i = 0; i < report.rows.size(); ++i) {
    const EvalRow& row = report.rows[i];
    json j{{"dimension", row.dimension}, {"checkpoint", cfg.checkpoints[i]}, {"count", row.count}};
    if (row.ok()) {
      j["mean_human"] = row.mean_human;
      j["mean_model"] = row.mean_model;
      j["pearson"] = row.pearson;
      j["mse"] = row.mse;
      j["mae"] = row.mae;
    } else {
      j["error"] = std::string(error_code_name(*row.error));
      err << "uicq: " << row.dimension << ": " << row.error_message << '\n';
    }
    out << j.dump() << '\n';
  }
  return report.all_ok() ? 0 : 1;
}

int cmd_contrast(const RunConfig& cfg, std::ostream& out) {
  out << json{{"h1", cfg.h1},
              {"h2", cfg.h2},
              {"separation", hue_separation(cfg.h1, cfg.h2)},
              {"contrast", contrast_angle_score(cfg.h1, cfg.h2)}}
             .dump()
      << '\n';
  return 0;
}

int cmd_contrast_sweep(const RunConfig& cfg, std::ostream& out) {
  if (!(cfg.sweep_step > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "--step must be positive");
  }
  const double end = cfg.sweep_full ? 360.0 : 180.0;
  // Integer stepping keeps the grid exact for steps like 0.1.
  for (long i = 0;; ++i) {
    const double delta = static_cast<double>(i) * cfg.sweep_step;
    if (cfg.sweep_full ? delta >= end : delta > end + 1e-9) break;
    out << json{{"delta", delta}, {"contrast", contrast_angle_score(0.0, delta)}}.dump() << '\n';
  }
  return 0;
}

int cmd_synth(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  cfg.validate();
  if (cfg.out_dir.empty()) {
    throw Error(ErrorCode::InvalidArgument, "--out is required");
  }
  DatasetOptions opts;
  opts.noise = cfg.noise;
  opts.with_dims = cfg.dims;
  opts.height = cfg.input_size;
  opts.width = cfg.input_size;
  opts.weights = cfg.quality_weights();
  opts.metric = cfg.metric;
  const auto samples = generate_dataset(cfg.count, cfg.seed, cfg.out_dir, opts);
  const std::filesystem::path manifest = std::filesystem::path(cfg.out_dir) / opts.manifest_name;
  out << json{{"manifest", manifest.string()}, {"count", samples.size()}}.dump() << '\n';
  err << "uicq: wrote " << samples.size() << " images to " << cfg.out_dir << '\n';
  return 0;
}

int cmd_gradcheck(const RunConfig& cfg, std::ostream& out) {
  const Architecture arch = Architecture::toy();
  const ModelParams params = init_params(arch, cfg.seed);
  std::mt19937_64 rng(cfg.seed + 1);
  auto unit = [&] { return static_cast<double>(rng() >> 11) * 0x1.0p-53; };
  std::vector<TrainingSample> batch;
  for (int i = 0; i < 2; ++i) {
    std::vector<double> px(static_cast<std::size_t>(arch.input_height * arch.input_width * 3));
    for (double& v : px) v = unit();
    batch.push_back({ImageTensor(arch.input_height, arch.input_width, std::move(px)), unit()});
  }
  const GradCheckResult r = gradient_check(batch, params, cfg.fd_step);
  const bool pass = r.max_rel_error < cfg.tolerance;
  out << json{{"seed", cfg.seed},
              {"parameters", r.checked},
              {"max_rel_error", r.max_rel_error},
              {"worst_index", r.worst_index},
              {"step", cfg.fd_step},
              {"tolerance", cfg.tolerance},
              {"result", pass ? "PASS" : "FAIL"}}
             .dump()
      << '\n';
  return pass ? 0 : 1;
}

int cmd_config(const RunConfig& cfg, std::ostream& out) {
  const TrainConfig tc;
  out << json{{"input_size", cfg.input_size},
              {"hue_bins", cfg.metric.hue_bins},
              {"sat_min", cfg.metric.sat_min},
              {"val_min", cfg.metric.val_min},
              {"layout_grid", cfg.metric.grid},
              {"eps", cfg.metric.eps},
              {"weights", cfg.weights},
              {"epochs", tc.epochs},
              {"learning_rate", tc.learning_rate},
              {"batch_size", tc.batch_size},
              {"label_noise", DatasetOptions{}.noise},
              {"architecture", "conv3x3x8+pool, conv3x3x16+pool, conv3x3x32; shallow k=2"},
              {"feature_length", Architecture::standard(cfg.input_size).feature_length()}}
             .dump(2)
      << '\n';
  return 0;
}

void add_metric_flags(CLI::App* cmd, RunConfig& cfg) {
  cmd->add_option("--size", cfg.input_size, "Square input resolution images are resized to")->capture_default_str();
  cmd->add_option("--bins", cfg.metric.hue_bins, "Hue histogram bins")->capture_default_str();
  cmd->add_option("--sat-min", cfg.metric.sat_min, "Saturation gate for chromatic pixels")->capture_default_str();
  cmd->add_option("--val-min", cfg.metric.val_min, "Value gate for chromatic pixels")->capture_default_str();
  cmd->add_option("--grid", cfg.metric.grid, "Layout grid cells per side")->capture_default_str();
  cmd->add_option("--weights", cfg.weights, "Composite weights alpha,beta,gamma (sum to 1)")
      ->delimiter(',')
      ->expected(3)
      ->capture_default_str();
}

void add_train_flags(CLI::App* cmd, RunConfig& cfg) {
  cmd->add_option("--epochs", cfg.epochs, "Training epochs")->capture_default_str();
  cmd->add_option("--lr", cfg.learning_rate, "Learning rate")->capture_default_str();
  cmd->add_option("--batch", cfg.batch_size, "Minibatch size")->capture_default_str();
}

void add_selection_flags(CLI::App* cmd, RunConfig& cfg) {
  cmd->add_option("--offset", cfg.offset, "Skip this many manifest records")->capture_default_str();
  cmd->add_option("--limit", cfg.limit, "Use at most this many records (0 = all)")->capture_default_str();
}

}  // namespace

std::string format_score_record(const ScoreRecord& rec) {
  json j = breakdown_json(rec.breakdown);
  j["path"] = rec.path;
  if (rec.cnn_score) j["cnn_score"] = *rec.cnn_score;
  return j.dump();
}

ScoreRecord parse_score_record(std::string_view line) {
  try {
    const json j = json::parse(line);
    ScoreRecord rec;
    rec.path = j.at("path").get<std::string>();
    QualityBreakdown& q = rec.breakdown;
    q.q_hue = j.at("q_hue").get<double>();
    q.q_lightness = j.at("q_lightness").get<double>();
    q.q_purity = j.at("q_purity").get<double>();
    q.q_total = j.at("q_total").get<double>();
    q.layout.balance = j.at("balance").get<double>();
    q.layout.continuity = j.at("continuity").get<double>();
    q.layout.integrity = j.at("integrity").get<double>();
    q.layout.unity = j.at("unity").get<double>();
    q.entropy_raw = j.at("entropy_raw").get<double>();
    q.cv_lightness_raw = j.at("cv_lightness_raw").get<double>();
    q.cv_purity_raw = j.at("cv_purity_raw").get<double>();
    q.chromatic_fraction = j.value("chromatic_fraction", 0.0);
    if (j.contains("cnn_score")) rec.cnn_score = j.at("cnn_score").get<double>();
    return rec;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::MalformedFile, std::string("score record: ") + e.what());
  }
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  RunConfig cfg;
  CLI::App app{"Interface color quality scoring, CNN training and evaluation", "uicq"};
  app.require_subcommand(1);

  auto* score = app.add_subcommand("score", "Analytic color-quality breakdown per image (JSON lines)");
  score->add_option("images", cfg.images, "PNG or PPM files")->required();
  score->add_option("--model", cfg.model_path, "Checkpoint; adds cnn_score to each record");
  score->add_option("--jobs", cfg.jobs, "Worker threads")->capture_default_str();
  score->add_flag("--ordered", cfg.ordered, "Emit records in input order");
  add_metric_flags(score, cfg);

  auto* train_cmd = app.add_subcommand("train", "Train the CNN regressor on a manifest");
  train_cmd->add_option("--manifest", cfg.manifest_path, "Manifest (JSON lines)")->required();
  train_cmd->add_option("--out", cfg.checkpoint_out, "Checkpoint to write")->required();
  train_cmd->add_option("--dimension", cfg.dimension, "Label column: score or a dims key")->capture_default_str();
  train_cmd->add_option("--seed", cfg.seed, "Initialization and shuffling seed")->capture_default_str();
  train_cmd->add_option("--size", cfg.input_size, "Model input resolution")->capture_default_str();
  add_train_flags(train_cmd, cfg);
  add_selection_flags(train_cmd, cfg);

  auto* eval = app.add_subcommand("eval", "Pearson / MSE / MAE of model scores against manifest labels");
  eval->add_option("--manifest", cfg.manifest_path, "Manifest (JSON lines)")->required();
  eval->add_option("--checkpoint", cfg.checkpoints, "Checkpoint (repeat for one row per dimension)")->required();
  add_selection_flags(eval, cfg);

  auto* contrast = app.add_subcommand("contrast", "Strong-contrast score of two hues in degrees");
  contrast->add_option("h1", cfg.h1, "First hue")->required();
  contrast->add_option("h2", cfg.h2, "Second hue")->required();

  auto* sweep = app.add_subcommand("contrast-sweep", "Tabulate contrast against hue separation");
  sweep->add_option("--step", cfg.sweep_step, "Separation step in degrees")->capture_default_str();
  sweep->add_flag("--full", cfg.sweep_full, "Sweep [0, 360) instead of [0, 180]");

  auto* synth = app.add_subcommand("synth", "Generate an oracle-labeled synthetic interface dataset");
  synth->add_option("--count", cfg.count, "Number of images")->required();
  synth->add_option("--seed", cfg.seed, "Generator seed")->capture_default_str();
  synth->add_option("--out", cfg.out_dir, "Output directory")->required();
  synth->add_option("--noise", cfg.noise, "Uniform label noise amplitude")->capture_default_str();
  synth->add_flag("--dims", cfg.dims, "Also write per-dimension ratings");
  add_metric_flags(synth, cfg);

  auto* gradcheck = app.add_subcommand("gradcheck", "Finite-difference check of the analytic gradient");
  gradcheck->add_option("--seed", cfg.seed, "Network and input seed")->capture_default_str();
  gradcheck->add_option("--step", cfg.fd_step, "Central difference step")->capture_default_str();
  gradcheck->add_option("--tolerance", cfg.tolerance, "Maximum relative error")->capture_default_str();

  auto* config = app.add_subcommand("config", "Print default settings");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(std::move(reversed));
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err);
  }

  try {
    if (*score) return cmd_score(cfg, out, err);
    if (*train_cmd) return cmd_train(cfg, out, err);
    if (*eval) return cmd_eval(cfg, out, err);
    if (*contrast) return cmd_contrast(cfg, out);
    if (*sweep) return cmd_contrast_sweep(cfg, out);
    if (*synth) return cmd_synth(cfg, out, err);
    if (*gradcheck) return cmd_gradcheck(cfg, out);
    if (*config) return cmd_config(cfg, out);
  } catch (const std::exception& e) {
    diagnose(err, app.get_subcommands().front()->get_name(), e);
    return 1;
  }
  return 1;
}

}  // namespace uicq::cli
