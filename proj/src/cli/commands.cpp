// SPDX-License-Identifier: Apache-2.0
#include "stssl/cli/commands.hpp"

#include "stssl/cli/plot.hpp"
#include "stssl/cli/presets.hpp"
#include "stssl/common/hash.hpp"
#include "stssl/dataset/metadata_baseline.hpp"
#include "stssl/eval/ood.hpp"
#include "stssl/model/checkpoint.hpp"
#include "stssl/train/trainer.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <fstream>
#include <iomanip>
#include <iterator>
#include <ostream>
#include <sstream>

namespace stssl::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + path.string());
    out << text;
    if (!out) throw Error("write failed for " + path.string());
  }
  fs::rename(tmp, path);
}

void write_json(const fs::path& path, const json& j) { write_text(path, j.dump(2) + "\n"); }

std::string fixed(double v, int digits = 4) {
  std::ostringstream s;
  s << std::fixed << std::setprecision(digits) << v;
  return s.str();
}

std::string file_bytes(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

/// Digest over a manifest, its sidecar, and every referenced image.
std::uint64_t manifest_checksum(const fs::path& csv, const dataset::DatasetManifest& m) {
  std::uint64_t h = fnv1a64(file_bytes(csv));
  h = hash_combine(h, fnv1a64(file_bytes(dataset::sidecar_path(csv))));
  for (const auto& r : m.records) h = hash_combine(h, fnv1a64(file_bytes(m.root / r.image_path)));
  return h;
}

std::vector<dataset::GeoTemporal> training_metadata(const ExperimentConfig& c) {
  std::vector<dataset::GeoTemporal> metas;
  if (c.dataset.source == "synthetic") {
    for (const auto& s : dataset::generate_synthetic_samples(c.dataset.synthetic).train) metas.push_back(s.meta);
  } else {
    for (const auto& r : dataset::load_manifest(c.dataset.train_manifest).records) metas.push_back(r.meta);
  }
  return metas;
}

ExperimentConfig dry_run_config(ExperimentConfig c, std::ostream& log) {
  auto& t = c.train;
  t.total_steps = 1;
  t.n_labeled = 1;
  t.n_unlabeled = 1;
  t.log_interval = 1;
  t.eval_interval = 0;
  t.checkpoint_interval = 0;
  if (c.dataset.source == "manifest") {
    const bool present = fs::exists(c.dataset.train_manifest) &&
                         (c.dataset.test_manifest.empty() || fs::exists(c.dataset.test_manifest));
    if (present) return c;
    log << "dry run: manifests not found, using a synthetic stand-in with the same classes and image size\n";
    c.dataset.source = "synthetic";
  }
  auto& s = c.dataset.synthetic;
  const int per_class = std::max(1, c.dataset.split.labels_per_class);
  s.samples_total = std::max(200, 20 * s.num_classes * per_class);
  s.test_samples = 20;
  return c;
}

void log_record(std::ostream& log, const json& rec) {
  log << "step " << rec.at("step").get<std::int64_t>() << "  lr " << std::scientific << std::setprecision(3)
      << rec.at("lr").get<double>() << std::defaultfloat;
  for (const char* key : {"teacher_total", "student_total", "student_distillation", "pseudo_quantity", "pseudo_quality"}) {
    if (rec.contains(key)) log << "  " << key << ' ' << fixed(rec.at(key).get<double>());
  }
  log << '\n';
}

std::string pseudo_csv(const fs::path& metrics_path, const std::string& series, const std::string& hash) {
  std::ostringstream csv;
  csv << "# config_hash: " << hash << "\nstep,series,quality,quantity\n";
  std::ifstream in(metrics_path);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto rec = json::parse(line);
    csv << rec.at("step").get<std::int64_t>() << ',' << series << ',';
    if (rec.contains("pseudo_quality")) csv << rec.at("pseudo_quality").get<double>();
    csv << ',' << rec.at("pseudo_quantity").get<double>() << '\n';
  }
  return csv.str();
}

bool metadata_invariant(const model::BackboneConfig& c) { return !c.uses_metadata(); }

}  // namespace

void cmd_generate_data(const CommonOptions& o, std::ostream& log) {
  const auto c = resolve_experiment(o.preset, o.config, o.seed);
  const auto hash = config_hash(c);
  const auto& world = c.dataset.synthetic;

  const auto samples = dataset::generate_synthetic_samples(world);
  const auto train = dataset::records_of(dataset::LoadedDataset(samples.info, samples.train));
  const auto test = dataset::records_of(dataset::LoadedDataset(samples.info, samples.test));
  const auto baseline = dataset::fit_metadata_baseline(train, test, world.num_classes);
  json extra{{"config_hash", hash},
             {"metadata_baseline",
              {{"accuracy", baseline.accuracy},
               {"majority_accuracy", baseline.majority_accuracy},
               {"advantage", baseline.advantage()}}}};
  if (world.spatial_dependence_strength == 0.0 && world.seasonal_dependence_strength == 0.0) {
    extra["metadata_independence"] = {
        {"note", "spatial and seasonal dependence strengths are both zero: labels and images are independent "
                 "of location and time"},
        {"metadata_only_accuracy", baseline.accuracy},
        {"majority_accuracy", baseline.majority_accuracy}};
  }

  const auto out = dataset::generate_synthetic(world, o.out, extra);
  const auto train_sum = manifest_checksum(out.train_csv, out.train);
  const auto test_sum = manifest_checksum(out.test_csv, out.test);
  log << "generated " << out.train.records.size() << " training and " << out.test.records.size()
      << " test samples (" << world.num_classes << " classes, " << world.image_size << "px, "
      << to_string(world.task_mode) << ")\n"
      << "  train manifest: " << out.train_csv.string() << "\n"
      << "  test manifest:  " << out.test_csv.string() << "\n"
      << "  metadata-only accuracy " << fixed(baseline.accuracy) << " vs majority " << fixed(baseline.majority_accuracy)
      << "\n"
      << "  checksum " << hex64(hash_combine(train_sum, test_sum)) << "\n"
      << "  config_hash " << hash << "\n";
}

void cmd_train(const CommonOptions& o, const TrainOptions& t, std::ostream& log) {
  auto c = resolve_experiment(o.preset, o.config, o.seed);
  if (t.dry_run) c = dry_run_config(std::move(c), log);
  c.validate();
  const auto hash = config_hash(c);
  fs::create_directories(o.out);
  auto doc = to_json(c);
  doc["config_hash"] = hash;
  write_json(o.out / "config.json", doc);

  const auto data = load_experiment_data(c);
  train::RunData run;
  run.train = &data.train;
  run.labeled = data.train.indices_of(data.split.labeled);
  run.unlabeled = data.train.indices_of(data.split.unlabeled);
  if (data.test) {
    run.eval = &*data.test;
    run.eval_indices = eval::all_indices(*data.test);
  }
  log << "experiment " << c.name << " (" << to_string(c.train.mode) << ", " << c.train.algorithm << "): "
      << run.labeled.size() << " labeled, " << run.unlabeled.size() << " unlabeled, " << c.train.total_steps
      << " steps\n";

  train::RunOptions opts;
  opts.output_dir = o.out;
  opts.resume_from = t.resume;
  opts.extra = {{"config_hash", hash}};
  opts.keep_history = false;
  const auto result = train::run_training(c.train, run, opts);
  for (const auto& rec : result.log_records) log_record(log, rec);

  json report{{"config_hash", hash}, {"name", c.name}, {"steps", result.state.step}};
  if (result.final_primary) report["final"] = eval::to_json(*result.final_primary);
  if (result.final_teacher) report["final_teacher"] = eval::to_json(*result.final_teacher);
  if (result.best_primary) report["best"] = eval::to_json(*result.best_primary);
  write_json(o.out / "report.json", report);
  write_text(o.out / "pseudo.csv", pseudo_csv(o.out / "metrics.jsonl", c.name, hash));

  if (result.final_primary) log << "final primary metric " << fixed(result.final_primary->primary()) << "\n";
  if (result.final_teacher) log << "final teacher metric " << fixed(result.final_teacher->primary()) << "\n";
  log << "wrote checkpoints and logs to " << o.out.string() << "\n";
}

void cmd_evaluate(const CommonOptions& o, const std::vector<fs::path>& checkpoints, std::ostream& log) {
  if (checkpoints.empty()) throw Error("evaluate needs at least one --checkpoint");
  const auto c = resolve_experiment(o.preset, o.config, o.seed);
  const auto hash = config_hash(c);
  std::vector<model::ModelCheckpoint> models;
  for (const auto& p : checkpoints) {
    if (!fs::exists(p)) throw Error("checkpoint not found: " + p.string());
    models.push_back(model::load_model_checkpoint(p));
  }
  const auto data = load_experiment_data(c);
  const auto& eval_set = data.test ? *data.test : data.train;
  const auto indices = eval::all_indices(eval_set);

  json report{{"config_hash", hash}, {"num_samples", indices.size()}, {"models", json::array()}};
  std::ostringstream csv;
  csv << "# config_hash: " << hash << "\ncheckpoint,role,condition,primary,std\n";
  const model::ModelCheckpoint* teacher = nullptr;
  const model::ModelCheckpoint* student = nullptr;
  for (std::size_t i = 0; i < models.size(); ++i) {
    const auto& m = models[i];
    const model::Backbone net(m.config);
    const auto name = checkpoints[i].string();
    json entry{{"checkpoint", name}, {"role", m.role}, {"variant", model::to_string(m.config.variant)}};
    if (c.eval.ood_overrides.empty()) {
      const auto base = eval::evaluate(net, m.params, eval_set, indices, c.eval.batch_size);
      entry["baseline"] = eval::to_json(base);
      csv << name << ',' << m.role << ",baseline," << base.primary() << ",\n";
      log << m.role << " (" << name << "): " << fixed(base.primary()) << "\n";
    } else {
      const auto sweep = eval::sweep_overrides(net, m.params, eval_set, indices, c.eval.ood_overrides, c.eval.batch_size);
      if (metadata_invariant(m.config) && !sweep.invariant) {
        throw Error("metadata-free model " + name + " changed its predictions under a metadata override");
      }
      entry["ood"] = eval::to_json(sweep);
      entry["baseline"] = eval::to_json(sweep.baseline);
      if (metadata_invariant(m.config)) entry["invariance_verified"] = sweep.invariant;
      csv << name << ',' << m.role << ",baseline," << sweep.baseline.primary() << ",\n";
      for (std::size_t k = 0; k < sweep.scores.size(); ++k) {
        csv << name << ',' << m.role << ",override_" << k << ',' << sweep.scores[k] << ",\n";
      }
      csv << name << ',' << m.role << ",ood_mean," << sweep.mean << ',' << sweep.std_dev << '\n';
      log << m.role << " (" << name << "): in-distribution " << fixed(sweep.baseline.primary()) << "  OOD "
          << fixed(sweep.mean) << " ± " << fixed(sweep.std_dev)
          << (sweep.invariant ? "  [unchanged under every override]" : "") << "\n";
    }
    report["models"].push_back(entry);
    if (m.config.uses_metadata() && !teacher) teacher = &m;
    if (!m.config.uses_metadata() && !student) student = &m;
  }
  if (teacher && student && !c.eval.ood_overrides.empty()) {
    const model::Backbone tnet(teacher->config), snet(student->config);
    const auto ood = eval::ood_metadata_eval(tnet, teacher->params, snet, student->params, eval_set, indices,
                                             c.eval.ood_overrides, c.eval.batch_size);
    report["ood_comparison"] = eval::to_json(ood);
    log << "OOD drop: teacher " << fixed(ood.teacher_drop()) << ", student " << fixed(ood.student_drop()) << "\n";
  }
  fs::create_directories(o.out);
  write_json(o.out / "report.json", report);
  write_text(o.out / "report.csv", csv.str());
  log << "wrote " << (o.out / "report.json").string() << " and report.csv\n";
}

void cmd_probe(const CommonOptions& o, const fs::path& teacher_checkpoint, std::ostream& log) {
  const auto c = resolve_experiment(o.preset, o.config, o.seed);
  const auto hash = config_hash(c);
  if (!fs::exists(teacher_checkpoint)) throw Error("checkpoint not found: " + teacher_checkpoint.string());
  const auto ckpt = model::load_model_checkpoint(teacher_checkpoint);
  if (!ckpt.config.uses_metadata()) {
    throw Error("probe needs a metadata-consuming teacher checkpoint, got " + model::to_string(ckpt.config.variant));
  }
  const model::Backbone net(ckpt.config);
  const auto box = eval::bounding_box(training_metadata(c));
  const auto grid = eval::make_probe_grid(box, c.eval.probe);
  const auto result =
      eval::prior_probe(net, ckpt.params, grid, c.eval.probe_value, teacher_checkpoint.filename().string());
  fs::create_directories(o.out);
  eval::write_probe_csv(o.out / "probe.csv", result,
                        {{"config_hash", hash}, {"checkpoint", teacher_checkpoint.string()}});
  json summary{{"config_hash", hash},
               {"checkpoint", teacher_checkpoint.string()},
               {"image_value", c.eval.probe_value},
               {"lat_steps", c.eval.probe.lat_steps},
               {"lon_steps", c.eval.probe.lon_steps},
               {"day_steps", c.eval.probe.day_steps},
               {"training_box", {box.lat_min, box.lat_max, box.lon_min, box.lon_max}},
               {"probe_box", {grid.box.lat_min, grid.box.lat_max, grid.box.lon_min, grid.box.lon_max}},
               {"num_points", grid.points.size()}};
  write_json(o.out / "probe.json", summary);
  log << "probed " << grid.points.size() << " points (" << c.eval.probe.lat_steps << "x" << c.eval.probe.lon_steps
      << " spatial, " << c.eval.probe.day_steps << " temporal); wrote " << (o.out / "probe.csv").string() << "\n";
}

void cmd_plot(const std::vector<fs::path>& inputs, const fs::path& out_dir, int class_index, std::ostream& log) {
  if (inputs.empty()) throw Error("plot needs at least one --input CSV");
  for (const auto& csv : inputs) {
    auto png = out_dir / csv.filename();
    png.replace_extension(".png");
    plot_csv(csv, png, class_index);
    log << "wrote " << png.string() << "\n";
  }
}

int run_cli(int argc, char** argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Spatiotemporal teacher-student semi-supervised training"};
  app.require_subcommand(1);

  CommonOptions common;
  std::string preset, config;
  std::uint64_t seed = 0;
  std::string out_dir = "out";
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--preset", preset, "Named preset");
    sub->add_option("--config", config, "Experiment config (JSON)");
    sub->add_option("--seed", seed, "Overrides the training and split seeds");
    sub->add_option("--out", out_dir, "Output directory");
  };

  auto* gen = app.add_subcommand("generate-data", "Write the synthetic dataset");
  add_common(gen);

  TrainOptions topts;
  std::string resume;
  auto* train = app.add_subcommand("train", "Train the configured models");
  add_common(train);
  train->add_flag("--dry-run", topts.dry_run, "One step on a small batch");
  train->add_option("--resume", resume, "Train-state checkpoint to resume from");

  std::vector<std::string> checkpoints;
  auto* evaluate = app.add_subcommand("evaluate", "Evaluate model checkpoints");
  add_common(evaluate);
  evaluate->add_option("--checkpoint", checkpoints, "Model checkpoint (repeatable)")->required();

  std::string probe_ckpt;
  auto* probe = app.add_subcommand("probe", "Prior probe of a teacher checkpoint");
  add_common(probe);
  probe->add_option("--checkpoint", probe_ckpt, "Teacher checkpoint")->required();

  std::vector<std::string> inputs;
  int class_index = 0;
  auto* plot = app.add_subcommand("plot", "Render CSV outputs as PNG");
  plot->add_option("--input", inputs, "CSV file (repeatable)")->required();
  plot->add_option("--out", out_dir, "Output directory");
  plot->add_option("--class", class_index, "Class column of a probe CSV");

  auto* presets = app.add_subcommand("presets", "List preset names");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 1;
  }

  for (auto* sub : {gen, train, evaluate, probe}) {
    if (!sub->parsed()) continue;
    if (sub->count("--preset")) common.preset = preset;
    if (sub->count("--config")) common.config = config;
    if (sub->count("--seed")) common.seed = seed;
  }
  common.out = out_dir;
  if (!resume.empty()) topts.resume = resume;

  try {
    if (gen->parsed()) cmd_generate_data(common, out);
    if (train->parsed()) cmd_train(common, topts, out);
    if (evaluate->parsed()) cmd_evaluate(common, {checkpoints.begin(), checkpoints.end()}, out);
    if (probe->parsed()) cmd_probe(common, probe_ckpt, out);
    if (plot->parsed()) cmd_plot({inputs.begin(), inputs.end()}, out_dir, class_index, out);
    if (presets->parsed()) {
      for (const auto& name : preset_names()) out << name << "\n";
    }
  } catch (const NumericalAbort& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  } catch (const json::exception& e) {
    err << "error: invalid JSON: " << e.what() << "\n";
    return 1;
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

}  // namespace stssl::cli
