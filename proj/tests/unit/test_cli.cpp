// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include "stssl/cli/commands.hpp"
#include "stssl/cli/plot.hpp"
#include "stssl/cli/presets.hpp"
#include "stssl/dataset/png_io.hpp"
#include "stssl/model/checkpoint.hpp"
#include "support/fixtures.hpp"

#include <fstream>
#include <iterator>
#include <sstream>

using namespace stssl;
using namespace stssl::cli;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  int code = 0;
  std::string out;
  std::string err;
};

Outcome run(std::vector<std::string> args) {
  args.insert(args.begin(), "stssl");
  std::vector<char*> argv;
  for (auto& a : args) argv.push_back(a.data());
  std::ostringstream out, err;
  Outcome o;
  o.code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  o.out = out.str();
  o.err = err.str();
  return o;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

json tiny_model(const char* variant, const char* fusion) {
  return {{"variant", variant}, {"fusion", fusion}, {"image_size", 8}, {"patch_size", 4}, {"embed_dim", 16},
          {"depth", 1},         {"num_heads", 2},   {"num_classes", 4}};
}

json tiny_experiment() {
  return {{"name", "cli-smoke"},
          {"dataset",
           {{"synthetic", {{"image_size", 8}, {"num_classes", 4}, {"samples_total", 160}, {"test_samples", 40}}},
            {"split", {{"labeled_fraction", 0.1}}}}},
          {"model", {{"teacher", tiny_model("teacher", "early-metatoken")}, {"student", tiny_model("student", "none")}}},
          {"ssl", {{"tau", 0.7}}},
          {"train", {{"total_steps", 12}, {"log_interval", 4}, {"n_labeled", 4}, {"n_unlabeled", 8}}},
          {"eval", {{"probe", {{"lat_steps", 6}, {"lon_steps", 5}, {"day_steps", 4}}}}}};
}

fs::path write_config(const fixture::TempDir& dir, const json& doc, const char* name = "config.json") {
  const auto p = dir / name;
  std::ofstream(p) << doc.dump(2);
  return p;
}

/// One trained tiny experiment shared by the artifact tests.
struct TrainedRun {
  fixture::TempDir dir{"cli_run"};
  fs::path config;
  Outcome train;

  TrainedRun() {
    config = write_config(dir, tiny_experiment());
    train = run({"train", "--config", config.string(), "--out", (dir / "run").string()});
  }
};

const TrainedRun& trained() {
  static const TrainedRun r;
  return r;
}

}  // namespace

TEST_CASE("every preset resolves and validates") {
  const auto names = preset_names();
  CHECK(names.size() >= 20);
  for (const auto& name : names) {
    INFO(name);
    const auto c = resolve_experiment(name, std::nullopt, std::nullopt);
    CHECK_NOTHROW(c.validate());
    CHECK(c.name == name);
  }
  CHECK_THROWS_AS(preset_patch("nope"), Error);
}

TEST_CASE("presets carry the published hyperparameters") {
  const auto be = resolve_experiment("bigearthnet-1pct", std::nullopt, std::nullopt);
  CHECK(be.train.n_labeled == 64);
  CHECK(be.train.n_unlabeled == 448);
  CHECK(be.train.base_lr == 1e-4);
  CHECK(be.train.weights.lambda_d == 1.0);
  CHECK(be.train.student.task_mode == TaskMode::multi_label);
  CHECK(be.train.student.num_classes == 19);
  const auto eu = resolve_experiment("eurosat-n40", std::nullopt, std::nullopt);
  CHECK(eu.train.n_labeled == 8);
  CHECK(eu.train.n_unlabeled == 8);
  CHECK(eu.train.total_steps == 204800);
  CHECK(eu.train.base_lr == 5e-5);
  CHECK(eu.train.weights.lambda_d == 0.01);
  CHECK(eu.dataset.split.labels_per_class == 4);
  CHECK_FALSE(eu.train.teacher.meta.use_time);
  CHECK(resolve_experiment("ablation-(f)-no-distill", std::nullopt, std::nullopt).train.weights.lambda_d == 0.0);
  CHECK(resolve_experiment("ablation-(i)-cls-token", std::nullopt, std::nullopt).train.ablations.distill_on_cls_token);
  CHECK(resolve_experiment("ablation-(d)-late-fusion", std::nullopt, std::nullopt).train.resolved_teacher().fusion ==
        model::Fusion::late_fusion);
  CHECK(resolve_experiment("supervised-synthetic", std::nullopt, std::nullopt).train.weights.lambda_u == 0.0);
}

TEST_CASE("every preset dry-runs one step") {
  fixture::TempDir dir("dry");
  for (const auto& name : preset_names()) {
    INFO(name);
    const auto r = run({"train", "--preset", name, "--dry-run", "--out", (dir / name).string()});
    INFO(r.err);
    CHECK(r.code == 0);
    CHECK(fs::exists(dir / name / "final.ckpt"));
  }
}

TEST_CASE("config documents: unknown keys and bad values are rejected before any work") {
  fixture::TempDir dir("cfg");
  auto doc = tiny_experiment();
  doc["train"]["learning_rate"] = 0.1;
  auto r = run({"train", "--config", write_config(dir, doc).string(), "--out", (dir / "o").string()});
  CHECK(r.code == 1);
  CHECK(r.err.find("learning_rate") != std::string::npos);
  CHECK_FALSE(fs::exists(dir / "o"));

  doc = tiny_experiment();
  doc["ssl"]["tau"] = 1.5;
  r = run({"train", "--config", write_config(dir, doc).string(), "--out", (dir / "o").string()});
  CHECK(r.code == 1);

  r = run({"train", "--preset", "no-such-preset", "--out", (dir / "o").string()});
  CHECK(r.code == 1);
  CHECK(r.err.find("no-such-preset") != std::string::npos);

  r = run({"frobnicate"});
  CHECK(r.code == 1);
  CHECK(run({"--help"}).code == 0);
}

TEST_CASE("config hash is stable and sensitive") {
  const auto a = resolve_experiment("synthetic-default", std::nullopt, std::nullopt);
  CHECK(config_hash(a) == config_hash(resolve_experiment("synthetic-default", std::nullopt, std::nullopt)));
  CHECK(config_hash(a).size() == 16);
  CHECK(config_hash(a) != config_hash(resolve_experiment("synthetic-default", std::nullopt, 3)));
  const auto round = experiment_from_json(to_json(a));
  CHECK(to_json(round) == to_json(a));
}

TEST_CASE("generate-data is reproducible and flags metadata independence") {
  fixture::TempDir dir("gen");
  auto doc = tiny_experiment();
  const auto cfg = write_config(dir, doc);
  const auto a = run({"generate-data", "--config", cfg.string(), "--out", (dir / "a").string()});
  const auto b = run({"generate-data", "--config", cfg.string(), "--out", (dir / "b").string()});
  REQUIRE(a.code == 0);
  REQUIRE(b.code == 0);
  const auto checksum_line = [](const std::string& text) {
    const auto at = text.find("checksum");
    REQUIRE(at != std::string::npos);
    return text.substr(at, text.find('\n', at) - at);
  };
  CHECK(checksum_line(a.out) == checksum_line(b.out));
  CHECK(slurp(dir / "a" / "train.csv") == slurp(dir / "b" / "train.csv"));
  const auto train = dataset::load_manifest(dir / "a" / "train.csv");
  CHECK(train.records.size() == 160);
  const auto sidecar = json::parse(slurp(dataset::sidecar_path(dir / "a" / "train.csv")));
  CHECK(sidecar.dump().find("config_hash") != std::string::npos);
  CHECK(sidecar.dump().find("metadata_independence") == std::string::npos);

  doc["dataset"]["synthetic"]["spatial_dependence_strength"] = 0.0;
  doc["dataset"]["synthetic"]["seasonal_dependence_strength"] = 0.0;
  const auto z = run({"generate-data", "--config", write_config(dir, doc, "zero.json").string(), "--out",
                      (dir / "z").string()});
  REQUIRE(z.code == 0);
  const auto zside = json::parse(slurp(dataset::sidecar_path(dir / "z" / "train.csv")));
  CHECK(zside.dump().find("metadata_independence") != std::string::npos);
}

TEST_CASE("train writes teacher and student checkpoints, logs and reports") {
  const auto& r = trained();
  INFO(r.train.err);
  REQUIRE(r.train.code == 0);
  const auto run_dir = r.dir / "run";
  for (const char* f : {"teacher.ckpt", "student.ckpt", "final.ckpt", "metrics.jsonl", "report.json", "pseudo.csv",
                        "config.json"}) {
    CHECK(fs::exists(run_dir / f));
  }
  CHECK(model::load_model_checkpoint(run_dir / "teacher.ckpt").role == "teacher");
  CHECK(model::load_model_checkpoint(run_dir / "student.ckpt").role == "student");
  CHECK(r.train.out.find("student_distillation") != std::string::npos);
}

TEST_CASE("no-distillation ablation logs no distillation component") {
  fixture::TempDir dir("nodistill");
  auto doc = tiny_experiment();
  doc["preset"] = "ablation-(f)-no-distill";
  const auto r = run({"train", "--config", write_config(dir, doc).string(), "--out", (dir / "o").string()});
  INFO(r.err);
  REQUIRE(r.code == 0);
  CHECK(r.out.find("distillation") == std::string::npos);
  CHECK(slurp(dir / "o" / "metrics.jsonl").find("distillation") == std::string::npos);
  const auto cfg = json::parse(slurp(dir / "o" / "config.json"));
  CHECK(cfg["ssl"]["lambda_d"] == 0.0);
}

TEST_CASE("resume continues a run to the same result") {
  fixture::TempDir dir("cli_resume");
  auto doc = tiny_experiment();
  doc["train"]["checkpoint_interval"] = 8;
  const auto cfg = write_config(dir, doc);
  REQUIRE(run({"train", "--config", cfg.string(), "--out", (dir / "full").string()}).code == 0);
  const auto r = run({"train", "--config", cfg.string(), "--out", (dir / "part").string(), "--resume",
                      (dir / "full" / "checkpoints" / "step_8.ckpt").string()});
  INFO(r.err);
  REQUIRE(r.code == 0);
  CHECK(slurp(dir / "full" / "student.ckpt") == slurp(dir / "part" / "student.ckpt"));
}

TEST_CASE("evaluate reports student invariance and the teacher OOD sweep") {
  const auto& t = trained();
  REQUIRE(t.train.code == 0);
  const auto out = t.dir / "eval";
  const auto r = run({"evaluate", "--config", t.config.string(), "--checkpoint", (t.dir / "run" / "teacher.ckpt").string(),
                      "--checkpoint", (t.dir / "run" / "student.ckpt").string(), "--out", out.string()});
  INFO(r.err);
  REQUIRE(r.code == 0);
  const auto report = json::parse(slurp(out / "report.json"));
  REQUIRE(report["models"].size() == 2);
  CHECK(report["models"][1]["invariance_verified"] == true);
  CHECK(report["models"][0]["ood"]["scores"].size() == 5);
  CHECK(report.contains("ood_comparison"));
  const auto csv = read_csv(out / "report.csv");
  CHECK(csv.rows.size() == 2 * 7);
  CHECK(r.out.find("±") != std::string::npos);
}

TEST_CASE("evaluate with a missing checkpoint exits nonzero with a clear message") {
  fixture::TempDir dir("missing");
  const auto cfg = write_config(dir, tiny_experiment());
  const auto r = run({"evaluate", "--config", cfg.string(), "--checkpoint", (dir / "absent.ckpt").string(), "--out",
                      (dir / "o").string()});
  CHECK(r.code == 1);
  CHECK(r.err.find("absent.ckpt") != std::string::npos);
  CHECK_FALSE(fs::exists(dir / "o" / "report.json"));
}

TEST_CASE("probe then plot yields a heatmap matching the grid") {
  const auto& t = trained();
  REQUIRE(t.train.code == 0);
  const auto out = t.dir / "probe";
  const auto p = run({"probe", "--config", t.config.string(), "--checkpoint", (t.dir / "run" / "teacher.ckpt").string(),
                      "--out", out.string()});
  INFO(p.err);
  REQUIRE(p.code == 0);
  const auto csv = read_csv(out / "probe.csv");
  CHECK(csv.rows.size() == 6 * 5 + 4);
  CHECK(csv.header.size() == 4 + 4);
  const auto q = run({"plot", "--input", (out / "probe.csv").string(), "--out", out.string(), "--class", "2"});
  INFO(q.err);
  REQUIRE(q.code == 0);
  const auto img = dataset::read_png(out / "probe.png");
  constexpr int cell = 6;
  CHECK(img.height == 8 + 6 * cell + 8);
  CHECK(img.width == 8 + 5 * cell + 8 + 12 + 8);
  CHECK(plot_probe_heatmap(out / "probe.csv", out / "again.png", 2) == std::pair{6, 5});
  CHECK(run({"probe", "--config", t.config.string(), "--checkpoint", (t.dir / "run" / "student.ckpt").string(),
             "--out", out.string()})
            .code == 1);
}

TEST_CASE("quality and quantity curves render as two panels") {
  const auto& t = trained();
  REQUIRE(t.train.code == 0);
  const auto out = t.dir / "curves";
  const auto r = run({"plot", "--input", (t.dir / "run" / "pseudo.csv").string(), "--out", out.string()});
  INFO(r.err);
  REQUIRE(r.code == 0);
  const auto img = dataset::read_png(out / "pseudo.png");
  CHECK(img.height > 2 * 200);
  CHECK(img.width >= 480);
}

TEST_CASE("plotting an empty or malformed CSV fails without leaving a file") {
  fixture::TempDir dir("plot_bad");
  std::ofstream(dir / "empty.csv") << "step,series,quality,quantity\n";
  std::ofstream(dir / "ragged.csv") << "step,series,quality,quantity\n1,a,0.5\n";
  std::ofstream(dir / "blank.csv") << "";
  for (const char* name : {"empty", "ragged", "blank"}) {
    INFO(name);
    const auto r = run({"plot", "--input", (dir / (std::string(name) + ".csv")).string(), "--out", (dir / "o").string()});
    CHECK(r.code == 1);
    CHECK_FALSE(fs::exists(dir / "o" / (std::string(name) + ".png")));
    CHECK_FALSE(fs::exists(dir / "o" / (std::string(name) + ".png.tmp")));
  }
  CHECK_THROWS_AS(read_csv(dir / "empty.csv"), Error);
}

TEST_CASE("the config hash is embedded in every artifact") {
  const auto& t = trained();
  REQUIRE(t.train.code == 0);
  const auto hash = json::parse(slurp(t.dir / "run" / "config.json")).at("config_hash").get<std::string>();
  CHECK(hash == config_hash(resolve_experiment(std::nullopt, t.config, std::nullopt)));
  CHECK(json::parse(slurp(t.dir / "run" / "report.json"))["config_hash"] == hash);
  std::istringstream lines(slurp(t.dir / "run" / "metrics.jsonl"));
  std::string line;
  int n = 0;
  while (std::getline(lines, line)) {
    CHECK(json::parse(line)["config_hash"] == hash);
    ++n;
  }
  CHECK(n == 3);
  CHECK(model::load_model_checkpoint(t.dir / "run" / "student.ckpt").extra["config_hash"] == hash);
  CHECK(slurp(t.dir / "run" / "final.ckpt").find(hash) != std::string::npos);
  CHECK(slurp(t.dir / "run" / "pseudo.csv").find(hash) != std::string::npos);

  // Written by the evaluate, probe and plot tests above when run in order;
  // regenerate here so this case stands alone.
  const auto out = t.dir / "hash";
  REQUIRE(run({"evaluate", "--config", t.config.string(), "--checkpoint", (t.dir / "run" / "student.ckpt").string(),
               "--out", out.string()})
              .code == 0);
  CHECK(json::parse(slurp(out / "report.json"))["config_hash"] == hash);
  CHECK(slurp(out / "report.csv").find(hash) != std::string::npos);
  REQUIRE(run({"probe", "--config", t.config.string(), "--checkpoint", (t.dir / "run" / "teacher.ckpt").string(),
               "--out", out.string()})
              .code == 0);
  CHECK(json::parse(slurp(out / "probe.json"))["config_hash"] == hash);
  REQUIRE(run({"plot", "--input", (out / "probe.csv").string(), "--out", out.string()}).code == 0);
  CHECK(slurp(out / "probe.png").find(hash) != std::string::npos);
}

TEST_CASE("a numerical abort exits with code 2") {
  fixture::TempDir dir("nan");
  auto doc = tiny_experiment();
  doc["train"]["base_lr"] = 1e12;
  doc["train"]["total_steps"] = 60;
  const auto r = run({"train", "--config", write_config(dir, doc).string(), "--out", (dir / "o").string()});
  CHECK(r.code == 2);
  CHECK(r.err.find("numerical abort") != std::string::npos);
}
