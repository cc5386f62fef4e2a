// SPDX-License-Identifier: Apache-2.0
#include "stssl/cli/presets.hpp"

#include "stssl/common/types.hpp"

#include <map>

namespace stssl::cli {

namespace {

using nlohmann::json;

json vit_small(int image_size, int patch_size, int classes, const char* task) {
  return {{"image_size", image_size}, {"patch_size", patch_size}, {"embed_dim", 384}, {"depth", 12},
          {"num_heads", 6},           {"mlp_ratio", 4.0},         {"num_classes", classes}, {"task_mode", task}};
}

json bigearthnet() {
  return {{"name", "bigearthnet-1pct"},
          {"dataset",
           {{"source", "manifest"},
            {"train_manifest", "data/bigearthnet/train.csv"},
            {"test_manifest", "data/bigearthnet/test.csv"},
            {"synthetic", {{"num_classes", 19}, {"image_size", 128}, {"task_mode", "multi-label"}}},
            {"split", {{"strategy", "stratified"}, {"labeled_fraction", 0.01}}}}},
          {"model",
           {{"teacher", vit_small(128, 16, 19, "multi-label")}, {"student", vit_small(128, 16, 19, "multi-label")}}},
          {"ssl", {{"algorithm", "fixmatch"}, {"lambda_u", 1.0}, {"lambda_d", 1.0}}},
          {"train",
           {{"n_labeled", 64}, {"n_unlabeled", 448}, {"total_steps", 64000}, {"base_lr", 1e-4}, {"ema_decay", 0.999},
            {"log_interval", 500}}}};
}

json eurosat(int labels) {
  json teacher = vit_small(32, 2, 10, "single-label");
  teacher["meta"] = {{"use_time", false}};
  return {{"name", "eurosat-n" + std::to_string(labels)},
          {"dataset",
           {{"source", "manifest"},
            {"train_manifest", "data/eurosat/train.csv"},
            {"test_manifest", "data/eurosat/test.csv"},
            {"synthetic", {{"num_classes", 10}, {"image_size", 32}, {"omit_time", true}}},
            {"split", {{"strategy", "exact-per-class"}, {"labels_per_class", labels / 10}}}}},
          {"model",
           {{"teacher", teacher},
            {"student", vit_small(32, 2, 10, "single-label")}}},
          {"ssl", {{"algorithm", "fixmatch"}, {"lambda_u", 1.0}, {"lambda_d", 0.01}}},
          {"train",
           {{"n_labeled", 8}, {"n_unlabeled", 8}, {"total_steps", 204800}, {"base_lr", 5e-5}, {"ema_decay", 0.999},
            {"log_interval", 1000}}}};
}

json self_training(const char* name, const char* algorithm, double lambda_u) {
  return {{"name", name},
          {"model", {{"student", {{"variant", "plain"}}}}},
          {"ssl", {{"algorithm", algorithm}, {"lambda_u", lambda_u}, {"lambda_d", 0.0}}},
          {"train", {{"mode", "self-training"}}}};
}

json ablation(const char* name, json train_ablations, json extra = json::object()) {
  json p{{"name", name}, {"train", {{"ablations", std::move(train_ablations)}}}};
  p.merge_patch(extra);
  return p;
}

const std::map<std::string, json>& table() {
  static const std::map<std::string, json> presets = [] {
    std::map<std::string, json> m;
    m["synthetic-default"] = {{"name", "synthetic-default"}};
    m["fixmatch-stssl-synthetic"] = {{"name", "fixmatch-stssl-synthetic"}};
    m["defixmatch-stssl-synthetic"] = {{"name", "defixmatch-stssl-synthetic"}, {"ssl", {{"algorithm", "defixmatch"}}}};
    m["supervised-synthetic"] = self_training("supervised-synthetic", "fixmatch", 0.0);
    m["fixmatch-synthetic"] = self_training("fixmatch-synthetic", "fixmatch", 1.0);
    m["defixmatch-synthetic"] = self_training("defixmatch-synthetic", "defixmatch", 1.0);
    m["bigearthnet-1pct"] = bigearthnet();
    for (int n : {10, 20, 40, 80}) m["eurosat-n" + std::to_string(n)] = eurosat(n);
    m["ablation-(b)-no-time"] = ablation("ablation-(b)-no-time", {{"no_time", true}});
    m["ablation-(c)-no-geo"] = ablation("ablation-(c)-no-geo", {{"no_geo", true}});
    m["ablation-(d)-late-fusion"] = ablation("ablation-(d)-late-fusion", {{"late_fusion", true}});
    m["ablation-(e)-single-model"] = ablation("ablation-(e)-single-model", {{"single_model", true}});
    m["ablation-(f)-no-distill"] =
        ablation("ablation-(f)-no-distill", {{"no_distill", true}}, {{"ssl", {{"lambda_d", 0.0}}}});
    m["ablation-(g)-mae"] = ablation("ablation-(g)-mae", {{"distill_criterion", "mae"}});
    m["ablation-(h)-cosine"] = ablation("ablation-(h)-cosine", {{"distill_criterion", "cosine"}});
    m["ablation-(i)-cls-token"] = ablation("ablation-(i)-cls-token", {{"distill_on_cls_token", true}});
    m["ablation-(j)-no-stop-grad"] = ablation("ablation-(j)-no-stop-grad", {{"no_stop_grad", true}});
    m["ablation-(k)-lambda-d-0.1"] = ablation("ablation-(k)-lambda-d-0.1", json::object(), {{"ssl", {{"lambda_d", 0.1}}}});
    m["ablation-(l)-lambda-d-0.5"] = ablation("ablation-(l)-lambda-d-0.5", json::object(), {{"ssl", {{"lambda_d", 0.5}}}});
    m["ablation-(m)-lambda-d-2.0"] = ablation("ablation-(m)-lambda-d-2.0", json::object(), {{"ssl", {{"lambda_d", 2.0}}}});
    return m;
  }();
  return presets;
}

}  // namespace

std::vector<std::string> preset_names() {
  std::vector<std::string> names;
  for (const auto& [name, patch] : table()) names.push_back(name);
  return names;
}

json preset_patch(const std::string& name) {
  const auto& t = table();
  auto it = t.find(name);
  if (it == t.end()) {
    std::string known;
    for (const auto& [n, p] : t) known += (known.empty() ? "" : ", ") + n;
    throw Error("unknown preset '" + name + "' (known: " + known + ")");
  }
  return it->second;
}

}  // namespace stssl::cli
