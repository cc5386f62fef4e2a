// SPDX-License-Identifier: Apache-2.0
// Acceptance suite. Prints one PASS/FAIL line per criterion and exits
// nonzero if any criterion fails. `acceptance --only 3 --only 7` runs a subset.

#include "stssl/cli/experiment_config.hpp"
#include "stssl/common/allocator.hpp"
#include "stssl/eval/ood.hpp"
#include "stssl/ssl/algorithm.hpp"
#include "stssl/ssl/distill.hpp"
#include "stssl/train/ema.hpp"
#include "stssl/train/trainer.hpp"
#include "support/fixtures.hpp"
#include "support/oracles.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <map>
#include <set>
#include <sstream>

using namespace stssl;
using model::Backbone;
using model::Fusion;
using model::Variant;

namespace {

struct Verdict {
  bool pass = false;
  std::string detail;
};

std::string fmt(double v, int digits = 4) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

std::string sci(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.2e", v);
  return buf;
}

double cpu_seconds() { return static_cast<double>(std::clock()) / CLOCKS_PER_SEC; }

// ---------------------------------------------------------------------------
// 1. Gradient correctness through the tiny backbone.

/// Loss as a function of the outputs of one forward pass, with its output
/// gradients.
struct OutputLoss {
  std::function<Real(const model::ModelOutputs&)> value;
  std::function<model::OutputGrads(const model::ModelOutputs&, Mat& d_logits, Mat& d_special)> grads;
};

double backbone_loss_check(const model::BackboneConfig& c, std::uint64_t seed, const OutputLoss& loss) {
  const Backbone net(c);
  Rng rng(seed);
  const int n = 4;
  const Mat images = fixture::random_images(rng, n, c);
  const auto metas = fixture::random_metas(rng, n);
  const auto params = fixture::jittered_params(net, seed);
  model::ForwardCache cache;
  const auto out = net.forward(params, images, &metas, &cache);
  Mat d_logits, d_special;
  const auto up = loss.grads(out, d_logits, d_special);
  auto grads = params.zeros_like();
  net.backward(params, cache, up, grads);
  const auto check = fixture::finite_difference(
      params, grads, [&](const model::ParamSnapshot& p) { return loss.value(net.forward(p, images, &metas)); }, seed,
      4);
  return check.worst_relative;
}

OutputLoss logits_loss(std::function<ssl::LossTerm(const Mat&)> f) {
  OutputLoss l;
  l.value = [f](const model::ModelOutputs& o) { return f(o.logits).value; };
  l.grads = [f](const model::ModelOutputs& o, Mat& d_logits, Mat&) {
    d_logits = f(o.logits).grad;
    model::OutputGrads up;
    up.logits = &d_logits;
    return up;
  };
  return l;
}

Verdict criterion_gradients() {
  const double start = cpu_seconds();
  std::map<std::string, double> worst;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    Rng rng(100 + seed);
    for (auto mode : {TaskMode::single_label, TaskMode::multi_label}) {
      const std::string tag = mode == TaskMode::single_label ? "CE" : "BCE";
      const auto student = fixture::tiny(Variant::student, mode);
      const auto teacher = fixture::tiny(Variant::teacher, mode);
      const Mat targets = fixture::random_targets(rng, 4, student.num_classes, mode);

      auto& sup = worst["supervised " + tag];
      sup = std::max(sup, backbone_loss_check(teacher, seed, logits_loss([&](const Mat& z) {
                                                return ssl::supervised_loss(targets, z, mode);
                                              })));

      // Pseudo-labels come from a frozen weak view; α mixes passing and
      // masked slots.
      ssl::PseudoBatch pseudo;
      pseudo.targets = fixture::random_targets(rng, 4, student.num_classes, mode);
      pseudo.weights = mode == TaskMode::single_label ? Mat(4, 1) : Mat(4, student.num_classes);
      for (Eigen::Index i = 0; i < pseudo.weights.size(); ++i) pseudo.weights.data()[i] = rng.bernoulli(0.6) ? 1.0 : 0.0;
      pseudo.weights(0, 0) = 1.0;
      auto& uns = worst["unsupervised " + tag];
      uns = std::max(uns, backbone_loss_check(student, seed, logits_loss([&](const Mat& z) {
                                                return ssl::masked_loss(pseudo, z, mode);
                                              })));

      const Mat weak = fixture::random_matrix(rng, 4, student.num_classes, -4.0, 4.0);
      const ssl::DeFixMatch algo(0.6);
      auto& deb = worst["debias " + tag];
      deb = std::max(deb, backbone_loss_check(student, seed, logits_loss([&](const Mat& z) {
                                                return ssl::defixmatch_debias(weak, z, algo, mode).loss;
                                              })));
    }
    for (auto criterion : {ssl::DistillCriterion::mse, ssl::DistillCriterion::mae, ssl::DistillCriterion::cosine}) {
      const auto student = fixture::tiny(Variant::student);
      const Mat target = fixture::random_matrix(rng, 4, student.embed_dim);
      OutputLoss l;
      l.value = [&](const model::ModelOutputs& o) {
        return ssl::distillation_loss(target, o.special_embedding, criterion).value;
      };
      l.grads = [&](const model::ModelOutputs& o, Mat&, Mat& d_special) {
        d_special = ssl::distillation_loss(target, o.special_embedding, criterion).grad_student;
        model::OutputGrads up;
        up.special_embedding = &d_special;
        return up;
      };
      auto& d = worst["distill " + ssl::to_string(criterion)];
      d = std::max(d, backbone_loss_check(student, seed, l));
    }
  }
  const double elapsed = cpu_seconds() - start;
  bool pass = elapsed < 120.0;
  std::ostringstream os;
  for (const auto& [name, rel] : worst) {
    pass &= rel < 1e-3;
    os << name << " " << sci(rel) << ", ";
  }
  os << "5 seeds, " << fmt(elapsed, 1) << "s CPU";
  return {pass, os.str()};
}

// ---------------------------------------------------------------------------
// 2. Stop-gradient exactness.

struct TinyWorld {
  dataset::LoadedDataset train;
  train::RunData data;

  TinyWorld() {
    dataset::SyntheticWorldConfig w;
    w.num_classes = 4;
    w.image_size = 8;
    w.samples_total = 120;
    w.test_samples = 10;
    const auto gen = dataset::generate_synthetic_samples(w);
    train = dataset::LoadedDataset(gen.info, gen.train);
    data.train = &train;
    for (std::size_t i = 0; i < train.size(); ++i) (i < 16 ? data.labeled : data.unlabeled).push_back(i);
  }
};

train::TrainConfig tiny_train(train::TrainMode mode = train::TrainMode::st_ssl) {
  train::TrainConfig c;
  c.mode = mode;
  c.teacher = fixture::tiny(Variant::teacher);
  c.student = fixture::tiny(Variant::student);
  c.n_labeled = 4;
  c.n_unlabeled = 8;
  c.total_steps = 20;
  c.base_lr = 1e-3;
  c.log_interval = 5;
  c.tau = 0.6;
  return c;
}

/// Tensors whose value differs between two snapshots.
int differing_tensors(const model::ParamSnapshot& a, const model::ParamSnapshot& b) {
  int n = 0;
  for (std::size_t i = 0; i < a.size(); ++i) n += !(a[i] == b[i]);
  return n;
}

Verdict criterion_stop_gradient() {
  const TinyWorld w;
  const auto algo = ssl::make_algorithm("fixmatch", 0.6);
  const dataset::BatchSampler sampler(w.data.labeled, w.data.unlabeled, 4, 8, 0);
  const auto batch = dataset::assemble_batch(w.train, sampler.at(0), dataset::AugmentationPolicy::fixmatch_default(),
                                             {false, true});
  // One step from the same state with and without the distillation weight:
  // any teacher difference is the distillation gradient.
  auto teacher_after = [&](double lambda_d, bool stop_grad) {
    auto cfg = tiny_train();
    cfg.weights.lambda_d = lambda_d;
    cfg.ablations.no_stop_grad = !stop_grad;
    auto state = train::init_state(cfg);
    train::train_step(state, batch, cfg, *algo);
    return state.teacher->params;
  };
  const int on = differing_tensors(teacher_after(1.0, true), teacher_after(0.0, true));
  const int off = differing_tensors(teacher_after(1.0, false), teacher_after(0.0, false));

  auto cfg = tiny_train();
  auto zero = cfg;
  zero.weights.lambda_d = 0.0;
  const bool trajectory = train::run_training(cfg, w.data).state.teacher->params ==
                          train::run_training(zero, w.data).state.teacher->params;
  return {on == 0 && off >= 1 && trajectory,
          "stop-grad on: " + std::to_string(on) + " teacher tensors changed by distillation; off: " +
              std::to_string(off) + "; 20-step teacher trajectory " + (trajectory ? "identical" : "DIFFERS")};
}

// ---------------------------------------------------------------------------
// 3. Student metadata invariance.

Verdict criterion_student_invariance() {
  const auto c = fixture::tiny(Variant::student);
  const Backbone net(c);
  const auto params = fixture::jittered_params(net, 3);
  Rng rng(33);
  int compared = 0, differing = 0;
  for (int img = 0; img < 100; ++img) {
    const Mat image = fixture::random_images(rng, 1, c);
    const auto base = net.forward(params, image, static_cast<const model::MetaInputs*>(nullptr));
    for (int k = 0; k < 10; ++k) {
      const std::vector<dataset::GeoTemporal> meta{fixture::random_meta(rng, k % 4 != 3)};
      const auto out = net.forward(params, image, &meta);
      ++compared;
      differing += !(out.logits == base.logits && out.cls_embedding == base.cls_embedding &&
                     out.special_embedding == base.special_embedding);
    }
  }
  return {differing == 0, std::to_string(compared) + " (image, metadata) pairs, " + std::to_string(differing) +
                              " differ from the metadata-free forward"};
}

// ---------------------------------------------------------------------------
// 4. Loss and mAP oracle equivalence.

Verdict criterion_oracles() {
  Rng rng(44);
  double worst_loss = 0.0, worst_map = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const int n = 1 + static_cast<int>(rng.below(12));
    const int k = 2 + static_cast<int>(rng.below(8));
    for (auto mode : {TaskMode::single_label, TaskMode::multi_label}) {
      const Mat z = fixture::random_matrix(rng, n, k, -6.0, 6.0);
      const Mat t = fixture::random_targets(rng, n, k, mode);
      auto per = [&](Eigen::Index i, const Mat& targets) {
        return mode == TaskMode::single_label ? oracle::cross_entropy(oracle::row(targets, i), oracle::row(z, i))
                                              : oracle::binary_cross_entropy(oracle::row(targets, i), oracle::row(z, i));
      };
      double sup = 0.0;
      for (int i = 0; i < n; ++i) sup += per(i, t);
      worst_loss = std::max(worst_loss, std::abs(ssl::supervised_loss(t, z, mode).value - sup / n));

      ssl::PseudoBatch pb;
      pb.targets = fixture::random_targets(rng, n, k, mode);
      pb.weights = mode == TaskMode::single_label ? Mat(n, 1) : Mat(n, k);
      for (Eigen::Index i = 0; i < pb.weights.size(); ++i) pb.weights.data()[i] = rng.bernoulli(0.5) ? 1.0 : 0.0;
      double masked = 0.0;
      for (int i = 0; i < n; ++i) {
        if (mode == TaskMode::single_label) {
          masked += pb.weights(i, 0) * per(i, pb.targets);
        } else {
          for (int c = 0; c < k; ++c) {
            masked += pb.weights(i, c) * oracle::binary_cross_entropy({pb.targets(i, c)}, {z(i, c)}) / k;
          }
        }
      }
      worst_loss = std::max(worst_loss, std::abs(ssl::masked_loss(pb, z, mode).value - masked / n));
    }
    const int d = 1 + static_cast<int>(rng.below(8));
    const Mat a = fixture::random_matrix(rng, n, d), b = fixture::random_matrix(rng, n, d);
    double mse = 0.0, mae = 0.0, cos = 0.0;
    for (int i = 0; i < n; ++i) {
      double dot = 0.0, na = 0.0, nb = 0.0;
      for (int j = 0; j < d; ++j) {
        mse += (a(i, j) - b(i, j)) * (a(i, j) - b(i, j));
        mae += std::abs(a(i, j) - b(i, j));
        dot += a(i, j) * b(i, j);
        na += a(i, j) * a(i, j);
        nb += b(i, j) * b(i, j);
      }
      cos += 1.0 - dot / std::sqrt(na * nb);
    }
    worst_loss = std::max(worst_loss, std::abs(ssl::distillation_loss(a, b, ssl::DistillCriterion::mse).value -
                                               mse / (n * d)));
    worst_loss = std::max(worst_loss, std::abs(ssl::distillation_loss(a, b, ssl::DistillCriterion::mae).value -
                                               mae / (n * d)));
    worst_loss = std::max(worst_loss, std::abs(ssl::distillation_loss(a, b, ssl::DistillCriterion::cosine).value -
                                               cos / n));

    const int rows = 2 + static_cast<int>(rng.below(199));
    const int cols = 1 + static_cast<int>(rng.below(10));
    Mat scores(rows, cols), targets = Mat::Zero(rows, cols);
    for (Eigen::Index i = 0; i < scores.size(); ++i) {
      scores.data()[i] = std::round(rng.uniform() * 20.0) / 20.0;  // coarse grid forces ties
      targets.data()[i] = rng.bernoulli(0.3) ? 1.0 : 0.0;
    }
    targets(0, 0) = 1.0;
    worst_map = std::max(worst_map, std::abs(eval::mean_average_precision(scores, targets).map -
                                             oracle::mean_average_precision(scores, targets)));
  }
  return {worst_loss < 1e-6 && worst_map < 1e-6,
          "100 batches: worst loss deviation " + sci(worst_loss) + "; 100 mAP instances: worst deviation " +
              sci(worst_map)};
}

// ---------------------------------------------------------------------------
// 5. Masking.

Verdict criterion_masking() {
  Rng rng(55);
  bool zero_rows = true;
  for (auto mode : {TaskMode::single_label, TaskMode::multi_label}) {
    const Mat weak = fixture::random_matrix(rng, 16, 5, -5.0, 5.0);
    const Mat strong = fixture::random_matrix(rng, 16, 5, -5.0, 5.0);
    const auto pb = ssl::fixmatch_pseudo(weak, 0.8, mode);
    const auto term = ssl::masked_loss(pb, strong, mode);
    for (Eigen::Index i = 0; i < pb.weights.rows(); ++i) {
      for (Eigen::Index c = 0; c < pb.weights.cols(); ++c) {
        if (pb.weights(i, c) != 0.0) continue;
        if (mode == TaskMode::single_label) {
          zero_rows &= (term.grad.row(i).array() == 0.0).all();
        } else {
          zero_rows &= term.grad(i, c) == 0.0;
        }
      }
    }
  }
  std::string documented;
  try {
    ssl::fixmatch_pseudo(Mat::Zero(1, 2), 1.0 + 1e-9, TaskMode::single_label);
    documented = "tau = 1 + eps accepted (expected an error)";
  } catch (const Error& e) {
    documented = std::string("tau = 1 + eps rejected (\"") + e.what() + "\")";
  }
  // τ = 1 on finite logits: no softmax output reaches exactly 1 here.
  const Mat weak = fixture::random_matrix(rng, 8, 4, -3.0, 3.0);
  const Mat strong = fixture::random_matrix(rng, 8, 4, -3.0, 3.0);
  const ssl::FixMatch fm(1.0);
  const auto un = ssl::unsupervised_loss_self(weak, strong, fm, TaskMode::single_label);
  const bool all_masked = (un.pseudo.weights.array() == 0.0).all();
  const bool exact_zero = un.loss.value == 0.0 && (un.loss.grad.array() == 0.0).all();
  const bool rejected = documented.rfind("tau = 1 + eps rejected", 0) == 0;
  return {zero_rows && all_masked && exact_zero && rejected,
          std::string("alpha=0 slots ") + (zero_rows ? "have exactly zero gradient" : "LEAK gradient") +
              "; all-masked batch loss " + (exact_zero ? "exactly 0" : "NONZERO") + "; " + documented};
}

// ---------------------------------------------------------------------------
// 6. EMA closed form.

Verdict criterion_ema() {
  Rng rng(66);
  model::ParamSnapshot s0, live;
  for (int t = 0; t < 4; ++t) {
    s0.add("t" + std::to_string(t) + ".weight", fixture::random_matrix(rng, 5, 3, -2.0, 2.0));
    live.add("t" + std::to_string(t) + ".weight", fixture::random_matrix(rng, 5, 3, -2.0, 2.0));
  }
  double worst = 0.0;
  for (double decay : {0.9, 0.99, 0.999}) {
    auto ema = train::make_ema(s0, decay);
    for (int k = 0; k < 100; ++k) train::ema_update(ema, live);
    for (std::size_t t = 0; t < s0.size(); ++t) {
      const Mat expect = live[t] + (s0[t] - live[t]) * std::pow(decay, 100.0);
      worst = std::max(worst, (ema.shadow[t] - expect).cwiseAbs().maxCoeff());
    }
  }
  return {worst < 1e-6, "k = 100, decays {0.9, 0.99, 0.999}: worst deviation " + sci(worst)};
}

// ---------------------------------------------------------------------------
// 7-10. Desk-scale synthetic runs, shared between criteria.

struct DeskRun {
  double accuracy = 0.0;
  double teacher_accuracy = 0.0;
  double tail_quality = 0.0;
  double tail_quantity = 0.0;
  double cpu = 0.0;
  std::optional<eval::OodReport> ood;
};

class DeskRuns {
 public:
  const DeskRun& get(const std::string& preset, std::uint64_t seed, bool with_ood = false) {
    const auto key = preset + "/" + std::to_string(seed);
    auto it = runs_.find(key);
    if (it != runs_.end()) return it->second;
    const double start = cpu_seconds();
    const auto c = cli::resolve_experiment(preset, std::nullopt, seed);
    const auto data = cli::load_experiment_data(c);
    train::RunData run;
    run.train = &data.train;
    run.labeled = data.train.indices_of(data.split.labeled);
    run.unlabeled = data.train.indices_of(data.split.unlabeled);
    run.eval = &*data.test;
    run.eval_indices = eval::all_indices(*data.test);
    const auto result = train::run_training(c.train, run);

    DeskRun r;
    r.accuracy = result.final_primary->primary();
    if (result.final_teacher) r.teacher_accuracy = result.final_teacher->primary();
    const std::size_t from = result.history.size() - result.history.size() / 4;
    double q = 0.0;
    int nq = 0;
    for (std::size_t i = from; i < result.history.size(); ++i) {
      r.tail_quantity += result.history[i].pseudo_quantity;
      if (result.history[i].pseudo_quality) {
        q += *result.history[i].pseudo_quality;
        ++nq;
      }
    }
    r.tail_quantity /= static_cast<double>(result.history.size() - from);
    r.tail_quality = nq ? q / nq : 0.0;
    if (with_ood && result.state.teacher && result.state.student) {
      const auto& t = *result.state.teacher;
      const auto& s = *result.state.student;
      r.ood = eval::ood_metadata_eval(t.net, t.ema.shadow, s.net, s.ema.shadow, *data.test, run.eval_indices,
                                      c.eval.ood_overrides, c.eval.batch_size);
      // The full student report, not only its primary metric, must not move.
      const auto base = eval::to_json(eval::evaluate(s.net, s.ema.shadow, *data.test, run.eval_indices)).dump();
      for (const auto& o : c.eval.ood_overrides) {
        const auto moved = eval::to_json(eval::evaluate(s.net, s.ema.shadow, *data.test, run.eval_indices, 64, &o)).dump();
        student_reports_identical_ &= moved == base;
      }
    }
    r.cpu = cpu_seconds() - start;
    std::cerr << "  [" << key << "] accuracy " << fmt(r.accuracy) << "  teacher " << fmt(r.teacher_accuracy)
              << "  tail quality " << fmt(r.tail_quality) << "  tail quantity " << fmt(r.tail_quantity) << "  ("
              << fmt(r.cpu, 0) << "s CPU)\n";
    return runs_.emplace(key, r).first->second;
  }

  double mean(const std::string& preset, double DeskRun::*field) {
    double s = 0.0;
    for (std::uint64_t seed : seeds) s += get(preset, seed, preset == kStssl).*field;
    return s / static_cast<double>(seeds.size());
  }

  bool student_reports_identical() const { return student_reports_identical_; }

  static constexpr const char* kStssl = "fixmatch-stssl-synthetic";
  static constexpr const char* kFixmatch = "fixmatch-synthetic";
  static constexpr const char* kSupervised = "supervised-synthetic";
  static constexpr const char* kLate = "ablation-(d)-late-fusion";
  const std::vector<std::uint64_t> seeds{0, 1, 2};

 private:
  std::map<std::string, DeskRun> runs_;
  bool student_reports_identical_ = true;
};

DeskRuns& desk() {
  static DeskRuns runs;
  return runs;
}

Verdict criterion_table1() {
  auto& d = desk();
  const double start = cpu_seconds();
  const double st = d.mean(DeskRuns::kStssl, &DeskRun::accuracy);
  const double fm = d.mean(DeskRuns::kFixmatch, &DeskRun::accuracy);
  const double sup = d.mean(DeskRuns::kSupervised, &DeskRun::accuracy);
  const double elapsed = cpu_seconds() - start;
  return {st >= fm + 0.02 && fm >= sup + 0.02 && elapsed <= 1800.0,
          "3-seed student accuracy: FixMatch+ST-SSL " + fmt(st) + ", FixMatch " + fmt(fm) + ", supervised " +
              fmt(sup) + " (margins " + fmt(100 * (st - fm), 2) + " and " + fmt(100 * (fm - sup), 2) + " points; " +
              fmt(elapsed, 0) + "s CPU)"};
}

Verdict criterion_fig7() {
  auto& d = desk();
  const double q_st = d.mean(DeskRuns::kStssl, &DeskRun::tail_quality);
  const double q_fm = d.mean(DeskRuns::kFixmatch, &DeskRun::tail_quality);
  const double n_st = d.mean(DeskRuns::kStssl, &DeskRun::tail_quantity);
  const double n_fm = d.mean(DeskRuns::kFixmatch, &DeskRun::tail_quantity);
  return {q_st >= q_fm && std::abs(n_st - n_fm) < 0.10,
          "last 25% of steps, 3-seed mean: quality teacher " + fmt(q_st) + " vs self-bootstrap " + fmt(q_fm) +
              "; quantity " + fmt(n_st) + " vs " + fmt(n_fm) + " (gap " + fmt(100 * std::abs(n_st - n_fm), 2) +
              " points)"};
}

Verdict criterion_ood() {
  auto& d = desk();
  bool pass = true;
  std::ostringstream os;
  for (std::uint64_t seed : d.seeds) {
    const auto& r = d.get(DeskRuns::kStssl, seed, true);
    const auto& ood = *r.ood;
    bool student_same = true;
    for (double s : ood.student_scores) student_same &= s == ood.student_baseline.primary();
    pass &= ood.teacher_drop() >= 0.05 && student_same;
    os << "seed " << seed << ": teacher " << fmt(ood.teacher_baseline.primary()) << " -> " << fmt(ood.teacher_mean)
       << " ± " << fmt(ood.teacher_std) << " (drop " << fmt(100 * ood.teacher_drop(), 2) << " points), student "
       << (student_same ? "unchanged" : "CHANGED") << "; ";
  }
  pass &= d.student_reports_identical();
  os << "student reports " << (d.student_reports_identical() ? "bitwise identical" : "DIFFER");
  return {pass, os.str()};
}

Verdict criterion_late_fusion() {
  auto& d = desk();
  const double early = d.mean(DeskRuns::kStssl, &DeskRun::tail_quality);
  const double late = d.mean(DeskRuns::kLate, &DeskRun::tail_quality);
  return {late <= early, "3-seed teacher pseudo-label quality: late fusion " + fmt(late) + ", early fusion " + fmt(early)};
}

// ---------------------------------------------------------------------------
// 11. Reduction identities.

Verdict criterion_reductions() {
  const TinyWorld w;
  auto base = tiny_train();
  base.weights.lambda_d = 0.0;
  auto eq5 = base;
  eq5.ablations.no_distill = true;
  const auto a = train::run_training(base, w.data);
  const auto b = train::run_training(eq5, w.data);
  const bool no_distill = a.state.student->params == b.state.student->params &&
                          a.state.student->ema.shadow == b.state.student->ema.shadow;

  auto st = tiny_train();
  st.weights = {0.0, 0.0};
  auto sup = tiny_train(train::TrainMode::self_training);
  sup.weights = {0.0, 0.0};
  const auto c = train::run_training(st, w.data);
  const auto s = train::run_training(sup, w.data);
  const bool supervised = c.state.student->params == s.state.student->params &&
                          c.state.student->ema.shadow == s.state.student->ema.shadow;

  const auto tc = fixture::tiny(Variant::teacher, TaskMode::single_label, Fusion::late_fusion);
  const Backbone teacher(tc), plain(fixture::tiny(Variant::plain));
  const auto pp = fixture::jittered_params(plain, 11);
  auto tp = teacher.init_params(11);
  for (std::size_t i = 0; i < tp.size(); ++i) {
    if (tp.name(i).starts_with("meta_encoder.")) {
      tp[i].setZero();
    } else {
      tp[i] = pp.at(tp.name(i));
    }
  }
  Rng rng(11);
  const Mat images = fixture::random_images(rng, 16, tc);
  const auto metas = fixture::random_metas(rng, 16);
  const auto lo = teacher.forward(tp, images, &metas);
  const auto po = plain.forward(pp, images, static_cast<const model::MetaInputs*>(nullptr));
  const bool late = lo.logits == po.logits;

  auto word = [](bool ok) { return ok ? "bitwise equal" : "DIFFERS"; };
  return {no_distill && supervised && late, std::string("lambda_D = 0 vs no-distillation student: ") + word(no_distill) +
                                                "; lambda_U = lambda_D = 0 vs supervised-only: " + word(supervised) +
                                                "; zeroed late fusion vs plain forward: " + word(late)};
}

}  // namespace

int main(int argc, char** argv) {
  stssl::retain_freed_memory();
  CLI::App app{"Acceptance criteria"};
  std::vector<int> only;
  app.add_option("--only", only, "Run only these criteria (repeatable)")->check(CLI::Range(1, 11));
  CLI11_PARSE(app, argc, argv);

  const std::vector<std::pair<std::string, std::function<Verdict()>>> criteria = {
      {"gradient correctness", criterion_gradients},
      {"stop-gradient exactness", criterion_stop_gradient},
      {"student metadata invariance", criterion_student_invariance},
      {"loss and mAP oracle equivalence", criterion_oracles},
      {"masking", criterion_masking},
      {"EMA closed form", criterion_ema},
      {"directional: ST-SSL > FixMatch > supervised", criterion_table1},
      {"directional: pseudo-label quality and quantity", criterion_fig7},
      {"directional: OOD metadata", criterion_ood},
      {"ablation: late vs early fusion", criterion_late_fusion},
      {"reduction identities", criterion_reductions},
  };
  const std::set<int> selected(only.begin(), only.end());
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i) + 1;
    if (!selected.empty() && !selected.count(id)) continue;
    Verdict v;
    try {
      v = criteria[i].second();
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    failed += !v.pass;
    std::cout << (v.pass ? "PASS" : "FAIL") << " criterion " << id << " (" << criteria[i].first << "): " << v.detail
              << std::endl;
  }
  return failed == 0 ? 0 : 1;
}
