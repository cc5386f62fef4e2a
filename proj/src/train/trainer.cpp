// SPDX-License-Identifier: Apache-2.0
#include "stssl/train/trainer.hpp"

#include "stssl/common/hash.hpp"
#include "stssl/eval/evaluate.hpp"
#include "stssl/model/checkpoint.hpp"
#include "stssl/train/schedule.hpp"
#include "stssl/train/state_io.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

namespace stssl::train {

ModelSlot::ModelSlot(model::BackboneConfig config, std::uint64_t seed, const TrainConfig& train)
    : net(std::move(config)),
      params(net.init_params(seed)),
      optimizer(params, AdamW::Options{.weight_decay = train.weight_decay}),
      ema(make_ema(params, train.ema_decay)) {}

TrainState init_state(const TrainConfig& config) {
  config.validate();
  TrainState s;
  if (config.trains_teacher()) s.teacher.emplace(config.resolved_teacher(), derive_seed(config.seed, "teacher"), config);
  if (config.trains_student()) s.student.emplace(config.resolved_student(), derive_seed(config.seed, "student"), config);
  return s;
}

const ModelSlot& primary_slot(const TrainState& state) {
  if (state.student) return *state.student;
  if (state.teacher) return *state.teacher;
  throw Error("training state holds no model");
}

nlohmann::json to_json(const StepMetrics& m) {
  nlohmann::json j{{"step", m.step}, {"lr", m.lr}, {"pseudo_quantity", m.pseudo_quantity}};
  auto put = [&](const char* key, const std::optional<double>& v) {
    if (v) j[key] = *v;
  };
  put("teacher_supervised", m.teacher_supervised);
  put("teacher_unsupervised", m.teacher_unsupervised);
  put("teacher_debias", m.teacher_debias);
  put("teacher_total", m.teacher_total);
  put("student_supervised", m.student_supervised);
  put("student_unsupervised", m.student_unsupervised);
  put("student_debias", m.student_debias);
  put("student_distillation", m.student_distillation);
  put("student_total", m.student_total);
  put("pseudo_quality", m.pseudo_quality);
  return j;
}

namespace {

struct Pass {
  model::ModelOutputs out;
  model::ForwardCache cache;
  bool cached = false;
  Mat d_logits, d_special, d_cls;

  void add(Mat& slot, const Mat& g, Real scale) {
    if (slot.size() == 0) {
      slot = scale == 1.0 ? g : Mat(scale * g);
    } else {
      slot += scale * g;
    }
  }
};

Pass forward(const ModelSlot& slot, const Mat& images, const std::vector<dataset::GeoTemporal>& meta, bool keep) {
  Pass p;
  p.cached = keep;
  p.out = slot.net.forward(slot.params, images, &meta, keep ? &p.cache : nullptr);
  return p;
}

void backward(const ModelSlot& slot, const Pass& p, model::ParamSnapshot& grads) {
  model::OutputGrads up;
  if (p.d_logits.size()) up.logits = &p.d_logits;
  if (p.d_special.size()) up.special_embedding = &p.d_special;
  if (p.d_cls.size()) up.cls_embedding = &p.d_cls;
  if (!up.logits && !up.special_embedding && !up.cls_embedding) return;
  if (!p.cached) throw Error("internal: gradient requested for an uncached forward");
  slot.net.backward(slot.params, p.cache, up, grads);
}

void check_finite(const char* component, Real value, std::int64_t step) {
  if (!std::isfinite(value)) {
    std::ostringstream os;
    os << "step " << step << ": value " << value;
    throw NumericalAbort(component, os.str());
  }
}

/// Passes and losses of one self-bootstrapping model (the teacher under
/// st-ssl, or the only model otherwise).
struct SelfTraining {
  Pass labeled_weak, unlabeled_weak, unlabeled_strong, labeled_strong;
  bool has_unlabeled = false, has_unsup = false, has_debias = false;
  ssl::PseudoBatch pseudo;
  Real supervised = 0, unsupervised = 0, debias = 0;
};

SelfTraining self_training(const ModelSlot& slot, const dataset::Batch& batch, const TrainConfig& cfg,
                           const ssl::SslAlgorithm& algo, bool keep_unlabeled_weak) {
  const TaskMode mode = slot.net.config().task_mode;
  const Real lambda_u = cfg.weights.lambda_u;
  SelfTraining r;
  r.labeled_weak = forward(slot, batch.labeled_weak, batch.labeled_meta, true);
  const auto sup = algo.labeled_loss(batch.labeled_targets, r.labeled_weak.out.logits, mode);
  r.supervised = sup.value;
  r.labeled_weak.add(r.labeled_weak.d_logits, sup.grad, 1.0);

  r.has_unlabeled = batch.unlabeled_weak.rows() > 0;
  if (r.has_unlabeled) {
    r.unlabeled_weak = forward(slot, batch.unlabeled_weak, batch.unlabeled_meta, keep_unlabeled_weak);
    r.pseudo = algo.pseudo(r.unlabeled_weak.out.logits, mode, ssl::PseudoSource::self);
    if (lambda_u != 0.0) {
      r.unlabeled_strong = forward(slot, batch.unlabeled_strong, batch.unlabeled_meta, true);
      const auto u = algo.unlabeled_loss(r.pseudo, r.unlabeled_strong.out.logits, mode);
      r.has_unsup = true;
      r.unsupervised = u.value;
      r.unlabeled_strong.add(r.unlabeled_strong.d_logits, u.grad, lambda_u);
    }
  }
  if (algo.has_debias() && lambda_u != 0.0) {
    r.labeled_strong = forward(slot, batch.labeled_strong, batch.labeled_meta, true);
    const auto d = ssl::defixmatch_debias(r.labeled_weak.out.logits, r.labeled_strong.out.logits, algo, mode);
    r.has_debias = true;
    r.debias = d.loss.value;
    r.labeled_strong.add(r.labeled_strong.d_logits, d.loss.grad, lambda_u);
  }
  return r;
}

void record_pseudo(StepMetrics& m, const ssl::PseudoBatch& pseudo, const dataset::Batch& batch) {
  if (pseudo.size() == 0) return;
  const Mat truth = batch.has_hidden_targets ? batch.unlabeled_hidden_targets : Mat::Zero(pseudo.targets.rows(), pseudo.targets.cols());
  const auto stats = eval::pseudo_stats(pseudo, truth);
  m.pseudo_quantity = stats.quantity;
  if (batch.has_hidden_targets) m.pseudo_quality = stats.quality;
}

Mat vstack(const Mat& a, const Mat& b) {
  if (b.rows() == 0) return a;
  Mat out(a.rows() + b.rows(), a.cols());
  out.topRows(a.rows()) = a;
  out.bottomRows(b.rows()) = b;
  return out;
}

const Mat& embedding_of(const Pass& p, bool use_cls) {
  return use_cls || p.out.special_embedding.size() == 0 ? p.out.cls_embedding : p.out.special_embedding;
}

Mat& grad_slot_of(Pass& p, bool use_cls) {
  return use_cls || p.out.special_embedding.size() == 0 ? p.d_cls : p.d_special;
}

}  // namespace

StepMetrics train_step(TrainState& state, const dataset::Batch& batch, const TrainConfig& cfg,
                       const ssl::SslAlgorithm& algo) {
  StepMetrics m;
  m.step = state.step + 1;
  m.lr = lr_at(state.step, cfg.total_steps, cfg.base_lr);
  const auto& w = cfg.weights;
  const bool distill = cfg.computes_distillation();
  const bool distill_grad = distill && w.lambda_d != 0.0;
  const bool teacher_distill_grad = distill_grad && cfg.ablations.no_stop_grad;
  const bool use_cls = cfg.ablations.distill_on_cls_token;

  std::optional<SelfTraining> teacher;
  std::optional<SelfTraining> lone;
  if (state.teacher) {
    teacher = self_training(*state.teacher, batch, cfg, algo, teacher_distill_grad);
    m.teacher_supervised = teacher->supervised;
    if (teacher->has_unsup) m.teacher_unsupervised = teacher->unsupervised;
    if (teacher->has_debias) m.teacher_debias = teacher->debias;
    m.teacher_total = ssl::total_teacher_loss({teacher->supervised, teacher->unsupervised, teacher->debias}, w);
    record_pseudo(m, teacher->pseudo, batch);
  }

  Pass s_lw, s_uw, s_us, s_ls;
  if (state.student && state.teacher) {
    const ModelSlot& st = *state.student;
    const TaskMode mode = st.net.config().task_mode;
    ssl::StudentParts parts;
    s_lw = forward(st, batch.labeled_weak, batch.labeled_meta, true);
    const auto sup = algo.labeled_loss(batch.labeled_targets, s_lw.out.logits, mode);
    parts.supervised = sup.value;
    s_lw.add(s_lw.d_logits, sup.grad, 1.0);
    m.student_supervised = sup.value;
    if (teacher->has_unlabeled && w.lambda_u != 0.0) {
      s_us = forward(st, batch.unlabeled_strong, batch.unlabeled_meta, true);
      ssl::PseudoBatch pseudo = teacher->pseudo;
      pseudo.source = ssl::PseudoSource::teacher;
      const auto u = algo.unlabeled_loss(pseudo, s_us.out.logits, mode);
      parts.unsupervised = u.value;
      s_us.add(s_us.d_logits, u.grad, w.lambda_u);
      m.student_unsupervised = u.value;
    }
    if (algo.has_debias() && w.lambda_u != 0.0) {
      s_ls = forward(st, batch.labeled_strong, batch.labeled_meta, true);
      const auto teacher_pseudo = algo.pseudo(teacher->labeled_weak.out.logits, mode, ssl::PseudoSource::teacher);
      const auto d = ssl::defixmatch_debias(Mat(), s_ls.out.logits, algo, mode, &teacher_pseudo);
      parts.debias = d.loss.value;
      s_ls.add(s_ls.d_logits, d.loss.grad, w.lambda_u);
      m.student_debias = d.loss.value;
    }
    if (distill) {
      if (teacher->has_unlabeled) s_uw = forward(st, batch.unlabeled_weak, batch.unlabeled_meta, distill_grad);
      const Mat t_emb = vstack(embedding_of(teacher->labeled_weak, use_cls),
                               teacher->has_unlabeled ? embedding_of(teacher->unlabeled_weak, use_cls) : Mat());
      const Mat s_emb = vstack(embedding_of(s_lw, use_cls), teacher->has_unlabeled ? embedding_of(s_uw, use_cls) : Mat());
      const auto dt = ssl::distillation_loss(t_emb, s_emb, cfg.ablations.distill_criterion);
      parts.distillation = dt.value;
      m.student_distillation = dt.value;
      const Eigen::Index nl = batch.labeled_weak.rows();
      const Eigen::Index nu = s_emb.rows() - nl;
      if (distill_grad) {
        s_lw.add(grad_slot_of(s_lw, use_cls), dt.grad_student.topRows(nl), w.lambda_d);
        if (nu > 0) s_uw.add(grad_slot_of(s_uw, use_cls), dt.grad_student.bottomRows(nu), w.lambda_d);
      }
      if (teacher_distill_grad) {
        Pass& tl = teacher->labeled_weak;
        tl.add(grad_slot_of(tl, use_cls), dt.grad_teacher.topRows(nl), w.lambda_d);
        if (nu > 0) {
          Pass& tu = teacher->unlabeled_weak;
          tu.add(grad_slot_of(tu, use_cls), dt.grad_teacher.bottomRows(nu), w.lambda_d);
        }
      }
    }
    m.student_total = ssl::total_student_loss(parts, w);
  } else if (state.student) {
    lone = self_training(*state.student, batch, cfg, algo, false);
    m.student_supervised = lone->supervised;
    if (lone->has_unsup) m.student_unsupervised = lone->unsupervised;
    if (lone->has_debias) m.student_debias = lone->debias;
    m.student_total = ssl::total_student_loss({lone->supervised, lone->unsupervised, 0.0, lone->debias}, w);
    record_pseudo(m, lone->pseudo, batch);
  }

  const std::pair<const char*, const std::optional<double>*> checks[] = {
      {"teacher_supervised", &m.teacher_supervised},     {"teacher_unsupervised", &m.teacher_unsupervised},
      {"teacher_debias", &m.teacher_debias},             {"student_supervised", &m.student_supervised},
      {"student_unsupervised", &m.student_unsupervised}, {"student_debias", &m.student_debias},
      {"student_distillation", &m.student_distillation}};
  for (const auto& [name, value] : checks) {
    if (*value) check_finite(name, **value, m.step);
  }

  std::optional<model::ParamSnapshot> teacher_grads, student_grads;
  if (teacher) {
    const ModelSlot& t = *state.teacher;
    teacher_grads = t.params.zeros_like();
    for (Pass* p : {&teacher->labeled_weak, &teacher->unlabeled_weak, &teacher->unlabeled_strong, &teacher->labeled_strong}) {
      backward(t, *p, *teacher_grads);
    }
  }
  if (state.student) {
    const ModelSlot& s = *state.student;
    student_grads = s.params.zeros_like();
    if (lone) {
      for (Pass* p : {&lone->labeled_weak, &lone->unlabeled_weak, &lone->unlabeled_strong, &lone->labeled_strong}) {
        backward(s, *p, *student_grads);
      }
    } else {
      for (Pass* p : {&s_lw, &s_uw, &s_us, &s_ls}) backward(s, *p, *student_grads);
    }
  }

  if (teacher_grads) {
    state.teacher->optimizer.step(state.teacher->params, *teacher_grads, m.lr);
    ema_update(state.teacher->ema, state.teacher->params);
  }
  if (student_grads) {
    state.student->optimizer.step(state.student->params, *student_grads, m.lr);
    ema_update(state.student->ema, state.student->params);
  }
  ++state.step;
  return m;
}

namespace {

nlohmann::json interval_record(const std::vector<StepMetrics>& window) {
  const StepMetrics& last = window.back();
  nlohmann::json j{{"step", last.step}, {"lr", last.lr}};
  auto mean_of = [&](const char* key, auto getter) {
    double sum = 0.0;
    int n = 0;
    for (const auto& s : window) {
      const std::optional<double> v = getter(s);
      if (v) {
        sum += *v;
        ++n;
      }
    }
    if (n > 0) j[key] = sum / n;
  };
#define STSSL_MEAN(field) mean_of(#field, [](const StepMetrics& s) { return std::optional<double>(s.field); })
  STSSL_MEAN(teacher_supervised);
  STSSL_MEAN(teacher_unsupervised);
  STSSL_MEAN(teacher_debias);
  STSSL_MEAN(teacher_total);
  STSSL_MEAN(student_supervised);
  STSSL_MEAN(student_unsupervised);
  STSSL_MEAN(student_debias);
  STSSL_MEAN(student_distillation);
  STSSL_MEAN(student_total);
  STSSL_MEAN(pseudo_quantity);
  STSSL_MEAN(pseudo_quality);
#undef STSSL_MEAN
  return j;
}

void export_models(const std::filesystem::path& dir, const TrainState& state, const nlohmann::json& extra) {
  if (state.teacher) {
    model::save_model_checkpoint(dir / "teacher.ckpt",
                                 {state.teacher->net.config(), state.teacher->ema.shadow, state.step, "teacher", extra});
  }
  if (state.student) {
    model::save_model_checkpoint(dir / "student.ckpt",
                                 {state.student->net.config(), state.student->ema.shadow, state.step, "student", extra});
  }
}

std::vector<std::string> kept_log_lines(const std::filesystem::path& path, std::int64_t up_to_step) {
  std::vector<std::string> lines;
  std::ifstream in(path);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (nlohmann::json::parse(line).at("step").get<std::int64_t>() <= up_to_step) lines.push_back(line);
  }
  return lines;
}

}  // namespace

RunResult run_training(const TrainConfig& cfg, const RunData& data, const RunOptions& options) {
  cfg.validate();
  if (!data.train) throw Error("run_training: no training data");
  const auto algo = ssl::make_algorithm(cfg.algorithm, cfg.tau);
  const auto policy =
      cfg.augmentation == "fixmatch" ? dataset::AugmentationPolicy::fixmatch_default() : dataset::AugmentationPolicy::identity();

  RunResult result;
  result.state = options.resume_from ? load_train_state(*options.resume_from, cfg) : init_state(cfg);
  TrainState& state = result.state;

  const bool want_unlabeled = cfg.weights.lambda_u != 0.0 || cfg.computes_distillation();
  const int n_u = want_unlabeled && !data.unlabeled.empty() ? cfg.n_unlabeled : 0;
  if (want_unlabeled && cfg.n_unlabeled > 0 && data.unlabeled.empty()) {
    throw Error("run_training: configuration needs unlabeled data but the unlabeled pool is empty");
  }
  const dataset::BatchSampler sampler(data.labeled, data.unlabeled, cfg.n_labeled, n_u, cfg.seed);
  const dataset::BatchViews views{algo->has_debias() && cfg.weights.lambda_u != 0.0, n_u > 0};

  std::optional<std::filesystem::path> out = options.output_dir;
  std::ofstream log;
  const nlohmann::json& extra = options.extra;
  if (out) {
    std::filesystem::create_directories(*out / "checkpoints");
    const auto log_path = *out / "metrics.jsonl";
    std::vector<std::string> keep;
    if (options.resume_from && std::filesystem::exists(log_path)) keep = kept_log_lines(log_path, state.step);
    log.open(log_path, std::ios::trunc);
    if (!log) throw Error("cannot write " + log_path.string());
    for (const auto& line : keep) log << line << '\n';
  }

  const bool can_eval = data.eval && !data.eval_indices.empty();
  auto evaluate_primary = [&]() {
    const ModelSlot& p = primary_slot(state);
    return eval::evaluate(p.net, p.ema.shadow, *data.eval, data.eval_indices, cfg.eval_batch_size);
  };

  std::vector<StepMetrics> window;
  while (state.step < cfg.total_steps) {
    const auto batch = dataset::assemble_batch(*data.train, sampler.at(state.step), policy, views);
    StepMetrics m = train_step(state, batch, cfg, *algo);
    window.push_back(m);
    if (options.keep_history) result.history.push_back(m);

    const bool log_now = state.step % cfg.log_interval == 0;
    const bool eval_now = can_eval && cfg.eval_interval > 0 && state.step % cfg.eval_interval == 0;
    std::optional<eval::MetricsReport> report;
    if (eval_now) {
      report = evaluate_primary();
      if (!result.best_primary || report->primary() > result.best_primary->primary()) {
        result.best_primary = report;
        if (out) save_train_state(*out / "best.ckpt", state, cfg, extra);
      }
    }
    if (log_now) {
      nlohmann::json rec = interval_record(window);
      if (report) rec["eval"] = eval::to_json(*report);
      for (const auto& [key, value] : extra.items()) rec[key] = value;
      result.log_records.push_back(rec);
      if (log) log << rec.dump() << '\n' << std::flush;
      window.clear();
    }
    if (out && cfg.checkpoint_interval > 0 && state.step % cfg.checkpoint_interval == 0) {
      save_train_state(*out / "checkpoints" / ("step_" + std::to_string(state.step) + ".ckpt"), state, cfg, extra);
    }
  }

  if (can_eval) {
    result.final_primary = evaluate_primary();
    if (!result.best_primary || result.final_primary->primary() > result.best_primary->primary()) {
      result.best_primary = result.final_primary;
      if (out) save_train_state(*out / "best.ckpt", state, cfg, extra);
    }
    if (state.teacher && state.student) {
      result.final_teacher =
          eval::evaluate(state.teacher->net, state.teacher->ema.shadow, *data.eval, data.eval_indices, cfg.eval_batch_size);
    }
  }
  if (out) {
    save_train_state(*out / "final.ckpt", state, cfg, extra);
    export_models(*out, state, extra);
  }
  return result;
}

}  // namespace stssl::train
