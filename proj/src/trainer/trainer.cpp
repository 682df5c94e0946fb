#include "aan/trainer/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "aan/corpus/batching.hpp"
#include "aan/errors.hpp"
#include "aan/rng.hpp"

namespace aan::trainer {

using nlohmann::json;

double rho_schedule(double p, double rho_max, double gamma) {
  return rho_max * (2.0 / (1.0 + std::exp(-gamma * p)) - 1.0);
}

double lr_schedule(double p, double base_lr, double alpha, double beta) {
  return base_lr / std::pow(1.0 + alpha * p, beta);
}

std::string to_string(OptimizerKind k) { return k == OptimizerKind::adam ? "adam" : "sgd-momentum"; }

OptimizerKind parse_optimizer(const std::string& s) {
  if (s == "adam") return OptimizerKind::adam;
  if (s == "sgd-momentum" || s == "sgd_momentum" || s == "sgd") return OptimizerKind::sgd_momentum;
  throw ConfigError("optimizer must be adam or sgd-momentum, got \"" + s + "\"");
}

void Adam::step(std::span<ad::Parameter* const> params, double lr) {
  if (m_.empty()) {
    for (auto* p : params) {
      m_.emplace_back(p->value.shape());
      v_.emplace_back(p->value.shape());
    }
  }
  if (m_.size() != params.size()) throw ContractViolation("optimizer used with a different parameter list");
  ++t_;
  const double c1 = 1.0 - std::pow(b1_, double(t_));
  const double c2 = 1.0 - std::pow(b2_, double(t_));
  for (std::size_t k = 0; k < params.size(); ++k) {
    auto* p = params[k];
    if (!p->trainable) continue;
    auto& m = m_[k];
    auto& v = v_[k];
    for (std::size_t i = 0; i < p->value.size(); ++i) {
      const double g = p->grad[i];
      m[i] = b1_ * m[i] + (1 - b1_) * g;
      v[i] = b2_ * v[i] + (1 - b2_) * g * g;
      p->value[i] -= lr * (m[i] / c1) / (std::sqrt(v[i] / c2) + eps_);
    }
  }
}

void SgdMomentum::step(std::span<ad::Parameter* const> params, double lr) {
  if (vel_.empty()) {
    for (auto* p : params) vel_.emplace_back(p->value.shape());
  }
  if (vel_.size() != params.size()) throw ContractViolation("optimizer used with a different parameter list");
  for (std::size_t k = 0; k < params.size(); ++k) {
    auto* p = params[k];
    if (!p->trainable) continue;
    auto& vel = vel_[k];
    for (std::size_t i = 0; i < p->value.size(); ++i) {
      vel[i] = mu_ * vel[i] + p->grad[i];
      p->value[i] -= lr * vel[i];
    }
  }
}

std::unique_ptr<Optimizer> make_optimizer(OptimizerKind kind) {
  if (kind == OptimizerKind::adam) return std::make_unique<Adam>();
  return std::make_unique<SgdMomentum>();
}

void TrainConfig::validate() const {
  model.validate();
  if (epochs == 0) throw ConfigError("epochs must be positive");
  if (batch_size < 2 || batch_size % 2 != 0) throw ConfigError("batch size must be even and at least 2");
  if (!(base_lr > 0) || !std::isfinite(base_lr)) throw ConfigError("learning rate must be positive");
  if (!(lr_alpha >= 0) || !(lr_beta >= 0)) throw ConfigError("learning-rate decay parameters must be >= 0");
  if (!(rho_max >= 0) || !std::isfinite(rho_max)) throw ConfigError("rho_max must be finite and >= 0");
  if (!(rho_gamma > 0)) throw ConfigError("rho ramp sharpness must be positive");
  if (!(validation_fraction >= 0 && validation_fraction < 1)) throw ConfigError("validation fraction must lie in [0, 1)");
}

json to_json(const TrainConfig& c) {
  const auto& m = c.model;
  return json{{"epochs", c.epochs},
              {"batch_size", c.batch_size},
              {"base_lr", c.base_lr},
              {"lr_alpha", c.lr_alpha},
              {"lr_beta", c.lr_beta},
              {"rho_max", c.rho_max},
              {"rho_gamma", c.rho_gamma},
              {"optimizer", to_string(c.optimizer)},
              {"disable_adversary", c.disable_adversary},
              {"disable_relevance", !m.use_relevance},
              {"disable_reconstruction", !m.use_reconstruction},
              {"assignment", model::to_string(c.assignment)},
              {"validation_fraction", c.validation_fraction},
              {"select_best", c.select_best},
              {"seed", c.seed},
              {"embed_dim", m.embed_dim},
              {"window", m.window},
              {"features", m.features},
              {"hidden_size", m.hidden},
              {"classes", m.classes},
              {"dropout", m.dropout},
              {"lambda_tr", m.lambda_tr},
              {"pooling", model::to_string(m.pooling)},
              {"clamp_relevance", m.clamp_relevance},
              {"transform", model::to_string(m.transform)},
              {"source_aspect", m.aspects[0]},
              {"target_aspect", m.aspects[1]}};
}

void update_from_json(TrainConfig& c, const json& j) {
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  static const std::vector<std::string> known = {
      "epochs",       "batch_size",    "base_lr",       "lr_alpha",   "lr_beta",        "rho_max",
      "rho_gamma",    "optimizer",     "disable_adversary", "disable_relevance", "disable_reconstruction",
      "assignment",   "validation_fraction", "select_best", "seed",     "embed_dim",      "window",
      "features",     "hidden_size",   "classes",       "dropout",    "lambda_tr",      "pooling",
      "clamp_relevance", "transform",  "freeze_transform_identity", "source_aspect", "target_aspect"};
  for (const auto& [key, _] : j.items()) {
    if (std::find(known.begin(), known.end(), key) == known.end()) throw ConfigError("unknown config field \"" + key + "\"");
  }
  try {
    auto& m = c.model;
    auto get = [&](const char* key, auto& dst) {
      if (j.contains(key)) dst = j.at(key).get<std::decay_t<decltype(dst)>>();
    };
    get("epochs", c.epochs);
    get("batch_size", c.batch_size);
    get("base_lr", c.base_lr);
    get("lr_alpha", c.lr_alpha);
    get("lr_beta", c.lr_beta);
    get("rho_max", c.rho_max);
    get("rho_gamma", c.rho_gamma);
    if (j.contains("optimizer")) c.optimizer = parse_optimizer(j.at("optimizer").get<std::string>());
    get("disable_adversary", c.disable_adversary);
    if (j.contains("disable_relevance")) m.use_relevance = !j.at("disable_relevance").get<bool>();
    if (j.contains("disable_reconstruction")) m.use_reconstruction = !j.at("disable_reconstruction").get<bool>();
    if (j.contains("assignment")) c.assignment = model::parse_assignment(j.at("assignment").get<std::string>());
    get("validation_fraction", c.validation_fraction);
    get("select_best", c.select_best);
    get("seed", c.seed);
    get("embed_dim", m.embed_dim);
    get("window", m.window);
    get("features", m.features);
    get("hidden_size", m.hidden);
    get("classes", m.classes);
    get("dropout", m.dropout);
    get("lambda_tr", m.lambda_tr);
    if (j.contains("pooling")) m.pooling = model::parse_pooling(j.at("pooling").get<std::string>());
    get("clamp_relevance", m.clamp_relevance);
    if (j.contains("transform")) m.transform = model::parse_transform(j.at("transform").get<std::string>());
    if (j.contains("freeze_transform_identity") && j.at("freeze_transform_identity").get<bool>()) {
      m.transform = model::TransformMode::frozen_identity;
    }
    get("source_aspect", m.aspects[0]);
    get("target_aspect", m.aspects[1]);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
}

namespace {

enum Stream : std::uint64_t { kInit = 1, kSplit = 2, kBatches = 3, kDropout = 4, kDomainDropout = 5 };

bool finite(const model::LossValues& v) {
  return std::isfinite(v.rec) && std::isfinite(v.rel) && std::isfinite(v.omega) && std::isfinite(v.lab) &&
         std::isfinite(v.dom) && std::isfinite(v.all);
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

[[noreturn]] void diverged(const TrainConfig& config, const StepRecord& rec, std::span<const Document* const> batch,
                           const std::string& what) {
  json dump{{"step", rec.step},
            {"epoch", rec.epoch},
            {"rho", rec.rho},
            {"lr", rec.lr},
            {"problem", what},
            {"loss",
             {{"rec", fmt(rec.loss.rec)},
              {"rel", fmt(rec.loss.rel)},
              {"omega", fmt(rec.loss.omega)},
              {"lab", fmt(rec.loss.lab)},
              {"dom", fmt(rec.loss.dom)}}}};
  json ids = json::array();
  for (const auto* d : batch) ids.push_back(d->id);
  dump["batch"] = ids;
  std::string where = "(no diagnostics path set)";
  if (!config.diagnostics_path.empty()) {
    std::ofstream out(config.diagnostics_path, std::ios::binary);
    out << dump.dump(2) << "\n";
    where = config.diagnostics_path.string();
  }
  throw NumericalError(what + " at step " + std::to_string(rec.step) + "; diagnostics: " + where);
}

}  // namespace

TrainResult train(const TrainConfig& config, std::span<const Document> labeled, std::span<const Document> unlabeled,
                  const TrainHooks& hooks) {
  config.validate();
  const auto& src_aspect = config.model.aspects[0];

  std::vector<const Document*> train_src, val;
  for (const auto& d : labeled) {
    if (d.origin != corpus::Origin::source) throw ContractViolation("labeled document \"" + d.id + "\" is not source-origin");
    if (!d.label(src_aspect)) throw ContractViolation("labeled document \"" + d.id + "\" has no \"" + src_aspect + "\" label");
  }
  if (labeled.empty()) throw ContractViolation("training needs labeled source documents");
  {
    std::vector<std::size_t> order(labeled.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    Rng split = Rng::stream(config.seed, kSplit);
    split.shuffle(order.begin(), order.end());
    const auto n_val = static_cast<std::size_t>(std::floor(config.validation_fraction * double(labeled.size())));
    for (std::size_t i = 0; i < order.size(); ++i) (i < n_val ? val : train_src).push_back(&labeled[order[i]]);
  }
  std::vector<const Document*> pool = train_src;
  for (const auto& d : unlabeled) {
    if (d.origin != corpus::Origin::target) throw ContractViolation("unlabeled document \"" + d.id + "\" is not target-origin");
    pool.push_back(&d);
  }
  if (unlabeled.empty()) throw ContractViolation("training needs unlabeled target documents");
  std::vector<corpus::Origin> origins;
  for (const auto* d : pool) origins.push_back(d->origin);

  TrainResult result;
  result.train_documents = pool.size();
  result.validation_documents = val.size();
  auto model = std::make_unique<AAN>(config.model, Rng::stream(config.seed, kInit).bits());
  auto params = model->params().all();
  auto optimizer = make_optimizer(config.optimizer);
  Rng batch_rng = Rng::stream(config.seed, kBatches);
  Rng drop_rng = Rng::stream(config.seed, kDropout);
  Rng dom_rng = Rng::stream(config.seed, kDomainDropout);

  const std::size_t per_epoch = std::max(train_src.size(), unlabeled.size()) / (config.batch_size / 2);
  if (per_epoch == 0) throw BatchSizeError("batch size exceeds the available documents");
  result.total_steps = per_epoch * config.epochs;
  if (hooks.max_steps > 0) result.total_steps = std::min(result.total_steps, hooks.max_steps);

  std::unique_ptr<AAN> best;
  double best_acc = -1;
  std::size_t step = 0;
  for (std::size_t epoch = 1; epoch <= config.epochs && step < result.total_steps; ++epoch) {
    auto batches = corpus::split_batches(origins, config.batch_size, true, batch_rng);
    for (const auto& b : batches) {
      if (step >= result.total_steps) break;
      std::vector<const Document*> docs;
      for (auto i : b) docs.push_back(pool[i]);

      StepRecord rec;
      rec.epoch = epoch;
      rec.step = step + 1;
      const double p = double(step) / double(result.total_steps);
      rec.rho = config.disable_adversary ? 0.0 : rho_schedule(p, config.rho_max, config.rho_gamma);
      rec.lr = lr_schedule(p, config.base_lr, config.lr_alpha, config.lr_beta);

      model::ForwardOptions opt;
      opt.mode = ad::Mode::train;
      opt.rho = rec.rho;
      opt.assignment = config.assignment;
      opt.attach_domain = !config.detach_domain;
      opt.dropout_rng = &drop_rng;
      opt.domain_rng = &dom_rng;

      ad::Tape tape;
      auto fwd = model->forward(tape, docs, opt);
      rec.loss = fwd.values;
      if (!finite(rec.loss)) diverged(config, rec, docs, "non-finite loss");
      for (double v : {rec.loss.rec, rec.loss.rel, rec.loss.omega, rec.loss.lab, rec.loss.dom}) {
        if (v < -1e-12) throw ContractViolation("negative loss component at step " + std::to_string(rec.step));
      }
      for (auto* prm : params) prm->zero_grad();
      tape.backward(fwd.loss.total);
      for (auto* prm : params) {
        for (double g : prm->grad.data()) {
          if (!std::isfinite(g)) diverged(config, rec, docs, "non-finite gradient in " + prm->name);
        }
      }
      optimizer->step(params, rec.lr);
      ++step;
      result.steps.push_back(rec);
      if (hooks.on_step) hooks.on_step(rec, *model);
    }

    EpochRecord er;
    er.epoch = epoch;
    er.step = step;
    if (!val.empty()) er.val_accuracy = model::evaluate(*model, val, 0).accuracy;
    result.epochs.push_back(er);
    if (hooks.on_epoch) hooks.on_epoch(er, *model);
    // Ties go to the later epoch.
    if (config.select_best && !val.empty() && er.val_accuracy >= best_acc) {
      best_acc = er.val_accuracy;
      result.best_epoch = epoch;
      best = std::make_unique<AAN>(*model);
    }
  }
  if (best) {
    result.model = std::move(best);
    result.best_val_accuracy = best_acc;
  } else {
    result.model = std::move(model);
    result.best_epoch = result.epochs.empty() ? 0 : result.epochs.back().epoch;
    result.best_val_accuracy = result.epochs.empty() ? 0 : result.epochs.back().val_accuracy;
  }
  for (auto* prm : result.model->params().all()) prm->zero_grad();
  return result;
}

std::string metrics_csv(const TrainResult& result) {
  std::ostringstream out;
  out << "kind,epoch,step,rho,lr,l_rec,l_rel,omega_tr,l_lab,l_dom,l_all,val_acc\n";
  std::size_t e = 0;
  auto epoch_row = [&](const EpochRecord& r) {
    out << "epoch," << r.epoch << ',' << r.step << ",,,,,,,,," << fmt(r.val_accuracy) << '\n';
  };
  for (const auto& s : result.steps) {
    while (e < result.epochs.size() && result.epochs[e].step < s.step) epoch_row(result.epochs[e++]);
    const auto& l = s.loss;
    out << "step," << s.epoch << ',' << s.step << ',' << fmt(s.rho) << ',' << fmt(s.lr) << ',' << fmt(l.rec) << ','
        << fmt(l.rel) << ',' << fmt(l.omega) << ',' << fmt(l.lab) << ',' << fmt(l.dom) << ',' << fmt(l.all) << ",\n";
  }
  while (e < result.epochs.size()) epoch_row(result.epochs[e++]);
  return out.str();
}

void write_metrics_csv(const std::filesystem::path& path, const TrainResult& result) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write metrics " + path.string());
  out << metrics_csv(result);
}

}  // namespace aan::trainer
