#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "aan/corpus/document.hpp"
#include "aan/model/aan.hpp"

namespace aan::trainer {

using corpus::Document;
using model::AAN;

/// rho(p) = rho_max * (2 / (1 + exp(-gamma p)) - 1)
double rho_schedule(double p, double rho_max, double gamma = 10.0);
/// lr(p) = base / (1 + alpha p)^beta
double lr_schedule(double p, double base_lr, double alpha = 10.0, double beta = 0.75);

enum class OptimizerKind { adam, sgd_momentum };
std::string to_string(OptimizerKind k);
OptimizerKind parse_optimizer(const std::string& s);

class Optimizer {
 public:
  virtual ~Optimizer() = default;
  /// Updates every trainable parameter from its accumulated gradient.
  virtual void step(std::span<ad::Parameter* const> params, double lr) = 0;
};

class Adam : public Optimizer {
 public:
  Adam(double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8) : b1_(beta1), b2_(beta2), eps_(eps) {}
  void step(std::span<ad::Parameter* const> params, double lr) override;

 private:
  double b1_, b2_, eps_;
  std::size_t t_ = 0;
  std::vector<ad::Tensor> m_, v_;
};

class SgdMomentum : public Optimizer {
 public:
  explicit SgdMomentum(double momentum = 0.9) : mu_(momentum) {}
  void step(std::span<ad::Parameter* const> params, double lr) override;

 private:
  double mu_;
  std::vector<ad::Tensor> vel_;
};

std::unique_ptr<Optimizer> make_optimizer(OptimizerKind kind);

struct TrainConfig {
  model::ModelConfig model;
  std::size_t epochs = 20;
  std::size_t batch_size = 32;
  double base_lr = 1e-3;
  double lr_alpha = 10.0;
  double lr_beta = 0.75;
  double rho_max = 1.0;
  double rho_gamma = 10.0;
  OptimizerKind optimizer = OptimizerKind::adam;
  /// Ours-NA: rho fixed at 0; the domain classifier still trains.
  bool disable_adversary = false;
  /// Leaves the domain classifier out of the graph (used to check rho = 0).
  bool detach_domain = false;
  model::Assignment assignment = model::Assignment::paired;
  double validation_fraction = 0.1;
  /// Keep the parameters of the epoch with the best validation accuracy.
  bool select_best = true;
  std::uint64_t seed = 0;
  /// Where the divergence guard writes its dump; empty keeps it in memory only.
  std::filesystem::path diagnostics_path;

  void validate() const;
};

nlohmann::json to_json(const TrainConfig& c);
/// Fields missing from `j` keep the values already in `c`.
void update_from_json(TrainConfig& c, const nlohmann::json& j);

struct StepRecord {
  std::size_t epoch = 0;
  std::size_t step = 0;
  double rho = 0;
  double lr = 0;
  model::LossValues loss;
};

struct EpochRecord {
  std::size_t epoch = 0;
  std::size_t step = 0;
  double val_accuracy = 0;
};

struct TrainResult {
  std::unique_ptr<AAN> model;
  std::vector<StepRecord> steps;
  std::vector<EpochRecord> epochs;
  std::size_t best_epoch = 0;
  double best_val_accuracy = 0;
  std::size_t total_steps = 0;
  std::size_t train_documents = 0;
  std::size_t validation_documents = 0;
};

struct TrainHooks {
  std::function<void(const StepRecord&, const AAN&)> on_step;
  std::function<void(const EpochRecord&, const AAN&)> on_epoch;
  /// Optional overriding step budget (stops early when reached).
  std::size_t max_steps = 0;
};

/// Joint training. `labeled` are source-origin documents carrying the source
/// label; `unlabeled` are target-origin documents. Aspect names and the
/// vocabulary size must already be set in config.model.
TrainResult train(const TrainConfig& config, std::span<const Document> labeled, std::span<const Document> unlabeled,
                  const TrainHooks& hooks = {});

/// One CSV row per step plus one per epoch (kind = step | epoch).
void write_metrics_csv(const std::filesystem::path& path, const TrainResult& result);
std::string metrics_csv(const TrainResult& result);

}  // namespace aan::trainer
