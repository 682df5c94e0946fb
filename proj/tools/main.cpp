// aan: corpus generation, training, evaluation and analysis commands.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "aan/analysis/analysis.hpp"
#include "aan/corpus/loader.hpp"
#include "aan/corpus/synthetic.hpp"
#include "aan/errors.hpp"
#include "aan/model/checkpoint.hpp"
#include "aan/trainer/trainer.hpp"
#include "manifest.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace aan;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitNumerical = 2;

json read_json_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << text;
}

std::string pct(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f%%", 100 * v);
  return buf;
}

std::vector<const corpus::Document*> ptrs(const std::vector<corpus::Document>& docs, std::size_t limit = 0) {
  std::vector<const corpus::Document*> out;
  for (const auto& d : docs) {
    if (limit && out.size() >= limit) break;
    out.push_back(&d);
  }
  return out;
}

// --- gen-synth -------------------------------------------------------------

json spec_to_json(const corpus::SynthSpec& s) {
  return json{{"aspects", s.aspects},
              {"num_labeled", s.num_labeled},
              {"num_unlabeled", s.num_unlabeled},
              {"num_test", s.num_test},
              {"min_sentences", s.min_sentences},
              {"max_sentences", s.max_sentences},
              {"names_per_aspect", s.names_per_aspect},
              {"polarity_per_class", s.polarity_per_class},
              {"overlap", s.overlap},
              {"focal_min", s.focal_min},
              {"focal_max", s.focal_max},
              {"polarity_tokens_min", s.polarity_tokens_min},
              {"polarity_tokens_max", s.polarity_tokens_max},
              {"filler_vocab", s.filler_vocab},
              {"filler_min", s.filler_min},
              {"filler_max", s.filler_max},
              {"correlation", s.correlation},
              {"positive_rate", s.positive_rate},
              {"seed", s.seed}};
}

void spec_from_json(corpus::SynthSpec& s, const json& j) {
  const json known = spec_to_json(s);
  for (const auto& [key, _] : j.items()) {
    if (!known.contains(key)) throw ConfigError("unknown synthetic spec field \"" + key + "\"");
  }
  try {
    auto get = [&](const char* key, auto& dst) {
      if (j.contains(key)) dst = j.at(key).get<std::decay_t<decltype(dst)>>();
    };
    get("aspects", s.aspects);
    get("num_labeled", s.num_labeled);
    get("num_unlabeled", s.num_unlabeled);
    get("num_test", s.num_test);
    get("min_sentences", s.min_sentences);
    get("max_sentences", s.max_sentences);
    get("names_per_aspect", s.names_per_aspect);
    get("polarity_per_class", s.polarity_per_class);
    get("overlap", s.overlap);
    get("focal_min", s.focal_min);
    get("focal_max", s.focal_max);
    get("polarity_tokens_min", s.polarity_tokens_min);
    get("polarity_tokens_max", s.polarity_tokens_max);
    get("filler_vocab", s.filler_vocab);
    get("filler_min", s.filler_min);
    get("filler_max", s.filler_max);
    get("correlation", s.correlation);
    get("positive_rate", s.positive_rate);
    get("seed", s.seed);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("synthetic spec: ") + e.what());
  }
}

struct GenSynthArgs {
  std::optional<fs::path> config;
  fs::path out;
  std::uint64_t seed = 0;
  bool overwrite = false;
  std::optional<std::size_t> docs, num_labeled, num_unlabeled, num_test, min_sentences, max_sentences,
      names_per_aspect, polarity_per_class, focal_min, focal_max, polarity_tokens_min, polarity_tokens_max,
      filler_vocab, filler_min, filler_max;
  std::optional<double> overlap, correlation, positive_rate;
  std::optional<std::vector<std::string>> aspects;
};

void add_gen_synth(CLI::App& app, GenSynthArgs& a) {
  auto* c = app.add_subcommand("gen-synth", "Generate a synthetic two-aspect corpus");
  c->add_option("--config", a.config, "JSON file with generator settings")->check(CLI::ExistingFile);
  c->add_option("--out", a.out, "Output directory")->required();
  c->add_option("--seed", a.seed, "Random seed")->required();
  c->add_flag("--overwrite", a.overwrite, "Allow writing into a non-empty directory");
  c->add_option("--docs", a.docs, "Labeled and unlabeled document count");
  c->add_option("--num-labeled", a.num_labeled);
  c->add_option("--num-unlabeled", a.num_unlabeled);
  c->add_option("--num-test", a.num_test);
  c->add_option("--min-sentences", a.min_sentences);
  c->add_option("--max-sentences", a.max_sentences);
  c->add_option("--names-per-aspect", a.names_per_aspect);
  c->add_option("--polarity-per-class", a.polarity_per_class);
  c->add_option("--overlap", a.overlap, "Shared fraction of the polarity vocabularies");
  c->add_option("--focal-min", a.focal_min);
  c->add_option("--focal-max", a.focal_max);
  c->add_option("--polarity-tokens-min", a.polarity_tokens_min);
  c->add_option("--polarity-tokens-max", a.polarity_tokens_max);
  c->add_option("--filler-vocab", a.filler_vocab);
  c->add_option("--filler-min", a.filler_min);
  c->add_option("--filler-max", a.filler_max);
  c->add_option("--correlation", a.correlation, "Label correlation between the aspects");
  c->add_option("--positive-rate", a.positive_rate);
  c->add_option("--aspects", a.aspects, "Source and target aspect names")->expected(2)->delimiter(',');
}

int run_gen_synth(const GenSynthArgs& a) {
  corpus::SynthSpec spec;
  if (a.config) spec_from_json(spec, read_json_file(*a.config));
  auto set = [](auto& dst, const auto& opt) {
    if (opt) dst = *opt;
  };
  if (a.docs) spec.num_labeled = spec.num_unlabeled = *a.docs;
  set(spec.num_labeled, a.num_labeled);
  set(spec.num_unlabeled, a.num_unlabeled);
  set(spec.num_test, a.num_test);
  set(spec.min_sentences, a.min_sentences);
  set(spec.max_sentences, a.max_sentences);
  set(spec.names_per_aspect, a.names_per_aspect);
  set(spec.polarity_per_class, a.polarity_per_class);
  set(spec.overlap, a.overlap);
  set(spec.focal_min, a.focal_min);
  set(spec.focal_max, a.focal_max);
  set(spec.polarity_tokens_min, a.polarity_tokens_min);
  set(spec.polarity_tokens_max, a.polarity_tokens_max);
  set(spec.filler_vocab, a.filler_vocab);
  set(spec.filler_min, a.filler_min);
  set(spec.filler_max, a.filler_max);
  set(spec.correlation, a.correlation);
  set(spec.positive_rate, a.positive_rate);
  set(spec.aspects, a.aspects);
  spec.seed = a.seed;
  spec.validate();

  cli::prepare_output_dir(a.out, a.overwrite);
  auto corpus = corpus::generate_synthetic(spec);
  auto written = corpus::write_synthetic(corpus, a.out);

  cli::Manifest m("gen-synth");
  m.set_config(spec_to_json(spec));
  m.set_seed(spec.seed);
  for (const auto& p : written) m.add_output(a.out, p.filename().string());
  const auto& st = corpus.stats;
  m.set_summary({{"documents", st.documents},
                 {"source_positive_rate", st.source_positive},
                 {"target_positive_rate", st.target_positive},
                 {"label_correlation", st.correlation}});
  m.write(a.out);

  std::printf("documents: %zu (labeled %zu, unlabeled %zu, test %zu)\n", st.documents, corpus.labeled.size(),
              corpus.unlabeled.size(), corpus.test.size());
  std::printf("positive rate: %s %.3f, %s %.3f\n", spec.aspects[0].c_str(), st.source_positive,
              spec.aspects[1].c_str(), st.target_positive);
  std::printf("measured label correlation: %.4f (requested %.4f)\n", st.correlation, spec.correlation);
  std::printf("wrote %s\n", a.out.string().c_str());
  return kExitOk;
}

// --- shared training flags ---------------------------------------------------

struct TrainFlags {
  std::optional<fs::path> config;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> epochs, batch_size, embed_dim, window, features, hidden_size, classes;
  std::optional<double> base_lr, lr_alpha, lr_beta, rho_max, rho_gamma, validation_fraction, dropout, lambda_tr;
  std::optional<std::string> optimizer, assignment, pooling, transform, source_aspect, target_aspect;
  bool disable_adversary = false, disable_relevance = false, disable_reconstruction = false,
       freeze_transform_identity = false, clamp_relevance = false, no_select_best = false;
};

void add_train_flags(CLI::App* c, TrainFlags& f) {
  c->add_option("--config", f.config, "JSON training config; flags override it")->check(CLI::ExistingFile);
  c->add_option("--epochs", f.epochs);
  c->add_option("--batch-size", f.batch_size);
  c->add_option("--base-lr", f.base_lr);
  c->add_option("--lr-alpha", f.lr_alpha);
  c->add_option("--lr-beta", f.lr_beta);
  c->add_option("--rho-max", f.rho_max);
  c->add_option("--rho-gamma", f.rho_gamma);
  c->add_option("--optimizer", f.optimizer, "adam or sgd-momentum");
  c->add_option("--assignment", f.assignment, "paired or by-origin");
  c->add_option("--validation-fraction", f.validation_fraction);
  c->add_option("--embed-dim", f.embed_dim);
  c->add_option("--window", f.window);
  c->add_option("--features", f.features);
  c->add_option("--hidden-size", f.hidden_size);
  c->add_option("--classes", f.classes);
  c->add_option("--dropout", f.dropout);
  c->add_option("--lambda-tr", f.lambda_tr);
  c->add_option("--pooling", f.pooling, "max or mean");
  c->add_option("--transform", f.transform, "trainable, frozen-identity or absent");
  c->add_option("--source-aspect", f.source_aspect);
  c->add_option("--target-aspect", f.target_aspect);
  c->add_flag("--disable-adversary", f.disable_adversary, "Ours-NA: no adversarial strength");
  c->add_flag("--disable-relevance", f.disable_relevance, "AAN-NR: uniform pooling weights");
  c->add_flag("--disable-reconstruction", f.disable_reconstruction, "Drop the reconstruction loss");
  c->add_flag("--freeze-transform-identity", f.freeze_transform_identity, "Keep the transformation at I");
  c->add_flag("--clamp-relevance", f.clamp_relevance, "Clamp relevance scores to [0, 1]");
  c->add_flag("--no-select-best", f.no_select_best, "Keep the last epoch instead of the best one");
}

/// Config file first, then flags. Aspect names default to the rule set's order.
trainer::TrainConfig resolve_train_config(const TrainFlags& f, const corpus::AspectRuleSet& rules) {
  trainer::TrainConfig c;
  if (rules.aspects.size() >= 2) c.model.aspects = {rules.aspects[0], rules.aspects[1]};
  json file = json::object();
  if (f.config) {
    file = read_json_file(*f.config);
    trainer::update_from_json(c, file);
  }
  auto set = [](auto& dst, const auto& opt) {
    if (opt) dst = *opt;
  };
  auto& m = c.model;
  set(c.epochs, f.epochs);
  set(c.batch_size, f.batch_size);
  set(c.base_lr, f.base_lr);
  set(c.lr_alpha, f.lr_alpha);
  set(c.lr_beta, f.lr_beta);
  set(c.rho_max, f.rho_max);
  set(c.rho_gamma, f.rho_gamma);
  set(c.validation_fraction, f.validation_fraction);
  set(c.seed, f.seed);
  set(m.embed_dim, f.embed_dim);
  set(m.window, f.window);
  set(m.features, f.features);
  set(m.hidden, f.hidden_size);
  set(m.classes, f.classes);
  set(m.dropout, f.dropout);
  set(m.aspects[0], f.source_aspect);
  set(m.aspects[1], f.target_aspect);
  if (f.optimizer) c.optimizer = trainer::parse_optimizer(*f.optimizer);
  if (f.assignment) c.assignment = model::parse_assignment(*f.assignment);
  if (f.pooling) m.pooling = model::parse_pooling(*f.pooling);
  if (f.transform) m.transform = model::parse_transform(*f.transform);
  if (f.disable_adversary) c.disable_adversary = true;
  if (f.disable_relevance) m.use_relevance = false;
  if (f.disable_reconstruction) m.use_reconstruction = false;
  if (f.freeze_transform_identity) m.transform = model::TransformMode::frozen_identity;
  if (f.clamp_relevance) m.clamp_relevance = true;
  if (f.no_select_best) c.select_best = false;
  // regularizer strength follows the assignment policy unless given
  if (f.lambda_tr) {
    m.lambda_tr = *f.lambda_tr;
  } else if (!file.contains("lambda_tr")) {
    m.lambda_tr = c.assignment == model::Assignment::paired ? 0.1 : 10.0;
  }
  for (std::size_t i = 0; i < 2; ++i) {
    if (!rules.has_aspect(m.aspects[i])) throw ConfigError("aspect \"" + m.aspects[i] + "\" is not declared in the rules");
    m.aspect_has_keywords[i] = rules.has_keywords(m.aspects[i]);
  }
  return c;
}

// --- train -----------------------------------------------------------------

struct TrainArgs {
  TrainFlags flags;
  fs::path labeled, unlabeled, rules, out;
  std::optional<fs::path> test;
  bool overwrite = false;
  bool quiet = false;
};

void add_train(CLI::App& app, TrainArgs& a) {
  auto* c = app.add_subcommand("train", "Train a model and write a run directory");
  c->add_option("--labeled", a.labeled, "Labeled source documents (JSON lines)")->required()->check(CLI::ExistingFile);
  c->add_option("--unlabeled", a.unlabeled, "Unlabeled target documents")->required()->check(CLI::ExistingFile);
  c->add_option("--rules", a.rules, "Keyword rules (JSON)")->required()->check(CLI::ExistingFile);
  c->add_option("--test", a.test, "Held-out documents with target labels")->check(CLI::ExistingFile);
  c->add_option("--out", a.out, "Run directory")->required();
  c->add_option("--seed", a.flags.seed, "Random seed")->required();
  c->add_flag("--overwrite", a.overwrite, "Allow writing into a non-empty directory");
  c->add_flag("--quiet", a.quiet, "Only print the final summary");
  add_train_flags(c, a.flags);
}

int run_train(const TrainArgs& a) {
  auto rules = corpus::load_rules(a.rules);
  auto cfg = resolve_train_config(a.flags, rules);
  auto data = corpus::load_corpus(a.labeled, a.unlabeled, a.test.value_or(fs::path{}), rules);
  cfg.model.vocab_size = data.vocab.size();
  cfg.validate();

  cli::prepare_output_dir(a.out, a.overwrite);
  cfg.diagnostics_path = a.out / "diagnostics.json";

  trainer::TrainHooks hooks;
  if (!a.quiet) {
    hooks.on_epoch = [](const trainer::EpochRecord& e, const model::AAN&) {
      std::printf("epoch %zu  step %zu  validation accuracy %s\n", e.epoch, e.step, pct(e.val_accuracy).c_str());
      std::fflush(stdout);
    };
  }
  auto result = trainer::train(cfg, data.labeled, data.unlabeled, hooks);

  json summary{{"best_epoch", result.best_epoch},
               {"validation_accuracy", result.best_val_accuracy},
               {"steps", result.total_steps},
               {"train_documents", result.train_documents},
               {"validation_documents", result.validation_documents},
               {"skipped_empty_documents", data.skipped_empty}};
  if (!data.test.empty()) {
    auto test = ptrs(data.test);
    const auto& target = cfg.model.aspects[1];
    bool labeled = true;
    for (const auto* d : test) labeled = labeled && d->label(target).has_value();
    if (labeled) summary["test_target_accuracy"] = model::evaluate(*result.model, test, 1).accuracy;
  }

  const auto vocab_hash = data.vocab.hash();
  model::save_checkpoint(a.out / "checkpoint.json", *result.model, vocab_hash,
                         {{"train_config", trainer::to_json(cfg)}, {"summary", summary}});
  trainer::write_metrics_csv(a.out / "metrics.csv", result);
  corpus::write_vocabulary(a.out / "vocab.txt", data.vocab);
  write_text(a.out / "config.json", trainer::to_json(cfg).dump(2) + "\n");

  cli::Manifest m("train");
  m.set_config(trainer::to_json(cfg));
  m.set_seed(cfg.seed);
  m.add_input("labeled", a.labeled);
  m.add_input("unlabeled", a.unlabeled);
  m.add_input("rules", a.rules);
  if (a.test) m.add_input("test", *a.test);
  for (const char* name : {"checkpoint.json", "metrics.csv", "vocab.txt", "config.json"}) m.add_output(a.out, name);
  summary["vocab_hash"] = vocab_hash;
  m.set_summary(summary);
  m.write(a.out);

  std::printf("best epoch %zu, validation accuracy %s\n", result.best_epoch, pct(result.best_val_accuracy).c_str());
  if (summary.contains("test_target_accuracy")) {
    std::printf("test accuracy (%s): %s\n", cfg.model.aspects[1].c_str(),
                pct(summary["test_target_accuracy"].get<double>()).c_str());
  }
  std::printf("wrote %s\n", a.out.string().c_str());
  return kExitOk;
}

// --- checkpoint helpers ----------------------------------------------------------

struct LoadedModel {
  model::Checkpoint ckpt;
  corpus::Vocabulary vocab;
  corpus::AspectRuleSet rules;
};

/// Loads a checkpoint and the vocabulary saved with it; the vocabulary must
/// hash to the value recorded in the checkpoint.
LoadedModel load_model(const fs::path& checkpoint, const std::optional<fs::path>& vocab_path,
                       const std::optional<fs::path>& rules_path) {
  LoadedModel lm;
  lm.ckpt = model::load_checkpoint(checkpoint);
  lm.vocab = corpus::read_vocabulary(vocab_path.value_or(checkpoint.parent_path() / "vocab.txt"));
  model::require_vocab_hash(lm.ckpt, lm.vocab.hash());
  const auto& aspects = lm.ckpt.model->config().aspects;
  if (rules_path) {
    lm.rules = corpus::load_rules(*rules_path);
  } else {
    lm.rules.aspects = {aspects[0], aspects[1]};
  }
  return lm;
}

std::size_t aspect_or(const model::AAN& m, const std::optional<std::string>& name, std::size_t fallback) {
  return name ? m.aspect_index(*name) : fallback;
}

std::vector<corpus::Document> load_docs(const fs::path& path, const LoadedModel& lm) {
  return corpus::load_corpus({}, {}, path, lm.rules, lm.vocab).test;
}

// --- eval --------------------------------------------------------------------

struct EvalArgs {
  fs::path checkpoint, data;
  std::optional<fs::path> vocab, rules, out;
  std::optional<std::string> aspect;
};

void add_eval(CLI::App& app, EvalArgs& a) {
  auto* c = app.add_subcommand("eval", "Accuracy of a checkpoint on labeled documents");
  c->add_option("--checkpoint", a.checkpoint)->required()->check(CLI::ExistingFile);
  c->add_option("--data", a.data, "Documents (JSON lines)")->required()->check(CLI::ExistingFile);
  c->add_option("--vocab", a.vocab, "Vocabulary file (default: next to the checkpoint)");
  c->add_option("--rules", a.rules, "Keyword rules");
  c->add_option("--aspect", a.aspect, "Aspect to evaluate (default: target)");
  c->add_option("--out", a.out, "Write the report as JSON");
}

int run_eval(const EvalArgs& a) {
  auto lm = load_model(a.checkpoint, a.vocab, a.rules);
  const auto& model = *lm.ckpt.model;
  const auto aspect = aspect_or(model, a.aspect, 1);
  auto docs = load_docs(a.data, lm);
  auto acc = model::evaluate(model, ptrs(docs), aspect);
  json report{{"aspect", model.config().aspects[aspect]},
              {"documents", acc.total},
              {"accuracy", acc.accuracy},
              {"confusion", acc.confusion}};
  if (a.out) {
    if (fs::exists(*a.out)) throw ConfigError(a.out->string() + " already exists");
    write_text(*a.out, report.dump(2) + "\n");
  }
  std::printf("aspect %s: accuracy %s over %zu documents\n", model.config().aspects[aspect].c_str(),
              pct(acc.accuracy).c_str(), acc.total);
  for (std::size_t y = 0; y < acc.confusion.size(); ++y) {
    std::printf("  true %zu:", y);
    for (auto n : acc.confusion[y]) std::printf(" %zu", n);
    std::printf("\n");
  }
  return kExitOk;
}

// --- analyze -----------------------------------------------------------------

struct AnalyzeArgs {
  fs::path checkpoint, source, target, out;
  std::optional<fs::path> vocab, rules;
  std::size_t max_docs = 0;
  double threshold = 1e-6;
  bool overwrite = false;
};

void add_analyze(CLI::App& app, AnalyzeArgs& a) {
  auto* c = app.add_subcommand("analyze", "Representation matrix, sparsity and relevance reports");
  c->add_option("--checkpoint", a.checkpoint)->required()->check(CLI::ExistingFile);
  c->add_option("--source", a.source, "Source-origin documents")->required()->check(CLI::ExistingFile);
  c->add_option("--target", a.target, "Target-origin documents")->required()->check(CLI::ExistingFile);
  c->add_option("--out", a.out, "Output directory")->required();
  c->add_option("--vocab", a.vocab);
  c->add_option("--rules", a.rules, "Keyword rules, used to label relevance");
  c->add_option("--max-docs", a.max_docs, "Documents per half (0 = all)");
  c->add_option("--threshold", a.threshold, "Sparsity threshold");
  c->add_flag("--overwrite", a.overwrite);
}

int run_analyze(const AnalyzeArgs& a) {
  auto lm = load_model(a.checkpoint, a.vocab, a.rules);
  const auto& model = *lm.ckpt.model;
  auto src_docs = load_docs(a.source, lm);
  auto tgt_docs = load_docs(a.target, lm);
  auto src = ptrs(src_docs, a.max_docs), tgt = ptrs(tgt_docs, a.max_docs);
  cli::prepare_output_dir(a.out, a.overwrite);

  auto matrix = analysis::representation_matrix(model, src, tgt, 0, 1);
  auto stats = analysis::sparsity_stats(matrix, a.threshold);
  analysis::write_matrix_csv(a.out / "matrix.csv", matrix);
  analysis::write_matrix_pgm(a.out / "heatmap.pgm", matrix);
  auto rel = analysis::relevance_inspection(model, tgt, 1);
  write_text(a.out / "relevance.csv", analysis::relevance_csv(rel));
  json summary{{"rows", matrix.rows()},
               {"source_rows", matrix.source_rows},
               {"threshold", stats.threshold},
               {"fraction_small", stats.fraction_small},
               {"stddev", stats.stddev},
               {"mean", stats.mean},
               {"source_mean", stats.source_mean},
               {"target_mean", stats.target_mean},
               {"focal_mass", rel.focal_mass},
               {"focal_documents", rel.focal_documents},
               {"relevance_mse", rel.label_mse},
               {"relevance_labeled_sentences", rel.labeled_sentences}};
  write_text(a.out / "sparsity.json", summary.dump(2) + "\n");

  cli::Manifest m("analyze");
  m.set_config({{"max_docs", a.max_docs}, {"threshold", a.threshold}});
  m.add_input("checkpoint", a.checkpoint);
  m.add_input("source", a.source);
  m.add_input("target", a.target);
  if (a.rules) m.add_input("rules", *a.rules);
  for (const char* name : {"matrix.csv", "heatmap.pgm", "relevance.csv", "sparsity.json"}) m.add_output(a.out, name);
  m.set_summary(summary);
  m.write(a.out);

  std::printf("matrix %zu x %zu (%zu source rows)\n", matrix.rows(), matrix.cols(), matrix.source_rows);
  std::printf("entries below %g: %s, stddev %.4g\n", stats.threshold, pct(stats.fraction_small).c_str(), stats.stddev);
  if (rel.focal_documents) std::printf("pooling mass on focal sentences: %.3f\n", rel.focal_mass);
  if (rel.labeled_sentences) std::printf("relevance MSE against rules: %.4f\n", rel.label_mse);
  std::printf("wrote %s\n", a.out.string().c_str());
  return kExitOk;
}

// --- neighbors ---------------------------------------------------------------

struct NeighborArgs {
  fs::path checkpoint, query_file, pool;
  std::string query_id;
  std::optional<fs::path> vocab, out;
  std::optional<std::string> query_aspect, pool_aspect;
  std::size_t k = 5;
};

void add_neighbors(CLI::App& app, NeighborArgs& a) {
  auto* c = app.add_subcommand("neighbors", "Cosine nearest neighbors of one document");
  c->add_option("--checkpoint", a.checkpoint)->required()->check(CLI::ExistingFile);
  c->add_option("--query-file", a.query_file)->required()->check(CLI::ExistingFile);
  c->add_option("--query-id", a.query_id)->required();
  c->add_option("--pool", a.pool, "Candidate documents")->required()->check(CLI::ExistingFile);
  c->add_option("--k", a.k, "Number of neighbors");
  c->add_option("--query-aspect", a.query_aspect, "Default: target");
  c->add_option("--pool-aspect", a.pool_aspect, "Default: source");
  c->add_option("--vocab", a.vocab);
  c->add_option("--out", a.out, "Write the neighbor list as JSON");
}

int run_neighbors(const NeighborArgs& a) {
  auto lm = load_model(a.checkpoint, a.vocab, std::nullopt);
  const auto& model = *lm.ckpt.model;
  auto queries = load_docs(a.query_file, lm);
  auto pool_docs = load_docs(a.pool, lm);
  const corpus::Document* query = nullptr;
  for (const auto& d : queries) {
    if (d.id == a.query_id) query = &d;
  }
  if (!query) throw ConfigError("no document \"" + a.query_id + "\" in " + a.query_file.string());
  if (a.k > pool_docs.size()) {
    throw ConfigError("k = " + std::to_string(a.k) + " exceeds the pool size " + std::to_string(pool_docs.size()));
  }
  const auto qa = aspect_or(model, a.query_aspect, 1), pa = aspect_or(model, a.pool_aspect, 0);
  std::vector<const corpus::Document*> q{query};
  const auto qvec = model.encode(q, qa).xtr;
  auto pool = analysis::representation_matrix(model, ptrs(pool_docs), {}, pa, pa);
  auto nn = analysis::nearest_neighbors(qvec.data(), pool, a.k);

  json list = json::array();
  for (const auto& n : nn) {
    json item{{"id", n.id}, {"similarity", n.similarity}};
    for (const auto& [aspect, y] : pool_docs[n.index].labels) item["labels"][aspect] = y;
    list.push_back(item);
  }
  json report{{"query", a.query_id},
              {"query_aspect", model.config().aspects[qa]},
              {"pool_aspect", model.config().aspects[pa]},
              {"neighbors", list}};
  if (a.out) {
    if (fs::exists(*a.out)) throw ConfigError(a.out->string() + " already exists");
    write_text(*a.out, report.dump(2) + "\n");
  }
  std::cout << report.dump(2) << "\n";
  return kExitOk;
}

// --- sweep-keywords ------------------------------------------------------------

struct SweepArgs {
  TrainFlags flags;
  fs::path labeled, unlabeled, test, rules, out;
  std::vector<double> fractions{1.0, 0.75, 0.5, 0.25, 0.0};
  std::vector<std::uint64_t> seeds;
  bool overwrite = false;
};

void add_sweep(CLI::App& app, SweepArgs& a) {
  auto* c = app.add_subcommand("sweep-keywords", "Target accuracy as target-aspect keywords are removed");
  c->add_option("--labeled", a.labeled)->required()->check(CLI::ExistingFile);
  c->add_option("--unlabeled", a.unlabeled)->required()->check(CLI::ExistingFile);
  c->add_option("--test", a.test)->required()->check(CLI::ExistingFile);
  c->add_option("--rules", a.rules)->required()->check(CLI::ExistingFile);
  c->add_option("--out", a.out)->required();
  c->add_option("--fractions", a.fractions, "Kept keyword fractions")->delimiter(',');
  c->add_option("--seeds", a.seeds, "Training seeds")->delimiter(',')->required();
  c->add_flag("--overwrite", a.overwrite);
  add_train_flags(c, a.flags);
}

int run_sweep(const SweepArgs& a) {
  auto rules = corpus::load_rules(a.rules);
  auto cfg = resolve_train_config(a.flags, rules);
  auto data = corpus::load_corpus(a.labeled, a.unlabeled, a.test, rules);
  cfg.model.vocab_size = data.vocab.size();
  cfg.validate();
  cli::prepare_output_dir(a.out, a.overwrite);

  analysis::SweepInputs in{data.labeled, data.unlabeled, data.test, rules};
  auto points = analysis::keyword_sweep(cfg, in, a.fractions, a.seeds);
  write_text(a.out / "sweep.csv", analysis::sweep_csv(points));

  cli::Manifest m("sweep-keywords");
  m.set_config({{"train", trainer::to_json(cfg)}, {"fractions", a.fractions}, {"seeds", a.seeds}});
  m.add_input("labeled", a.labeled);
  m.add_input("unlabeled", a.unlabeled);
  m.add_input("test", a.test);
  m.add_input("rules", a.rules);
  m.add_output(a.out, "sweep.csv");
  m.write(a.out);

  for (const auto& p : points) {
    std::printf("fraction %.2f seed %llu keywords %zu%s: %s\n", p.fraction, static_cast<unsigned long long>(p.seed),
                p.keywords, p.degenerate ? " (no relevance)" : "", pct(p.target_accuracy).c_str());
  }
  std::printf("wrote %s\n", a.out.string().c_str());
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Aspect-augmented adversarial networks for text classification transfer"};
  app.require_subcommand(1);
  GenSynthArgs gen;
  TrainArgs tr;
  EvalArgs ev;
  AnalyzeArgs an;
  NeighborArgs nb;
  SweepArgs sw;
  add_gen_synth(app, gen);
  add_train(app, tr);
  add_eval(app, ev);
  add_analyze(app, an);
  add_neighbors(app, nb);
  add_sweep(app, sw);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    const auto* sub = app.get_subcommands().front();
    const auto name = sub->get_name();
    if (name == "gen-synth") return run_gen_synth(gen);
    if (name == "train") return run_train(tr);
    if (name == "eval") return run_eval(ev);
    if (name == "analyze") return run_analyze(an);
    if (name == "neighbors") return run_neighbors(nb);
    if (name == "sweep-keywords") return run_sweep(sw);
  } catch (const NumericalError& e) {
    std::fprintf(stderr, "numerical failure: %s\n", e.what());
    return kExitNumerical;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitUsage;
  }
  return kExitUsage;
}
