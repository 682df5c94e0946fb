#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "aan/corpus/document.hpp"
#include "aan/corpus/rules.hpp"
#include "aan/model/aan.hpp"
#include "aan/trainer/trainer.hpp"

namespace aan::analysis {

using corpus::Document;
using model::AAN;

/// Transformed document vectors, source-origin rows first.
struct RepresentationMatrix {
  ad::Tensor values;  // [rows x f]
  std::size_t source_rows = 0;
  std::vector<std::string> ids;

  std::size_t rows() const { return ids.size(); }
  std::size_t cols() const { return values.empty() ? 0 : values.cols(); }
};

/// Source rows are encoded under `source_aspect`, target rows under `target_aspect`.
RepresentationMatrix representation_matrix(const AAN& model, std::span<const Document* const> source,
                                           std::span<const Document* const> target, std::size_t source_aspect = 0,
                                           std::size_t target_aspect = 1);

struct SparsityReport {
  double threshold = 1e-6;
  /// Fraction of entries with |v| < threshold.
  double fraction_small = 0;
  double mean = 0;
  double stddev = 0;  // population standard deviation over all entries
  double source_mean = 0;
  double target_mean = 0;
};

SparsityReport sparsity_stats(const RepresentationMatrix& m, double threshold = 1e-6);

std::string matrix_csv(const RepresentationMatrix& m);
void write_matrix_csv(const std::filesystem::path& path, const RepresentationMatrix& m);
/// 8-bit grayscale heat map; values are clamped to mean +- 3 stddev.
std::string matrix_pgm(const RepresentationMatrix& m);
void write_matrix_pgm(const std::filesystem::path& path, const RepresentationMatrix& m);

/// Cosine similarity; 0 when either vector is zero.
double cosine(std::span<const double> a, std::span<const double> b);

struct Neighbor {
  std::size_t index = 0;
  std::string id;
  double similarity = 0;
};

/// The k rows of `pool` most similar to `query`, by descending cosine
/// similarity; equal similarities are ordered by id.
std::vector<Neighbor> nearest_neighbors(std::span<const double> query, const RepresentationMatrix& pool, std::size_t k);

struct SentenceRelevance {
  std::string doc_id;
  std::size_t sentence = 0;
  double score = 0;   // raw relevance output
  double weight = 0;  // normalized pooling weight actually used
  bool focal = false;
  int label = -1;  // rule label, -1 when the sentence has none
};

struct RelevanceReport {
  std::vector<SentenceRelevance> sentences;
  /// Mean over documents with focal markers of the pooling mass on them.
  double focal_mass = 0;
  std::size_t focal_documents = 0;
  /// Mean squared error of raw scores against rule labels.
  double label_mse = 0;
  double label_mae = 0;
  std::size_t labeled_sentences = 0;
};

RelevanceReport relevance_inspection(const AAN& model, std::span<const Document* const> docs, std::size_t aspect,
                                     std::size_t chunk = 64);
std::string relevance_csv(const RelevanceReport& report);

struct SweepPoint {
  double fraction = 0;
  std::uint64_t seed = 0;
  std::size_t keywords = 0;
  /// No keyword left for the target aspect; the point runs without relevance.
  bool degenerate = false;
  double target_accuracy = 0;
};

struct SweepInputs {
  std::span<const Document> labeled;
  std::span<const Document> unlabeled;
  std::span<const Document> test;
  corpus::AspectRuleSet rules;
};

/// Retrains with a random subset of the target aspect's keywords per
/// fraction and reports target accuracy on `test`. Documents must already
/// be encoded against the vocabulary the config was sized for.
std::vector<SweepPoint> keyword_sweep(const trainer::TrainConfig& config, const SweepInputs& inputs,
                                      std::span<const double> fractions, std::span<const std::uint64_t> seeds);
std::string sweep_csv(std::span<const SweepPoint> points);

/// Keeps round(fraction * n) of the aspect's keywords, chosen by `rng`.
corpus::AspectRuleSet subset_keywords(const corpus::AspectRuleSet& rules, const std::string& aspect, double fraction,
                                      Rng& rng);

}  // namespace aan::analysis
