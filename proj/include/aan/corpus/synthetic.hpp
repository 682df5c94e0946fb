#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "aan/corpus/document.hpp"
#include "aan/corpus/rules.hpp"

namespace aan::corpus {

/// Parameters of the synthetic two-aspect corpus. The first aspect is the
/// source, the second the target.
struct SynthSpec {
  std::vector<std::string> aspects{"alpha", "beta"};
  std::size_t num_labeled = 2000;
  std::size_t num_unlabeled = 2000;
  std::size_t num_test = 500;
  std::size_t min_sentences = 4;
  std::size_t max_sentences = 7;
  std::size_t names_per_aspect = 3;
  std::size_t polarity_per_class = 10;
  /// Fraction of each polarity vocabulary shared by both aspects.
  double overlap = 0.3;
  std::size_t focal_min = 1;
  std::size_t focal_max = 1;
  std::size_t polarity_tokens_min = 4;
  std::size_t polarity_tokens_max = 4;
  std::size_t filler_vocab = 300;
  std::size_t filler_min = 3;
  std::size_t filler_max = 6;
  /// Pearson correlation between the two aspects' labels.
  double correlation = 0.0;
  /// P(label = 1) for each aspect.
  double positive_rate = 0.5;
  std::uint64_t seed = 0;

  /// Throws ConfigError on out-of-range or contradictory settings.
  void validate() const;
};

struct SynthStats {
  std::size_t documents = 0;
  double source_positive = 0;
  double target_positive = 0;
  /// Empirical label correlation over every generated document.
  double correlation = 0;
};

struct SynthCorpus {
  std::vector<Document> labeled;    // origin source, source-aspect labels
  std::vector<Document> unlabeled;  // origin target, no labels
  std::vector<Document> test;       // origin target, both labels
  AspectRuleSet rules;
  SynthStats stats;
};

SynthCorpus generate_synthetic(const SynthSpec& spec);

/// Writes train.jsonl, unlabeled.jsonl, test.jsonl and rules.json.
std::vector<std::filesystem::path> write_synthetic(const SynthCorpus& corpus, const std::filesystem::path& dir);

/// Reads a label back from the polarity tokens of the aspect's focal
/// sentences: 1 if positive tokens dominate, 0 if negative, -1 if neither.
int decode_label(const Document& doc, const std::string& aspect);

double pearson(const std::vector<int>& a, const std::vector<int>& b);

}  // namespace aan::corpus
