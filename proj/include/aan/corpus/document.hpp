#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace aan::corpus {

enum class Origin { source, target };

std::string_view to_string(Origin origin);
Origin parse_origin(std::string_view text);

using TokenIds = std::vector<std::size_t>;

/// One document: a sequence of non-empty sentences plus optional supervision.
struct Document {
  std::string id;
  Origin origin = Origin::source;
  /// Lowercased token strings per sentence.
  std::vector<std::vector<std::string>> tokens;
  /// Vocabulary ids per sentence; filled by encode_documents().
  std::vector<TokenIds> sentences;
  /// aspect -> class index.
  std::map<std::string, int> labels;
  /// aspect -> (sentence index -> 0/1). A sentence without an entry is not
  /// in the relevance index set for that aspect.
  std::map<std::string, std::map<std::size_t, int>> relevance;
  /// aspect -> sentence indices known to carry that aspect's evidence
  /// (ground truth; synthetic corpora provide it).
  std::map<std::string, std::vector<std::size_t>> focal;

  std::size_t num_sentences() const { return tokens.size(); }
  std::size_t num_tokens() const;
  std::optional<int> label(const std::string& aspect) const;
};

}  // namespace aan::corpus
