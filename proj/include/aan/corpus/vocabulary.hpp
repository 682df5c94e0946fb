#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "aan/corpus/document.hpp"

namespace aan::corpus {

/// Lowercases and splits on whitespace and ASCII punctuation. Punctuation is
/// dropped; bytes >= 0x80 are kept so UTF-8 words survive intact.
std::vector<std::string> tokenize(std::string_view text);

/// Dense token <-> id map. Ids 0 and 1 are reserved for padding and unknown.
class Vocabulary {
 public:
  static constexpr std::size_t kPad = 0;
  static constexpr std::size_t kUnknown = 1;

  Vocabulary();
  static Vocabulary from_tokens(std::span<const std::string> ordered);

  std::size_t add(const std::string& token);
  std::size_t id(const std::string& token) const;
  bool contains(const std::string& token) const;
  const std::string& token(std::size_t id) const;
  std::size_t size() const { return tokens_.size(); }
  const std::vector<std::string>& tokens() const { return tokens_; }

  TokenIds encode(std::span<const std::string> tokens) const;
  std::vector<std::string> decode(std::span<const std::size_t> ids) const;

  /// FNV-1a 64 over the ordered token list, as 16 hex digits.
  std::string hash() const;

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, std::size_t> index_;
};

/// Vocabulary over every token of `docs`, in first-occurrence order.
Vocabulary build_vocabulary(std::span<const Document> docs);
Vocabulary build_vocabulary(std::span<const Document* const> docs);

/// Fills Document::sentences from Document::tokens; OOV tokens map to kUnknown.
void encode_documents(std::span<Document> docs, const Vocabulary& vocab);

}  // namespace aan::corpus
