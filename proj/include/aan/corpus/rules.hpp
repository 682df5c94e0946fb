#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "aan/corpus/document.hpp"

namespace aan::corpus {

using Phrase = std::vector<std::string>;

/// Keyword rules per aspect. Keywords are tokenized at construction, and a
/// multi-word keyword matches as a contiguous token sequence.
struct AspectRuleSet {
  std::vector<std::string> aspects;
  std::map<std::string, std::vector<Phrase>> keywords;

  bool has_aspect(const std::string& aspect) const;
  bool has_keywords(const std::string& aspect) const;
  std::size_t aspect_index(const std::string& aspect) const;

  /// Adds a raw keyword string (tokenized with the corpus tokenizer).
  void add_keyword(const std::string& aspect, const std::string& keyword);
  /// Keywords of `aspect` as plain strings (tokens joined by spaces).
  std::vector<std::string> keyword_strings(const std::string& aspect) const;
};

AspectRuleSet load_rules(const std::filesystem::path& path);
AspectRuleSet parse_rules(const std::string& json_text);
std::string dump_rules(const AspectRuleSet& rules);

/// True if `phrase` occurs as a contiguous run inside `sentence`.
bool contains_phrase(const std::vector<std::string>& sentence, const Phrase& phrase);

/// Rewrites doc.relevance[focal]: 1 when a sentence contains a focal keyword
/// (even if other aspects' keywords also appear), 0 when it contains only
/// other aspects' keywords, and no entry when it contains none.
void apply_rules(Document& doc, const AspectRuleSet& rules, const std::string& focal);

/// apply_rules for every declared aspect.
void apply_all_rules(Document& doc, const AspectRuleSet& rules);

}  // namespace aan::corpus
