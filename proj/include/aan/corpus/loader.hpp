#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "aan/corpus/document.hpp"
#include "aan/corpus/rules.hpp"
#include "aan/corpus/vocabulary.hpp"

namespace aan::corpus {

struct LoadedFile {
  std::vector<Document> docs;
  std::size_t skipped_empty = 0;
};

/// Parses one JSON-lines record. Returns false for an empty document.
/// Throws ParseError (with `line_no`) on malformed input.
bool parse_record(const std::string& line, std::size_t line_no, Document& out);

/// Reads a JSON-lines file. Duplicate ids are rejected.
LoadedFile read_jsonl(const std::filesystem::path& path);
LoadedFile parse_jsonl(const std::string& text);

/// Serializes a document back to one JSON line (no trailing newline).
std::string to_json_line(const Document& doc);

/// Training documents (labeled source plus unlabeled), held-out test documents
/// and the vocabulary built from the training documents only.
struct Corpus {
  std::vector<Document> labeled;
  std::vector<Document> unlabeled;
  std::vector<Document> test;
  Vocabulary vocab;
  std::size_t skipped_empty = 0;
};

/// Loads the splits, checks labels against the declared aspects, applies the
/// keyword rules to every document and encodes tokens. Empty `unlabeled` or
/// `test` paths are allowed.
Corpus load_corpus(const std::filesystem::path& labeled, const std::filesystem::path& unlabeled,
                   const std::filesystem::path& test, const AspectRuleSet& rules);

/// Same, with a fixed vocabulary (e.g. restored from a run directory).
Corpus load_corpus(const std::filesystem::path& labeled, const std::filesystem::path& unlabeled,
                   const std::filesystem::path& test, const AspectRuleSet& rules,
                   const Vocabulary& vocab);

void write_vocabulary(const std::filesystem::path& path, const Vocabulary& vocab);
Vocabulary read_vocabulary(const std::filesystem::path& path);

}  // namespace aan::corpus
