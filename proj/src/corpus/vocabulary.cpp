#include "aan/corpus/vocabulary.hpp"

#include <cctype>
#include <cstdio>

#include "aan/errors.hpp"

namespace aan::corpus {

std::string_view to_string(Origin origin) {
  return origin == Origin::source ? "source" : "target";
}

Origin parse_origin(std::string_view text) {
  if (text == "source") return Origin::source;
  if (text == "target") return Origin::target;
  throw ParseError("origin must be \"source\" or \"target\", got \"" + std::string(text) + "\"");
}

std::size_t Document::num_tokens() const {
  std::size_t n = 0;
  for (const auto& s : tokens) n += s.size();
  return n;
}

std::optional<int> Document::label(const std::string& aspect) const {
  auto it = labels.find(aspect);
  if (it == labels.end()) return std::nullopt;
  return it->second;
}

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : text) {
    const auto c = static_cast<unsigned char>(ch);
    if (c >= 0x80 || std::isalnum(c)) {
      cur.push_back(static_cast<char>(std::tolower(c)));
    } else if (!cur.empty()) {
      out.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

Vocabulary::Vocabulary() {
  add("<pad>");
  add("<unk>");
}

Vocabulary Vocabulary::from_tokens(std::span<const std::string> ordered) {
  if (ordered.size() < 2 || ordered[0] != "<pad>" || ordered[1] != "<unk>") {
    throw ParseError("vocabulary must start with <pad> and <unk>");
  }
  Vocabulary v;
  for (std::size_t i = 2; i < ordered.size(); ++i) {
    if (v.contains(ordered[i])) throw ParseError("duplicate vocabulary token " + ordered[i]);
    v.add(ordered[i]);
  }
  return v;
}

std::size_t Vocabulary::add(const std::string& token) {
  auto [it, inserted] = index_.emplace(token, tokens_.size());
  if (inserted) tokens_.push_back(token);
  return it->second;
}

std::size_t Vocabulary::id(const std::string& token) const {
  auto it = index_.find(token);
  return it == index_.end() ? kUnknown : it->second;
}

bool Vocabulary::contains(const std::string& token) const { return index_.contains(token); }

const std::string& Vocabulary::token(std::size_t id) const {
  if (id >= tokens_.size()) throw DimensionError("token id " + std::to_string(id) + " out of range");
  return tokens_[id];
}

TokenIds Vocabulary::encode(std::span<const std::string> tokens) const {
  TokenIds ids;
  ids.reserve(tokens.size());
  for (const auto& t : tokens) ids.push_back(id(t));
  return ids;
}

std::vector<std::string> Vocabulary::decode(std::span<const std::size_t> ids) const {
  std::vector<std::string> out;
  out.reserve(ids.size());
  for (auto i : ids) out.push_back(token(i));
  return out;
}

std::string Vocabulary::hash() const {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const auto& t : tokens_) {
    for (char c : t) {
      h ^= static_cast<unsigned char>(c);
      h *= 0x100000001b3ULL;
    }
    h ^= 0x0a;  // separator
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

Vocabulary build_vocabulary(std::span<const Document> docs) {
  Vocabulary v;
  for (const auto& d : docs) {
    for (const auto& s : d.tokens) {
      for (const auto& t : s) v.add(t);
    }
  }
  return v;
}

Vocabulary build_vocabulary(std::span<const Document* const> docs) {
  Vocabulary v;
  for (const Document* d : docs) {
    for (const auto& s : d->tokens) {
      for (const auto& t : s) v.add(t);
    }
  }
  return v;
}

void encode_documents(std::span<Document> docs, const Vocabulary& vocab) {
  for (auto& d : docs) {
    d.sentences.clear();
    d.sentences.reserve(d.tokens.size());
    for (const auto& s : d.tokens) d.sentences.push_back(vocab.encode(s));
  }
}

}  // namespace aan::corpus
