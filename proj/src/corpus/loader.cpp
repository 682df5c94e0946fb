#include "aan/corpus/loader.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "aan/errors.hpp"

namespace aan::corpus {

using nlohmann::json;

bool parse_record(const std::string& line, std::size_t line_no, Document& out) {
  json j;
  try {
    j = json::parse(line);
  } catch (const json::exception& e) {
    throw ParseError(std::string("invalid JSON: ") + e.what(), line_no);
  }
  if (!j.is_object()) throw ParseError("record must be a JSON object", line_no);

  auto field = [&](const char* key) -> const json& {
    if (!j.contains(key)) throw ParseError(std::string("missing field \"") + key + "\"", line_no);
    return j[key];
  };

  Document doc;
  const json& id = field("id");
  if (!id.is_string() || id.get<std::string>().empty()) throw ParseError("\"id\" must be a non-empty string", line_no);
  doc.id = id.get<std::string>();

  const json& origin = field("origin");
  if (!origin.is_string()) throw ParseError("\"origin\" must be a string", line_no);
  try {
    doc.origin = parse_origin(origin.get<std::string>());
  } catch (const ParseError& e) {
    throw ParseError(e.what(), line_no);
  }

  const json& sentences = field("sentences");
  if (!sentences.is_array()) throw ParseError("\"sentences\" must be an array of strings", line_no);
  // Original index -> kept index; sentences with no tokens are dropped.
  std::vector<long> remap;
  for (const auto& s : sentences) {
    if (!s.is_string()) throw ParseError("\"sentences\" must be an array of strings", line_no);
    auto toks = tokenize(s.get<std::string>());
    if (toks.empty()) {
      remap.push_back(-1);
    } else {
      remap.push_back(static_cast<long>(doc.tokens.size()));
      doc.tokens.push_back(std::move(toks));
    }
  }

  if (j.contains("labels") && !j["labels"].is_null()) {
    if (!j["labels"].is_object()) throw ParseError("\"labels\" must be an object", line_no);
    for (const auto& [aspect, v] : j["labels"].items()) {
      if (!v.is_number_integer() || v.get<long>() < 0) {
        throw ParseError("label of \"" + aspect + "\" must be a non-negative integer", line_no);
      }
      doc.labels[aspect] = v.get<int>();
    }
  }

  if (j.contains("focal") && !j["focal"].is_null()) {
    if (!j["focal"].is_object()) throw ParseError("\"focal\" must be an object", line_no);
    for (const auto& [aspect, list] : j["focal"].items()) {
      if (!list.is_array()) throw ParseError("focal sentences of \"" + aspect + "\" must be an array", line_no);
      auto& dst = doc.focal[aspect];
      for (const auto& v : list) {
        if (!v.is_number_unsigned() || v.get<std::size_t>() >= remap.size()) {
          throw ParseError("focal index out of range for \"" + aspect + "\"", line_no);
        }
        long k = remap[v.get<std::size_t>()];
        if (k >= 0) dst.push_back(static_cast<std::size_t>(k));
      }
    }
  }

  if (doc.tokens.empty()) return false;
  out = std::move(doc);
  return true;
}

LoadedFile parse_jsonl(const std::string& text) {
  LoadedFile result;
  std::set<std::string> seen;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    Document doc;
    if (!parse_record(line, line_no, doc)) {
      ++result.skipped_empty;
      continue;
    }
    if (!seen.insert(doc.id).second) throw ParseError("duplicate document id \"" + doc.id + "\"", line_no);
    result.docs.push_back(std::move(doc));
  }
  return result;
}

LoadedFile read_jsonl(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open corpus file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return parse_jsonl(ss.str());
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

std::string to_json_line(const Document& doc) {
  json j;
  j["id"] = doc.id;
  j["origin"] = std::string(to_string(doc.origin));
  json sentences = json::array();
  for (const auto& s : doc.tokens) {
    std::string text;
    for (std::size_t i = 0; i < s.size(); ++i) {
      if (i) text += ' ';
      text += s[i];
    }
    sentences.push_back(text);
  }
  j["sentences"] = sentences;
  if (!doc.labels.empty()) j["labels"] = doc.labels;
  if (!doc.focal.empty()) j["focal"] = doc.focal;
  return j.dump();
}

namespace {

void check_labels(const std::vector<Document>& docs, const AspectRuleSet& rules) {
  for (const auto& d : docs) {
    for (const auto& [aspect, _] : d.labels) {
      if (!rules.has_aspect(aspect)) {
        throw ParseError("document \"" + d.id + "\" has a label for undeclared aspect \"" + aspect + "\"");
      }
    }
  }
}

std::vector<Document> load_split(const std::filesystem::path& path, const AspectRuleSet& rules,
                                 std::size_t& skipped) {
  if (path.empty()) return {};
  auto file = read_jsonl(path);
  skipped += file.skipped_empty;
  check_labels(file.docs, rules);
  for (auto& d : file.docs) apply_all_rules(d, rules);
  return std::move(file.docs);
}

Corpus load_impl(const std::filesystem::path& labeled, const std::filesystem::path& unlabeled,
                 const std::filesystem::path& test, const AspectRuleSet& rules, const Vocabulary* vocab) {
  Corpus c;
  c.labeled = load_split(labeled, rules, c.skipped_empty);
  c.unlabeled = load_split(unlabeled, rules, c.skipped_empty);
  c.test = load_split(test, rules, c.skipped_empty);

  std::set<std::string> train_ids;
  for (const auto* split : {&c.labeled, &c.unlabeled}) {
    for (const auto& d : *split) {
      if (!train_ids.insert(d.id).second) throw ParseError("duplicate document id \"" + d.id + "\"");
    }
  }

  if (vocab) {
    c.vocab = *vocab;
  } else {
    std::vector<const Document*> train;
    for (const auto& d : c.labeled) train.push_back(&d);
    for (const auto& d : c.unlabeled) train.push_back(&d);
    c.vocab = build_vocabulary(std::span<const Document* const>(train));
  }
  encode_documents(c.labeled, c.vocab);
  encode_documents(c.unlabeled, c.vocab);
  encode_documents(c.test, c.vocab);
  return c;
}

}  // namespace

Corpus load_corpus(const std::filesystem::path& labeled, const std::filesystem::path& unlabeled,
                   const std::filesystem::path& test, const AspectRuleSet& rules) {
  return load_impl(labeled, unlabeled, test, rules, nullptr);
}

Corpus load_corpus(const std::filesystem::path& labeled, const std::filesystem::path& unlabeled,
                   const std::filesystem::path& test, const AspectRuleSet& rules, const Vocabulary& vocab) {
  return load_impl(labeled, unlabeled, test, rules, &vocab);
}

void write_vocabulary(const std::filesystem::path& path, const Vocabulary& vocab) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write vocabulary " + path.string());
  for (const auto& t : vocab.tokens()) out << t << '\n';
}

Vocabulary read_vocabulary(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open vocabulary " + path.string());
  std::vector<std::string> tokens;
  std::string line;
  while (std::getline(in, line)) tokens.push_back(line);
  return Vocabulary::from_tokens(tokens);
}

}  // namespace aan::corpus
