#include "aan/corpus/rules.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "aan/corpus/vocabulary.hpp"
#include "aan/errors.hpp"

namespace aan::corpus {

using nlohmann::json;

bool AspectRuleSet::has_aspect(const std::string& aspect) const {
  return std::find(aspects.begin(), aspects.end(), aspect) != aspects.end();
}

bool AspectRuleSet::has_keywords(const std::string& aspect) const {
  auto it = keywords.find(aspect);
  return it != keywords.end() && !it->second.empty();
}

std::size_t AspectRuleSet::aspect_index(const std::string& aspect) const {
  auto it = std::find(aspects.begin(), aspects.end(), aspect);
  if (it == aspects.end()) throw ConfigError("unknown aspect \"" + aspect + "\"");
  return static_cast<std::size_t>(it - aspects.begin());
}

void AspectRuleSet::add_keyword(const std::string& aspect, const std::string& keyword) {
  if (!has_aspect(aspect)) throw ConfigError("unknown aspect \"" + aspect + "\"");
  Phrase p = tokenize(keyword);
  if (p.empty()) throw ConfigError("keyword \"" + keyword + "\" has no tokens");
  auto& list = keywords[aspect];
  if (std::find(list.begin(), list.end(), p) == list.end()) list.push_back(std::move(p));
}

std::vector<std::string> AspectRuleSet::keyword_strings(const std::string& aspect) const {
  std::vector<std::string> out;
  auto it = keywords.find(aspect);
  if (it == keywords.end()) return out;
  for (const auto& p : it->second) {
    std::string s;
    for (std::size_t i = 0; i < p.size(); ++i) {
      if (i) s += ' ';
      s += p[i];
    }
    out.push_back(std::move(s));
  }
  return out;
}

AspectRuleSet parse_rules(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::exception& e) {
    throw ParseError(std::string("rules: ") + e.what());
  }
  if (!j.is_object() || !j.contains("aspects") || !j["aspects"].is_array()) {
    throw ParseError("rules: expected an object with an \"aspects\" array");
  }
  AspectRuleSet rules;
  for (const auto& a : j["aspects"]) {
    if (!a.is_string()) throw ParseError("rules: aspect names must be strings");
    auto name = a.get<std::string>();
    if (rules.has_aspect(name)) throw ParseError("rules: duplicate aspect \"" + name + "\"");
    rules.aspects.push_back(name);
  }
  if (j.contains("keywords")) {
    if (!j["keywords"].is_object()) throw ParseError("rules: \"keywords\" must be an object");
    for (const auto& [aspect, list] : j["keywords"].items()) {
      if (!rules.has_aspect(aspect)) throw ParseError("rules: keywords for undeclared aspect \"" + aspect + "\"");
      if (!list.is_array()) throw ParseError("rules: keywords of \"" + aspect + "\" must be an array");
      rules.keywords[aspect];
      for (const auto& k : list) {
        if (!k.is_string()) throw ParseError("rules: keywords must be strings");
        try {
          rules.add_keyword(aspect, k.get<std::string>());
        } catch (const ConfigError& e) {
          throw ParseError(std::string("rules: ") + e.what());
        }
      }
    }
  }
  return rules;
}

AspectRuleSet load_rules(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open rules file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_rules(ss.str());
}

std::string dump_rules(const AspectRuleSet& rules) {
  json j;
  j["aspects"] = rules.aspects;
  j["keywords"] = json::object();
  for (const auto& a : rules.aspects) j["keywords"][a] = rules.keyword_strings(a);
  return j.dump(2) + "\n";
}

bool contains_phrase(const std::vector<std::string>& sentence, const Phrase& phrase) {
  if (phrase.empty() || phrase.size() > sentence.size()) return false;
  return std::search(sentence.begin(), sentence.end(), phrase.begin(), phrase.end()) != sentence.end();
}

namespace {

bool matches_any(const std::vector<std::string>& sentence, const std::vector<Phrase>& phrases) {
  return std::any_of(phrases.begin(), phrases.end(),
                     [&](const Phrase& p) { return contains_phrase(sentence, p); });
}

}  // namespace

void apply_rules(Document& doc, const AspectRuleSet& rules, const std::string& focal) {
  if (!rules.has_aspect(focal)) throw ConfigError("unknown focal aspect \"" + focal + "\"");
  static const std::vector<Phrase> kNone;
  auto it = rules.keywords.find(focal);
  const auto& mine = it == rules.keywords.end() ? kNone : it->second;

  std::map<std::size_t, int> labels;
  for (std::size_t i = 0; i < doc.tokens.size(); ++i) {
    const auto& s = doc.tokens[i];
    if (matches_any(s, mine)) {
      labels[i] = 1;
      continue;
    }
    for (const auto& [aspect, phrases] : rules.keywords) {
      if (aspect != focal && matches_any(s, phrases)) {
        labels[i] = 0;
        break;
      }
    }
  }
  doc.relevance[focal] = std::move(labels);
}

void apply_all_rules(Document& doc, const AspectRuleSet& rules) {
  for (const auto& a : rules.aspects) apply_rules(doc, rules, a);
}

}  // namespace aan::corpus
