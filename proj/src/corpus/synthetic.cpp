#include "aan/corpus/synthetic.hpp"

#include <array>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "aan/corpus/loader.hpp"
#include "aan/errors.hpp"
#include "aan/rng.hpp"

namespace aan::corpus {

namespace {

std::string tok(const std::string& prefix, std::size_t i) { return prefix + std::to_string(i); }

void check_range(const char* name, std::size_t lo, std::size_t hi) {
  if (lo > hi) {
    throw ConfigError(std::string(name) + ": minimum " + std::to_string(lo) + " exceeds maximum " +
                      std::to_string(hi));
  }
}

bool is_word(const std::string& s) {
  if (s.empty()) return false;
  for (char c : s) {
    if (!std::isalnum(static_cast<unsigned char>(c)) || std::isupper(static_cast<unsigned char>(c))) return false;
  }
  return true;
}

struct Lexicon {
  // [aspect][class] -> tokens; class 0 negative, 1 positive
  std::vector<std::array<std::vector<std::string>, 2>> polarity;
  std::vector<std::vector<std::string>> names;
  std::vector<std::string> filler;
};

Lexicon make_lexicon(const SynthSpec& spec) {
  Lexicon lex;
  const auto shared = static_cast<std::size_t>(std::lround(spec.overlap * double(spec.polarity_per_class)));
  for (const auto& a : spec.aspects) {
    std::array<std::vector<std::string>, 2> pol;
    const char* cls[2] = {"neg", "pos"};
    for (int c = 0; c < 2; ++c) {
      for (std::size_t i = 0; i < shared; ++i) pol[c].push_back(tok(std::string("shared") + cls[c], i));
      for (std::size_t i = shared; i < spec.polarity_per_class; ++i) pol[c].push_back(tok(a + cls[c], i - shared));
    }
    lex.polarity.push_back(std::move(pol));
    std::vector<std::string> names;
    for (std::size_t i = 0; i < spec.names_per_aspect; ++i) names.push_back(tok(a + "name", i));
    lex.names.push_back(std::move(names));
  }
  for (std::size_t i = 0; i < spec.filler_vocab; ++i) lex.filler.push_back(tok("w", i));
  return lex;
}

std::size_t between(Rng& rng, std::size_t lo, std::size_t hi) { return lo + rng.index(hi - lo + 1); }

std::vector<std::string> filler_words(const SynthSpec& spec, const Lexicon& lex, Rng& rng) {
  std::vector<std::string> out;
  const auto n = between(rng, spec.filler_min, spec.filler_max);
  for (std::size_t i = 0; i < n; ++i) out.push_back(lex.filler[rng.index(lex.filler.size())]);
  return out;
}

Document make_document(const SynthSpec& spec, const Lexicon& lex, Rng& rng, const std::string& id,
                       const std::array<int, 2>& labels) {
  struct Draft {
    std::vector<std::string> words;
    int aspect;  // -1 for filler
  };
  std::vector<Draft> drafts;
  for (int a = 0; a < 2; ++a) {
    const auto nfocal = between(rng, spec.focal_min, spec.focal_max);
    for (std::size_t k = 0; k < nfocal; ++k) {
      Draft d{filler_words(spec, lex, rng), a};
      d.words.push_back(lex.names[a][rng.index(lex.names[a].size())]);
      const auto& pol = lex.polarity[a][labels[a]];
      const auto np = between(rng, spec.polarity_tokens_min, spec.polarity_tokens_max);
      for (std::size_t p = 0; p < np; ++p) d.words.push_back(pol[rng.index(pol.size())]);
      rng.shuffle(d.words.begin(), d.words.end());
      drafts.push_back(std::move(d));
    }
  }
  const auto total = std::max(drafts.size(), between(rng, spec.min_sentences, spec.max_sentences));
  while (drafts.size() < total) drafts.push_back(Draft{filler_words(spec, lex, rng), -1});
  rng.shuffle(drafts.begin(), drafts.end());

  Document doc;
  doc.id = id;
  for (std::size_t i = 0; i < drafts.size(); ++i) {
    if (drafts[i].aspect >= 0) doc.focal[spec.aspects[drafts[i].aspect]].push_back(i);
    doc.tokens.push_back(std::move(drafts[i].words));
  }
  return doc;
}

std::string id_for(const char* prefix, std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%s%06zu", prefix, i);
  return buf;
}

}  // namespace

void SynthSpec::validate() const {
  if (aspects.size() != 2) throw ConfigError("synthetic corpus needs exactly 2 aspects");
  if (aspects[0] == aspects[1]) throw ConfigError("aspect names must differ");
  for (const auto& a : aspects) {
    if (!is_word(a)) throw ConfigError("aspect name \"" + a + "\" must be lowercase alphanumeric");
    if (a == "shared" || a == "w") throw ConfigError("aspect name \"" + a + "\" is reserved");
  }
  if (!(overlap >= 0.0 && overlap <= 1.0)) throw ConfigError("overlap must lie in [0, 1]");
  if (!(correlation >= -1.0 && correlation <= 1.0)) throw ConfigError("correlation must lie in [-1, 1]");
  if (!(positive_rate > 0.0 && positive_rate < 1.0)) throw ConfigError("positive rate must lie in (0, 1)");
  const double q = positive_rate;
  const double lowest = std::max(-q / (1 - q), -(1 - q) / q);
  if (correlation < lowest - 1e-12) {
    throw ConfigError("correlation " + std::to_string(correlation) + " is unreachable with positive rate " +
                      std::to_string(q) + " (minimum " + std::to_string(lowest) + ")");
  }
  if (num_labeled == 0) throw ConfigError("need at least one labeled document");
  if (min_sentences == 0) throw ConfigError("documents need at least one sentence");
  check_range("sentences", min_sentences, max_sentences);
  check_range("focal sentences", focal_min, focal_max);
  check_range("polarity tokens", polarity_tokens_min, polarity_tokens_max);
  check_range("filler words", filler_min, filler_max);
  if (focal_min == 0) throw ConfigError("each aspect needs at least one focal sentence");
  if (polarity_tokens_min == 0) throw ConfigError("focal sentences need at least one polarity token");
  if (names_per_aspect == 0) throw ConfigError("each aspect needs at least one name token");
  if (polarity_per_class == 0) throw ConfigError("polarity vocabulary is empty");
  if (filler_vocab == 0 && (filler_max > 0 || max_sentences > 2 * focal_min)) {
    throw ConfigError("filler vocabulary is empty");
  }
}

SynthCorpus generate_synthetic(const SynthSpec& spec) {
  spec.validate();
  const Lexicon lex = make_lexicon(spec);
  Rng rng(spec.seed);
  const double q = spec.positive_rate;
  const double k = spec.correlation;

  SynthCorpus out;
  std::vector<int> ys, yt;
  auto draw_labels = [&]() {
    std::array<int, 2> y{};
    y[0] = rng.bernoulli(q) ? 1 : 0;
    const double p1 = y[0] == 1 ? q + k * (1 - q) : q - k * q;
    y[1] = rng.bernoulli(p1) ? 1 : 0;
    ys.push_back(y[0]);
    yt.push_back(y[1]);
    return y;
  };

  const auto& src = spec.aspects[0];
  const auto& tgt = spec.aspects[1];
  for (std::size_t i = 0; i < spec.num_labeled; ++i) {
    auto y = draw_labels();
    auto d = make_document(spec, lex, rng, id_for("l", i), y);
    d.origin = Origin::source;
    d.labels[src] = y[0];
    out.labeled.push_back(std::move(d));
  }
  for (std::size_t i = 0; i < spec.num_unlabeled; ++i) {
    auto y = draw_labels();
    auto d = make_document(spec, lex, rng, id_for("u", i), y);
    d.origin = Origin::target;
    out.unlabeled.push_back(std::move(d));
  }
  for (std::size_t i = 0; i < spec.num_test; ++i) {
    auto y = draw_labels();
    auto d = make_document(spec, lex, rng, id_for("t", i), y);
    d.origin = Origin::target;
    d.labels[src] = y[0];
    d.labels[tgt] = y[1];
    out.test.push_back(std::move(d));
  }

  out.rules.aspects = spec.aspects;
  for (std::size_t a = 0; a < 2; ++a) {
    for (const auto& n : lex.names[a]) out.rules.add_keyword(spec.aspects[a], n);
  }
  for (auto* split : {&out.labeled, &out.unlabeled, &out.test}) {
    for (auto& d : *split) apply_all_rules(d, out.rules);
  }

  out.stats.documents = ys.size();
  double ps = 0, pt = 0;
  for (std::size_t i = 0; i < ys.size(); ++i) {
    ps += ys[i];
    pt += yt[i];
  }
  out.stats.source_positive = ps / double(ys.size());
  out.stats.target_positive = pt / double(ys.size());
  out.stats.correlation = pearson(ys, yt);
  return out;
}

std::vector<std::filesystem::path> write_synthetic(const SynthCorpus& corpus, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  std::vector<std::filesystem::path> written;
  auto write_split = [&](const char* name, const std::vector<Document>& docs) {
    auto path = dir / name;
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write " + path.string());
    for (const auto& d : docs) out << to_json_line(d) << '\n';
    written.push_back(path);
  };
  write_split("train.jsonl", corpus.labeled);
  write_split("unlabeled.jsonl", corpus.unlabeled);
  write_split("test.jsonl", corpus.test);
  auto rules_path = dir / "rules.json";
  std::ofstream out(rules_path, std::ios::binary);
  if (!out) throw Error("cannot write " + rules_path.string());
  out << dump_rules(corpus.rules);
  written.push_back(rules_path);
  return written;
}

int decode_label(const Document& doc, const std::string& aspect) {
  const std::string name = aspect + "name";
  int pos = 0, neg = 0;
  for (const auto& s : doc.tokens) {
    bool mine = false;
    for (const auto& t : s) mine = mine || t.rfind(name, 0) == 0;
    if (!mine) continue;
    for (const auto& t : s) {
      for (const std::string& prefix : {aspect, std::string("shared")}) {
        if (t.rfind(prefix + "pos", 0) == 0) ++pos;
        if (t.rfind(prefix + "neg", 0) == 0) ++neg;
      }
    }
  }
  if (pos > neg) return 1;
  if (neg > pos) return 0;
  return -1;
}

double pearson(const std::vector<int>& a, const std::vector<int>& b) {
  if (a.size() != b.size() || a.empty()) throw DimensionError("pearson: sizes differ or empty");
  const double n = double(a.size());
  double ma = 0, mb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ma += a[i];
    mb += b[i];
  }
  ma /= n;
  mb /= n;
  double sab = 0, saa = 0, sbb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  if (saa == 0 || sbb == 0) return 0;
  return sab / std::sqrt(saa * sbb);
}

}  // namespace aan::corpus
