#include "aan/analysis/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "aan/errors.hpp"

namespace aan::analysis {

namespace {

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << text;
}

}  // namespace

RepresentationMatrix representation_matrix(const AAN& model, std::span<const Document* const> source,
                                           std::span<const Document* const> target, std::size_t source_aspect,
                                           std::size_t target_aspect) {
  if (source.empty() && target.empty()) throw ContractViolation("representation matrix needs documents");
  const std::size_t f = model.config().features;
  RepresentationMatrix m;
  m.values = ad::Tensor(ad::Shape{source.size() + target.size(), f});
  m.source_rows = source.size();
  std::size_t row = 0;
  auto fill = [&](std::span<const Document* const> docs, std::size_t aspect) {
    for (std::size_t b = 0; b < docs.size(); b += 64) {
      auto part = docs.subspan(b, std::min<std::size_t>(64, docs.size() - b));
      const auto xtr = model.encode(part, aspect).xtr;
      for (std::size_t j = 0; j < part.size(); ++j, ++row) {
        for (std::size_t c = 0; c < f; ++c) m.values.at(row, c) = xtr.at(j, c);
        m.ids.push_back(part[j]->id);
      }
    }
  };
  fill(source, source_aspect);
  fill(target, target_aspect);
  return m;
}

SparsityReport sparsity_stats(const RepresentationMatrix& m, double threshold) {
  SparsityReport r;
  r.threshold = threshold;
  const auto data = m.values.data();
  if (data.empty()) return r;
  std::size_t small = 0;
  double sum = 0;
  for (double v : data) {
    small += std::abs(v) < threshold;
    sum += v;
  }
  r.fraction_small = double(small) / double(data.size());
  r.mean = sum / double(data.size());
  double ss = 0;
  for (double v : data) ss += (v - r.mean) * (v - r.mean);
  r.stddev = std::sqrt(ss / double(data.size()));
  const std::size_t cols = m.cols(), split = m.source_rows * cols;
  auto mean_of = [&](std::size_t lo, std::size_t hi) {
    if (hi <= lo) return 0.0;
    double s = 0;
    for (std::size_t i = lo; i < hi; ++i) s += data[i];
    return s / double(hi - lo);
  };
  r.source_mean = mean_of(0, split);
  r.target_mean = mean_of(split, data.size());
  return r;
}

std::string matrix_csv(const RepresentationMatrix& m) {
  std::ostringstream out;
  out << "id,origin";
  for (std::size_t c = 0; c < m.cols(); ++c) out << ",v" << c;
  out << '\n';
  for (std::size_t r = 0; r < m.rows(); ++r) {
    out << m.ids[r] << ',' << (r < m.source_rows ? "source" : "target");
    for (std::size_t c = 0; c < m.cols(); ++c) out << ',' << fmt(m.values.at(r, c));
    out << '\n';
  }
  return out.str();
}

void write_matrix_csv(const std::filesystem::path& path, const RepresentationMatrix& m) {
  write_text(path, matrix_csv(m));
}

std::string matrix_pgm(const RepresentationMatrix& m) {
  const auto s = sparsity_stats(m);
  const double lo = s.mean - 3 * s.stddev, hi = s.mean + 3 * s.stddev;
  std::string out = "P5\n" + std::to_string(m.cols()) + " " + std::to_string(m.rows()) + "\n255\n";
  for (double v : m.values.data()) {
    int g = 128;
    if (hi > lo) g = int(std::lround(255.0 * (std::clamp(v, lo, hi) - lo) / (hi - lo)));
    out.push_back(char(static_cast<unsigned char>(g)));
  }
  return out;
}

void write_matrix_pgm(const std::filesystem::path& path, const RepresentationMatrix& m) {
  write_text(path, matrix_pgm(m));
}

double cosine(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw DimensionError("cosine of vectors with different lengths");
  double dot = 0, na = 0, nb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na == 0 || nb == 0) return 0.0;
  return dot / (std::sqrt(na) * std::sqrt(nb));
}

std::vector<Neighbor> nearest_neighbors(std::span<const double> query, const RepresentationMatrix& pool, std::size_t k) {
  if (pool.rows() == 0) throw ConfigError("neighbor pool is empty");
  if (k > pool.rows()) {
    throw ConfigError("k = " + std::to_string(k) + " exceeds the pool size " + std::to_string(pool.rows()));
  }
  std::vector<Neighbor> all;
  const auto data = pool.values.data();
  for (std::size_t r = 0; r < pool.rows(); ++r) {
    all.push_back({r, pool.ids[r], cosine(query, data.subspan(r * pool.cols(), pool.cols()))});
  }
  std::stable_sort(all.begin(), all.end(), [](const Neighbor& a, const Neighbor& b) {
    if (a.similarity != b.similarity) return a.similarity > b.similarity;
    return a.id < b.id;
  });
  all.resize(k);
  return all;
}

RelevanceReport relevance_inspection(const AAN& model, std::span<const Document* const> docs, std::size_t aspect,
                                     std::size_t chunk) {
  RelevanceReport rep;
  const auto& name = model.config().aspects.at(aspect);
  double mass_sum = 0, se = 0, ae = 0;
  for (std::size_t b = 0; b < docs.size(); b += chunk) {
    auto part = docs.subspan(b, std::min(chunk, docs.size() - b));
    const auto enc = model.encode(part, aspect);
    for (std::size_t j = 0; j < part.size(); ++j) {
      const Document& d = *part[j];
      const auto seg = enc.doc_segments[j];
      double total = 0;
      for (std::size_t i = 0; i < seg.length; ++i) total += enc.relevance[seg.offset + i];
      const bool uniform = total < model::kRelevanceFloor;
      std::vector<bool> focal(seg.length, false);
      bool has_focal = false;
      if (auto it = d.focal.find(name); it != d.focal.end()) {
        for (auto i : it->second) {
          if (i < seg.length) focal[i] = has_focal = true;
        }
      }
      const std::map<std::size_t, int>* labels = nullptr;
      if (auto it = d.relevance.find(name); it != d.relevance.end()) labels = &it->second;
      double mass = 0;
      for (std::size_t i = 0; i < seg.length; ++i) {
        SentenceRelevance s;
        s.doc_id = d.id;
        s.sentence = i;
        s.score = enc.relevance[seg.offset + i];
        s.weight = uniform ? 1.0 / double(seg.length) : s.score / total;
        s.focal = focal[i];
        if (labels) {
          if (auto it = labels->find(i); it != labels->end()) {
            s.label = it->second;
            se += (s.score - s.label) * (s.score - s.label);
            ae += std::abs(s.score - s.label);
            ++rep.labeled_sentences;
          }
        }
        if (s.focal) mass += s.weight;
        rep.sentences.push_back(std::move(s));
      }
      if (has_focal) {
        mass_sum += std::min(mass, 1.0);
        ++rep.focal_documents;
      }
    }
  }
  if (rep.focal_documents) rep.focal_mass = mass_sum / double(rep.focal_documents);
  if (rep.labeled_sentences) {
    rep.label_mse = se / double(rep.labeled_sentences);
    rep.label_mae = ae / double(rep.labeled_sentences);
  }
  return rep;
}

std::string relevance_csv(const RelevanceReport& report) {
  std::ostringstream out;
  out << "doc_id,sentence,score,weight,focal,rule_label\n";
  for (const auto& s : report.sentences) {
    out << s.doc_id << ',' << s.sentence << ',' << fmt(s.score) << ',' << fmt(s.weight) << ',' << (s.focal ? 1 : 0)
        << ',';
    if (s.label >= 0) out << s.label;
    out << '\n';
  }
  return out.str();
}

corpus::AspectRuleSet subset_keywords(const corpus::AspectRuleSet& rules, const std::string& aspect, double fraction,
                                      Rng& rng) {
  if (!(fraction >= 0 && fraction <= 1)) throw ConfigError("keyword fraction must lie in [0, 1]");
  if (!rules.has_aspect(aspect)) throw ConfigError("unknown aspect \"" + aspect + "\"");
  auto out = rules;
  auto& list = out.keywords[aspect];
  const auto keep = static_cast<std::size_t>(std::lround(fraction * double(list.size())));
  rng.shuffle(list.begin(), list.end());
  list.resize(keep);
  // restore declaration order for readable dumps
  const auto& orig = rules.keywords.count(aspect) ? rules.keywords.at(aspect) : std::vector<corpus::Phrase>{};
  std::vector<corpus::Phrase> ordered;
  for (const auto& p : orig) {
    if (std::find(list.begin(), list.end(), p) != list.end()) ordered.push_back(p);
  }
  list = std::move(ordered);
  return out;
}

std::vector<SweepPoint> keyword_sweep(const trainer::TrainConfig& config, const SweepInputs& inputs,
                                      std::span<const double> fractions, std::span<const std::uint64_t> seeds) {
  const auto& target = config.model.aspects[1];
  const auto& kw = inputs.rules.keywords;
  if (!kw.count(target) || kw.at(target).size() < 2) {
    throw ConfigError("keyword sweep needs at least two keywords for \"" + target + "\"");
  }
  std::vector<const Document*> test;
  for (const auto& d : inputs.test) test.push_back(&d);
  const auto target_index = 1;

  std::vector<SweepPoint> points;
  for (std::size_t fi = 0; fi < fractions.size(); ++fi) {
    for (auto seed : seeds) {
      Rng rng = Rng::stream(seed, 100 + fi);
      const auto rules = subset_keywords(inputs.rules, target, fractions[fi], rng);
      auto relabel = [&](std::span<const Document> docs) {
        std::vector<Document> out(docs.begin(), docs.end());
        for (auto& d : out) corpus::apply_all_rules(d, rules);
        return out;
      };
      const auto labeled = relabel(inputs.labeled);
      const auto unlabeled = relabel(inputs.unlabeled);

      SweepPoint pt;
      pt.fraction = fractions[fi];
      pt.seed = seed;
      pt.keywords = rules.keywords.count(target) ? rules.keywords.at(target).size() : 0;
      pt.degenerate = pt.keywords == 0;
      auto cfg = config;
      cfg.seed = seed;
      if (pt.degenerate) cfg.model.use_relevance = false;
      auto result = trainer::train(cfg, labeled, unlabeled);
      pt.target_accuracy = model::evaluate(*result.model, test, target_index).accuracy;
      points.push_back(pt);
    }
  }
  return points;
}

std::string sweep_csv(std::span<const SweepPoint> points) {
  std::ostringstream out;
  out << "fraction,seed,keywords,degenerate,target_accuracy\n";
  for (const auto& p : points) {
    out << fmt(p.fraction) << ',' << p.seed << ',' << p.keywords << ',' << (p.degenerate ? 1 : 0) << ','
        << fmt(p.target_accuracy) << '\n';
  }
  return out.str();
}

}  // namespace aan::analysis
