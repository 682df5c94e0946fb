#include <cmath>

#include "aan/analysis/analysis.hpp"
#include "aan/corpus/synthetic.hpp"
#include "aan/corpus/vocabulary.hpp"
#include "aan/errors.hpp"
#include "doctest.h"

using namespace aan;
using namespace aan::analysis;
using aan::corpus::Origin;

namespace {

Document toy_doc(std::string id, Origin origin, std::vector<corpus::TokenIds> sents) {
  Document d;
  d.id = std::move(id);
  d.origin = origin;
  d.sentences = std::move(sents);
  for (const auto& s : d.sentences) d.tokens.emplace_back(s.size(), "t");
  return d;
}

model::ModelConfig toy_config() {
  model::ModelConfig c;
  c.vocab_size = 12;
  c.embed_dim = 3;
  c.features = 4;
  c.hidden = 5;
  c.dropout = 0;
  c.aspects = {"alpha", "beta"};
  return c;
}

RepresentationMatrix from_rows(std::vector<std::vector<double>> rows, std::size_t source_rows) {
  RepresentationMatrix m;
  m.values = ad::Tensor(ad::Shape{rows.size(), rows[0].size()});
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (std::size_t c = 0; c < rows[r].size(); ++c) m.values.at(r, c) = rows[r][c];
    m.ids.push_back("r" + std::to_string(r));
  }
  m.source_rows = source_rows;
  return m;
}

}  // namespace

TEST_CASE("representation matrix layout") {
  model::AAN model(toy_config(), 3);
  Document s = toy_doc("s", Origin::source, {{2, 3}, {4}});
  Document t = toy_doc("t", Origin::target, {{5, 6, 7}});
  std::vector<const Document*> src{&s}, tgt{&t};
  auto m = representation_matrix(model, src, tgt);
  CHECK(m.rows() == 2);
  CHECK(m.cols() == 4);
  CHECK(m.source_rows == 1);
  CHECK(m.ids == std::vector<std::string>{"s", "t"});

  std::vector<const Document*> twice{&s, &s};
  auto d = representation_matrix(model, twice, {}, 0, 0);
  for (std::size_t c = 0; c < 4; ++c) CHECK(d.values.at(0, c) == d.values.at(1, c));
  CHECK(representation_matrix(model, src, tgt).values == m.values);
  CHECK_THROWS_AS(representation_matrix(model, {}, {}), ContractViolation);
}

TEST_CASE("sparsity statistics") {
  auto zeros = from_rows({{0, 0}, {0, 0}}, 1);
  auto z = sparsity_stats(zeros);
  CHECK(z.fraction_small == 1.0);
  CHECK(z.stddev == 0.0);
  auto ones = from_rows({{1, 1}, {1, 1}}, 1);
  CHECK(sparsity_stats(ones).fraction_small == 0.0);

  auto mixed = from_rows({{0, 2}, {1e-7, -1}, {3, 0}}, 2);
  auto a = sparsity_stats(mixed);
  CHECK(a.fraction_small == doctest::Approx(3.0 / 6.0));
  CHECK(a.mean == doctest::Approx((2 + 1e-7 - 1 + 3) / 6.0));
  CHECK(a.source_mean == doctest::Approx((2 + 1e-7 - 1) / 4.0));
  CHECK(a.target_mean == doctest::Approx(1.5));
  auto permuted = from_rows({{3, 0}, {0, 2}, {1e-7, -1}}, 2);
  CHECK(sparsity_stats(permuted).fraction_small == a.fraction_small);
  CHECK(sparsity_stats(permuted).stddev == doctest::Approx(a.stddev));
  CHECK(sparsity_stats(mixed, 1e-8).fraction_small == doctest::Approx(2.0 / 6.0));
}

TEST_CASE("matrix exports") {
  auto m = from_rows({{0, 2}, {-1, 0}}, 1);
  const auto csv = matrix_csv(m);
  CHECK(csv == "id,origin,v0,v1\nr0,source,0,2\nr1,target,-1,0\n");
  const auto pgm = matrix_pgm(m);
  const std::string header = "P5\n2 2\n255\n";
  REQUIRE(pgm.size() == header.size() + 4);
  CHECK(pgm.substr(0, header.size()) == header);
  // mean 0.25, sd ~1.09: every value lies inside the clamp window
  const auto px = [&](std::size_t i) { return static_cast<unsigned char>(pgm[header.size() + i]); };
  CHECK(px(1) > px(0));
  CHECK(px(0) > px(2));
  auto flat = from_rows({{1, 1}}, 1);
  CHECK(static_cast<unsigned char>(matrix_pgm(flat).back()) == 128);
}

TEST_CASE("cosine similarity") {
  std::vector<double> v{1, 2, -3}, w{2, 4, -6}, o{3, 0, 1}, zero{0, 0, 0};
  CHECK(cosine(v, v) == doctest::Approx(1.0));
  CHECK(cosine(v, w) == doctest::Approx(1.0));
  CHECK(cosine(v, o) == doctest::Approx(0.0));
  CHECK(cosine(v, zero) == 0.0);
  std::vector<double> short_v{1};
  CHECK_THROWS_AS(cosine(v, short_v), DimensionError);
}

TEST_CASE("nearest neighbors") {
  auto pool = from_rows({{1, 0}, {0, 1}, {1, 1}, {2, 0}}, 2);
  std::vector<double> q{1, 0};
  auto nn = nearest_neighbors(q, pool, 3);
  REQUIRE(nn.size() == 3);
  // rows 0 and 3 tie at similarity 1; ids break the tie
  CHECK(nn[0].id == "r0");
  CHECK(nn[0].similarity == doctest::Approx(1.0));
  CHECK(nn[1].id == "r3");
  CHECK(nn[2].id == "r2");
  CHECK(nn[2].similarity == doctest::Approx(std::sqrt(0.5)));
  CHECK_THROWS_AS(nearest_neighbors(q, pool, 5), ConfigError);
  RepresentationMatrix empty;
  CHECK_THROWS_AS(nearest_neighbors(q, empty, 0), ConfigError);
}

TEST_CASE("relevance inspection") {
  auto cfg = toy_config();
  cfg.embed_dim = cfg.features = 1;
  cfg.window = 1;
  model::AAN model(cfg, 1);
  auto& P = model.params();
  // token 2 embeds high, everything else low; relevance is a positive
  // multiple of the sentence activation
  for (std::size_t v = 0; v < cfg.vocab_size; ++v) P.embedding.value.at(v, 0) = v == 2 ? 5.0 : -5.0;
  P.conv_w.value.fill(1.0);
  P.conv_b.value.fill(0.0);
  P.rel_w.value.fill(1.0);
  P.rel_b.value.fill(0.0);
  P.rel_out_w.value.fill(1.0);
  P.rel_out_b.value.fill(0.0);

  Document d = toy_doc("x", Origin::target, {{3, 4}, {2, 5}, {6}});
  d.focal["beta"] = {1};
  d.relevance["beta"] = {{1, 1}, {2, 0}};
  std::vector<const Document*> docs{&d};
  auto rep = relevance_inspection(model, docs, 1);
  REQUIRE(rep.sentences.size() == 3);
  CHECK(rep.focal_documents == 1);
  CHECK(rep.focal_mass == doctest::Approx(1.0));
  CHECK(rep.sentences[0].weight == 0.0);
  CHECK(rep.sentences[1].focal);
  CHECK(rep.labeled_sentences == 2);
  CHECK(rep.sentences[2].label == 0);

  SUBCASE("uniform scores spread the mass evenly") {
    P.rel_out_w.value.fill(0.0);
    P.rel_out_b.value.fill(0.7);
    auto u = relevance_inspection(model, docs, 1);
    CHECK(u.focal_mass == doctest::Approx(1.0 / 3.0));
    CHECK(u.label_mse == doctest::Approx((0.09 + 0.49) / 2));
    CHECK(u.label_mae == doctest::Approx((0.3 + 0.7) / 2));
    P.rel_out_b.value.fill(0.0);
    auto z = relevance_inspection(model, docs, 1);
    CHECK(z.focal_mass == doctest::Approx(1.0 / 3.0));
  }
  CHECK(relevance_csv(rep).rfind("doc_id,sentence,score,weight,focal,rule_label\n", 0) == 0);
}

TEST_CASE("keyword subsets") {
  corpus::AspectRuleSet rules;
  rules.aspects = {"alpha", "beta"};
  for (auto k : {"b1", "b2", "b3", "b4"}) rules.add_keyword("beta", k);
  rules.add_keyword("alpha", "a1");
  Rng rng(3);
  CHECK(subset_keywords(rules, "beta", 1.0, rng).keywords == rules.keywords);
  auto none = subset_keywords(rules, "beta", 0.0, rng);
  CHECK(none.keywords.at("beta").empty());
  CHECK(none.keywords.at("alpha") == rules.keywords.at("alpha"));
  auto half = subset_keywords(rules, "beta", 0.5, rng);
  REQUIRE(half.keywords.at("beta").size() == 2);
  for (const auto& p : half.keywords.at("beta")) {
    const auto& all = rules.keywords.at("beta");
    CHECK(std::find(all.begin(), all.end(), p) != all.end());
  }
  CHECK_THROWS_AS(subset_keywords(rules, "beta", 1.5, rng), ConfigError);
}

TEST_CASE("keyword sweep endpoints") {
  corpus::SynthSpec spec;
  spec.num_labeled = 60;
  spec.num_unlabeled = 60;
  spec.num_test = 30;
  spec.seed = 2;
  auto c = corpus::generate_synthetic(spec);
  std::vector<const Document*> train;
  for (auto& d : c.labeled) train.push_back(&d);
  for (auto& d : c.unlabeled) train.push_back(&d);
  auto vocab = corpus::build_vocabulary(std::span<const Document* const>(train));
  corpus::encode_documents(c.labeled, vocab);
  corpus::encode_documents(c.unlabeled, vocab);
  corpus::encode_documents(c.test, vocab);

  trainer::TrainConfig cfg;
  cfg.model.vocab_size = vocab.size();
  cfg.model.embed_dim = cfg.model.features = cfg.model.hidden = 6;
  cfg.model.aspects = {"alpha", "beta"};
  cfg.epochs = 1;
  cfg.batch_size = 16;

  SweepInputs in{c.labeled, c.unlabeled, c.test, c.rules};
  const std::vector<double> fractions{1.0, 0.0};
  const std::vector<std::uint64_t> seeds{4};
  auto pts = keyword_sweep(cfg, in, fractions, seeds);
  REQUIRE(pts.size() == 2);
  CHECK_FALSE(pts[0].degenerate);
  CHECK(pts[0].keywords == c.rules.keywords.at("beta").size());
  CHECK(pts[1].degenerate);

  auto base_cfg = cfg;
  base_cfg.seed = 4;
  auto base = trainer::train(base_cfg, c.labeled, c.unlabeled);
  std::vector<const Document*> test;
  for (auto& d : c.test) test.push_back(&d);
  CHECK(pts[0].target_accuracy == model::evaluate(*base.model, test, 1).accuracy);

  auto nr_cfg = base_cfg;
  nr_cfg.model.use_relevance = false;
  auto nr = trainer::train(nr_cfg, c.labeled, c.unlabeled);
  CHECK(pts[1].target_accuracy == model::evaluate(*nr.model, test, 1).accuracy);

  CHECK(sweep_csv(pts).rfind("fraction,seed,keywords,degenerate,target_accuracy\n1,4,", 0) == 0);
}
