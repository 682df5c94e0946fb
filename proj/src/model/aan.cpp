#include "aan/model/aan.hpp"

#include <cmath>
#include <optional>

#include "aan/errors.hpp"

namespace aan::model {

using namespace ad;

std::string to_string(Pooling p) { return p == Pooling::max ? "max" : "mean"; }
std::string to_string(Assignment a) { return a == Assignment::paired ? "paired" : "by-origin"; }
std::string to_string(TransformMode t) {
  switch (t) {
    case TransformMode::trainable: return "trainable";
    case TransformMode::frozen_identity: return "frozen-identity";
    case TransformMode::absent: return "absent";
  }
  return "?";
}

Pooling parse_pooling(const std::string& s) {
  if (s == "max") return Pooling::max;
  if (s == "mean") return Pooling::mean;
  throw ConfigError("pooling must be max or mean, got \"" + s + "\"");
}

Assignment parse_assignment(const std::string& s) {
  if (s == "paired") return Assignment::paired;
  if (s == "by-origin" || s == "by_origin") return Assignment::by_origin;
  throw ConfigError("assignment must be paired or by-origin, got \"" + s + "\"");
}

TransformMode parse_transform(const std::string& s) {
  if (s == "trainable") return TransformMode::trainable;
  if (s == "frozen-identity" || s == "frozen_identity") return TransformMode::frozen_identity;
  if (s == "absent") return TransformMode::absent;
  throw ConfigError("transform must be trainable, frozen-identity or absent, got \"" + s + "\"");
}

void ModelConfig::validate() const {
  if (vocab_size < 2) throw ConfigError("vocabulary size must be at least 2");
  if (embed_dim == 0 || features == 0 || hidden == 0) throw ConfigError("layer sizes must be positive");
  if (window == 0 || window % 2 == 0) throw ConfigError("conv window must be odd");
  if (classes < 2) throw ConfigError("need at least 2 classes");
  if (!(dropout >= 0 && dropout < 1)) throw ConfigError("dropout must lie in [0, 1)");
  if (!(lambda_tr >= 0) || !std::isfinite(lambda_tr)) throw ConfigError("lambda_tr must be finite and >= 0");
  if (aspects[0] == aspects[1]) throw ConfigError("source and target aspects must differ");
}

std::vector<Parameter*> AANParameters::all() {
  return {&embedding, &conv_w,    &conv_b, &bn_gamma, &bn_beta, &rec_w,  &rec_b,  &rel_w,
          &rel_b,     &rel_out_w, &rel_out_b, &transform, &lab_w1, &lab_b1, &lab_w2, &lab_b2,
          &dom_w1,    &dom_b1,    &dom_w2, &dom_b2};
}

std::vector<const Parameter*> AANParameters::all() const {
  auto v = const_cast<AANParameters*>(this)->all();
  return {v.begin(), v.end()};
}

std::vector<Parameter*> AANParameters::adversary() { return {&dom_w1, &dom_b1, &dom_w2, &dom_b2}; }

Parameter& AANParameters::by_name(const std::string& name) {
  for (auto* p : all()) {
    if (p->name == name) return *p;
  }
  throw ConfigError("no parameter named \"" + name + "\"");
}

namespace {

Tensor glorot(std::size_t in, std::size_t out, Rng& rng) {
  const double limit = std::sqrt(6.0 / double(in + out));
  Tensor t(Shape{in, out});
  for (auto& v : t.data()) v = rng.uniform(-limit, limit);
  return t;
}

Tensor uniform(Shape s, double lo, double hi, Rng& rng) {
  Tensor t(std::move(s));
  for (auto& v : t.data()) v = rng.uniform(lo, hi);
  return t;
}

std::optional<Var> plus(std::optional<Var> acc, Var term) {
  if (!acc) return term;
  return add(*acc, term);
}

}  // namespace

AAN::AAN(const ModelConfig& config, std::uint64_t init_seed) : config_(config) {
  config_.validate();
  Rng rng(init_seed);
  const auto V = config_.vocab_size, d = config_.embed_dim, f = config_.features, h = config_.hidden,
             m = config_.classes, w = config_.window;
  auto& p = params_;
  p.embedding = Parameter("embedding", uniform(Shape{V, d}, -0.1, 0.1, rng));
  p.conv_w = Parameter("conv.weight", glorot(w * d, f, rng));
  p.conv_b = Parameter("conv.bias", Tensor(Shape{f}));
  p.bn_gamma = Parameter("bn.gamma", Tensor(Shape{f}, 1.0));
  p.bn_beta = Parameter("bn.beta", Tensor(Shape{f}));
  p.bn = BatchNormStats(f);
  p.rec_w = Parameter("rec.weight", glorot(f, d, rng));
  p.rec_b = Parameter("rec.bias", Tensor(Shape{d}));
  p.rel_w = Parameter("rel.hidden.weight", glorot(f, h, rng));
  p.rel_b = Parameter("rel.hidden.bias", Tensor(Shape{h}));
  p.rel_out_w = Parameter("rel.out.weight", glorot(h, 2, rng));
  p.rel_out_b = Parameter("rel.out.bias", Tensor(Shape{2}, kRelevanceBiasInit));
  p.transform = Parameter("transform", Tensor::identity(f));
  p.transform.trainable = config_.transform == TransformMode::trainable;
  p.lab_w1 = Parameter("label.hidden.weight", glorot(f, h, rng));
  p.lab_b1 = Parameter("label.hidden.bias", Tensor(Shape{h}));
  p.lab_w2 = Parameter("label.out.weight", glorot(h, m, rng));
  p.lab_b2 = Parameter("label.out.bias", Tensor(Shape{m}));
  p.dom_w1 = Parameter("domain.hidden.weight", glorot(f, h, rng));
  p.dom_b1 = Parameter("domain.hidden.bias", Tensor(Shape{h}));
  p.dom_w2 = Parameter("domain.out.weight", glorot(h, 2, rng));
  p.dom_b2 = Parameter("domain.out.bias", Tensor(Shape{2}));
  if (!config_.use_relevance) {
    for (auto* q : {&p.rel_w, &p.rel_b, &p.rel_out_w, &p.rel_out_b}) q->trainable = false;
  }
  if (!config_.use_reconstruction) {
    for (auto* q : {&p.rec_w, &p.rec_b}) q->trainable = false;
  }
}

std::size_t AAN::aspect_index(const std::string& name) const {
  for (std::size_t i = 0; i < 2; ++i) {
    if (config_.aspects[i] == name) return i;
  }
  throw ConfigError("aspect \"" + name + "\" is neither the source nor the target aspect");
}

/// Shared encoder graph for training and evaluation.
struct AAN::Encoder {
  const ModelConfig& cfg;
  AANParameters& p;
  Tape& t;
  Mode mode;
  Rng& rng;

  std::vector<std::size_t> ids;
  std::vector<Segment> sent;     // token rows per sentence
  std::vector<Segment> docseg;   // sentence rows per document
  std::vector<std::size_t> doc_of_sentence;
  std::vector<std::size_t> doc_tokens;

  Var X, H, Xsen, R;

  void layout(std::span<const Document* const> docs) {
    if (docs.empty()) throw ContractViolation("empty document batch");
    for (std::size_t j = 0; j < docs.size(); ++j) {
      const Document& d = *docs[j];
      if (d.sentences.empty() || d.sentences.size() != d.tokens.size()) {
        throw ContractViolation("document \"" + d.id + "\" is empty or not encoded");
      }
      docseg.push_back({sent.size(), d.sentences.size()});
      std::size_t n = 0;
      for (const auto& s : d.sentences) {
        if (s.empty()) throw ContractViolation("document \"" + d.id + "\" has an empty sentence");
        sent.push_back({ids.size(), s.size()});
        ids.insert(ids.end(), s.begin(), s.end());
        doc_of_sentence.push_back(j);
        n += s.size();
      }
      doc_tokens.push_back(n);
    }
    for (auto id : ids) {
      if (id >= cfg.vocab_size) throw ContractViolation("token id " + std::to_string(id) + " outside the vocabulary");
    }
  }

  void sentences() {
    X = embedding(t.parameter(p.embedding), ids);
    Var Xd = dropout(X, cfg.dropout, mode, rng);
    Var C = conv1d_segments(Xd, sent, t.parameter(p.conv_w), t.parameter(p.conv_b), cfg.window);
    H = relu(batch_norm(C, t.parameter(p.bn_gamma), t.parameter(p.bn_beta), mode, p.bn));
    Xsen = cfg.pooling == Pooling::max ? max_pool_segments(H, sent) : mean_pool_segments(H, sent);
    if (cfg.use_relevance) {
      Var hid = relu(affine(Xsen, t.parameter(p.rel_w), t.parameter(p.rel_b)));
      R = relu(affine(hid, t.parameter(p.rel_out_w), t.parameter(p.rel_out_b)));
      if (cfg.clamp_relevance) R = clip_upper(R, 1.0);
    }
  }

  /// Pooling weights for one pass.
  Var weights(const std::vector<std::size_t>& aspect_of_doc) {
    const std::size_t S = sent.size();
    std::vector<std::size_t> cols(S);
    Tensor scored(Shape{S}), fixed(Shape{S});
    bool any_fixed = false;
    for (std::size_t i = 0; i < S; ++i) {
      const auto a = aspect_of_doc[doc_of_sentence[i]];
      cols[i] = a;
      if (cfg.use_relevance && cfg.aspect_has_keywords[a]) {
        scored[i] = 1.0;
      } else {
        fixed[i] = 1.0;
        any_fixed = true;
      }
    }
    if (!cfg.use_relevance) return t.constant(Tensor(Shape{S}, 1.0));
    Var w = pick(R, cols);
    if (any_fixed) w = add(mul(w, t.constant(scored)), t.constant(fixed));
    return w;
  }

  void pool(EncodingPass& pass) {
    pass.weights = weights(pass.aspect_of_doc);
    pass.xdoc = weighted_sum_segments(Xsen, pass.weights, docseg, kRelevanceFloor);
    pass.xtr = cfg.transform == TransformMode::absent ? pass.xdoc : matmul(pass.xdoc, t.parameter(p.transform));
  }

  Var label_head(Var xtr) {
    Var z = dropout(xtr, cfg.dropout, mode, rng);
    z = relu(affine(z, t.parameter(p.lab_w1), t.parameter(p.lab_b1)));
    return softmax_rows(affine(z, t.parameter(p.lab_w2), t.parameter(p.lab_b2)));
  }

  Var domain_head(Var xtr, double rho, Rng& drng) {
    Var z = dropout(grad_reverse(xtr, rho), cfg.dropout, mode, drng);
    z = relu(affine(z, t.parameter(p.dom_w1), t.parameter(p.dom_b1)));
    return softmax_rows(affine(z, t.parameter(p.dom_w2), t.parameter(p.dom_b2)));
  }
};

ForwardResult AAN::forward(Tape& tape, std::span<const Document* const> docs, const ForwardOptions& opt) {
  if (!(opt.rho >= 0) || !std::isfinite(opt.rho)) throw ConfigError("rho must be finite and >= 0");
  Rng fallback(0);
  Rng& rng = opt.dropout_rng ? *opt.dropout_rng : fallback;
  Rng& drng = opt.domain_rng ? *opt.domain_rng : fallback;
  if (opt.mode == Mode::train && config_.dropout > 0 && (!opt.dropout_rng || !opt.domain_rng)) {
    throw ConfigError("train-mode forward with dropout needs both random streams");
  }

  Encoder enc{config_, params_, tape, opt.mode, rng, {}, {}, {}, {}, {}, {}, {}, {}, {}};
  enc.layout(docs);
  enc.sentences();

  ForwardResult out;
  std::optional<Var> total;
  const std::size_t N = enc.ids.size(), S = enc.sent.size(), D = docs.size();
  const std::size_t d = config_.embed_dim;

  if (config_.use_reconstruction) {
    Var xhat = tanh_op(affine(enc.H, tape.parameter(params_.rec_w), tape.parameter(params_.rec_b)));
    Tensor w(Shape{N, d});
    for (std::size_t j = 0; j < D; ++j) {
      const double inv = 1.0 / double(enc.doc_tokens[j]);
      const auto& ds = enc.docseg[j];
      const auto first = enc.sent[ds.offset].offset;
      const auto& last = enc.sent[ds.offset + ds.length - 1];
      for (std::size_t r = first; r < last.offset + last.length; ++r) {
        for (std::size_t c = 0; c < d; ++c) w.at(r, c) = inv;
      }
    }
    out.loss.rec = weighted_squared_error(xhat, tanh_op(enc.X), w);
    total = plus(total, out.loss.rec);
  }

  if (config_.use_relevance) {
    Tensor target(Shape{S, 2}), mask(Shape{S, 2});
    for (std::size_t j = 0; j < D; ++j) {
      for (std::size_t a = 0; a < 2; ++a) {
        auto it = docs[j]->relevance.find(config_.aspects[a]);
        if (it == docs[j]->relevance.end()) continue;
        for (const auto& [i, r] : it->second) {
          if (i >= enc.docseg[j].length) {
            throw ContractViolation("relevance index out of range in \"" + docs[j]->id + "\"");
          }
          const auto row = enc.docseg[j].offset + i;
          target.at(row, a) = r;
          mask.at(row, a) = 1.0;
        }
      }
    }
    out.loss.rel = weighted_squared_error(enc.R, tape.constant(target), mask);
    total = plus(total, out.loss.rel);
  }

  if (config_.transform != TransformMode::absent) {
    out.loss.omega = scale(frob_dev_from_identity(tape.parameter(params_.transform)), config_.lambda_tr);
    total = plus(total, out.loss.omega);
  }

  std::vector<std::vector<std::size_t>> assignments;
  if (opt.assignment == Assignment::paired) {
    assignments.emplace_back(D, 0);
    assignments.emplace_back(D, 1);
  } else {
    std::vector<std::size_t> a(D);
    for (std::size_t j = 0; j < D; ++j) a[j] = docs[j]->origin == corpus::Origin::source ? 0 : 1;
    assignments.push_back(std::move(a));
  }

  std::optional<Var> lab, dom;
  for (auto& assignment : assignments) {
    EncodingPass pass;
    pass.aspect_of_doc = std::move(assignment);
    enc.pool(pass);

    Tensor y(Shape{D, config_.classes});
    std::size_t labeled = 0;
    for (std::size_t j = 0; j < D; ++j) {
      if (pass.aspect_of_doc[j] != 0 || docs[j]->origin != corpus::Origin::source) continue;
      auto label = docs[j]->label(config_.aspects[0]);
      if (!label) continue;
      if (*label < 0 || std::size_t(*label) >= config_.classes) {
        throw ContractViolation("label " + std::to_string(*label) + " of \"" + docs[j]->id + "\" out of range");
      }
      y.at(j, std::size_t(*label)) = 1.0;
      ++labeled;
    }
    if (labeled > 0) {
      pass.label_probs = enc.label_head(pass.xtr);
      lab = plus(lab, cross_entropy(pass.label_probs, y));
      out.values.labeled += labeled;
    }

    if (opt.attach_domain) {
      pass.domain_probs = enc.domain_head(pass.xtr, opt.rho, drng);
      Tensor q(Shape{D, 2});
      for (std::size_t j = 0; j < D; ++j) q.at(j, pass.aspect_of_doc[j]) = 1.0;
      dom = plus(dom, cross_entropy(pass.domain_probs, q));
    }
    out.passes.push_back(std::move(pass));
  }
  if (lab) {
    out.loss.lab = *lab;
    total = plus(total, *lab);
  }
  if (dom) {
    out.loss.dom = *dom;
    total = plus(total, *dom);
  }
  if (!total) throw ConfigError("the configured graph has no loss terms");
  out.loss.total = *total;

  auto val = [](const Var& v) { return v.valid() ? v.value()[0] : 0.0; };
  auto& lv = out.values;
  lv.rec = val(out.loss.rec);
  lv.rel = val(out.loss.rel);
  lv.omega = val(out.loss.omega);
  lv.lab = val(out.loss.lab);
  lv.dom = val(out.loss.dom);
  lv.all = lv.rec + lv.rel + lv.omega + lv.lab - opt.rho * lv.dom;

  out.embedded = enc.X;
  out.hidden = enc.H;
  out.sentences = enc.Xsen;
  out.relevance = enc.R;
  out.sentence_segments = std::move(enc.sent);
  out.doc_segments = std::move(enc.docseg);
  return out;
}

Encoded AAN::encode(std::span<const Document* const> docs, std::size_t aspect) const {
  if (aspect > 1) throw ConfigError("aspect index must be 0 or 1");
  Tape tape;
  tape.set_grad_enabled(false);
  Rng unused(0);
  // Eval mode reads parameters and running statistics without changing them.
  auto& params = const_cast<AANParameters&>(params_);
  Encoder enc{config_, params, tape, Mode::eval, unused, {}, {}, {}, {}, {}, {}, {}, {}, {}};
  enc.layout(docs);
  enc.sentences();
  EncodingPass pass;
  pass.aspect_of_doc.assign(docs.size(), aspect);
  enc.pool(pass);

  Encoded out;
  out.sentence_vectors = enc.Xsen.value();
  out.relevance = pass.weights.value();
  out.xdoc = pass.xdoc.value();
  out.xtr = pass.xtr.value();
  out.label_probs = enc.label_head(pass.xtr).value();
  out.doc_segments = std::move(enc.docseg);
  return out;
}

std::vector<int> AAN::predict(std::span<const Document* const> docs, std::size_t aspect) const {
  const Tensor p = encode(docs, aspect).label_probs;
  std::vector<int> out(p.rows());
  for (std::size_t r = 0; r < p.rows(); ++r) {
    std::size_t best = 0;
    for (std::size_t c = 1; c < p.cols(); ++c) {
      if (p.at(r, c) > p.at(r, best)) best = c;
    }
    out[r] = int(best);
  }
  return out;
}

Accuracy evaluate(const AAN& model, std::span<const Document* const> docs, std::size_t aspect, std::size_t chunk) {
  const auto& name = model.config().aspects.at(aspect);
  std::string missing;
  std::size_t n_missing = 0;
  for (const auto* d : docs) {
    if (!d->label(name)) {
      if (n_missing < 20) missing += (n_missing ? ", " : "") + d->id;
      ++n_missing;
    }
  }
  if (n_missing > 0) {
    throw ContractViolation(std::to_string(n_missing) + " document(s) lack a \"" + name + "\" label: " + missing +
                            (n_missing > 20 ? ", ..." : ""));
  }
  const auto m = model.config().classes;
  Accuracy acc;
  acc.confusion.assign(m, std::vector<std::size_t>(m, 0));
  std::size_t correct = 0;
  for (std::size_t b = 0; b < docs.size(); b += chunk) {
    auto part = docs.subspan(b, std::min(chunk, docs.size() - b));
    auto pred = model.predict(part, aspect);
    for (std::size_t i = 0; i < part.size(); ++i) {
      const int y = *part[i]->label(name);
      if (y < 0 || std::size_t(y) >= m) throw ContractViolation("label out of range in \"" + part[i]->id + "\"");
      acc.confusion[std::size_t(y)][std::size_t(pred[i])]++;
      correct += (y == pred[i]);
    }
  }
  acc.total = docs.size();
  acc.accuracy = docs.empty() ? 0.0 : double(correct) / double(docs.size());
  return acc;
}

}  // namespace aan::model
