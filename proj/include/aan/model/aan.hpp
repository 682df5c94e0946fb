#pragma once

#include <array>
#include <cstddef>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "aan/autodiff/ops.hpp"
#include "aan/autodiff/tape.hpp"
#include "aan/corpus/document.hpp"
#include "aan/rng.hpp"

namespace aan::model {

using ad::Mode;
using ad::Parameter;
using ad::Tape;
using ad::Tensor;
using ad::Var;
using corpus::Document;

enum class Pooling { max, mean };
enum class Assignment { paired, by_origin };
enum class TransformMode { trainable, frozen_identity, absent };

std::string to_string(Pooling p);
std::string to_string(Assignment a);
std::string to_string(TransformMode t);
Pooling parse_pooling(const std::string& s);
Assignment parse_assignment(const std::string& s);
TransformMode parse_transform(const std::string& s);

struct ModelConfig {
  std::size_t vocab_size = 0;
  std::size_t embed_dim = 50;
  std::size_t window = 3;
  /// Sentence vector size; the transformation layer is features x features.
  std::size_t features = 150;
  /// Hidden size of the relevance, label and domain networks.
  std::size_t hidden = 150;
  std::size_t classes = 2;
  double dropout = 0.2;
  double lambda_tr = 0.1;
  Pooling pooling = Pooling::max;
  /// Clamp relevance scores to [0, 1] instead of using the raw ReLU output.
  bool clamp_relevance = false;
  TransformMode transform = TransformMode::trainable;
  /// false: uniform pooling weights and no relevance loss.
  bool use_relevance = true;
  /// false: no reconstruction loss.
  bool use_reconstruction = true;
  /// Source aspect first, target aspect second.
  std::array<std::string, 2> aspects{"source", "target"};
  /// An aspect without keywords is pooled uniformly.
  std::array<bool, 2> aspect_has_keywords{true, true};

  void validate() const;
};

/// Pooled weights below this total fall back to uniform pooling.
inline constexpr double kRelevanceFloor = 1e-6;
/// Starting bias of the relevance output units. A zero bias leaves the ReLU
/// output inactive on every sentence for roughly half the initializations.
inline constexpr double kRelevanceBiasInit = 0.5;

/// Learned tensors. The transformation is stored for row vectors, i.e. the
/// tensor named "transform" is the transpose of the column-convention matrix;
/// its distance from the identity is the same either way.
struct AANParameters {
  Parameter embedding;
  Parameter conv_w, conv_b;
  Parameter bn_gamma, bn_beta;
  ad::BatchNormStats bn;
  Parameter rec_w, rec_b;
  Parameter rel_w, rel_b;
  Parameter rel_out_w, rel_out_b;  // one output column per aspect
  Parameter transform;
  Parameter lab_w1, lab_b1, lab_w2, lab_b2;
  Parameter dom_w1, dom_b1, dom_w2, dom_b2;

  std::vector<Parameter*> all();
  std::vector<const Parameter*> all() const;
  /// Domain-classifier parameters.
  std::vector<Parameter*> adversary();
  Parameter& by_name(const std::string& name);
};

struct ForwardOptions {
  Mode mode = Mode::train;
  double rho = 0.0;
  Assignment assignment = Assignment::paired;
  /// false: the domain classifier is left out of the graph entirely.
  bool attach_domain = true;
  Rng* dropout_rng = nullptr;
  /// Separate stream so the domain head never shifts the other masks.
  Rng* domain_rng = nullptr;
};

/// One pooling pass: every document encoded under `aspect_of_doc[j]`.
struct EncodingPass {
  std::vector<std::size_t> aspect_of_doc;
  Var weights;  // [S] pooling weights
  Var xdoc;     // [D x f]
  Var xtr;      // [D x f]
  Var label_probs;
  Var domain_probs;
};

struct LossVars {
  Var rec, rel, omega, lab, dom;
  /// rec + rel + omega + lab + dom; reversal happens inside the graph.
  Var total;
};

struct LossValues {
  double rec = 0, rel = 0, omega = 0, lab = 0, dom = 0;
  /// rec + rel + omega + lab - rho * dom.
  double all = 0;
  std::size_t labeled = 0;
};

struct ForwardResult {
  LossVars loss;
  LossValues values;
  Var embedded;   // [N x d] before dropout
  Var hidden;     // [N x f] per-token activations
  Var sentences;  // [S x f]
  Var relevance;  // [S x 2] (invalid when relevance is off)
  std::vector<EncodingPass> passes;
  std::vector<ad::Segment> sentence_segments;  // token rows per sentence
  std::vector<ad::Segment> doc_segments;       // sentence rows per document
};

/// Eval-mode encoding of documents under one aspect.
struct Encoded {
  Tensor sentence_vectors;  // [S x f]
  Tensor relevance;         // [S] pooling weights actually used
  Tensor xdoc;              // [D x f]
  Tensor xtr;               // [D x f]
  Tensor label_probs;       // [D x m]
  std::vector<ad::Segment> doc_segments;
};

class AAN {
 public:
  AAN(const ModelConfig& config, std::uint64_t init_seed);

  const ModelConfig& config() const { return config_; }
  AANParameters& params() { return params_; }
  const AANParameters& params() const { return params_; }

  /// Joint loss over a batch. Labeled source documents feed the label loss.
  ForwardResult forward(Tape& tape, std::span<const Document* const> docs, const ForwardOptions& opt);

  /// Eval-mode pass without gradients.
  Encoded encode(std::span<const Document* const> docs, std::size_t aspect) const;
  /// Argmax class per document, ties toward the lower class.
  std::vector<int> predict(std::span<const Document* const> docs, std::size_t aspect) const;

  std::size_t aspect_index(const std::string& name) const;

 private:
  struct Encoder;
  ModelConfig config_;
  AANParameters params_;
};

/// Accuracy with confusion counts[true][predicted].
struct Accuracy {
  double accuracy = 0;
  std::size_t total = 0;
  std::vector<std::vector<std::size_t>> confusion;
};

/// Throws ContractViolation listing documents without a label for `aspect`.
Accuracy evaluate(const AAN& model, std::span<const Document* const> docs, std::size_t aspect,
                  std::size_t chunk = 64);

}  // namespace aan::model
