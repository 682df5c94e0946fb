#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <unordered_map>
#include <vector>

#include "aan/autodiff/tensor.hpp"

namespace aan::ad {

/// A persistent learned tensor. Tapes bind to it by reference and
/// backward() accumulates into `grad`.
struct Parameter {
  Parameter() = default;
  Parameter(std::string n, Tensor v)
      : name(std::move(n)), value(std::move(v)), grad(value.shape()) {}

  std::string name;
  Tensor value;
  Tensor grad;
  bool trainable = true;

  void zero_grad() { grad.fill(0.0); }
};

enum class Op : std::uint8_t {
  constant,
  variable,
  parameter,
  matmul,
  add,
  mul,
  add_bias,
  scale,
  sum,
  embedding,
  conv1d,
  relu,
  tanh,
  softmax,
  max_pool,
  mean_pool,
  weighted_sum,
  grad_reverse,
  batch_norm,
  dropout,
  cross_entropy,
  squared_error,
  frob_dev,
  pick,
  clip_upper,
};

class Tape;

/// Handle to a node recorded on a Tape. Cheap to copy; valid while the tape lives.
class Var {
 public:
  Var() = default;

  const Tensor& value() const;
  const Tensor& grad() const;
  const Shape& shape() const;
  bool requires_grad() const;
  std::size_t id() const { return id_; }
  Tape* tape() const { return tape_; }
  bool valid() const { return tape_ != nullptr; }

 private:
  friend class Tape;
  Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}

  Tape* tape_ = nullptr;
  std::size_t id_ = 0;
};

/// Upstream gradient in, contributions to parents out (via Tape::accumulate).
using BackwardFn = std::function<void(Tape&, const Tensor& upstream)>;

struct Node {
  Tensor value;
  Tensor grad;  // allocated on first backward that reaches the node
  Op op = Op::constant;
  std::vector<std::size_t> parents;
  bool requires_grad = false;
  Parameter* param = nullptr;
  BackwardFn backward;
};

/// Ordered node registry for one forward pass. Registration order is a
/// topological order, so backward() walks the registry in reverse.
class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var constant(Tensor value);
  Var variable(Tensor value);
  /// One leaf per parameter per tape; repeated calls return the same Var.
  Var parameter(Parameter& p);

  /// Registers an op result. `fn` is dropped when no parent requires grad
  /// or when gradients are disabled on this tape.
  Var record(Op op, Tensor value, std::initializer_list<Var> parents, BackwardFn fn);

  /// Computes d(loss)/d(node) for every reachable node that requires grad.
  /// Gradients add onto whatever previous backward calls left behind, and
  /// parameter leaves also add into Parameter::grad.
  void backward(Var loss);

  /// Gradient buffer of `id` for the backward pass in progress.
  Tensor& accumulate(std::size_t id);
  bool wants_grad(std::size_t id) const { return nodes_[id].requires_grad; }

  const Node& node(std::size_t id) const { return nodes_[id]; }
  const Tensor& value(std::size_t id) const { return nodes_[id].value; }
  const Tensor& grad(std::size_t id);
  std::size_t size() const { return nodes_.size(); }

  void set_grad_enabled(bool enabled) { grad_enabled_ = enabled; }
  bool grad_enabled() const { return grad_enabled_; }

 private:
  Var push(Node node);

  std::vector<Node> nodes_;
  std::vector<Tensor> pass_;
  std::unordered_map<const Parameter*, std::size_t> bound_;
  bool grad_enabled_ = true;
};

}  // namespace aan::ad
