#include "aan/autodiff/tape.hpp"

#include "aan/errors.hpp"

namespace aan::ad {

const Tensor& Var::value() const { return tape_->value(id_); }
const Tensor& Var::grad() const { return tape_->grad(id_); }
const Shape& Var::shape() const { return tape_->value(id_).shape(); }
bool Var::requires_grad() const { return tape_->node(id_).requires_grad; }

Var Tape::push(Node node) {
  nodes_.push_back(std::move(node));
  return Var(this, nodes_.size() - 1);
}

Var Tape::constant(Tensor value) {
  Node n;
  n.value = std::move(value);
  n.op = Op::constant;
  return push(std::move(n));
}

Var Tape::variable(Tensor value) {
  Node n;
  n.value = std::move(value);
  n.op = Op::variable;
  n.requires_grad = grad_enabled_;
  return push(std::move(n));
}

Var Tape::parameter(Parameter& p) {
  if (auto it = bound_.find(&p); it != bound_.end()) return Var(this, it->second);
  Node n;
  n.value = p.value;
  n.op = Op::parameter;
  n.requires_grad = grad_enabled_ && p.trainable;
  n.param = &p;
  Var v = push(std::move(n));
  bound_.emplace(&p, v.id());
  return v;
}

Var Tape::record(Op op, Tensor value, std::initializer_list<Var> parents, BackwardFn fn) {
  Node n;
  n.value = std::move(value);
  n.op = op;
  n.parents.reserve(parents.size());
  for (const Var& p : parents) {
    if (p.tape() != this) throw ContractViolation("operand recorded on a different tape");
    n.parents.push_back(p.id());
    n.requires_grad = n.requires_grad || nodes_[p.id()].requires_grad;
  }
  n.requires_grad = n.requires_grad && grad_enabled_;
  if (n.requires_grad) n.backward = std::move(fn);
  return push(std::move(n));
}

Tensor& Tape::accumulate(std::size_t id) {
  Tensor& g = pass_[id];
  if (g.empty()) g = Tensor(nodes_[id].value.shape());
  return g;
}

const Tensor& Tape::grad(std::size_t id) {
  Node& n = nodes_[id];
  if (n.grad.empty()) n.grad = Tensor(n.value.shape());
  return n.grad;
}

void Tape::backward(Var loss) {
  if (loss.tape() != this) throw ContractViolation("loss recorded on a different tape");
  const Node& root = nodes_[loss.id()];
  if (root.value.size() != 1) {
    throw ContractViolation("backward() needs a scalar loss, got shape " +
                            root.value.shape().str());
  }
  if (!root.requires_grad) return;

  pass_.assign(nodes_.size(), Tensor());
  accumulate(loss.id()).fill(1.0);
  for (std::size_t i = loss.id() + 1; i-- > 0;) {
    if (pass_[i].empty()) continue;
    Node& n = nodes_[i];
    if (n.backward) n.backward(*this, pass_[i]);
  }
  for (std::size_t i = 0; i <= loss.id(); ++i) {
    if (pass_[i].empty()) continue;
    Node& n = nodes_[i];
    if (n.grad.empty()) {
      n.grad = pass_[i];
    } else {
      n.grad += pass_[i];
    }
    if (n.param != nullptr) {
      if (n.param->grad.shape() != pass_[i].shape()) n.param->grad = Tensor(pass_[i].shape());
      n.param->grad += pass_[i];
    }
  }
  pass_.clear();
}

}  // namespace aan::ad
