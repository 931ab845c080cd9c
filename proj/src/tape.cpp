#include "ppl/tape.hpp"

#include <algorithm>

#include "ops_internal.hpp"
#include "ppl/errors.hpp"
#include "ppl/kernels.hpp"

namespace ppl {

const char* op_name(Op op) {
  switch (op) {
    case Op::constant: return "constant";
    case Op::parameter: return "parameter";
    case Op::leaf: return "leaf";
    case Op::add: return "add";
    case Op::sub: return "sub";
    case Op::mul: return "mul";
    case Op::div: return "div";
    case Op::neg: return "neg";
    case Op::exp: return "exp";
    case Op::log: return "log";
    case Op::pow: return "pow";
    case Op::sqrt: return "sqrt";
    case Op::tanh: return "tanh";
    case Op::sigmoid: return "sigmoid";
    case Op::softplus: return "softplus";
    case Op::lgamma: return "lgamma";
    case Op::maximum: return "maximum";
    case Op::matmul: return "matmul";
    case Op::sum: return "sum";
    case Op::mean: return "mean";
    case Op::logsumexp: return "logsumexp";
    case Op::gather: return "gather";
    case Op::reshape: return "reshape";
    case Op::broadcast: return "broadcast";
    case Op::concat: return "concat";
  }
  return "?";
}

const Tensor& Value::tensor() const { return tape_->value(*this); }

const Tensor* GradientMap::find(const Parameter* p) const {
  for (const auto& e : entries_)
    if (e.first == p) return &e.second;
  return nullptr;
}

const Tensor& GradientMap::at(const Parameter& p) const {
  const Tensor* g = find(&p);
  if (!g) throw ConfigError("no gradient for parameter '" + p.name() + "'");
  return *g;
}

void GradientMap::add(Parameter* p, const Tensor& g) {
  for (auto& e : entries_) {
    if (e.first == p) {
      Tensor& acc = e.second;
      kernels::active().add_vv(acc.ptr(), g.ptr(), acc.mutable_ptr(), acc.size());
      return;
    }
  }
  entries_.emplace_back(p, g);
}

Value Tape::record(Node node) {
  nodes_.push_back(std::move(node));
  return Value(this, static_cast<std::int32_t>(nodes_.size() - 1));
}

Value Tape::constant(Tensor t) {
  Node n;
  n.op = Op::constant;
  n.value = std::move(t);
  return record(std::move(n));
}

Value Tape::param(Parameter& p) {
  if (!p.trainable() || is_frozen(&p)) return constant(p.value());
  Node n;
  n.op = Op::parameter;
  n.value = p.value();
  n.param = &p;
  n.needs_grad = true;
  return record(std::move(n));
}

Value Tape::leaf(Tensor t) {
  Node n;
  n.op = Op::leaf;
  n.value = std::move(t);
  n.needs_grad = true;
  return record(std::move(n));
}

std::vector<Parameter*> Tape::parameters() const {
  std::vector<Parameter*> out;
  for (const auto& n : nodes_)
    if (n.op == Op::parameter && std::find(out.begin(), out.end(), n.param) == out.end())
      out.push_back(n.param);
  return out;
}

GradientMap Tape::backward(Value root) {
  if (&root.tape() != this) throw ConfigError("backward: value belongs to another tape");
  const Tensor& rv = value(root);
  if (rv.size() != 1)
    throw ShapeError("backward requires a scalar root, got shape " + to_string(rv.shape()));

  adjoints_.assign(nodes_.size(), Tensor());
  has_adjoint_.assign(nodes_.size(), 0);

  const auto root_id = static_cast<std::size_t>(root.id());
  adjoints_[root_id] = Tensor(rv.shape(), 1.0);
  has_adjoint_[root_id] = 1;

  const detail::Accumulate acc = [this](std::int32_t input, Tensor g) {
    const auto i = static_cast<std::size_t>(input);
    if (!nodes_[i].needs_grad) return;
    if (!has_adjoint_[i]) {
      adjoints_[i] = std::move(g);
      has_adjoint_[i] = 1;
    } else {
      Tensor& a = adjoints_[i];
      kernels::active().add_vv(a.ptr(), g.ptr(), a.mutable_ptr(), a.size());
    }
  };

  for (std::size_t i = root_id + 1; i-- > 0;) {
    const Node& n = nodes_[i];
    if (!has_adjoint_[i] || !n.needs_grad) continue;
    if (n.op == Op::constant || n.op == Op::parameter || n.op == Op::leaf) continue;
    detail::backprop(*this, n, adjoints_[i], acc);
  }

  GradientMap grads;
  for (std::size_t i = 0; i <= root_id; ++i) {
    const Node& n = nodes_[i];
    if (n.op == Op::parameter && has_adjoint_[i]) grads.add(n.param, adjoints_[i]);
  }
  return grads;
}

Tensor Tape::grad(Value v) const {
  const auto i = static_cast<std::size_t>(v.id());
  if (i < has_adjoint_.size() && has_adjoint_[i]) return adjoints_[i];
  return Tensor(value(v).shape(), 0.0);
}

}  // namespace ppl
