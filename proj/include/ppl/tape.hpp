#pragma once

// Define-by-run reverse-mode differentiation.
//
// A Tape records every operation as it is evaluated. Values are lightweight
// handles into the tape that created them. The tape is meant to be rebuilt for
// every evaluation (every inference step), which is what lets models use
// ordinary host-language control flow, including loops whose trip count is
// itself random.

#include <cstdint>
#include <set>
#include <utility>
#include <vector>

#include "ppl/parameter.hpp"
#include "ppl/tensor.hpp"

namespace ppl {

class Tape;

enum class Op : std::uint8_t {
  constant,
  parameter,
  leaf,
  add,
  sub,
  mul,
  div,
  neg,
  exp,
  log,
  pow,
  sqrt,
  tanh,
  sigmoid,
  softplus,
  lgamma,
  maximum,
  matmul,
  sum,
  mean,
  logsumexp,
  gather,
  reshape,
  broadcast,
  concat,
};

const char* op_name(Op op);

/// Handle to a node on a Tape. Only valid for the tape that created it.
class Value {
 public:
  Value() = default;
  Value(Tape* tape, std::int32_t id) : tape_(tape), id_(id) {}

  bool valid() const { return tape_ != nullptr; }
  Tape& tape() const { return *tape_; }
  std::int32_t id() const { return id_; }

  const Tensor& tensor() const;
  const Shape& shape() const { return tensor().shape(); }
  double item() const { return tensor().item(); }

 private:
  Tape* tape_ = nullptr;
  std::int32_t id_ = -1;
};

struct Node {
  Op op = Op::constant;
  bool needs_grad = false;
  std::int32_t a = -1;
  std::int32_t b = -1;
  std::vector<std::int32_t> inputs;  // concat only
  Tensor value;
  double c = 0.0;  // pow exponent, maximum threshold
  std::vector<std::size_t> axes;
  bool keepdims = false;
  Tensor aux;  // gather indices
  Parameter* param = nullptr;
};

/// d(root)/d(parameter) for every trainable parameter reached, in order of
/// first use on the tape. Repeated uses of a parameter are summed.
class GradientMap {
 public:
  using Entry = std::pair<Parameter*, Tensor>;

  const Tensor* find(const Parameter* p) const;
  const Tensor& at(const Parameter& p) const;
  bool contains(const Parameter* p) const { return find(p) != nullptr; }
  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }

  void add(Parameter* p, const Tensor& g);
  template <class Pred>
  void erase_if(Pred pred) {
    std::erase_if(entries_, [&](const Entry& e) { return pred(e.first); });
  }

  auto begin() const { return entries_.begin(); }
  auto end() const { return entries_.end(); }
  auto begin() { return entries_.begin(); }
  auto end() { return entries_.end(); }

 private:
  std::vector<Entry> entries_;
};

class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Value constant(Tensor t);
  Value scalar(double v) { return constant(Tensor::scalar(v)); }
  // Reads the parameter's current value. Frozen or non-trainable parameters
  // are recorded as constants.
  Value param(Parameter& p);
  // A differentiable input that is not a Parameter (e.g. a sampler position).
  Value leaf(Tensor t);

  void freeze(const Parameter* p) { frozen_.insert(p); }
  bool is_frozen(const Parameter* p) const { return frozen_.count(p) != 0; }

  // Requires a scalar-shaped root. Throws ShapeError otherwise.
  GradientMap backward(Value root);

  // Adjoint from the last backward(); zeros if the node was not reached.
  Tensor grad(Value v) const;

  std::size_t size() const { return nodes_.size(); }
  const Node& node(std::int32_t id) const { return nodes_[static_cast<std::size_t>(id)]; }
  const Tensor& value(Value v) const { return node(v.id()).value; }

  // Distinct parameters referenced as differentiable nodes, in first-use order.
  std::vector<Parameter*> parameters() const;

  // Appends a node; used by op implementations.
  Value record(Node node);

 private:
  std::vector<Node> nodes_;
  std::vector<Tensor> adjoints_;
  std::vector<char> has_adjoint_;
  std::set<const Parameter*> frozen_;
};

// ---- ops -----------------------------------------------------------------

Value operator+(Value a, Value b);
Value operator-(Value a, Value b);
Value operator*(Value a, Value b);
Value operator/(Value a, Value b);
Value operator-(Value a);
Value operator+(Value a, double b);
Value operator+(double a, Value b);
Value operator-(Value a, double b);
Value operator-(double a, Value b);
Value operator*(Value a, double b);
Value operator*(double a, Value b);
Value operator/(Value a, double b);
Value operator/(double a, Value b);

Value exp(Value x);
Value log(Value x);
Value pow(Value x, double exponent);
Value sqrt(Value x);
Value tanh(Value x);
Value sigmoid(Value x);
// max(x, 0) + log1p(exp(-|x|))
Value softplus(Value x);
Value lgamma(Value x);
Value maximum(Value x, double floor);
Value relu(Value x);
Value square(Value x);

// [m,k]x[k,n] -> [m,n]; rank-1 operands are treated as row/column vectors and
// the corresponding output axis is dropped.
Value matmul(Value a, Value b);

// Empty `axes` reduces over every axis. Negative axes count from the end.
Value sum(Value x, std::vector<int> axes = {}, bool keepdims = false);
Value mean(Value x, std::vector<int> axes = {}, bool keepdims = false);
Value logsumexp(Value x, int axis = -1, bool keepdims = false);
Value log_softmax(Value x, int axis = -1);

// Rows of x (leading axis) selected by an integer-valued index tensor.
// Output shape is indices.shape() + x.shape()[1:].
Value gather(Value x, const Tensor& indices);
Value reshape(Value x, Shape shape);
Value broadcast_to(Value x, Shape shape);
Value concat(const std::vector<Value>& xs, int axis = 0);

// Constant copy of x's value; blocks gradient flow.
Value stop_gradient(Value x);

double digamma(double x);

}  // namespace ppl
