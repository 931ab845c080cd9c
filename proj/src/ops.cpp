#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>
#include <numbers>

#include "broadcast.hpp"
#include "ops_internal.hpp"
#include "ppl/errors.hpp"
#include "ppl/kernels.hpp"
#include "ppl/tape.hpp"

namespace ppl {
namespace {

Tape& common_tape(Value a, Value b) {
  if (!a.valid() || !b.valid()) throw ConfigError("operation on an empty Value");
  if (&a.tape() != &b.tape()) throw ConfigError("operands belong to different tapes");
  return a.tape();
}

Node make_node(Op op, const Tape& tape, Value a, Value b = {}) {
  Node n;
  n.op = op;
  n.a = a.id();
  n.needs_grad = tape.node(a.id()).needs_grad;
  if (b.valid()) {
    n.b = b.id();
    n.needs_grad = n.needs_grad || tape.node(b.id()).needs_grad;
  }
  return n;
}

enum class Bin { add, sub, mul, div };

// Elementwise binary op with broadcasting, routed through the active kernels.
Tensor binary(const Tensor& a, const Tensor& b, Bin op) {
  const auto& k = kernels::active();
  const kernels::BinaryVV vv[] = {k.add_vv, k.sub_vv, k.mul_vv, k.div_vv};
  const auto i = static_cast<std::size_t>(op);

  if (a.shape() == b.shape()) {
    Tensor out(a.shape());
    vv[i](a.ptr(), b.ptr(), out.mutable_ptr(), a.size());
    return out;
  }
  const Shape shape = broadcast_shapes(a.shape(), b.shape());
  Tensor out(shape);
  double* o = out.mutable_ptr();
  const double* pa = a.ptr();
  const double* pb = b.ptr();

  auto vs = [&](const double* x, double s, double* y, std::size_t n) {
    switch (op) {
      case Bin::add: k.add_vs(x, s, y, n); break;
      case Bin::sub: k.sub_vs(x, s, y, n); break;
      case Bin::mul: k.mul_vs(x, s, y, n); break;
      case Bin::div: k.div_vs(x, s, y, n); break;
    }
  };
  auto sv = [&](double s, const double* x, double* y, std::size_t n) {
    switch (op) {
      case Bin::add: k.add_vs(x, s, y, n); break;
      case Bin::sub: k.sub_sv(s, x, y, n); break;
      case Bin::mul: k.mul_vs(x, s, y, n); break;
      case Bin::div: k.div_sv(s, x, y, n); break;
    }
  };
  auto ss = [&](double x, double y) {
    switch (op) {
      case Bin::add: return x + y;
      case Bin::sub: return x - y;
      case Bin::mul: return x * y;
      case Bin::div: return x / y;
    }
    return 0.0;
  };

  if (b.size() == 1 && numel(shape) == a.size()) {
    vs(pa, pb[0], o, a.size());
    return out;
  }
  if (a.size() == 1 && numel(shape) == b.size()) {
    sv(pa[0], pb, o, b.size());
    return out;
  }
  const auto sa = detail::broadcast_strides(a.shape(), shape);
  const auto sb = detail::broadcast_strides(b.shape(), shape);
  detail::for_each_row(shape, sa, sb,
                       [&](std::size_t ao, std::size_t as, std::size_t bo, std::size_t bs,
                           std::size_t oo, std::size_t len) {
                         if (as == 1 && bs == 1)
                           vv[i](pa + ao, pb + bo, o + oo, len);
                         else if (as == 1)
                           vs(pa + ao, pb[bo], o + oo, len);
                         else if (bs == 1)
                           sv(pa[ao], pb + bo, o + oo, len);
                         else
                           std::fill(o + oo, o + oo + len, ss(pa[ao], pb[bo]));
                       });
  return out;
}

Tensor scale(const Tensor& t, double s) {
  Tensor out(t.shape());
  kernels::active().mul_vs(t.ptr(), s, out.mutable_ptr(), t.size());
  return out;
}

template <class F>
Tensor map(const Tensor& x, F f) {
  Tensor out(x.shape());
  double* o = out.mutable_ptr();
  const double* p = x.ptr();
  for (std::size_t i = 0; i < x.size(); ++i) o[i] = f(p[i]);
  return out;
}

template <class F>
Tensor map2(const Tensor& x, const Tensor& y, F f) {
  Tensor out(x.shape());
  double* o = out.mutable_ptr();
  const double* p = x.ptr();
  const double* q = y.ptr();
  for (std::size_t i = 0; i < x.size(); ++i) o[i] = f(p[i], q[i]);
  return out;
}

Value binary_op(Value a, Value b, Op op, Bin bin) {
  Tape& t = common_tape(a, b);
  Node n = make_node(op, t, a, b);
  n.value = binary(a.tensor(), b.tensor(), bin);
  return t.record(std::move(n));
}

template <class F>
Value unary_op(Value x, Op op, F f, double c = 0.0) {
  if (!x.valid()) throw ConfigError("operation on an empty Value");
  Tape& t = x.tape();
  Node n = make_node(op, t, x);
  n.c = c;
  n.value = map(x.tensor(), f);
  return t.record(std::move(n));
}

double stable_sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double stable_softplus(double x) { return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x))); }

double lgamma_safe(double x) {
#if defined(__GLIBC__)
  int sign = 0;
  return ::lgamma_r(x, &sign);
#else
  return std::lgamma(x);
#endif
}

std::size_t normalize_axis(int axis, std::size_t rank) {
  const int r = static_cast<int>(rank);
  if (axis < -r || axis >= r) throw ShapeError("axis " + std::to_string(axis) + " out of range");
  return static_cast<std::size_t>(axis < 0 ? axis + r : axis);
}

Shape keep_shape(const Shape& in, const std::vector<std::size_t>& axes) {
  Shape keep = in;
  for (std::size_t ax : axes) keep[ax] = 1;
  return keep;
}

Shape drop_axes(const Shape& in, const std::vector<std::size_t>& axes) {
  Shape out;
  for (std::size_t i = 0; i < in.size(); ++i)
    if (std::find(axes.begin(), axes.end(), i) == axes.end()) out.push_back(in[i]);
  return out;
}

// Views shape as [outer, len, inner] around `axis`.
struct AxisSplit {
  std::size_t outer = 1, len = 1, inner = 1;
};
AxisSplit split_at(const Shape& s, std::size_t axis) {
  AxisSplit sp;
  for (std::size_t i = 0; i < axis; ++i) sp.outer *= s[i];
  sp.len = s[axis];
  for (std::size_t i = axis + 1; i < s.size(); ++i) sp.inner *= s[i];
  return sp;
}

struct MatmulDims {
  std::size_t m, k, n;
  Shape out;
};

MatmulDims matmul_dims(const Shape& a, const Shape& b) {
  if (a.empty() || b.empty() || a.size() > 2 || b.size() > 2)
    throw ShapeError("matmul expects rank-1 or rank-2 operands, got " + to_string(a) + " and " +
                     to_string(b));
  const std::size_t m = a.size() == 2 ? a[0] : 1;
  const std::size_t ka = a.back();
  const std::size_t kb = b[0];
  const std::size_t n = b.size() == 2 ? b[1] : 1;
  if (ka != kb)
    throw ShapeError("matmul inner dimensions differ: " + to_string(a) + " x " + to_string(b));
  Shape out;
  if (a.size() == 2) out.push_back(m);
  if (b.size() == 2) out.push_back(n);
  return {m, ka, n, out};
}

}  // namespace

// ---- arithmetic -----------------------------------------------------------

Value operator+(Value a, Value b) { return binary_op(a, b, Op::add, Bin::add); }
Value operator-(Value a, Value b) { return binary_op(a, b, Op::sub, Bin::sub); }
Value operator*(Value a, Value b) { return binary_op(a, b, Op::mul, Bin::mul); }
Value operator/(Value a, Value b) { return binary_op(a, b, Op::div, Bin::div); }
Value operator-(Value a) {
  return unary_op(a, Op::neg, [](double x) { return -x; });
}
Value operator+(Value a, double b) { return a + a.tape().scalar(b); }
Value operator+(double a, Value b) { return b.tape().scalar(a) + b; }
Value operator-(Value a, double b) { return a - a.tape().scalar(b); }
Value operator-(double a, Value b) { return b.tape().scalar(a) - b; }
Value operator*(Value a, double b) { return a * a.tape().scalar(b); }
Value operator*(double a, Value b) { return b.tape().scalar(a) * b; }
Value operator/(Value a, double b) { return a / a.tape().scalar(b); }
Value operator/(double a, Value b) { return b.tape().scalar(a) / b; }

Value exp(Value x) {
  return unary_op(x, Op::exp, [](double v) { return std::exp(v); });
}
Value log(Value x) {
  return unary_op(x, Op::log, [](double v) { return std::log(v); });
}
Value pow(Value x, double exponent) {
  return unary_op(x, Op::pow, [exponent](double v) { return std::pow(v, exponent); }, exponent);
}
Value sqrt(Value x) {
  return unary_op(x, Op::sqrt, [](double v) { return std::sqrt(v); });
}
Value tanh(Value x) {
  return unary_op(x, Op::tanh, [](double v) { return std::tanh(v); });
}
Value sigmoid(Value x) { return unary_op(x, Op::sigmoid, stable_sigmoid); }
Value softplus(Value x) { return unary_op(x, Op::softplus, stable_softplus); }
Value lgamma(Value x) { return unary_op(x, Op::lgamma, lgamma_safe); }
Value maximum(Value x, double floor) {
  return unary_op(x, Op::maximum, [floor](double v) { return std::max(v, floor); }, floor);
}
Value relu(Value x) { return maximum(x, 0.0); }
Value square(Value x) { return x * x; }

Value stop_gradient(Value x) { return x.tape().constant(x.tensor()); }

// ---- linear algebra -------------------------------------------------------

Value matmul(Value a, Value b) {
  Tape& t = common_tape(a, b);
  const MatmulDims d = matmul_dims(a.shape(), b.shape());
  Node n = make_node(Op::matmul, t, a, b);
  Tensor out(d.out);
  kernels::active().gemm(d.m, d.k, d.n, a.tensor().ptr(), b.tensor().ptr(), out.mutable_ptr());
  n.value = std::move(out);
  return t.record(std::move(n));
}

// ---- reductions -----------------------------------------------------------

Value sum(Value x, std::vector<int> axes, bool keepdims) {
  Tape& t = x.tape();
  const Shape& in = x.shape();
  std::vector<std::size_t> norm;
  if (axes.empty()) {
    for (std::size_t i = 0; i < in.size(); ++i) norm.push_back(i);
  } else {
    for (int ax : axes) norm.push_back(normalize_axis(ax, in.size()));
    std::sort(norm.begin(), norm.end());
    norm.erase(std::unique(norm.begin(), norm.end()), norm.end());
  }
  const Shape keep = keep_shape(in, norm);
  Node n = make_node(Op::sum, t, x);
  n.axes = norm;
  n.keepdims = keepdims;
  n.value = reduce_to_shape(x.tensor(), keep).reshaped(keepdims ? keep : drop_axes(in, norm));
  return t.record(std::move(n));
}

Value mean(Value x, std::vector<int> axes, bool keepdims) {
  const Shape in = x.shape();
  Value s = sum(x, std::move(axes), keepdims);
  const Node& sn = x.tape().node(s.id());
  std::size_t count = 1;
  for (std::size_t ax : sn.axes) count *= in[ax];
  return s / static_cast<double>(count == 0 ? 1 : count);
}

Value logsumexp(Value x, int axis, bool keepdims) {
  Tape& t = x.tape();
  const Shape& in = x.shape();
  if (in.empty()) throw ShapeError("logsumexp of a scalar");
  const std::size_t ax = normalize_axis(axis, in.size());
  const AxisSplit sp = split_at(in, ax);
  const Shape keep = keep_shape(in, {ax});
  Tensor out(keep);
  const double* p = x.tensor().ptr();
  double* o = out.mutable_ptr();
  for (std::size_t i = 0; i < sp.outer; ++i) {
    for (std::size_t j = 0; j < sp.inner; ++j) {
      const double* base = p + i * sp.len * sp.inner + j;
      double m = -std::numeric_limits<double>::infinity();
      for (std::size_t l = 0; l < sp.len; ++l) m = std::max(m, base[l * sp.inner]);
      double acc = 0.0;
      if (std::isinf(m)) {
        o[i * sp.inner + j] = m;
        continue;
      }
      for (std::size_t l = 0; l < sp.len; ++l) acc += std::exp(base[l * sp.inner] - m);
      o[i * sp.inner + j] = m + std::log(acc);
    }
  }
  Node n = make_node(Op::logsumexp, t, x);
  n.axes = {ax};
  n.keepdims = keepdims;
  n.value = keepdims ? out : out.reshaped(drop_axes(in, {ax}));
  return t.record(std::move(n));
}

Value log_softmax(Value x, int axis) { return x - logsumexp(x, axis, true); }

// ---- indexing and shape ---------------------------------------------------

Value gather(Value x, const Tensor& indices) {
  Tape& t = x.tape();
  const Shape& in = x.shape();
  if (in.empty()) throw ShapeError("gather from a scalar");
  const std::size_t rows = in[0];
  const std::size_t width = x.tensor().size() / std::max<std::size_t>(rows, 1);
  Shape shape = indices.shape();
  shape.insert(shape.end(), in.begin() + 1, in.end());
  Tensor out(shape);
  Tensor idx(indices.shape());
  double* o = out.mutable_ptr();
  const double* p = x.tensor().ptr();
  for (std::size_t i = 0; i < indices.size(); ++i) {
    const double v = indices[i];
    const double r = std::round(v);
    if (std::abs(v - r) > 1e-9)
      throw IndexError("gather: index " + std::to_string(v) + " is not an integer");
    if (r < 0 || r >= static_cast<double>(rows))
      throw IndexError("gather: index " + std::to_string(v) + " out of range [0, " +
                       std::to_string(rows) + ")");
    idx[i] = r;
    std::memcpy(o + i * width, p + static_cast<std::size_t>(r) * width, width * sizeof(double));
  }
  Node n = make_node(Op::gather, t, x);
  n.aux = std::move(idx);
  n.value = std::move(out);
  return t.record(std::move(n));
}

Value reshape(Value x, Shape shape) {
  Tape& t = x.tape();
  Node n = make_node(Op::reshape, t, x);
  n.value = x.tensor().reshaped(std::move(shape));
  return t.record(std::move(n));
}

Value broadcast_to(Value x, Shape shape) {
  Tape& t = x.tape();
  Node n = make_node(Op::broadcast, t, x);
  n.value = broadcast_to(x.tensor(), shape);
  return t.record(std::move(n));
}

Value concat(const std::vector<Value>& xs, int axis) {
  if (xs.empty()) throw ShapeError("concat of no values");
  Tape& t = xs.front().tape();
  const Shape& first = xs.front().shape();
  const std::size_t ax = normalize_axis(axis, first.size());
  Shape shape = first;
  shape[ax] = 0;
  for (const Value& v : xs) {
    if (&v.tape() != &t) throw ConfigError("operands belong to different tapes");
    const Shape& s = v.shape();
    if (s.size() != first.size()) throw ShapeError("concat: rank mismatch");
    for (std::size_t i = 0; i < s.size(); ++i)
      if (i != ax && s[i] != first[i])
        throw ShapeError("concat: shapes " + to_string(first) + " and " + to_string(s) +
                         " differ off the concatenation axis");
    shape[ax] += s[ax];
  }
  const AxisSplit out_sp = split_at(shape, ax);
  Tensor out(shape);
  double* o = out.mutable_ptr();
  std::size_t offset = 0;
  Node n;
  n.op = Op::concat;
  for (const Value& v : xs) {
    const std::size_t chunk = v.shape()[ax] * out_sp.inner;
    const double* p = v.tensor().ptr();
    for (std::size_t i = 0; i < out_sp.outer; ++i)
      std::memcpy(o + i * out_sp.len * out_sp.inner + offset, p + i * chunk,
                  chunk * sizeof(double));
    offset += chunk;
    n.inputs.push_back(v.id());
    n.needs_grad = n.needs_grad || t.node(v.id()).needs_grad;
  }
  n.axes = {ax};
  n.value = std::move(out);
  return t.record(std::move(n));
}

// ---- backward -------------------------------------------------------------

namespace detail {

void backprop(const Tape& tape, const Node& n, const Tensor& g, const Accumulate& acc) {
  const auto needs = [&](std::int32_t id) { return id >= 0 && tape.node(id).needs_grad; };
  const Tensor* xa = n.a >= 0 ? &tape.node(n.a).value : nullptr;
  const Tensor* xb = n.b >= 0 ? &tape.node(n.b).value : nullptr;
  const Tensor& y = n.value;

  switch (n.op) {
    case Op::constant:
    case Op::parameter:
    case Op::leaf:
      return;
    case Op::add:
      if (needs(n.a)) acc(n.a, reduce_to_shape(g, xa->shape()));
      if (needs(n.b)) acc(n.b, reduce_to_shape(g, xb->shape()));
      return;
    case Op::sub:
      if (needs(n.a)) acc(n.a, reduce_to_shape(g, xa->shape()));
      if (needs(n.b)) acc(n.b, reduce_to_shape(scale(g, -1.0), xb->shape()));
      return;
    case Op::mul:
      if (needs(n.a)) acc(n.a, reduce_to_shape(binary(g, *xb, Bin::mul), xa->shape()));
      if (needs(n.b)) acc(n.b, reduce_to_shape(binary(g, *xa, Bin::mul), xb->shape()));
      return;
    case Op::div:
      if (needs(n.a)) acc(n.a, reduce_to_shape(binary(g, *xb, Bin::div), xa->shape()));
      if (needs(n.b)) {
        // d(a/b)/db = -y / b
        Tensor t = binary(binary(g, y, Bin::mul), *xb, Bin::div);
        acc(n.b, reduce_to_shape(scale(t, -1.0), xb->shape()));
      }
      return;
    case Op::neg:
      acc(n.a, scale(g, -1.0));
      return;
    case Op::exp:
      acc(n.a, binary(g, y, Bin::mul));
      return;
    case Op::log:
      acc(n.a, binary(g, *xa, Bin::div));
      return;
    case Op::pow: {
      const double c = n.c;
      acc(n.a, map2(g, *xa, [c](double gi, double x) { return gi * c * std::pow(x, c - 1.0); }));
      return;
    }
    case Op::sqrt:
      acc(n.a, map2(g, y, [](double gi, double yi) { return gi * 0.5 / yi; }));
      return;
    case Op::tanh:
      acc(n.a, map2(g, y, [](double gi, double yi) { return gi * (1.0 - yi * yi); }));
      return;
    case Op::sigmoid:
      acc(n.a, map2(g, y, [](double gi, double yi) { return gi * yi * (1.0 - yi); }));
      return;
    case Op::softplus:
      acc(n.a, map2(g, *xa, [](double gi, double x) { return gi * stable_sigmoid(x); }));
      return;
    case Op::lgamma:
      acc(n.a, map2(g, *xa, [](double gi, double x) { return gi * digamma(x); }));
      return;
    case Op::maximum: {
      const double c = n.c;
      acc(n.a, map2(g, *xa, [c](double gi, double x) { return x > c ? gi : 0.0; }));
      return;
    }
    case Op::matmul: {
      const MatmulDims d = matmul_dims(xa->shape(), xb->shape());
      const auto& k = kernels::active();
      if (needs(n.a)) {
        Tensor ga(xa->shape());
        k.gemm_nt(d.m, d.n, d.k, g.ptr(), xb->ptr(), ga.mutable_ptr());
        acc(n.a, std::move(ga));
      }
      if (needs(n.b)) {
        Tensor gb(xb->shape());
        k.gemm_tn(d.m, d.k, d.n, xa->ptr(), g.ptr(), gb.mutable_ptr());
        acc(n.b, std::move(gb));
      }
      return;
    }
    case Op::sum: {
      const Shape keep = keep_shape(xa->shape(), n.axes);
      acc(n.a, broadcast_to(g.reshaped(keep), xa->shape()));
      return;
    }
    case Op::mean:
      return;  // composed from sum and div
    case Op::logsumexp: {
      const Shape keep = keep_shape(xa->shape(), n.axes);
      const Tensor yk = broadcast_to(y.reshaped(keep), xa->shape());
      const Tensor gk = broadcast_to(g.reshaped(keep), xa->shape());
      Tensor out(xa->shape());
      double* o = out.mutable_ptr();
      for (std::size_t i = 0; i < out.size(); ++i)
        o[i] = std::isinf(yk[i]) ? 0.0 : gk[i] * std::exp((*xa)[i] - yk[i]);
      acc(n.a, std::move(out));
      return;
    }
    case Op::gather: {
      const std::size_t rows = xa->shape()[0];
      const std::size_t width = xa->size() / std::max<std::size_t>(rows, 1);
      Tensor gx(xa->shape(), 0.0);
      double* o = gx.mutable_ptr();
      const auto& k = kernels::active();
      for (std::size_t i = 0; i < n.aux.size(); ++i) {
        const auto r = static_cast<std::size_t>(n.aux[i]);
        k.add_vv(o + r * width, g.ptr() + i * width, o + r * width, width);
      }
      acc(n.a, std::move(gx));
      return;
    }
    case Op::reshape:
      acc(n.a, g.reshaped(xa->shape()));
      return;
    case Op::broadcast:
      acc(n.a, reduce_to_shape(g, xa->shape()));
      return;
    case Op::concat: {
      const std::size_t ax = n.axes[0];
      const AxisSplit out_sp = split_at(y.shape(), ax);
      std::size_t offset = 0;
      for (std::int32_t id : n.inputs) {
        const Tensor& xi = tape.node(id).value;
        const std::size_t chunk = xi.shape()[ax] * out_sp.inner;
        if (needs(id)) {
          Tensor gi(xi.shape());
          double* o = gi.mutable_ptr();
          for (std::size_t i = 0; i < out_sp.outer; ++i)
            std::memcpy(o + i * chunk, g.ptr() + i * out_sp.len * out_sp.inner + offset,
                        chunk * sizeof(double));
          acc(id, std::move(gi));
        }
        offset += chunk;
      }
      return;
    }
  }
}

}  // namespace detail

double digamma(double x) {
  if (std::isnan(x)) return x;
  if (x <= 0.0 && std::floor(x) == x) return std::numeric_limits<double>::quiet_NaN();
  if (x < 0.0) return digamma(1.0 - x) - std::numbers::pi / std::tan(std::numbers::pi * x);
  double result = 0.0;
  while (x < 10.0) {
    result -= 1.0 / x;
    x += 1.0;
  }
  const double inv = 1.0 / x;
  const double inv2 = inv * inv;
  result += std::log(x) - 0.5 * inv -
            inv2 * (1.0 / 12.0 -
                    inv2 * (1.0 / 120.0 -
                            inv2 * (1.0 / 252.0 - inv2 * (1.0 / 240.0 - inv2 * (1.0 / 132.0)))));
  return result;
}

}  // namespace ppl
