#include "ppl/tensor.hpp"

#include <cmath>
#include <cstring>
#include <sstream>

#include "broadcast.hpp"
#include "ppl/errors.hpp"
#include "ppl/kernels.hpp"

namespace ppl {

std::size_t numel(const Shape& shape) {
  std::size_t n = 1;
  for (std::size_t d : shape) n *= d;
  return n;
}

std::string to_string(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << ',';
    os << shape[i];
  }
  os << ']';
  return os.str();
}

Shape broadcast_shapes(const Shape& a, const Shape& b) {
  const std::size_t rank = std::max(a.size(), b.size());
  Shape out(rank, 1);
  for (std::size_t i = 0; i < rank; ++i) {
    const std::size_t da = i < rank - a.size() ? 1 : a[i - (rank - a.size())];
    const std::size_t db = i < rank - b.size() ? 1 : b[i - (rank - b.size())];
    if (da != db && da != 1 && db != 1)
      throw ShapeError("cannot broadcast " + to_string(a) + " with " + to_string(b));
    out[i] = da == 1 ? db : da;
  }
  return out;
}

Tensor::Tensor() : data_(std::make_shared<std::vector<double>>(1, 0.0)) {}

Tensor::Tensor(Shape shape, double fill)
    : shape_(std::move(shape)), data_(std::make_shared<std::vector<double>>(numel(shape_), fill)) {}

Tensor::Tensor(Shape shape, std::vector<double> data)
    : shape_(std::move(shape)), data_(std::make_shared<std::vector<double>>(std::move(data))) {
  if (data_->size() != numel(shape_))
    throw ShapeError("tensor data length " + std::to_string(data_->size()) +
                     " does not match shape " + to_string(shape_));
}

Tensor Tensor::scalar(double v) { return Tensor(Shape{}, v); }

Tensor Tensor::vector(std::initializer_list<double> values) {
  return Tensor(Shape{values.size()}, std::vector<double>(values));
}

Tensor Tensor::matrix(std::initializer_list<std::initializer_list<double>> rows) {
  const std::size_t r = rows.size();
  const std::size_t c = r ? rows.begin()->size() : 0;
  std::vector<double> data;
  data.reserve(r * c);
  for (const auto& row : rows) {
    if (row.size() != c) throw ShapeError("ragged matrix literal");
    data.insert(data.end(), row.begin(), row.end());
  }
  return Tensor(Shape{r, c}, std::move(data));
}

std::span<double> Tensor::mutable_data() {
  if (data_.use_count() > 1) data_ = std::make_shared<std::vector<double>>(*data_);
  return *data_;
}

double Tensor::item() const {
  if (data_->size() != 1) throw ShapeError("item() on tensor of shape " + to_string(shape_));
  return (*data_)[0];
}

Tensor Tensor::reshaped(Shape shape) const {
  if (numel(shape) != size())
    throw ShapeError("cannot reshape " + to_string(shape_) + " to " + to_string(shape));
  Tensor out = *this;
  out.shape_ = std::move(shape);
  return out;
}

Tensor Tensor::row(std::size_t i) const {
  if (rank() == 0 || i >= shape_[0]) throw IndexError("row index out of range");
  Shape sub(shape_.begin() + 1, shape_.end());
  const std::size_t n = numel(sub);
  return Tensor(std::move(sub), std::vector<double>(data_->begin() + static_cast<long>(i * n),
                                                    data_->begin() + static_cast<long>((i + 1) * n)));
}

bool identical(const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) return false;
  return std::memcmp(a.ptr(), b.ptr(), a.size() * sizeof(double)) == 0;
}

double max_abs_diff(const Tensor& a, const Tensor& b) {
  if (a.size() != b.size()) throw ShapeError("max_abs_diff: size mismatch");
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

bool all_finite(const Tensor& t) {
  for (double v : t.data())
    if (!std::isfinite(v)) return false;
  return true;
}

Tensor broadcast_to(const Tensor& t, const Shape& shape) {
  if (t.shape() == shape) return t;
  if (broadcast_shapes(t.shape(), shape) != shape)
    throw ShapeError("cannot broadcast " + to_string(t.shape()) + " to " + to_string(shape));
  Tensor out(shape);
  double* o = out.mutable_ptr();
  const double* src = t.ptr();
  const auto st = detail::broadcast_strides(t.shape(), shape);
  const std::vector<std::size_t> zero(shape.size(), 0);
  detail::for_each_row(shape, st, zero,
                       [&](std::size_t a, std::size_t as, std::size_t, std::size_t,
                           std::size_t out_off, std::size_t len) {
                         if (as == 1)
                           std::memcpy(o + out_off, src + a, len * sizeof(double));
                         else
                           for (std::size_t i = 0; i < len; ++i) o[out_off + i] = src[a];
                       });
  return out;
}

Tensor reduce_to_shape(const Tensor& t, const Shape& target) {
  if (t.shape() == target) return t;
  if (broadcast_shapes(target, t.shape()) != t.shape())
    throw ShapeError("cannot reduce " + to_string(t.shape()) + " to " + to_string(target));
  const auto& k = kernels::active();
  if (numel(target) == 1) return Tensor(target, k.sum(t.ptr(), t.size()));
  Tensor out(target, 0.0);
  double* o = out.mutable_ptr();
  const double* src = t.ptr();
  const auto st = detail::broadcast_strides(target, t.shape());
  const std::vector<std::size_t> zero(t.shape().size(), 0);
  detail::for_each_row(t.shape(), st, zero,
                       [&](std::size_t a, std::size_t as, std::size_t, std::size_t,
                           std::size_t in_off, std::size_t len) {
                         if (as == 1)
                           k.add_vv(o + a, src + in_off, o + a, len);
                         else
                           o[a] += k.sum(src + in_off, len);
                       });
  return out;
}

Tensor one_hot(const Tensor& indices, std::size_t depth) {
  Shape shape = indices.shape();
  shape.push_back(depth);
  Tensor out(shape, 0.0);
  double* o = out.mutable_ptr();
  for (std::size_t i = 0; i < indices.size(); ++i) {
    const double v = indices[i];
    const double r = std::round(v);
    if (std::abs(v - r) > 1e-9 || r < 0 || r >= static_cast<double>(depth))
      throw IndexError("one_hot: index " + std::to_string(v) + " outside [0, " +
                       std::to_string(depth) + ")");
    o[i * depth + static_cast<std::size_t>(r)] = 1.0;
  }
  return out;
}

Tensor stack_rows(const std::vector<Tensor>& rows) {
  if (rows.empty()) throw ShapeError("stack_rows: no rows");
  Shape shape = rows.front().shape();
  const std::size_t n = rows.front().size();
  shape.insert(shape.begin(), rows.size());
  std::vector<double> data;
  data.reserve(rows.size() * n);
  for (const auto& r : rows) {
    if (r.shape() != rows.front().shape()) throw ShapeError("stack_rows: shape mismatch");
    data.insert(data.end(), r.data().begin(), r.data().end());
  }
  return Tensor(std::move(shape), std::move(data));
}

}  // namespace ppl
