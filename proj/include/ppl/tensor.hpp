#pragma once

#include <cstddef>
#include <initializer_list>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace ppl {

using Shape = std::vector<std::size_t>;

std::size_t numel(const Shape& shape);
std::string to_string(const Shape& shape);

// Trailing-axis alignment; extent-1 axes stretch. Throws ShapeError.
Shape broadcast_shapes(const Shape& a, const Shape& b);

/// Dense row-major array of doubles.
///
/// Storage is shared between copies and cloned on the first mutable access,
/// so passing tensors by value is cheap and a tensor never changes under
/// another holder.
class Tensor {
 public:
  Tensor();  // scalar zero
  explicit Tensor(Shape shape, double fill = 0.0);
  Tensor(Shape shape, std::vector<double> data);

  static Tensor scalar(double v);
  static Tensor zeros(Shape shape) { return Tensor(std::move(shape), 0.0); }
  static Tensor ones(Shape shape) { return Tensor(std::move(shape), 1.0); }
  static Tensor full(Shape shape, double v) { return Tensor(std::move(shape), v); }
  static Tensor vector(std::initializer_list<double> values);
  static Tensor matrix(std::initializer_list<std::initializer_list<double>> rows);

  const Shape& shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::size_t size() const { return data_->size(); }
  std::size_t dim(std::size_t axis) const { return shape_.at(axis); }

  std::span<const double> data() const { return *data_; }
  std::span<double> mutable_data();
  const double* ptr() const { return data_->data(); }
  double* mutable_ptr() { return mutable_data().data(); }

  double operator[](std::size_t i) const { return (*data_)[i]; }
  double& operator[](std::size_t i) { return mutable_data()[i]; }
  double at(std::size_t i, std::size_t j) const { return (*data_)[i * shape_.at(1) + j]; }

  // The single element of a size-1 tensor.
  double item() const;

  Tensor reshaped(Shape shape) const;
  // Row `i` along the leading axis.
  Tensor row(std::size_t i) const;

  bool shares_storage_with(const Tensor& other) const { return data_ == other.data_; }

 private:
  Shape shape_;
  std::shared_ptr<std::vector<double>> data_;
};

// Bitwise comparison of shape and contents.
bool identical(const Tensor& a, const Tensor& b);
double max_abs_diff(const Tensor& a, const Tensor& b);
bool all_finite(const Tensor& t);

Tensor broadcast_to(const Tensor& t, const Shape& shape);
// Sum `t` over the axes that broadcasting added or stretched to reach t.shape().
Tensor reduce_to_shape(const Tensor& t, const Shape& target);

Tensor one_hot(const Tensor& indices, std::size_t depth);
Tensor stack_rows(const std::vector<Tensor>& rows);

}  // namespace ppl
