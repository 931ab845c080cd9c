#pragma once

#include <map>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "ppl/tensor.hpp"

namespace ppl {

/// Named mutable tensor. The only state that changes between tapes.
class Parameter {
 public:
  Parameter(std::string name, Tensor value, bool trainable = true)
      : name_(std::move(name)), value_(std::move(value)), trainable_(trainable) {}

  const std::string& name() const { return name_; }
  const Tensor& value() const { return value_; }
  const Shape& shape() const { return value_.shape(); }
  bool trainable() const { return trainable_; }

  // Shape is fixed at creation; throws ShapeError otherwise.
  void assign(Tensor value);
  void write_row(std::size_t row, std::span<const double> values);

 private:
  std::string name_;
  Tensor value_;
  bool trainable_;
};

/// Owns parameters; addresses are stable for the lifetime of the store.
class ParameterStore {
 public:
  Parameter& create(const std::string& name, Tensor init, bool trainable = true);
  Parameter& get(const std::string& name);
  const Parameter& get(const std::string& name) const;
  bool contains(const std::string& name) const { return params_.count(name) != 0; }
  std::vector<Parameter*> all();

  std::map<std::string, Tensor> snapshot() const;
  void restore(const std::map<std::string, Tensor>& snapshot);

 private:
  std::map<std::string, std::unique_ptr<Parameter>> params_;
};

}  // namespace ppl
