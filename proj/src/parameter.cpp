#include "ppl/parameter.hpp"

#include <algorithm>

#include "ppl/errors.hpp"

namespace ppl {

void Parameter::assign(Tensor value) {
  if (value.shape() != value_.shape())
    throw ShapeError("parameter '" + name_ + "' has shape " + to_string(value_.shape()) +
                     ", got " + to_string(value.shape()));
  value_ = std::move(value);
}

void Parameter::write_row(std::size_t row, std::span<const double> values) {
  if (value_.rank() == 0 || row >= value_.dim(0)) throw IndexError("write_row: row out of range");
  const std::size_t width = value_.size() / value_.dim(0);
  if (values.size() != width) throw ShapeError("write_row: width mismatch for '" + name_ + "'");
  std::copy(values.begin(), values.end(), value_.mutable_data().begin() + row * width);
}

Parameter& ParameterStore::create(const std::string& name, Tensor init, bool trainable) {
  if (contains(name)) throw ConfigError("parameter '" + name + "' already exists");
  auto& slot = params_[name];
  slot = std::make_unique<Parameter>(name, std::move(init), trainable);
  return *slot;
}

Parameter& ParameterStore::get(const std::string& name) {
  auto it = params_.find(name);
  if (it == params_.end()) throw ConfigError("no parameter named '" + name + "'");
  return *it->second;
}

const Parameter& ParameterStore::get(const std::string& name) const {
  auto it = params_.find(name);
  if (it == params_.end()) throw ConfigError("no parameter named '" + name + "'");
  return *it->second;
}

std::vector<Parameter*> ParameterStore::all() {
  std::vector<Parameter*> out;
  for (auto& [_, p] : params_) out.push_back(p.get());
  return out;
}

std::map<std::string, Tensor> ParameterStore::snapshot() const {
  std::map<std::string, Tensor> out;
  for (const auto& [name, p] : params_) out.emplace(name, p->value());
  return out;
}

void ParameterStore::restore(const std::map<std::string, Tensor>& snapshot) {
  for (const auto& [name, value] : snapshot) get(name).assign(value);
}

}  // namespace ppl
