#include "ppl/model.hpp"

#include "ppl/errors.hpp"

namespace ppl {

Trace::Trace(Tape& tape, Rng& rng, Bindings bindings, Feeds inputs, ParameterStore* params)
    : tape_(&tape), rng_(&rng), bindings_(std::move(bindings)), inputs_(std::move(inputs)),
      params_(params) {}

Value Trace::sample(const std::string& name, DistPtr dist) {
  if (find(name)) throw ConfigError("random variable '" + name + "' created twice");
  if (&dist->tape() != tape_)
    throw ConfigError("random variable '" + name + "' built on a different tape");

  RandomVariable rv{name, std::move(dist), Value(), Source::sampled};
  const auto it = bindings_.find(name);
  if (it != bindings_.end()) {
    used_[name] = true;
    const Shape expected = rv.dist->sample_shape();
    if (const auto* t = std::get_if<Tensor>(&it->second)) {
      rv.value = tape_->constant(*t);
      rv.source = Source::data;
    } else if (const auto* v = std::get_if<Value>(&it->second)) {
      if (&v->tape() != tape_)
        throw ConfigError("binding for '" + name + "' lives on a different tape");
      rv.value = *v;
      rv.source = Source::free;
    } else {
      const Approximation* q = std::get<const Approximation*>(it->second);
      rv.value = q->current(*tape_, inputs_, *rng_);
      rv.source = Source::approximation;
    }
    if (rv.value.shape() != expected)
      throw ShapeError("binding for '" + name + "' has shape " + to_string(rv.value.shape()) +
                       ", the random variable has shape " + to_string(expected));
  } else {
    rv.value = tape_->constant(rv.dist->sample(*rng_));
  }
  rvs_.push_back(rv);
  return rv.value;
}

Value Trace::input(const std::string& name) {
  if (auto it = input_values_.find(name); it != input_values_.end()) return it->second;
  const auto it = inputs_.find(name);
  if (it == inputs_.end()) throw ConfigError("model input '" + name + "' was not supplied");
  used_["input:" + name] = true;
  const Value v = tape_->constant(it->second);
  input_values_.emplace(name, v);
  return v;
}

Value Trace::param(const std::string& name) {
  if (!params_) throw ConfigError("model parameter '" + name + "' requested without a store");
  return tape_->param(params_->get(name));
}

const RandomVariable* Trace::find(const std::string& name) const {
  for (const auto& rv : rvs_)
    if (rv.name == name) return &rv;
  return nullptr;
}

const RandomVariable& Trace::at(const std::string& name) const {
  const RandomVariable* rv = find(name);
  if (!rv) throw ConfigError("model has no random variable '" + name + "'");
  return *rv;
}

void Trace::check_bindings_used() const {
  for (const auto& [name, b] : bindings_)
    if (!used_.count(name))
      throw ConfigError("binding for '" + name + "' names no random variable of the model");
}

Trace trace(const ModelFn& model, Tape& tape, Rng& rng, Bindings bindings, Feeds inputs,
            ParameterStore* params) {
  Trace t(tape, rng, std::move(bindings), std::move(inputs), params);
  model(t);
  t.check_bindings_used();
  return t;
}

void validate_scale(const ScaleMap& scale) {
  for (const auto& [name, s] : scale)
    if (!(s > 0.0) || !std::isfinite(s))
      throw ConfigError("scale for '" + name + "' must be positive and finite");
}

Value log_joint_where(const Trace& t, const ScaleMap& scale,
                      const std::function<bool(const RandomVariable&)>& keep) {
  validate_scale(scale);
  for (const auto& [name, s] : scale)
    if (!t.find(name)) throw ConfigError("scale given for unknown random variable '" + name + "'");
  Value total;
  for (const auto& rv : t.variables()) {
    if (!keep(rv)) continue;
    Value term = sum(rv.dist->log_prob(rv.value));
    if (auto it = scale.find(rv.name); it != scale.end() && it->second != 1.0)
      term = term * it->second;
    total = total.valid() ? total + term : term;
  }
  return total.valid() ? total : t.tape().scalar(0.0);
}

Value log_joint(const Trace& t, const ScaleMap& scale) {
  return log_joint_where(t, scale, [](const RandomVariable&) { return true; });
}

}  // namespace ppl
