#include "ppl/approximation.hpp"

#include <algorithm>
#include <cmath>

#include "ppl/errors.hpp"

namespace ppl {

Value Approximation::current(Tape& tape, const Feeds& feeds, Rng& rng) const {
  const DistPtr d = build(tape, feeds);
  if (d->reparameterizable()) return d->rsample(rng);
  return tape.constant(d->sample(rng));
}

void Approximation::reset() {
  for (auto& [p, init] : initial_) p->assign(init);
}

bool Approximation::owns(const Parameter* p) const {
  for (Parameter* q : parameters())
    if (q == p) return true;
  return false;
}

Parameter& Approximation::own(ParameterStore& store, const std::string& suffix, Tensor init,
                              bool trainable) {
  Parameter& p = store.create(name_ + "/" + suffix, init, trainable);
  initial_.emplace_back(&p, std::move(init));
  return p;
}

// ---- Normal ------------------------------------------------------------------

NormalApproximation::NormalApproximation(ParameterStore& store, const std::string& name,
                                         Tensor loc, Tensor raw_scale)
    : Approximation(name) {
  if (loc.shape() != raw_scale.shape())
    throw ShapeError("NormalApproximation: loc and scale shapes differ");
  loc_ = &own(store, "loc", std::move(loc));
  raw_scale_ = &own(store, "scale", std::move(raw_scale));
}

DistPtr NormalApproximation::build(Tape& tape, const Feeds&) const {
  return dist::normal(tape.param(*loc_), softplus(tape.param(*raw_scale_)));
}

// ---- Beta --------------------------------------------------------------------

BetaApproximation::BetaApproximation(ParameterStore& store, const std::string& name, Tensor raw_a,
                                     Tensor raw_b)
    : Approximation(name) {
  raw_a_ = &own(store, "a", std::move(raw_a));
  raw_b_ = &own(store, "b", std::move(raw_b));
}

DistPtr BetaApproximation::build(Tape& tape, const Feeds&) const {
  return dist::beta(softplus(tape.param(*raw_a_)), softplus(tape.param(*raw_b_)));
}

// ---- Categorical -------------------------------------------------------------

CategoricalApproximation::CategoricalApproximation(ParameterStore& store, const std::string& name,
                                                   Tensor logits)
    : Approximation(name) {
  logits_ = &own(store, "logits", std::move(logits));
}

DistPtr CategoricalApproximation::build(Tape& tape, const Feeds&) const {
  return dist::categorical(tape.param(*logits_));
}

// ---- PointMass ---------------------------------------------------------------

PointMassApproximation::PointMassApproximation(ParameterStore& store, const std::string& name,
                                               Tensor init, Constraint constraint)
    : Approximation(name), constraint_(constraint) {
  params_ = &own(store, "params", std::move(init));
}

namespace {
Value constrain(Value v, Constraint c) {
  switch (c) {
    case Constraint::identity: return v;
    case Constraint::sigmoid: return sigmoid(v);
    case Constraint::softplus: return softplus(v);
  }
  return v;
}
}  // namespace

DistPtr PointMassApproximation::build(Tape& tape, const Feeds&) const {
  const Value p = tape.param(*params_);
  return dist::point_mass(constraint_ == Constraint::identity ? p : constrain(p, constraint_));
}

Tensor PointMassApproximation::point() const {
  Tape t;
  return constrain(t.constant(params_->value()), constraint_).tensor();
}

// ---- Empirical ---------------------------------------------------------------

EmpiricalApproximation::EmpiricalApproximation(ParameterStore& store, const std::string& name,
                                               std::size_t capacity, const Shape& event_shape,
                                               const std::optional<Tensor>& initial)
    : Approximation(name), event_(event_shape) {
  if (capacity == 0) throw ConfigError("Empirical store needs capacity >= 1");
  Shape shape{capacity};
  shape.insert(shape.end(), event_shape.begin(), event_shape.end());
  Tensor init(shape, 0.0);
  if (initial) {
    if (initial->shape() != event_shape)
      throw ShapeError("Empirical initial row has shape " + to_string(initial->shape()) +
                       ", expected " + to_string(event_shape));
    std::copy(initial->data().begin(), initial->data().end(), init.mutable_data().begin());
  }
  store_ = &own(store, "samples", std::move(init), false);
}

DistPtr EmpiricalApproximation::build(Tape& tape, const Feeds&) const {
  return std::make_shared<Empirical>(tape.constant(store_->value()), cursor_);
}

Tensor EmpiricalApproximation::latest() const {
  return store_->value().row(cursor_ == 0 ? 0 : cursor_ - 1).reshaped(event_);
}

Value EmpiricalApproximation::current(Tape& tape, const Feeds&, Rng&) const {
  return tape.constant(latest());
}

void EmpiricalApproximation::push(const Tensor& row) {
  if (cursor_ >= capacity())
    throw StoreFull("Empirical store '" + name() + "' is full (" + std::to_string(capacity()) +
                    " rows)");
  if (row.size() != numel(event_)) throw ShapeError("Empirical row has the wrong size");
  store_->write_row(cursor_, row.data());
  ++cursor_;
}

namespace {

double quantile(std::vector<double>& v, double q) {
  std::sort(v.begin(), v.end());
  if (v.size() == 1) return v[0];
  const double pos = q * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

Summary summarize_rows(const std::vector<const double*>& rows, const Shape& event) {
  const std::size_t width = numel(event);
  Summary s{Tensor(event), Tensor(event), Tensor(event), Tensor(event), Tensor(event), rows.size()};
  if (rows.empty()) return s;
  std::vector<double> col(rows.size());
  for (std::size_t j = 0; j < width; ++j) {
    double mean = 0.0;
    for (std::size_t i = 0; i < rows.size(); ++i) {
      col[i] = rows[i][j];
      mean += col[i];
    }
    mean /= static_cast<double>(rows.size());
    double var = 0.0;
    for (double v : col) var += (v - mean) * (v - mean);
    var = rows.size() > 1 ? var / static_cast<double>(rows.size() - 1) : 0.0;
    s.mean[j] = mean;
    s.sd[j] = std::sqrt(var);
    s.q05[j] = quantile(col, 0.05);
    s.q50[j] = quantile(col, 0.50);
    s.q95[j] = quantile(col, 0.95);
  }
  return s;
}

void collect(const EmpiricalApproximation& e, double burn_in, std::vector<const double*>& rows) {
  if (burn_in < 0.0 || burn_in >= 1.0) throw ConfigError("burn-in fraction must lie in [0, 1)");
  const std::size_t width = numel(e.event_shape());
  const auto skip = static_cast<std::size_t>(std::floor(burn_in * static_cast<double>(e.cursor())));
  for (std::size_t i = skip; i < e.cursor(); ++i) rows.push_back(e.samples().ptr() + i * width);
}

}  // namespace

Summary EmpiricalApproximation::summarize(double burn_in) const {
  std::vector<const double*> rows;
  collect(*this, burn_in, rows);
  return summarize_rows(rows, event_);
}

Summary merge_summaries(const std::vector<const EmpiricalApproximation*>& chains, double burn_in) {
  if (chains.empty()) throw ConfigError("merge_summaries: no chains");
  std::vector<const double*> rows;
  for (const auto* c : chains) {
    if (c->event_shape() != chains.front()->event_shape())
      throw ShapeError("merge_summaries: chains have different event shapes");
    collect(*c, burn_in, rows);
  }
  return summarize_rows(rows, chains.front()->event_shape());
}

// ---- Functional --------------------------------------------------------------

FunctionalApproximation::FunctionalApproximation(std::string name, std::vector<Parameter*> params,
                                                 Builder builder)
    : Approximation(std::move(name)), params_(std::move(params)), builder_(std::move(builder)) {
  if (!builder_) throw ConfigError("FunctionalApproximation needs a builder");
}

}  // namespace ppl
