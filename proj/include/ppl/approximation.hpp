#pragma once

// Approximating families. An approximation owns its Parameters in a
// ParameterStore and rebuilds its distribution on every tape.

#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "ppl/dists.hpp"
#include "ppl/parameter.hpp"

namespace ppl {

// Tensors fed for the current step (minibatches, inputs), keyed by slot name.
using Feeds = std::map<std::string, Tensor>;

class Approximation {
 public:
  virtual ~Approximation() = default;

  const std::string& name() const { return name_; }

  virtual DistPtr build(Tape& tape, const Feeds& feeds) const = 0;
  virtual std::vector<Parameter*> parameters() const = 0;

  // Value used when this approximation is bound as data in another problem:
  // the point, the latest stored sample, or a fresh draw.
  virtual Value current(Tape& tape, const Feeds& feeds, Rng& rng) const;

  // Restores every parameter to the tensor it was created with.
  void reset();
  bool owns(const Parameter* p) const;

 protected:
  explicit Approximation(std::string name) : name_(std::move(name)) {}
  Parameter& own(ParameterStore& store, const std::string& suffix, Tensor init, bool trainable = true);

 private:
  std::string name_;
  std::vector<std::pair<Parameter*, Tensor>> initial_;
};

using ApproxPtr = std::shared_ptr<Approximation>;

// Normal(loc, softplus(raw_scale)).
class NormalApproximation final : public Approximation {
 public:
  NormalApproximation(ParameterStore& store, const std::string& name, Tensor loc, Tensor raw_scale);
  DistPtr build(Tape& tape, const Feeds& feeds) const override;
  std::vector<Parameter*> parameters() const override { return {loc_, raw_scale_}; }
  Parameter& loc() const { return *loc_; }
  Parameter& raw_scale() const { return *raw_scale_; }

 private:
  Parameter* loc_;
  Parameter* raw_scale_;
};

// Beta(softplus(raw_a), softplus(raw_b)).
class BetaApproximation final : public Approximation {
 public:
  BetaApproximation(ParameterStore& store, const std::string& name, Tensor raw_a, Tensor raw_b);
  DistPtr build(Tape& tape, const Feeds& feeds) const override;
  std::vector<Parameter*> parameters() const override { return {raw_a_, raw_b_}; }

 private:
  Parameter* raw_a_;
  Parameter* raw_b_;
};

class CategoricalApproximation final : public Approximation {
 public:
  CategoricalApproximation(ParameterStore& store, const std::string& name, Tensor logits);
  DistPtr build(Tape& tape, const Feeds& feeds) const override;
  std::vector<Parameter*> parameters() const override { return {logits_}; }
  Parameter& logits() const { return *logits_; }

 private:
  Parameter* logits_;
};

enum class Constraint { identity, sigmoid, softplus };

// PointMass(constraint(params)); the MAP family.
class PointMassApproximation final : public Approximation {
 public:
  PointMassApproximation(ParameterStore& store, const std::string& name, Tensor init,
                         Constraint constraint = Constraint::identity);
  DistPtr build(Tape& tape, const Feeds& feeds) const override;
  std::vector<Parameter*> parameters() const override { return {params_}; }
  Parameter& params() const { return *params_; }
  Tensor point() const;

 private:
  Parameter* params_;
  Constraint constraint_;
};

struct Summary {
  Tensor mean;
  Tensor sd;
  Tensor q05;
  Tensor q50;
  Tensor q95;
  std::size_t rows = 0;
};

// Sample store [T, event...] filled by Monte Carlo updates. Rows [0, cursor)
// are written. The store is a non-trainable Parameter. Row 0 doubles as the
// sampler's starting position until it is overwritten by the first update, so
// it must lie in the support of the latent (`initial`, zeros by default).
class EmpiricalApproximation final : public Approximation {
 public:
  EmpiricalApproximation(ParameterStore& store, const std::string& name, std::size_t capacity,
                         const Shape& event_shape, const std::optional<Tensor>& initial = std::nullopt);

  DistPtr build(Tape& tape, const Feeds& feeds) const override;
  std::vector<Parameter*> parameters() const override { return {store_}; }
  Value current(Tape& tape, const Feeds& feeds, Rng& rng) const override;

  std::size_t capacity() const { return store_->shape()[0]; }
  std::size_t cursor() const { return cursor_; }
  const Shape& event_shape() const { return event_; }
  // Latest written row; row 0 (the initial position) before any update.
  Tensor latest() const;
  // Throws StoreFull when every row is written.
  void push(const Tensor& row);
  void reset_cursor() { cursor_ = 0; }
  const Tensor& samples() const { return store_->value(); }

  // Summaries over written rows, skipping the first `burn_in` fraction.
  Summary summarize(double burn_in = 0.0) const;

 private:
  Parameter* store_;
  Shape event_;
  std::size_t cursor_ = 0;
};

// Concatenated summaries over several chains' written rows.
Summary merge_summaries(const std::vector<const EmpiricalApproximation*>& chains,
                        double burn_in = 0.0);

// Amortized family: a user function maps (tape, feeds) to a distribution,
// typically Normal(mu(x), softplus(s(x))) from an inference network.
class FunctionalApproximation final : public Approximation {
 public:
  using Builder = std::function<DistPtr(Tape&, const Feeds&)>;
  FunctionalApproximation(std::string name, std::vector<Parameter*> params, Builder builder);
  DistPtr build(Tape& tape, const Feeds& feeds) const override { return builder_(tape, feeds); }
  std::vector<Parameter*> parameters() const override { return params_; }

 private:
  std::vector<Parameter*> params_;
  Builder builder_;
};

}  // namespace ppl
