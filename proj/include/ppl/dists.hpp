#pragma once

// Distributions whose parameters are tape Values.
//
// A distribution object is an immutable descriptor bound to the tape its
// parameters live on. log_prob is built from tape ops, so it differentiates
// with respect to the parameters (and the value, for continuous supports).
// Parameter ranges are validated when a density or draw is evaluated.

#include <memory>
#include <string_view>

#include "ppl/rng.hpp"
#include "ppl/tape.hpp"

namespace ppl {

enum class DistKind { normal, bernoulli, beta, categorical, dirichlet, point_mass, empirical };
enum class Support { real, unit_interval, positive, binary, categorical, simplex };

std::string_view kind_name(DistKind kind);
bool is_discrete(Support s);

class Distribution {
 public:
  virtual ~Distribution() = default;

  virtual DistKind kind() const = 0;
  virtual Support support() const = 0;
  virtual bool reparameterizable() const { return false; }

  const Shape& batch_shape() const { return batch_; }
  const Shape& event_shape() const { return event_; }
  Shape sample_shape() const;

  // Shape: broadcast of value's batch part with batch_shape(); event axes are
  // reduced. Throws SupportError for out-of-support values.
  virtual Value log_prob(Value x) const = 0;
  Value log_prob(const Tensor& x) const { return log_prob(tape().constant(x)); }

  // Ancestral draw of shape batch + event; deterministic given rng state.
  virtual Tensor sample(Rng& rng) const = 0;
  // Pathwise draw that stays differentiable w.r.t. the parameters.
  virtual Value rsample(Rng& rng) const;

  Tape& tape() const { return *tape_; }

 protected:
  Distribution(Tape& tape, Shape batch, Shape event)
      : tape_(&tape), batch_(std::move(batch)), event_(std::move(event)) {}

  Tape* tape_;
  Shape batch_;
  Shape event_;
};

using DistPtr = std::shared_ptr<const Distribution>;

class Normal final : public Distribution {
 public:
  Normal(Value mu, Value sigma);
  DistKind kind() const override { return DistKind::normal; }
  Support support() const override { return Support::real; }
  bool reparameterizable() const override { return true; }
  using Distribution::log_prob;
  Value log_prob(Value x) const override;
  Tensor sample(Rng& rng) const override;
  Value rsample(Rng& rng) const override;

  Value mu() const { return mu_; }
  Value sigma() const { return sigma_; }

 private:
  void validate() const;
  Value mu_, sigma_;
};

class Bernoulli final : public Distribution {
 public:
  explicit Bernoulli(Value logits);
  static std::shared_ptr<Bernoulli> from_probs(Value p);

  DistKind kind() const override { return DistKind::bernoulli; }
  Support support() const override { return Support::binary; }
  using Distribution::log_prob;
  Value log_prob(Value x) const override;
  Tensor sample(Rng& rng) const override;
  Value logits() const { return logits_; }

 private:
  Value logits_;
};

class Beta final : public Distribution {
 public:
  Beta(Value a, Value b);
  DistKind kind() const override { return DistKind::beta; }
  Support support() const override { return Support::unit_interval; }
  using Distribution::log_prob;
  Value log_prob(Value x) const override;
  Tensor sample(Rng& rng) const override;
  Value a() const { return a_; }
  Value b() const { return b_; }

 private:
  void validate() const;
  Value a_, b_;
};

class Categorical final : public Distribution {
 public:
  // Last axis of logits indexes the K classes.
  explicit Categorical(Value logits);
  DistKind kind() const override { return DistKind::categorical; }
  Support support() const override { return Support::categorical; }
  using Distribution::log_prob;
  Value log_prob(Value x) const override;
  Tensor sample(Rng& rng) const override;
  Value logits() const { return logits_; }
  std::size_t num_classes() const { return logits_.shape().back(); }

 private:
  Value logits_;
};

class Dirichlet final : public Distribution {
 public:
  explicit Dirichlet(Value alpha);
  DistKind kind() const override { return DistKind::dirichlet; }
  Support support() const override { return Support::simplex; }
  using Distribution::log_prob;
  Value log_prob(Value x) const override;
  Tensor sample(Rng& rng) const override;
  Value alpha() const { return alpha_; }

 private:
  void validate() const;
  Value alpha_;
};

// All mass at `params`. log_prob is identically 0: the distribution carries a
// point, it does not score one.
class PointMass final : public Distribution {
 public:
  explicit PointMass(Value params);
  DistKind kind() const override { return DistKind::point_mass; }
  Support support() const override { return Support::real; }
  bool reparameterizable() const override { return true; }
  using Distribution::log_prob;
  Value log_prob(Value x) const override;
  Tensor sample(Rng& rng) const override;
  Value rsample(Rng& rng) const override;
  Value params() const { return params_; }

 private:
  Value params_;
};

// Sample store of shape [T, event...]; rows [0, written) hold draws.
class Empirical final : public Distribution {
 public:
  Empirical(Value params, std::size_t written);
  DistKind kind() const override { return DistKind::empirical; }
  Support support() const override { return Support::real; }
  using Distribution::log_prob;
  Value log_prob(Value x) const override;  // throws: no density
  Tensor sample(Rng& rng) const override;
  Value params() const { return params_; }
  std::size_t written() const { return written_; }

 private:
  Value params_;
  std::size_t written_;
};

namespace dist {

DistPtr normal(Value mu, Value sigma);
DistPtr normal(Value mu, double sigma);
DistPtr bernoulli_logits(Value logits);
DistPtr bernoulli_probs(Value p);
DistPtr beta(Value a, Value b);
DistPtr categorical(Value logits);
DistPtr dirichlet(Value alpha);
DistPtr point_mass(Value params);

}  // namespace dist

// Elementwise KL(q || p) for Normals with broadcast-compatible shapes.
Value kl_normal_normal(const Distribution& q, const Distribution& p);

// Elementwise entropy of a Normal; per-batch-element entropy of a Categorical.
Value entropy(const Distribution& d);

}  // namespace ppl
