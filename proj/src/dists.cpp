#include "ppl/dists.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "ppl/errors.hpp"

namespace ppl {
namespace {

constexpr double kHalfLog2Pi = 0.91893853320467274178;  // 0.5 * log(2 pi)

void require_positive(const Tensor& t, const char* what) {
  for (double v : t.data())
    if (!(v > 0.0) || !std::isfinite(v))
      throw InvalidParameter(std::string(what) + " must be positive and finite, got " +
                             std::to_string(v));
}

void require_finite(const Tensor& t, const char* what) {
  if (!all_finite(t)) throw InvalidParameter(std::string(what) + " must be finite");
}

void require_same_tape(const Value& a, const Value& b) {
  if (&a.tape() != &b.tape()) throw ConfigError("distribution parameters live on different tapes");
}

Shape drop_first(const Shape& s, const char* what) {
  if (s.empty()) throw ShapeError(std::string(what) + " needs at least one axis");
  return Shape(s.begin() + 1, s.end());
}

Shape drop_last(const Shape& s, const char* what) {
  if (s.empty()) throw ShapeError(std::string(what) + " needs at least one axis");
  return Shape(s.begin(), s.end() - 1);
}

}  // namespace

std::string_view kind_name(DistKind kind) {
  switch (kind) {
    case DistKind::normal: return "Normal";
    case DistKind::bernoulli: return "Bernoulli";
    case DistKind::beta: return "Beta";
    case DistKind::categorical: return "Categorical";
    case DistKind::dirichlet: return "Dirichlet";
    case DistKind::point_mass: return "PointMass";
    case DistKind::empirical: return "Empirical";
  }
  return "?";
}

bool is_discrete(Support s) { return s == Support::binary || s == Support::categorical; }

Shape Distribution::sample_shape() const {
  Shape s = batch_;
  s.insert(s.end(), event_.begin(), event_.end());
  return s;
}

Value Distribution::rsample(Rng&) const {
  throw NotReparameterizable(std::string(kind_name(kind())) + " is not reparameterizable");
}

// ---- Normal ------------------------------------------------------------------

Normal::Normal(Value mu, Value sigma)
    : Distribution(mu.tape(), broadcast_shapes(mu.shape(), sigma.shape()), {}),
      mu_(mu),
      sigma_(sigma) {
  require_same_tape(mu, sigma);
}

void Normal::validate() const {
  require_finite(mu_.tensor(), "Normal mu");
  require_positive(sigma_.tensor(), "Normal sigma");
}

Value Normal::log_prob(Value x) const {
  validate();
  const Value z = (x - mu_) / sigma_;
  return -0.5 * (z * z) - log(sigma_) - kHalfLog2Pi;
}

Tensor Normal::sample(Rng& rng) const {
  validate();
  const Tensor mu = broadcast_to(mu_.tensor(), batch_);
  const Tensor sigma = broadcast_to(sigma_.tensor(), batch_);
  Tensor out(batch_);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = mu[i] + sigma[i] * rng.normal();
  return out;
}

Value Normal::rsample(Rng& rng) const {
  validate();
  Tensor eps(batch_);
  for (std::size_t i = 0; i < eps.size(); ++i) eps[i] = rng.normal();
  return mu_ + sigma_ * tape().constant(std::move(eps));
}

// ---- Bernoulli ---------------------------------------------------------------

Bernoulli::Bernoulli(Value logits) : Distribution(logits.tape(), logits.shape(), {}), logits_(logits) {}

std::shared_ptr<Bernoulli> Bernoulli::from_probs(Value p) {
  for (double v : p.tensor().data())
    if (!(v > 0.0 && v < 1.0))
      throw InvalidParameter("Bernoulli probability must lie in (0, 1), got " + std::to_string(v));
  return std::make_shared<Bernoulli>(log(p) - log(1.0 - p));
}

Value Bernoulli::log_prob(Value x) const {
  require_finite(logits_.tensor(), "Bernoulli logits");
  for (double v : x.tensor().data())
    if (v != 0.0 && v != 1.0)
      throw SupportError("Bernoulli value must be 0 or 1, got " + std::to_string(v));
  return x * logits_ - softplus(logits_);
}

Tensor Bernoulli::sample(Rng& rng) const {
  const Tensor& l = logits_.tensor();
  require_finite(l, "Bernoulli logits");
  Tensor out(batch_);
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double p = 1.0 / (1.0 + std::exp(-l[i]));
    out[i] = rng.uniform() < p ? 1.0 : 0.0;
  }
  return out;
}

// ---- Beta --------------------------------------------------------------------

Beta::Beta(Value a, Value b)
    : Distribution(a.tape(), broadcast_shapes(a.shape(), b.shape()), {}), a_(a), b_(b) {
  require_same_tape(a, b);
}

void Beta::validate() const {
  require_positive(a_.tensor(), "Beta a");
  require_positive(b_.tensor(), "Beta b");
}

Value Beta::log_prob(Value x) const {
  validate();
  for (double v : x.tensor().data())
    if (!(v > 0.0 && v < 1.0))
      throw SupportError("Beta value must lie in (0, 1), got " + std::to_string(v));
  return (a_ - 1.0) * log(x) + (b_ - 1.0) * log(1.0 - x) + lgamma(a_ + b_) - lgamma(a_) -
         lgamma(b_);
}

Tensor Beta::sample(Rng& rng) const {
  validate();
  const Tensor a = broadcast_to(a_.tensor(), batch_);
  const Tensor b = broadcast_to(b_.tensor(), batch_);
  Tensor out(batch_);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = rng.beta(a[i], b[i]);
  return out;
}

// ---- Categorical -------------------------------------------------------------

Categorical::Categorical(Value logits)
    : Distribution(logits.tape(), drop_last(logits.shape(), "Categorical logits"), {}),
      logits_(logits) {}

Value Categorical::log_prob(Value x) const {
  require_finite(logits_.tensor(), "Categorical logits");
  const std::size_t k = num_classes();
  for (double v : x.tensor().data()) {
    const double r = std::round(v);
    if (std::abs(v - r) > 1e-9 || r < 0.0 || r >= static_cast<double>(k))
      throw SupportError("Categorical value must be an integer in [0, " + std::to_string(k) +
                         "), got " + std::to_string(v));
  }
  const Value oh = tape().constant(one_hot(x.tensor(), k));
  return sum(oh * log_softmax(logits_, -1), {-1});
}

Tensor Categorical::sample(Rng& rng) const {
  const Tensor& l = logits_.tensor();
  require_finite(l, "Categorical logits");
  const std::size_t k = num_classes();
  const std::size_t rows = numel(batch_);
  Tensor out(batch_);
  std::vector<double> w(k);
  for (std::size_t r = 0; r < rows; ++r) {
    const double* row = l.ptr() + r * k;
    double m = row[0];
    for (std::size_t j = 1; j < k; ++j) m = std::max(m, row[j]);
    for (std::size_t j = 0; j < k; ++j) w[j] = std::exp(row[j] - m);
    out[r] = static_cast<double>(rng.categorical(w));
  }
  return out;
}

// ---- Dirichlet ---------------------------------------------------------------

Dirichlet::Dirichlet(Value alpha)
    : Distribution(alpha.tape(), drop_last(alpha.shape(), "Dirichlet alpha"),
                   {alpha.shape().empty() ? 0 : alpha.shape().back()}),
      alpha_(alpha) {}

void Dirichlet::validate() const { require_positive(alpha_.tensor(), "Dirichlet alpha"); }

Value Dirichlet::log_prob(Value x) const {
  validate();
  const Tensor& xt = x.tensor();
  const std::size_t k = event_[0];
  if (xt.rank() == 0 || xt.shape().back() != k)
    throw ShapeError("Dirichlet value must end in an axis of size " + std::to_string(k));
  for (std::size_t r = 0; r < xt.size() / k; ++r) {
    double s = 0.0;
    for (std::size_t j = 0; j < k; ++j) {
      const double v = xt[r * k + j];
      if (!(v > 0.0)) throw SupportError("Dirichlet value must be strictly positive");
      s += v;
    }
    if (std::abs(s - 1.0) > 1e-9) throw SupportError("Dirichlet value must sum to 1");
  }
  return sum((alpha_ - 1.0) * log(x), {-1}) + lgamma(sum(alpha_, {-1})) -
         sum(lgamma(alpha_), {-1});
}

Tensor Dirichlet::sample(Rng& rng) const {
  validate();
  const Tensor& a = alpha_.tensor();
  const std::size_t k = event_[0];
  Tensor out(a.shape());
  for (std::size_t r = 0; r < a.size() / k; ++r) {
    double s = 0.0;
    for (std::size_t j = 0; j < k; ++j) {
      out[r * k + j] = rng.gamma(a[r * k + j]);
      s += out[r * k + j];
    }
    for (std::size_t j = 0; j < k; ++j) out[r * k + j] /= s;
  }
  return out;
}

// ---- PointMass ---------------------------------------------------------------

PointMass::PointMass(Value params)
    : Distribution(params.tape(), params.shape(), {}), params_(params) {}

Value PointMass::log_prob(Value x) const {
  return tape().constant(Tensor::zeros(broadcast_shapes(x.shape(), batch_)));
}

Tensor PointMass::sample(Rng&) const { return params_.tensor(); }

Value PointMass::rsample(Rng&) const { return params_; }

// ---- Empirical ---------------------------------------------------------------

Empirical::Empirical(Value params, std::size_t written)
    : Distribution(params.tape(), drop_first(params.shape(), "Empirical store"), {}),
      params_(params),
      written_(written) {
  const Shape& s = params.shape();
  if (s[0] == 0) throw ShapeError("Empirical store needs at least one row");
  if (written > s[0]) throw IndexError("Empirical cursor beyond store size");
}

Value Empirical::log_prob(Value) const {
  throw ConfigError("Empirical has no density; it can only be sampled");
}

Tensor Empirical::sample(Rng& rng) const {
  const std::size_t row = written_ == 0 ? 0 : rng.uniform_index(written_);
  return params_.tensor().row(row);
}

// ---- factories ---------------------------------------------------------------

namespace dist {

DistPtr normal(Value mu, Value sigma) { return std::make_shared<Normal>(mu, sigma); }
DistPtr normal(Value mu, double sigma) {
  return std::make_shared<Normal>(mu, mu.tape().scalar(sigma));
}
DistPtr bernoulli_logits(Value logits) { return std::make_shared<Bernoulli>(logits); }
DistPtr bernoulli_probs(Value p) { return Bernoulli::from_probs(p); }
DistPtr beta(Value a, Value b) { return std::make_shared<Beta>(a, b); }
DistPtr categorical(Value logits) { return std::make_shared<Categorical>(logits); }
DistPtr dirichlet(Value alpha) { return std::make_shared<Dirichlet>(alpha); }
DistPtr point_mass(Value params) { return std::make_shared<PointMass>(params); }

}  // namespace dist

Value kl_normal_normal(const Distribution& q, const Distribution& p) {
  const auto* nq = dynamic_cast<const Normal*>(&q);
  const auto* np = dynamic_cast<const Normal*>(&p);
  if (!nq || !np)
    throw ConfigError("analytic KL needs Normal/Normal, got " + std::string(kind_name(q.kind())) +
                      "/" + std::string(kind_name(p.kind())));
  broadcast_shapes(q.batch_shape(), p.batch_shape());
  require_positive(nq->sigma().tensor(), "Normal sigma");
  require_positive(np->sigma().tensor(), "Normal sigma");
  const Value sq = nq->sigma();
  const Value sp = np->sigma();
  const Value d = nq->mu() - np->mu();
  return log(sp / sq) + (sq * sq + d * d) / (2.0 * (sp * sp)) - 0.5;
}

Value entropy(const Distribution& d) {
  if (const auto* n = dynamic_cast<const Normal*>(&d)) {
    require_positive(n->sigma().tensor(), "Normal sigma");
    const Value h = log(n->sigma()) + (kHalfLog2Pi + 0.5);
    if (h.shape() == d.batch_shape()) return h;
    return broadcast_to(h, d.batch_shape());
  }
  if (const auto* c = dynamic_cast<const Categorical*>(&d)) {
    const Value ls = log_softmax(c->logits(), -1);
    return -sum(exp(ls) * ls, {-1});
  }
  throw ConfigError("no analytic entropy for " + std::string(kind_name(d.kind())));
}

}  // namespace ppl
