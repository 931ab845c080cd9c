#include "ppl/mc.hpp"

#include <cmath>

#include "ppl/errors.hpp"

namespace ppl {
namespace {

double logistic(double u) { return u >= 0 ? 1.0 / (1.0 + std::exp(-u)) : std::exp(u) / (1.0 + std::exp(u)); }

double unconstrain(double z, Support s, const std::string& name) {
  switch (s) {
    case Support::unit_interval:
      if (!(z > 0.0 && z < 1.0))
        throw ConfigError("initial value of '" + name + "' must lie strictly inside (0, 1)");
      return std::log(z) - std::log1p(-z);
    case Support::positive:
      if (!(z > 0.0)) throw ConfigError("initial value of '" + name + "' must be positive");
      return std::log(z);
    default: return z;
  }
}

double constrain(double u, Support s) {
  switch (s) {
    case Support::unit_interval: return logistic(u);
    case Support::positive: return std::exp(u);
    default: return u;
  }
}

bool all_finite(const std::vector<double>& v) {
  for (double x : v)
    if (!std::isfinite(x)) return false;
  return true;
}

double half_squared_norm(const std::vector<double>& p) {
  double k = 0.0;
  for (double v : p) k += v * v;
  return 0.5 * k;
}

}  // namespace

void leapfrog(LeapfrogState& s, double step_size, std::size_t n_steps, const LogDensityGrad& f) {
  if (n_steps == 0) throw ConfigError("leapfrog needs at least one step");
  if (!(step_size > 0.0) || !std::isfinite(step_size))
    throw ConfigError("leapfrog step size must be positive and finite");
  const std::size_t n = s.q.size();
  if (s.p.size() != n || s.grad.size() != n)
    throw ShapeError("leapfrog position, momentum and gradient sizes differ");
  const double half = 0.5 * step_size;
  for (std::size_t l = 0; l < n_steps; ++l) {
    for (std::size_t i = 0; i < n; ++i) s.p[i] += half * s.grad[i];
    for (std::size_t i = 0; i < n; ++i) s.q[i] += step_size * s.p[i];
    s.log_density = f(s.q, s.grad);
    for (std::size_t i = 0; i < n; ++i) s.p[i] += half * s.grad[i];
  }
}

// ---- MonteCarlo --------------------------------------------------------------------

MonteCarlo::MonteCarlo(InferenceProblem problem, std::uint64_t seed, bool allow_discrete)
    : Inference(std::move(problem), seed), allow_discrete_(allow_discrete) {}

void MonteCarlo::validate() const {
  for (const auto& [name, q] : problem_.latent)
    if (!dynamic_cast<const EmpiricalApproximation*>(q.get()))
      throw ConfigError(info().name + " requires Empirical approximations; '" + name +
                        "' has another family");
}

void MonteCarlo::on_initialize() {
  blocks_.clear();
  position_.clear();
  accepted_ = proposed_ = 0;

  // Discover supports with one throwaway trace. Feed slots are stood in for
  // by zeros of their declared shape.
  Bindings b;
  Feeds inputs;
  for (const auto& [name, src] : problem_.data) {
    if (const auto* t = std::get_if<Tensor>(&src))
      b[name] = *t;
    else if (const auto* slot = std::get_if<FeedSlot>(&src))
      b[name] = Tensor::zeros(slot->shape);
    else
      b[name] = static_cast<const Approximation*>(std::get<ApproxPtr>(src).get());
  }
  for (const auto& [name, src] : problem_.inputs) {
    if (const auto* t = std::get_if<Tensor>(&src))
      inputs[name] = *t;
    else
      inputs[name] = Tensor::zeros(std::get<FeedSlot>(src).shape);
  }
  for (const auto& [name, q] : problem_.latent) {
    auto* e = static_cast<EmpiricalApproximation*>(q.get());
    e->reset();
    e->reset_cursor();
    b[name] = e->latest();
  }
  Tape tape;
  Rng scratch(0);
  const Trace tr = trace(problem_.model, tape, scratch, std::move(b), inputs, problem_.params);

  std::size_t offset = 0;
  for (const auto& [name, q] : problem_.latent) {
    auto* e = static_cast<EmpiricalApproximation*>(q.get());
    const RandomVariable& rv = tr.at(name);
    Block blk{name, e, rv.dist->support(), offset, numel(e->event_shape()), 0};
    if (blk.support == Support::simplex)
      throw ConfigError(info().name + " does not support simplex-valued latent '" + name + "'");
    if (is_discrete(blk.support)) {
      if (!allow_discrete_)
        throw ConfigError(info().name + " cannot sample discrete latent '" + name +
                          "'; restrict it to continuous latents or use mh");
      if (const auto* c = dynamic_cast<const Categorical*>(rv.dist.get()))
        blk.classes = c->num_classes();
      else
        blk.classes = 2;
    }
    const Tensor init = e->latest();
    for (double z : init.data()) position_.push_back(unconstrain(z, blk.support, name));
    offset += blk.size;
    blocks_.push_back(blk);
  }
}

double MonteCarlo::acceptance_rate() const {
  return proposed_ ? static_cast<double>(accepted_) / static_cast<double>(proposed_) : 0.0;
}

double MonteCarlo::log_density(const std::vector<double>& u, std::vector<double>* grad,
                               const Feeds& feeds) {
  if (!initialized()) initialize();
  return log_density(u, grad, resolve(feeds));
}

double MonteCarlo::log_density(const std::vector<double>& u, std::vector<double>* grad,
                               const Resolved& r) {
  if (u.size() != position_.size()) throw ShapeError("position has the wrong size");
  Tape tape;
  Bindings latent;
  std::vector<Value> leaves(blocks_.size());
  Value logjac;
  for (std::size_t k = 0; k < blocks_.size(); ++k) {
    const Block& blk = blocks_[k];
    Tensor ub(blk.store->event_shape());
    std::copy(u.begin() + static_cast<std::ptrdiff_t>(blk.offset),
              u.begin() + static_cast<std::ptrdiff_t>(blk.offset + blk.size), ub.mutable_data().begin());
    if (is_discrete(blk.support)) {
      latent[blk.name] = ub;
      continue;
    }
    const Value l = grad ? tape.leaf(ub) : tape.constant(ub);
    leaves[k] = l;
    Value z = l;
    Value lj;
    if (blk.support == Support::unit_interval) {
      z = sigmoid(l);
      lj = -sum(softplus(-l) + softplus(l));
    } else if (blk.support == Support::positive) {
      z = exp(l);
      lj = sum(l);
    }
    if (lj.valid()) logjac = logjac.valid() ? logjac + lj : lj;
    latent[blk.name] = z;
  }
  const Trace tr = run_model(tape, r, std::move(latent));
  Value lp = log_joint(tr, problem_.scale);
  if (logjac.valid()) lp = lp + logjac;
  const double v = lp.item();
  if (grad) {
    grad->assign(u.size(), 0.0);
    if (!std::isfinite(v)) {
      grad->assign(u.size(), std::nan(""));
      return v;
    }
    tape.backward(lp);
    for (std::size_t k = 0; k < blocks_.size(); ++k) {
      if (!leaves[k].valid()) continue;
      const Tensor g = tape.grad(leaves[k]);
      std::copy(g.data().begin(), g.data().end(),
                grad->begin() + static_cast<std::ptrdiff_t>(blocks_[k].offset));
    }
  }
  return v;
}

void MonteCarlo::require_capacity() const {
  for (const Block& blk : blocks_)
    if (blk.store->cursor() >= blk.store->capacity())
      throw StoreFull("Empirical store '" + blk.store->name() + "' is full (" +
                      std::to_string(blk.store->capacity()) + " rows)");
}

void MonteCarlo::push_position() {
  for (const Block& blk : blocks_) {
    Tensor row(blk.store->event_shape());
    for (std::size_t i = 0; i < blk.size; ++i) row[i] = constrain(position_[blk.offset + i], blk.support);
    blk.store->push(row);
  }
}

// ---- HMC ------------------------------------------------------------------------

HMC::HMC(InferenceProblem problem, HMCConfig cfg, std::uint64_t seed)
    : MonteCarlo(std::move(problem), seed, false), cfg_(cfg) {}

AlgorithmInfo HMC::info() const { return algorithm_registry()[6]; }

void HMC::validate() const {
  MonteCarlo::validate();
  if (!(cfg_.step_size > 0.0) || !std::isfinite(cfg_.step_size))
    throw ConfigError("HMC step size must be positive and finite");
  if (cfg_.n_steps < 1) throw ConfigError("HMC needs n_steps >= 1");
}

Diagnostics HMC::do_update(const Resolved& r) {
  require_capacity();
  const std::size_t n = position_.size();
  LeapfrogState s;
  s.q = position_;
  s.p.resize(n);
  s.grad.resize(n);
  for (std::size_t i = 0; i < n; ++i) s.p[i] = rng_.normal();
  s.log_density = log_density(s.q, &s.grad, r);
  const double lp0 = s.log_density;
  const double h0 = -s.log_density + half_squared_norm(s.p);

  Diagnostics d;
  const bool start_ok = std::isfinite(h0) && all_finite(s.grad);
  if (start_ok)
    leapfrog(s, cfg_.step_size, cfg_.n_steps,
             [&](const std::vector<double>& q, std::vector<double>& g) {
               return log_density(q, &g, r);
             });
  const double h1 = -s.log_density + half_squared_norm(s.p);
  const double u = rng_.uniform();
  const bool ok = start_ok && std::isfinite(h1);
  const bool accept = ok && u < std::exp(h0 - h1);
  if (accept) {
    position_ = s.q;
    ++accepted_;
  }
  ++proposed_;
  if (!ok) {
    d.diverged = true;
    d.warnings.push_back("non-finite Hamiltonian; proposal rejected");
  }
  push_position();
  d.metrics["accept"] = accept ? 1.0 : 0.0;
  d.metrics["acceptance_rate"] = acceptance_rate();
  d.metrics["log_joint"] = accept ? s.log_density : lp0;
  if (ok) d.metrics["delta_H"] = h1 - h0;
  return d;
}

// ---- SGLD -----------------------------------------------------------------------

SGLD::SGLD(InferenceProblem problem, SGLDConfig cfg, std::uint64_t seed)
    : MonteCarlo(std::move(problem), seed, false), cfg_(cfg) {}

AlgorithmInfo SGLD::info() const { return algorithm_registry()[7]; }

void SGLD::validate() const {
  MonteCarlo::validate();
  if (cfg_.decay) {
    if (!(cfg_.gamma > 0.5 && cfg_.gamma <= 1.0))
      throw ConfigError("SGLD decay exponent must lie in (0.5, 1]");
    if (!(cfg_.a > 0.0) || !(cfg_.b >= 0.0)) throw ConfigError("SGLD decay needs a > 0, b >= 0");
  } else if (!(cfg_.step_size >= 0.0) || !std::isfinite(cfg_.step_size)) {
    throw ConfigError("SGLD step size must be nonnegative and finite");
  }
}

double SGLD::step_size_at(std::size_t t) const {
  if (!cfg_.decay) return cfg_.step_size;
  return cfg_.a * std::pow(cfg_.b + static_cast<double>(t), -cfg_.gamma);
}

Diagnostics SGLD::do_update(const Resolved& r) {
  require_capacity();
  const double eps = step_size_at(step());
  const std::size_t n = position_.size();
  std::vector<double> g(n);
  const double lp = log_density(position_, &g, r);
  std::vector<double> noise(n);
  for (double& v : noise) v = rng_.normal();
  Diagnostics d;
  if (std::isfinite(lp) && all_finite(g)) {
    const double sd = std::sqrt(eps);
    for (std::size_t i = 0; i < n; ++i) position_[i] += 0.5 * eps * g[i] + sd * noise[i];
  } else {
    d.diverged = true;
    d.warnings.push_back("non-finite gradient; position unchanged");
  }
  ++accepted_;
  ++proposed_;
  push_position();
  d.metrics["log_joint"] = lp;
  d.metrics["step_size"] = eps;
  return d;
}

// ---- Metropolis-Hastings ------------------------------------------------------------

MetropolisHastings::MetropolisHastings(InferenceProblem problem, MHConfig cfg, std::uint64_t seed)
    : MonteCarlo(std::move(problem), seed, true), cfg_(cfg) {}

AlgorithmInfo MetropolisHastings::info() const { return algorithm_registry()[8]; }

void MetropolisHastings::validate() const {
  MonteCarlo::validate();
  if (!(cfg_.proposal_sd > 0.0) || !std::isfinite(cfg_.proposal_sd))
    throw ConfigError("MH proposal sd must be positive and finite");
}

Diagnostics MetropolisHastings::do_update(const Resolved& r) {
  require_capacity();
  const double lp0 = log_density(position_, nullptr, r);
  std::vector<double> proposal = position_;
  std::size_t n_discrete = 0;
  for (const Block& blk : blocks_) {
    if (is_discrete(blk.support)) {
      n_discrete += blk.size;
      continue;
    }
    for (std::size_t i = 0; i < blk.size; ++i) proposal[blk.offset + i] += cfg_.proposal_sd * rng_.normal();
  }
  if (n_discrete > 0) {
    std::size_t pick = rng_.uniform_index(n_discrete);
    for (const Block& blk : blocks_) {
      if (!is_discrete(blk.support)) continue;
      if (pick < blk.size) {
        proposal[blk.offset + pick] = static_cast<double>(rng_.uniform_index(blk.classes));
        break;
      }
      pick -= blk.size;
    }
  }
  const double lp1 = log_density(proposal, nullptr, r);
  const double u = rng_.uniform();
  const bool accept = std::isfinite(lp1) && u < std::exp(lp1 - lp0);
  if (accept) {
    position_ = std::move(proposal);
    ++accepted_;
  }
  ++proposed_;
  push_position();
  Diagnostics d;
  if (!std::isfinite(lp0)) {
    d.diverged = true;
    d.warnings.push_back("non-finite log joint at the current position");
  }
  d.metrics["accept"] = accept ? 1.0 : 0.0;
  d.metrics["acceptance_rate"] = acceptance_rate();
  d.metrics["log_joint"] = accept ? lp1 : lp0;
  return d;
}

}  // namespace ppl
