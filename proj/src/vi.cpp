#include "ppl/vi.hpp"

#include <cmath>
#include <optional>

#include "ppl/errors.hpp"

namespace ppl {

namespace {

Value scaled(Value v, const ScaleMap& scale, const std::string& name) {
  const auto it = scale.find(name);
  return it != scale.end() && it->second != 1.0 ? v * it->second : v;
}

double scale_of(const ScaleMap& scale, const std::string& name) {
  const auto it = scale.find(name);
  return it == scale.end() ? 1.0 : it->second;
}

Value accumulate(Value total, Value term) { return total.valid() ? total + term : term; }

// Sum over every axis but the leading one.
Tensor per_element(const Tensor& t, const std::string& name) {
  if (t.rank() == 0)
    throw ShapeError("local plate variable '" + name + "' has no leading axis");
  const std::size_t n = t.dim(0);
  const std::size_t inner = t.size() / n;
  Tensor out({n});
  for (std::size_t i = 0; i < n; ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < inner; ++j) s += t[i * inner + j];
    out[i] = s;
  }
  return out;
}

// Families that cannot be built without feeds are checked when first used.
struct Family {
  DistKind kind;
  bool reparameterizable;
};

std::optional<Family> probe(const Approximation& q) {
  if (dynamic_cast<const FunctionalApproximation*>(&q)) return std::nullopt;
  Tape scratch;
  const DistPtr d = q.build(scratch, {});
  return Family{d->kind(), d->reparameterizable()};
}

}  // namespace

std::string_view estimator_name(Estimator e) {
  switch (e) {
    case Estimator::reparam: return "reparam";
    case Estimator::analytic_kl: return "reparam_analytic_kl";
    case Estimator::analytic_entropy: return "reparam_analytic_entropy";
    case Estimator::score: return "score";
  }
  return "?";
}

// ---- KLqp -----------------------------------------------------------------------

KLqp::KLqp(InferenceProblem problem, KLqpConfig cfg, OptimizerConfig opt, std::uint64_t seed)
    : VariationalInference(std::move(problem), seed, opt), cfg_(std::move(cfg)) {}

AlgorithmInfo KLqp::info() const {
  switch (cfg_.estimator) {
    case Estimator::reparam: return algorithm_registry()[0];
    case Estimator::analytic_kl: return algorithm_registry()[1];
    case Estimator::analytic_entropy: return algorithm_registry()[2];
    case Estimator::score: return algorithm_registry()[3];
  }
  return algorithm_registry()[0];
}

void KLqp::validate() const {
  if (cfg_.n_samples < 1) throw ConfigError("KLqp needs n_samples >= 1");
  if (!(cfg_.baseline_decay >= 0.0 && cfg_.baseline_decay < 1.0))
    throw ConfigError("baseline decay must lie in [0, 1)");
  if (!cfg_.local_plate.empty() && cfg_.estimator != Estimator::score)
    throw ConfigError("local_plate is only meaningful for the score estimator");
  for (const auto& [name, q] : problem_.latent) {
    const auto d = probe(*q);
    if (!d) continue;
    if (d->kind == DistKind::empirical)
      throw ConfigError("KLqp cannot use the Empirical approximation for '" + name + "'");
    if (cfg_.estimator != Estimator::score && !d->reparameterizable)
      throw ConfigError("estimator " + std::string(estimator_name(cfg_.estimator)) +
                        " needs a reparameterizable approximation for '" + name + "' (got " +
                        std::string(kind_name(d->kind)) + "); use score");
    if ((cfg_.estimator == Estimator::analytic_kl ||
         cfg_.estimator == Estimator::analytic_entropy) &&
        d->kind != DistKind::normal)
      throw ConfigError("estimator " + std::string(estimator_name(cfg_.estimator)) +
                        " needs a Normal approximation for '" + name + "'");
  }
}

void KLqp::on_initialize() {
  VariationalInference::on_initialize();
  baseline_ = 0.0;
  baseline_set_ = false;
}

Value KLqp::loss(Tape& t, const Resolved& r, Diagnostics& d) {
  if (cfg_.estimator == Estimator::score) return score_loss(t, r, d);

  const std::size_t S = cfg_.n_samples;
  const ScaleMap& scale = problem_.scale;
  Value total;
  double logp_sum = 0.0;
  double entropy_sum = 0.0;
  for (std::size_t s = 0; s < S; ++s) {
    Bindings latent;
    std::map<std::string, DistPtr> qs;
    std::map<std::string, Value> zs;
    for (const auto& [name, q] : problem_.latent) {
      DistPtr qd = q->build(t, r.inputs);
      if (!qd->reparameterizable())
        throw ConfigError("estimator " + std::string(estimator_name(cfg_.estimator)) +
                          " needs a reparameterizable approximation for '" + name + "'");
      const Value z = qd->rsample(rng_);
      latent[name] = z;
      zs[name] = z;
      qs[name] = std::move(qd);
    }
    const Trace tr = run_model(t, r, std::move(latent));

    Value obj;
    switch (cfg_.estimator) {
      case Estimator::reparam:
        obj = log_joint(tr, scale);
        for (const auto& [name, qd] : qs)
          obj = obj - scaled(sum(qd->log_prob(zs[name])), scale, name);
        break;
      case Estimator::analytic_kl:
        obj = log_joint_where(tr, scale, [&](const RandomVariable& rv) {
          return !problem_.latent.count(rv.name);
        });
        for (const auto& [name, qd] : qs)
          obj = obj - scaled(sum(kl_normal_normal(*qd, *tr.at(name).dist)), scale, name);
        break;
      case Estimator::analytic_entropy: {
        const Value lp = log_joint(tr, scale);
        Value h;
        for (const auto& [name, qd] : qs) h = accumulate(h, scaled(sum(entropy(*qd)), scale, name));
        logp_sum += lp.item();
        entropy_sum += h.item();
        obj = lp + h;
        break;
      }
      case Estimator::score: break;
    }
    total = accumulate(total, obj);
  }
  if (cfg_.estimator == Estimator::analytic_entropy &&
      std::fabs(entropy_sum) > std::fabs(logp_sum))
    d.warnings.push_back("entropy term dominates the objective");
  return total * (-1.0 / static_cast<double>(S));
}

Value KLqp::score_loss(Tape& t, const Resolved& r, Diagnostics& d) {
  const std::size_t S = cfg_.n_samples;
  const ScaleMap& scale = problem_.scale;
  const auto& plate = cfg_.local_plate;
  validate_scale(scale);

  struct Draw {
    std::map<std::string, Value> logq;  // elementwise
    Value logp;
    double f = 0.0;
    Tensor g;  // per-element signal of the plate, when present
  };
  std::vector<Draw> draws(S);
  for (std::size_t s = 0; s < S; ++s) {
    Draw& dr = draws[s];
    Bindings latent;
    for (const auto& [name, q] : problem_.latent) {
      const DistPtr qd = q->build(t, r.inputs);
      const Value z = t.constant(qd->sample(rng_));
      latent[name] = z;
      dr.logq[name] = qd->log_prob(z);
    }
    const Trace tr = run_model(t, r, std::move(latent));
    for (const auto& name : plate)
      if (!tr.find(name)) throw ConfigError("local plate names unknown variable '" + name + "'");

    for (const auto& rv : tr.variables()) {
      const Value lp = rv.dist->log_prob(rv.value);
      const double sc = scale_of(scale, rv.name);
      dr.logp = accumulate(dr.logp, scaled(sum(lp), scale, rv.name));
      if (plate.count(rv.name)) {
        Tensor e = per_element(lp.tensor(), rv.name);
        for (auto& v : e.mutable_data()) v *= sc;
        if (dr.g.rank() == 0) {
          dr.g = e;
        } else {
          if (e.shape() != dr.g.shape())
            throw ShapeError("local plate variables disagree on the plate size");
          for (std::size_t i = 0; i < e.size(); ++i) dr.g[i] += e[i];
        }
      }
    }
    if (!dr.logp.valid()) dr.logp = t.scalar(0.0);
    dr.f = dr.logp.item();
    for (const auto& [name, lq] : dr.logq) {
      const double sc = scale_of(scale, name);
      double s_lq = 0.0;
      for (double v : lq.tensor().data()) s_lq += v;
      dr.f -= sc * s_lq;
      if (plate.count(name)) {
        const Tensor e = per_element(lq.tensor(), name);
        if (e.shape() != dr.g.shape())
          throw ShapeError("local plate variables disagree on the plate size");
        for (std::size_t i = 0; i < e.size(); ++i) dr.g[i] -= sc * e[i];
      }
    }
  }

  double f_mean = 0.0;
  for (const auto& dr : draws) f_mean += dr.f;
  f_mean /= static_cast<double>(S);

  double b = 0.0;
  if (cfg_.baseline) b = baseline_set_ ? baseline_ : f_mean;

  Value total;
  for (std::size_t s = 0; s < S; ++s) {
    const Draw& dr = draws[s];
    Value term = dr.logp;
    for (const auto& [name, lq] : dr.logq) {
      if (plate.count(name)) {
        Tensor signal = dr.g;
        if (S >= 2) {
          // Leave-one-out baseline across the other draws of this step.
          for (std::size_t i = 0; i < signal.size(); ++i) {
            double others = 0.0;
            for (std::size_t o = 0; o < S; ++o)
              if (o != s) others += draws[o].g[i];
            signal[i] -= others / static_cast<double>(S - 1);
          }
        }
        const Value lq_el = lq.tensor().rank() > 1
                                ? sum(lq, [&] {
                                    std::vector<int> axes;
                                    for (std::size_t a = 1; a < lq.tensor().rank(); ++a)
                                      axes.push_back(static_cast<int>(a));
                                    return axes;
                                  }())
                                : lq;
        term = term + scaled(sum(lq_el * t.constant(signal)), scale, name);
      } else {
        term = term + sum(lq) * (dr.f - b);
      }
    }
    total = accumulate(total, term);
  }

  if (cfg_.baseline) {
    baseline_ = baseline_set_ ? cfg_.baseline_decay * baseline_ + (1.0 - cfg_.baseline_decay) * f_mean
                              : f_mean;
    baseline_set_ = true;
  }
  d.metrics["loss"] = -f_mean;
  return total * (-1.0 / static_cast<double>(S));
}

// ---- IWAE -----------------------------------------------------------------------

IWAE::IWAE(InferenceProblem problem, IWAEConfig cfg, OptimizerConfig opt, std::uint64_t seed)
    : VariationalInference(std::move(problem), seed, opt), cfg_(cfg) {}

AlgorithmInfo IWAE::info() const { return algorithm_registry()[4]; }

void IWAE::validate() const {
  if (cfg_.k < 1) throw ConfigError("IWAE needs K >= 1");
  for (const auto& [name, q] : problem_.latent)
    if (const auto d = probe(*q); d && !d->reparameterizable)
      throw ConfigError("IWAE needs a reparameterizable approximation for '" + name + "'");
}

Value IWAE::loss(Tape& t, const Resolved& r, Diagnostics&) {
  std::vector<Value> w;
  w.reserve(cfg_.k);
  for (std::size_t k = 0; k < cfg_.k; ++k) {
    Bindings latent;
    std::map<std::string, DistPtr> qs;
    std::map<std::string, Value> zs;
    for (const auto& [name, q] : problem_.latent) {
      DistPtr qd = q->build(t, r.inputs);
      if (!qd->reparameterizable())
        throw ConfigError("IWAE needs a reparameterizable approximation for '" + name + "'");
      const Value z = qd->rsample(rng_);
      latent[name] = z;
      zs[name] = z;
      qs[name] = std::move(qd);
    }
    const Trace tr = run_model(t, r, std::move(latent));
    Value wk = log_joint(tr, problem_.scale);
    for (const auto& [name, qd] : qs)
      wk = wk - scaled(sum(qd->log_prob(zs[name])), problem_.scale, name);
    w.push_back(reshape(wk, {1}));
  }
  const Value lse = w.size() == 1 ? reshape(w[0], {}) : logsumexp(concat(w, 0), 0);
  return -(lse - std::log(static_cast<double>(cfg_.k)));
}

// ---- MAP ------------------------------------------------------------------------

MAP::MAP(InferenceProblem problem, OptimizerConfig opt, std::uint64_t seed)
    : VariationalInference(std::move(problem), seed, opt) {}

AlgorithmInfo MAP::info() const { return algorithm_registry()[5]; }

void MAP::validate() const {
  for (const auto& [name, q] : problem_.latent)
    if (!dynamic_cast<const PointMassApproximation*>(q.get()))
      throw ConfigError("MAP requires a PointMass approximation for '" + name + "'");
}

Value MAP::loss(Tape& t, const Resolved& r, Diagnostics&) {
  Bindings latent;
  for (const auto& [name, q] : problem_.latent)
    latent[name] = q->build(t, r.inputs)->rsample(rng_);
  const Trace tr = run_model(t, r, std::move(latent));
  return -log_joint(tr, problem_.scale);
}

// ---- variational EM ---------------------------------------------------------------

void require_cross_binding(const Inference& a, const Inference& b) {
  for (const auto& [name, src] : a.problem().data) {
    const auto* q = std::get_if<ApproxPtr>(&src);
    if (!q) continue;
    for (const auto& [lname, lq] : b.problem().latent)
      if (lq == *q) return;
  }
  throw ConfigError(a.info().name +
                    " does not bind any latent approximation of the other inference as data");
}

std::vector<Diagnostics> variational_em(Inference& e, Inference& m, std::size_t outer,
                                        std::size_t inner_e, std::size_t inner_m,
                                        const FeedProvider& feeds) {
  require_cross_binding(e, m);
  require_cross_binding(m, e);
  if (!e.initialized()) e.initialize();
  if (!m.initialized()) m.initialize();
  std::vector<Diagnostics> out;
  out.reserve(outer * (inner_e + inner_m));
  for (std::size_t i = 0; i < outer; ++i) {
    const Feeds f = feeds ? feeds(i) : Feeds{};
    for (std::size_t j = 0; j < inner_e; ++j) out.push_back(e.update(f));
    for (std::size_t j = 0; j < inner_m; ++j) out.push_back(m.update(f));
  }
  return out;
}

}  // namespace ppl
