#include "ppl/infer.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include "ppl/errors.hpp"

namespace ppl {

const std::vector<AlgorithmInfo>& algorithm_registry() {
  static const std::vector<AlgorithmInfo> registry = {
      {"klqp", "reparameterizable (Normal, PointMass, amortized)",
       "-E_q[log p(x,z) - log q(z)], pathwise Monte Carlo", "optimizer step on q and theta"},
      {"klqp-akl", "Normal with Normal priors", "-E_q[log p(x|z)] + KL(q || p), analytic KL",
       "optimizer step on q and theta"},
      {"klqp-aent", "Normal", "-E_q[log p(x,z)] - H[q], analytic entropy",
       "optimizer step on q and theta"},
      {"klqp-score", "any (discrete allowed)",
       "score-function surrogate of -ELBO with running-mean baseline",
       "optimizer step on q and theta"},
      {"iwae", "reparameterizable", "-(logsumexp_k w_k - log K), w_k = log p - log q",
       "optimizer step on q and theta"},
      {"map", "PointMass", "-log p(x, z) at the point", "optimizer step on the point and theta"},
      {"hmc", "Empirical", "leapfrog proposal + Metropolis correction on -log p",
       "append accepted position to the store"},
      {"sgld", "Empirical", "Langevin step on the scaled log joint, always accepted",
       "append position to the store"},
      {"mh", "Empirical", "Gaussian random walk / uniform discrete redraw + Metropolis",
       "append accepted position to the store"},
      {"gan", "implicit generator", "discriminator BCE, non-saturating generator loss",
       "alternating optimizer steps on the two parameter sets"},
  };
  return registry;
}

Inference::Inference(InferenceProblem problem, std::uint64_t seed)
    : problem_(std::move(problem)), rng_(seed), seed_(seed) {}

void Inference::validate_common() const {
  if (!problem_.model) throw ConfigError("inference problem has no model");
  validate_scale(problem_.scale);
  for (const auto& [name, q] : problem_.latent) {
    if (!q) throw ConfigError("latent '" + name + "' has a null approximation");
    if (problem_.data.count(name))
      throw ConfigError("'" + name + "' is bound both as latent and as data");
  }
  for (const auto& [name, src] : problem_.data)
    if (const auto* q = std::get_if<ApproxPtr>(&src); q && !*q)
      throw ConfigError("data binding '" + name + "' has a null approximation");
  for (const auto& name : problem_.model_params) {
    if (!problem_.params) throw ConfigError("model parameters declared without a store");
    problem_.params->get(name);
  }
}

void Inference::initialize() {
  validate_common();
  validate();
  trainable_.clear();
  auto add = [&](Parameter* p) {
    if (p->trainable() && std::find(trainable_.begin(), trainable_.end(), p) == trainable_.end())
      trainable_.push_back(p);
  };
  for (const auto& [name, q] : problem_.latent)
    for (Parameter* p : q->parameters()) add(p);
  for (const auto& name : problem_.model_params) add(&problem_.params->get(name));
  rng_ = Rng(seed_);
  step_ = 0;
  on_initialize();
  initialized_ = true;
}

Inference::Resolved Inference::resolve(const Feeds& feeds) const {
  auto fetch = [&](const FeedSlot& slot) -> const Tensor& {
    const auto it = feeds.find(slot.name);
    if (it == feeds.end()) throw ShapeError("feed slot '" + slot.name + "' was not fed");
    if (it->second.shape() != slot.shape)
      throw ShapeError("feed slot '" + slot.name + "' expects shape " + to_string(slot.shape) +
                       ", got " + to_string(it->second.shape()));
    return it->second;
  };
  Resolved r;
  r.inputs = feeds;
  for (const auto& [name, src] : problem_.data) {
    if (const auto* t = std::get_if<Tensor>(&src))
      r.bindings[name] = *t;
    else if (const auto* slot = std::get_if<FeedSlot>(&src))
      r.bindings[name] = fetch(*slot);
    else
      r.bindings[name] = static_cast<const Approximation*>(std::get<ApproxPtr>(src).get());
  }
  for (const auto& [name, src] : problem_.inputs) {
    if (const auto* t = std::get_if<Tensor>(&src))
      r.inputs[name] = *t;
    else
      r.inputs[name] = fetch(std::get<FeedSlot>(src));
  }
  return r;
}

Trace Inference::run_model(Tape& tape, const Resolved& r, Bindings latent) {
  Bindings b = r.bindings;
  for (auto& [name, v] : latent) b[name] = std::move(v);
  Trace t = trace(problem_.model, tape, rng_, std::move(b), r.inputs, problem_.params);
  for (const auto& rv : t.variables())
    if (rv.source == Source::sampled)
      throw ConfigError("latent random variable '" + rv.name +
                        "' has neither an approximation nor data");
  return t;
}

Diagnostics Inference::update(const Feeds& feeds) {
  if (!initialized_) initialize();
  const auto start = std::chrono::steady_clock::now();
  const Resolved r = resolve(feeds);
  Diagnostics d = do_update(r);
  d.step = step_++;
  d.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return d;
}

std::vector<Diagnostics> Inference::run(std::size_t n_iter, const FeedProvider& feeds,
                                        const RunOptions& options) {
  if (n_iter < 1) throw ConfigError("run needs n_iter >= 1");
  if (!initialized_) initialize();
  std::vector<Diagnostics> out;
  out.reserve(n_iter);
  for (std::size_t i = 0; i < n_iter; ++i) {
    out.push_back(update(feeds ? feeds(step_) : Feeds{}));
    if (options.progress && options.progress_stride &&
        ((i + 1) % options.progress_stride == 0 || i + 1 == n_iter)) {
      const Diagnostics& d = out.back();
      *options.progress << info().name << " " << (i + 1) << "/" << n_iter;
      for (const auto& [k, v] : d.metrics) *options.progress << " " << k << "=" << v;
      if (d.diverged) *options.progress << " (diverged)";
      *options.progress << "\n";
    }
  }
  return out;
}

// ---- VariationalInference -----------------------------------------------------

VariationalInference::VariationalInference(InferenceProblem problem, std::uint64_t seed,
                                           OptimizerConfig opt)
    : Inference(std::move(problem), seed), optimizer_(opt) {}

void VariationalInference::on_initialize() { optimizer_.reset(trainable_); }

Value VariationalInference::build_loss(Tape& tape, const Feeds& feeds, Diagnostics& diag) {
  if (!initialized()) initialize();
  return loss(tape, resolve(feeds), diag);
}

Diagnostics VariationalInference::do_update(const Resolved& r) {
  Tape tape;
  // Approximations bound as data belong to another inference; keep their
  // parameters constant here.
  for (const auto& [name, src] : problem_.data)
    if (const auto* q = std::get_if<ApproxPtr>(&src))
      for (Parameter* p : (*q)->parameters()) tape.freeze(p);

  Diagnostics d;
  const Value l = loss(tape, r, d);
  const double lv = l.item();
  if (!d.metrics.count("loss")) d.metrics["loss"] = lv;
  if (!std::isfinite(lv) || !std::isfinite(d.metrics["loss"])) {
    d.diverged = true;
    d.warnings.push_back("non-finite loss; parameters left unchanged");
    return d;
  }
  const GradientMap g = tape.backward(l);
  d.metrics["grad_norm"] = grad_norm(g, trainable_);
  if (!optimizer_.step(g, trainable_)) {
    d.diverged = true;
    d.warnings.push_back("non-finite gradient; parameters left unchanged");
  }
  return d;
}

double grad_norm(const GradientMap& grads, const std::vector<Parameter*>& params) {
  double s = 0.0;
  for (Parameter* p : params)
    if (const Tensor* g = grads.find(p))
      for (double v : g->data()) s += v * v;
  return std::sqrt(s);
}

}  // namespace ppl
