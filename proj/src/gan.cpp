#include "ppl/gan.hpp"

#include <algorithm>
#include <cmath>

#include "ppl/errors.hpp"

namespace ppl {
namespace {

InferenceProblem wrap(const GANProblem& g) {
  InferenceProblem p;
  if (g.generator) {
    const auto gen = g.generator;
    const std::size_t batch = g.batch;
    p.model = [gen, batch](Trace& t) { gen(t, batch); };
  }
  return p;
}

bool finite_grads(const GradientMap& g) {
  for (const auto& [p, t] : g)
    if (!all_finite(t)) return false;
  return true;
}

}  // namespace

GANInference::GANInference(GANProblem problem, GANConfig cfg, std::uint64_t seed)
    : Inference(wrap(problem), seed),
      gan_(std::move(problem)),
      cfg_(cfg),
      d_opt_(cfg.d_optimizer),
      g_opt_(cfg.g_optimizer) {}

AlgorithmInfo GANInference::info() const { return algorithm_registry()[9]; }

void GANInference::validate() const {
  if (!gan_.generator || !gan_.discriminator)
    throw ConfigError("GAN needs both a generator and a discriminator");
  if (gan_.batch == 0) throw ConfigError("GAN batch size must be >= 1");
  if (cfg_.d_steps == 0) throw ConfigError("GAN needs d_steps >= 1");
  if (gan_.generator_params.empty() || gan_.discriminator_params.empty())
    throw ConfigError("GAN needs generator and discriminator parameters");
  for (const Parameter* p : gan_.generator_params)
    if (std::find(gan_.discriminator_params.begin(), gan_.discriminator_params.end(), p) !=
        gan_.discriminator_params.end())
      throw ConfigError("parameter '" + p->name() +
                        "' is owned by both the generator and the discriminator");
  if (const auto* t = std::get_if<Tensor>(&gan_.real); t && (t->rank() == 0 || t->dim(0) == 0))
    throw ConfigError("GAN real data must have at least one row");
}

void GANInference::on_initialize() {
  trainable_ = gan_.discriminator_params;
  trainable_.insert(trainable_.end(), gan_.generator_params.begin(), gan_.generator_params.end());
  d_opt_.reset(gan_.discriminator_params);
  g_opt_.reset(gan_.generator_params);
  last_d_ = GradientMap();
  last_g_ = GradientMap();
}

Tensor GANInference::real_batch(const Resolved& r) {
  if (const auto* slot = std::get_if<FeedSlot>(&gan_.real)) {
    const auto it = r.inputs.find(slot->name);
    if (it == r.inputs.end()) throw ShapeError("feed slot '" + slot->name + "' was not fed");
    if (it->second.shape() != slot->shape)
      throw ShapeError("feed slot '" + slot->name + "' expects shape " + to_string(slot->shape) +
                       ", got " + to_string(it->second.shape()));
    return it->second;
  }
  const Tensor& data = std::get<Tensor>(gan_.real);
  const std::size_t n = data.dim(0);
  const std::size_t width = data.size() / n;
  Shape shape = data.shape();
  shape[0] = gan_.batch;
  Tensor out(shape);
  for (std::size_t b = 0; b < gan_.batch; ++b) {
    const std::size_t i = rng_.uniform_index(n);
    std::copy(data.ptr() + i * width, data.ptr() + (i + 1) * width, out.mutable_ptr() + b * width);
  }
  return out;
}

Value GANInference::build_d_loss(Tape& tape, const Tensor& real) {
  Trace tr(tape, rng_);
  const Value fake = gan_.generator(tr, gan_.batch);
  if (fake.shape() != real.shape())
    throw ShapeError("generated batch has shape " + to_string(fake.shape()) +
                     ", real batch has shape " + to_string(real.shape()));
  const Value lr = gan_.discriminator(tape, tape.constant(real));
  const Value lf = gan_.discriminator(tape, fake);
  const double count = static_cast<double>(lr.tensor().size() + lf.tensor().size());
  return (sum(softplus(-lr)) + sum(softplus(lf))) / count;
}

Value GANInference::build_g_loss(Tape& tape) {
  Trace tr(tape, rng_);
  const Value fake = gan_.generator(tr, gan_.batch);
  return mean(softplus(-gan_.discriminator(tape, fake)));
}

double GANInference::discriminator_loss(const Tensor& real) {
  if (!initialized()) initialize();
  Tape tape;
  return build_d_loss(tape, real).item();
}

double GANInference::generator_loss() {
  if (!initialized()) initialize();
  Tape tape;
  return build_g_loss(tape).item();
}

Diagnostics GANInference::do_update(const Resolved& r) {
  Diagnostics d;
  double d_loss = 0.0;
  for (std::size_t k = 0; k < cfg_.d_steps; ++k) {
    const Tensor real = real_batch(r);
    Tape tape;
    for (const Parameter* p : gan_.generator_params) tape.freeze(p);
    const Value l = build_d_loss(tape, real);
    d_loss = l.item();
    last_d_ = tape.backward(l);
    if (!std::isfinite(d_loss) || !finite_grads(last_d_)) {
      d.diverged = true;
      d.warnings.push_back("non-finite discriminator step skipped");
      continue;
    }
    d_opt_.step(last_d_, gan_.discriminator_params);
  }

  Tape tape;
  for (const Parameter* p : gan_.discriminator_params) tape.freeze(p);
  const Value l = build_g_loss(tape);
  const double g_loss = l.item();
  last_g_ = tape.backward(l);
  if (!std::isfinite(g_loss) || !finite_grads(last_g_)) {
    d.diverged = true;
    d.warnings.push_back("non-finite generator step skipped");
  } else {
    g_opt_.step(last_g_, gan_.generator_params);
  }
  d.metrics["d_loss"] = d_loss;
  d.metrics["g_loss"] = g_loss;
  return d;
}

}  // namespace ppl
