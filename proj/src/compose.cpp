#include "ppl/compose.hpp"

#include "ppl/errors.hpp"
#include "ppl/vi.hpp"

namespace ppl {

void validate_recipe(const SVIRecipe& recipe) {
  if (!recipe.local || !recipe.global) throw ConfigError("SVI recipe needs local and global inferences");
  if (recipe.m == 0) throw ConfigError("SVI recipe needs a minibatch size >= 1");
  require_cross_binding(*recipe.local, *recipe.global);
  require_cross_binding(*recipe.global, *recipe.local);
}

Diagnostics svi_step(SVIRecipe& recipe, const Tensor& minibatch, const Feeds& extra) {
  validate_recipe(recipe);
  if (minibatch.rank() == 0 || minibatch.dim(0) != recipe.m)
    throw ShapeError("SVI minibatch must have exactly " + std::to_string(recipe.m) + " rows, got " +
                     (minibatch.rank() ? std::to_string(minibatch.dim(0)) : std::string("a scalar")));
  Feeds feeds = extra;
  feeds[recipe.feed] = minibatch;

  double local_loss = 0.0;
  bool local_diverged = false;
  for (std::size_t i = 0; i < recipe.inner; ++i) {
    const Diagnostics d = recipe.local->update(feeds);
    if (const auto it = d.metrics.find("loss"); it != d.metrics.end()) local_loss = it->second;
    local_diverged = local_diverged || d.diverged;
  }
  Diagnostics g = recipe.global->update(feeds);
  if (recipe.inner > 0) g.metrics["local_loss"] = local_loss;
  if (local_diverged) {
    g.diverged = true;
    g.warnings.push_back("a local update diverged");
  }
  if (recipe.reset_local) {
    for (const auto& [name, q] : recipe.local->problem().latent) q->reset();
    if (recipe.reset_local_optimizer)
      if (auto* vi = dynamic_cast<VariationalInference*>(recipe.local)) vi->reset_optimizer();
  }
  return g;
}

std::size_t local_parameter_elements(const SVIRecipe& recipe) {
  std::size_t n = 0;
  for (const auto& [name, q] : recipe.local->problem().latent)
    for (const Parameter* p : q->parameters()) n += p->value().size();
  return n;
}

}  // namespace ppl
