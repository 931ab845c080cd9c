#pragma once

// Stochastic variational inference as two cross-bound inferences over one
// minibatch feed: local factors are refit for every minibatch, then the
// global factors take one step, then the local factors are reset.

#include <string>

#include "ppl/infer.hpp"

namespace ppl {

struct SVIRecipe {
  Inference* local = nullptr;   // local latents given globals and the minibatch
  Inference* global = nullptr;  // global latents given locals and the minibatch
  std::size_t m = 0;            // minibatch rows
  std::size_t inner = 10;       // local updates per outer step
  std::string feed = "x";       // slot name shared by both problems
  bool reset_local = true;
  // Also zero the local optimizer's moments at each reset: rows of the local
  // factors refer to different data points on every minibatch.
  bool reset_local_optimizer = true;
};

// Throws ConfigError when the recipe is incomplete or the two problems are not
// cross-bound.
void validate_recipe(const SVIRecipe& recipe);

// `minibatch` must have exactly recipe.m rows. `extra` feeds are passed to
// both inferences alongside the minibatch. Returns the global step's
// diagnostics with the last local loss added as "local_loss".
Diagnostics svi_step(SVIRecipe& recipe, const Tensor& minibatch, const Feeds& extra = {});

// Local-parameter element count: the recipe's memory footprint besides globals.
std::size_t local_parameter_elements(const SVIRecipe& recipe);

}  // namespace ppl
