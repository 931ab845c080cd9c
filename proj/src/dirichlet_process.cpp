#include "ppl/errors.hpp"
#include "ppl/model.hpp"

namespace ppl {

DirichletProcessDraw dirichlet_process_draw(double alpha,
                                            const std::function<Tensor(std::size_t, Rng&)>& base,
                                            Rng& rng, std::size_t max_iterations) {
  if (!(alpha > 0.0) || !std::isfinite(alpha))
    throw ConfigError("Dirichlet process concentration must be positive");

  std::size_t k = 0;
  double beta_k = rng.beta(1.0, alpha);
  while (rng.bernoulli(beta_k)) {
    if (++k >= max_iterations)
      throw ConfigError("stick-breaking loop exceeded " + std::to_string(max_iterations) +
                        " iterations (alpha = " + std::to_string(alpha) + ")");
    beta_k *= rng.beta(1.0, alpha);
  }
  return {base(k, rng), k};
}

}  // namespace ppl
