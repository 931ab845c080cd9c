#pragma once

// Bundled model presets shared by the CLI, tests and acceptance runs.

#include <cstddef>
#include <string>

#include "ppl/gan.hpp"
#include "ppl/model.hpp"

namespace ppl::models {

// theta ~ Beta(1, 1); x_i ~ Bernoulli(theta) for i < n.
ModelFn beta_bernoulli(std::size_t n);

// z ~ Normal(0, prior_sd); x_i ~ Normal(z, lik_sd) for i < n.
ModelFn normal_normal(std::size_t n = 1, double prior_sd = 1.0, double lik_sd = 1.0);

struct GMMSpec {
  std::size_t n = 0;
  std::size_t k = 0;
  std::size_t d = 0;
  double prior_sd = 1.0;
  double sigma_x = 0.5;
  // When set, the observation scale is softplus(param) read from the store.
  std::string sigma_param;
};

// beta ~ Normal(0, prior_sd) [K, D]; z ~ Categorical(uniform) [N];
// x ~ Normal(beta[z], sigma_x) [N, D].
ModelFn gmm(const GMMSpec& spec);

// beta ~ Normal(0, 1) [D]; y ~ Bernoulli(logits = X beta), with X the model
// input "X" of shape [N, D].
ModelFn logreg(std::size_t n, std::size_t d);

// Generator x = mu + softplus(s) * eps with eps ~ Normal(0, 1) [batch, 1]
// (mu = 0, softplus(s) = 1 initially) against a tanh MLP discriminator with
// `hidden` units. Parameters are created in `store`; real data is [N, 1].
GANProblem gan_1d(ParameterStore& store, const Tensor& real, std::size_t batch, std::size_t hidden,
                  std::uint64_t seed);

// k-means++ seeding: K rows of x [N, D], the first uniform, each next one
// drawn with probability proportional to its squared distance to the
// nearest row already chosen.
Tensor kmeans_pp_init(const Tensor& x, std::size_t k, Rng& rng);

// Max |estimate - truth| over the rows of two [K, D] matrices, minimized over
// row permutations of `estimate` (mixture labels are arbitrary).
double matched_max_error(const Tensor& estimate, const Tensor& truth);

}  // namespace ppl::models
