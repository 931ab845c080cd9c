#pragma once

// Toy variational auto-encoder on small binary images. The generative model
// and the inference network are ordinary tape code over disjoint parameters;
// both read the same feed slot "x".

#include <memory>
#include <vector>

#include "ppl/infer.hpp"
#include "ppl/vi.hpp"

namespace ppl {

struct VAEToySpec {
  std::size_t latent_dim = 2;
  std::size_t batch = 100;
  std::size_t side = 8;
  std::size_t hidden = 32;
};

class VAEToy {
 public:
  VAEToy(const VAEToySpec& spec, std::uint64_t seed);
  VAEToy(const VAEToy&) = delete;
  VAEToy& operator=(const VAEToy&) = delete;

  const VAEToySpec& spec() const { return spec_; }
  std::size_t pixels() const { return spec_.side * spec_.side; }

  // z ~ Normal(0, 1) [n, d]; x ~ Bernoulli(logits = decoder(z)) [n, pixels].
  ModelFn model(std::size_t n) const;
  // q(z | x) = Normal(mu(x), softplus(s(x))) with x read from feed "x".
  ApproxPtr approximation() const { return qz_; }

  ParameterStore& store() { return store_; }
  const std::vector<std::string>& decoder_params() const { return decoder_; }
  const std::vector<Parameter*>& encoder_params() const { return encoder_; }

  // Bernoulli means of decoder(mu(x)) for each row of x.
  Tensor reconstruct(const Tensor& x);
  // Bernoulli means for the given latent codes (ancestral generation).
  Tensor decode(const Tensor& z);

 private:
  Value decoder_logits(Tape& tape, Value z) const;

  VAEToySpec spec_;
  ParameterStore store_;
  std::vector<std::string> decoder_;
  std::vector<Parameter*> encoder_;
  ApproxPtr qz_;
};

// Throws ConfigError unless x is [n, pixels] with entries in {0, 1}.
void check_binary_images(const Tensor& x, std::size_t pixels);

// InferenceProblem for minibatches of `rows` rows fed through slot "x".
InferenceProblem vae_problem(VAEToy& vae, std::size_t rows);

// Average per-datapoint ELBO over `data` with `samples` draws per row
// (importance-weighted bound when iwae_k > 1).
double vae_heldout_bound(VAEToy& vae, const Tensor& data, std::size_t samples, std::uint64_t seed,
                         std::size_t iwae_k = 1);

struct VAEFitOptions {
  std::size_t epochs = 20;
  Estimator estimator = Estimator::reparam;
  std::size_t iwae_k = 0;  // > 0 trains with the IWAE objective instead of KLqp
  OptimizerConfig optimizer = OptimizerConfig::adam(0.01);
  std::size_t eval_samples = 10;
};

struct VAEFitResult {
  std::vector<Diagnostics> steps;
  std::vector<double> epoch_bounds;  // held-out bound after each epoch
  double initial_bound = 0.0;
  double final_bound = 0.0;
};

// Trains on shuffled minibatches of spec.batch rows (a ragged tail is dropped).
VAEFitResult vae_fit(VAEToy& vae, const Tensor& train, const Tensor& heldout,
                     const VAEFitOptions& options, std::uint64_t seed);

}  // namespace ppl
