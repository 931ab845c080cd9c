#pragma once

// Adversarial training of a generative model's parameters against a
// discriminator network. Discriminator loss: binary cross-entropy on logits
// (real -> 1, fake -> 0). Generator loss: -log sigmoid(D(fake)).

#include <functional>
#include <variant>

#include "ppl/infer.hpp"

namespace ppl {

struct GANProblem {
  // Draws fresh noise on the trace and returns a generated batch.
  std::function<Value(Trace&, std::size_t batch)> generator;
  // Logits for a batch, shape [batch] or [batch, 1].
  std::function<Value(Tape&, Value x)> discriminator;
  std::vector<Parameter*> generator_params;
  std::vector<Parameter*> discriminator_params;
  // Real data: a tensor [N, ...] resampled with replacement each step, or a
  // feed slot holding a ready batch.
  std::variant<Tensor, FeedSlot> real;
  std::size_t batch = 64;
};

struct GANConfig {
  OptimizerConfig d_optimizer = OptimizerConfig::adam();
  OptimizerConfig g_optimizer = OptimizerConfig::adam();
  std::size_t d_steps = 1;  // discriminator steps per generator step
};

class GANInference final : public Inference {
 public:
  GANInference(GANProblem problem, GANConfig cfg = {}, std::uint64_t seed = 0);
  AlgorithmInfo info() const override;

  // Losses on a fresh tape; no parameter is written.
  double discriminator_loss(const Tensor& real);
  double generator_loss();

  // Gradients of the most recent discriminator / generator step.
  const GradientMap& last_discriminator_grads() const { return last_d_; }
  const GradientMap& last_generator_grads() const { return last_g_; }

  const GANProblem& gan_problem() const { return gan_; }

 protected:
  void validate() const override;
  void on_initialize() override;
  Diagnostics do_update(const Resolved& r) override;

 private:
  Tensor real_batch(const Resolved& r);
  Value build_d_loss(Tape& tape, const Tensor& real);
  Value build_g_loss(Tape& tape);

  GANProblem gan_;
  GANConfig cfg_;
  Optimizer d_opt_;
  Optimizer g_opt_;
  GradientMap last_d_;
  GradientMap last_g_;
};

}  // namespace ppl
