#pragma once

// Variational inference: KLqp with four gradient estimators, IWAE, MAP, and
// alternating variational EM.

#include <set>
#include <string>
#include <string_view>

#include "ppl/infer.hpp"

namespace ppl {

enum class Estimator { reparam, analytic_kl, analytic_entropy, score };

std::string_view estimator_name(Estimator e);

struct KLqpConfig {
  std::size_t n_samples = 1;
  Estimator estimator = Estimator::reparam;
  bool baseline = true;         // score only: running mean of log p - log q
  double baseline_decay = 0.99;
  // Score only. RVs whose leading axis indexes conditionally independent
  // local factors. A plate latent's element n is weighted by the terms that
  // share index n instead of the whole objective.
  std::set<std::string> local_plate;
};

class KLqp final : public VariationalInference {
 public:
  KLqp(InferenceProblem problem, KLqpConfig cfg = {},
       OptimizerConfig opt = OptimizerConfig::adam(), std::uint64_t seed = 0);
  AlgorithmInfo info() const override;
  const KLqpConfig& config() const { return cfg_; }
  double baseline() const { return baseline_; }

 protected:
  void validate() const override;
  void on_initialize() override;
  Value loss(Tape& tape, const Resolved& r, Diagnostics& diag) override;

 private:
  Value score_loss(Tape& tape, const Resolved& r, Diagnostics& diag);

  KLqpConfig cfg_;
  double baseline_ = 0.0;
  bool baseline_set_ = false;
};

struct IWAEConfig {
  std::size_t k = 1;
};

class IWAE final : public VariationalInference {
 public:
  IWAE(InferenceProblem problem, IWAEConfig cfg = {},
       OptimizerConfig opt = OptimizerConfig::adam(), std::uint64_t seed = 0);
  AlgorithmInfo info() const override;

 protected:
  void validate() const override;
  Value loss(Tape& tape, const Resolved& r, Diagnostics& diag) override;

 private:
  IWAEConfig cfg_;
};

// Every latent must use a PointMassApproximation.
class MAP final : public VariationalInference {
 public:
  MAP(InferenceProblem problem, OptimizerConfig opt = OptimizerConfig::adam(),
      std::uint64_t seed = 0);
  AlgorithmInfo info() const override;

 protected:
  void validate() const override;
  Value loss(Tape& tape, const Resolved& r, Diagnostics& diag) override;
};

// Alternates `inner_e` updates of `e` with `inner_m` updates of `m`, `outer`
// times. Each problem must bind one of its data RVs to an approximation that
// is latent in the other. Returns the diagnostics of every update in order.
std::vector<Diagnostics> variational_em(Inference& e, Inference& m, std::size_t outer,
                                        std::size_t inner_e = 1, std::size_t inner_m = 1,
                                        const FeedProvider& feeds = {});

// Throws ConfigError unless `a` reads one of `b`'s latent approximations as data.
void require_cross_binding(const Inference& a, const Inference& b);

}  // namespace ppl
