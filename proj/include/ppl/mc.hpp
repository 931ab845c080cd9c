#pragma once

// Monte Carlo inference writing one row per update into Empirical stores.
// Constrained latents are moved on an unconstrained scale (logit for (0, 1),
// log for (0, inf)) with the log-Jacobian added to the target.

#include <functional>
#include <vector>

#include "ppl/infer.hpp"

namespace ppl {

// Log density at q; writes its gradient into `grad` (same size as q).
using LogDensityGrad = std::function<double(const std::vector<double>& q, std::vector<double>& grad)>;

struct LeapfrogState {
  std::vector<double> q;
  std::vector<double> p;
  std::vector<double> grad;  // gradient of the log density at q
  double log_density = 0.0;
};

// n_steps leapfrog steps: half momentum step, position step, half momentum
// step, using `grad`/`log_density` at entry and refreshing them at every new
// position. Throws ConfigError for n_steps == 0 or a nonpositive step size.
void leapfrog(LeapfrogState& s, double step_size, std::size_t n_steps, const LogDensityGrad& f);

struct HMCConfig {
  double step_size = 0.1;
  std::size_t n_steps = 10;
};

struct SGLDConfig {
  double step_size = 1e-3;
  // eps_t = a * (b + t)^(-gamma) when enabled; step_size is then ignored.
  bool decay = false;
  double a = 1e-3;
  double b = 1.0;
  double gamma = 0.55;
};

struct MHConfig {
  double proposal_sd = 0.5;
};

class MonteCarlo : public Inference {
 public:
  // One contiguous block of the flat position per latent.
  struct Block {
    std::string name;
    EmpiricalApproximation* store = nullptr;
    Support support = Support::real;
    std::size_t offset = 0;
    std::size_t size = 0;
    std::size_t classes = 0;  // discrete supports only
  };

  const std::vector<Block>& layout() const { return blocks_; }
  // Current position on the unconstrained scale.
  const std::vector<double>& position() const { return position_; }
  double acceptance_rate() const;

  // Scaled log joint plus log-Jacobian at the unconstrained position `u`;
  // fills `grad` when non-null. Public for tests and benchmarks.
  double log_density(const std::vector<double>& u, std::vector<double>* grad, const Feeds& feeds = {});

 protected:
  MonteCarlo(InferenceProblem problem, std::uint64_t seed, bool allow_discrete);

  void validate() const override;
  void on_initialize() override;

  double log_density(const std::vector<double>& u, std::vector<double>* grad, const Resolved& r);
  // Appends the constrained position to every store. Throws StoreFull.
  void push_position();
  void require_capacity() const;

  std::vector<Block> blocks_;
  std::vector<double> position_;
  std::size_t accepted_ = 0;
  std::size_t proposed_ = 0;

 private:
  bool allow_discrete_;
};

class HMC final : public MonteCarlo {
 public:
  HMC(InferenceProblem problem, HMCConfig cfg, std::uint64_t seed = 0);
  AlgorithmInfo info() const override;
  const HMCConfig& config() const { return cfg_; }

 protected:
  void validate() const override;
  Diagnostics do_update(const Resolved& r) override;

 private:
  HMCConfig cfg_;
};

class SGLD final : public MonteCarlo {
 public:
  SGLD(InferenceProblem problem, SGLDConfig cfg, std::uint64_t seed = 0);
  AlgorithmInfo info() const override;
  double step_size_at(std::size_t t) const;

 protected:
  void validate() const override;
  Diagnostics do_update(const Resolved& r) override;

 private:
  SGLDConfig cfg_;
};

// Gaussian random walk on continuous coordinates plus a uniform redraw of one
// discrete coordinate (when any exist), accepted with min(1, exp(delta)).
class MetropolisHastings final : public MonteCarlo {
 public:
  MetropolisHastings(InferenceProblem problem, MHConfig cfg, std::uint64_t seed = 0);
  AlgorithmInfo info() const override;

 protected:
  void validate() const override;
  Diagnostics do_update(const Resolved& r) override;

 private:
  MHConfig cfg_;
};

}  // namespace ppl
