#pragma once

// First-order optimizers. Losses are minimized: step() moves every parameter
// against the gradient it is given.

#include <map>
#include <memory>
#include <string>
#include <vector>

#include "ppl/tape.hpp"

namespace ppl {

enum class OptimizerKind { sgd, adam, rmsprop };

struct OptimizerConfig {
  OptimizerKind kind = OptimizerKind::adam;
  double lr = 0.0;  // 0 selects the kind's default
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;  // Adam; RMSProp uses rms_epsilon
  double decay = 0.9;     // RMSProp
  double rms_epsilon = 1e-10;

  static OptimizerConfig sgd(double lr = 0.01);
  static OptimizerConfig adam(double lr = 0.001);
  static OptimizerConfig rmsprop(double lr = 0.01, double epsilon = 1e-10);
};

double default_learning_rate(OptimizerKind kind);
std::string to_string(OptimizerKind kind);

class Optimizer {
 public:
  explicit Optimizer(OptimizerConfig cfg);

  const OptimizerConfig& config() const { return cfg_; }
  double learning_rate() const { return cfg_.lr; }

  // Creates zeroed state for every listed parameter and resets the counter.
  void reset(const std::vector<Parameter*>& params);

  // Applies one update to each listed parameter that has a gradient. Returns
  // false, leaving every parameter untouched, if any gradient is non-finite.
  bool step(const GradientMap& grads, const std::vector<Parameter*>& params);

  std::size_t slot_count() const { return slots_.size(); }
  std::size_t steps() const { return t_; }
  const Tensor* slot(const Parameter* p, int which) const;

 private:
  struct Slots {
    Tensor m;
    Tensor v;
  };
  OptimizerConfig cfg_;
  std::map<const Parameter*, Slots> slots_;
  std::size_t t_ = 0;
};

}  // namespace ppl
