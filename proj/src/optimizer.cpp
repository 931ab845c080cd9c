#include "ppl/optimizer.hpp"

#include <cmath>

#include "ppl/errors.hpp"

namespace ppl {

OptimizerConfig OptimizerConfig::sgd(double lr) {
  OptimizerConfig c;
  c.kind = OptimizerKind::sgd;
  c.lr = lr;
  return c;
}

OptimizerConfig OptimizerConfig::adam(double lr) {
  OptimizerConfig c;
  c.kind = OptimizerKind::adam;
  c.lr = lr;
  return c;
}

OptimizerConfig OptimizerConfig::rmsprop(double lr, double epsilon) {
  OptimizerConfig c;
  c.kind = OptimizerKind::rmsprop;
  c.lr = lr;
  c.rms_epsilon = epsilon;
  return c;
}

double default_learning_rate(OptimizerKind kind) {
  switch (kind) {
    case OptimizerKind::sgd: return 0.01;
    case OptimizerKind::adam: return 0.001;
    case OptimizerKind::rmsprop: return 0.01;
  }
  return 0.01;
}

std::string to_string(OptimizerKind kind) {
  switch (kind) {
    case OptimizerKind::sgd: return "sgd";
    case OptimizerKind::adam: return "adam";
    case OptimizerKind::rmsprop: return "rmsprop";
  }
  return "?";
}

Optimizer::Optimizer(OptimizerConfig cfg) : cfg_(cfg) {
  if (cfg_.lr == 0.0) cfg_.lr = default_learning_rate(cfg_.kind);
  if (!(cfg_.lr > 0.0) || !std::isfinite(cfg_.lr))
    throw ConfigError("learning rate must be positive");
  if (cfg_.kind == OptimizerKind::adam &&
      !(cfg_.beta1 >= 0 && cfg_.beta1 < 1 && cfg_.beta2 >= 0 && cfg_.beta2 < 1))
    throw ConfigError("Adam decay rates must lie in [0, 1)");
}

void Optimizer::reset(const std::vector<Parameter*>& params) {
  slots_.clear();
  t_ = 0;
  if (cfg_.kind == OptimizerKind::sgd) return;
  for (Parameter* p : params) slots_[p] = Slots{Tensor(p->shape()), Tensor(p->shape())};
}

const Tensor* Optimizer::slot(const Parameter* p, int which) const {
  const auto it = slots_.find(p);
  if (it == slots_.end()) return nullptr;
  return which == 0 ? &it->second.m : &it->second.v;
}

bool Optimizer::step(const GradientMap& grads, const std::vector<Parameter*>& params) {
  for (Parameter* p : params)
    if (const Tensor* g = grads.find(p); g && !all_finite(*g)) return false;

  ++t_;
  const double lr = cfg_.lr;
  for (Parameter* p : params) {
    const Tensor* gp = grads.find(p);
    if (!gp) continue;
    const Tensor& g = *gp;
    Tensor w = p->value();
    switch (cfg_.kind) {
      case OptimizerKind::sgd:
        for (std::size_t i = 0; i < w.size(); ++i) w[i] -= lr * g[i];
        break;
      case OptimizerKind::adam: {
        Slots& s = slots_.try_emplace(p, Slots{Tensor(p->shape()), Tensor(p->shape())}).first->second;
        const double b1 = cfg_.beta1, b2 = cfg_.beta2;
        const double c1 = 1.0 - std::pow(b1, static_cast<double>(t_));
        const double c2 = 1.0 - std::pow(b2, static_cast<double>(t_));
        for (std::size_t i = 0; i < w.size(); ++i) {
          s.m[i] = b1 * s.m[i] + (1.0 - b1) * g[i];
          s.v[i] = b2 * s.v[i] + (1.0 - b2) * g[i] * g[i];
          const double mhat = s.m[i] / c1;
          const double vhat = s.v[i] / c2;
          w[i] -= lr * mhat / (std::sqrt(vhat) + cfg_.epsilon);
        }
        break;
      }
      case OptimizerKind::rmsprop: {
        Slots& s = slots_.try_emplace(p, Slots{Tensor(p->shape()), Tensor(p->shape())}).first->second;
        const double d = cfg_.decay;
        for (std::size_t i = 0; i < w.size(); ++i) {
          s.v[i] = d * s.v[i] + (1.0 - d) * g[i] * g[i];
          w[i] -= lr * g[i] / std::sqrt(s.v[i] + cfg_.rms_epsilon);
        }
        break;
      }
    }
    p->assign(std::move(w));
  }
  return true;
}

}  // namespace ppl
