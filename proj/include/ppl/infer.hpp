#pragma once

// Inference as an object: a problem (model, latent -> approximation, data,
// scale) plus an algorithm that repeatedly updates parameters or sample stores.

#include <chrono>
#include <functional>
#include <iosfwd>
#include <map>
#include <memory>
#include <string>
#include <variant>
#include <vector>

#include "ppl/approximation.hpp"
#include "ppl/model.hpp"
#include "ppl/optimizer.hpp"

namespace ppl {

// A named hole that must be filled with a tensor of `shape` at every update.
struct FeedSlot {
  std::string name;
  Shape shape;
};

using DataSource = std::variant<Tensor, FeedSlot, ApproxPtr>;
using InputSource = std::variant<Tensor, FeedSlot>;

struct InferenceProblem {
  ModelFn model;
  std::map<std::string, ApproxPtr> latent;  // latent RV -> approximating family
  std::map<std::string, DataSource> data;   // observed RV -> data, feed or approximation
  std::map<std::string, InputSource> inputs;  // non-random model inputs
  ScaleMap scale;
  ParameterStore* params = nullptr;          // where model parameters live
  std::vector<std::string> model_params;     // theta: trained alongside the approximations
};

struct Diagnostics {
  std::size_t step = 0;
  std::map<std::string, double> metrics;
  double seconds = 0.0;
  bool diverged = false;
  std::vector<std::string> warnings;
};

// The three parts every algorithm is made of.
struct AlgorithmInfo {
  std::string name;
  std::string family;       // approximating family
  std::string objective;    // loss or transition rule
  std::string update_rule;  // how parameters / stores change
};

const std::vector<AlgorithmInfo>& algorithm_registry();

using FeedProvider = std::function<Feeds(std::size_t step)>;

struct RunOptions {
  std::size_t progress_stride = 0;  // 0: silent
  std::ostream* progress = nullptr;
};

class Inference {
 public:
  Inference(InferenceProblem problem, std::uint64_t seed);
  virtual ~Inference() = default;
  Inference(const Inference&) = delete;
  Inference& operator=(const Inference&) = delete;

  // Validates the problem and (re)creates all algorithm state. Idempotent.
  void initialize();
  bool initialized() const { return initialized_; }

  // One algorithm step. Throws ShapeError naming a missing or mis-shaped feed.
  Diagnostics update(const Feeds& feeds = {});
  std::vector<Diagnostics> run(std::size_t n_iter, const FeedProvider& feeds = {},
                               const RunOptions& options = {});

  virtual AlgorithmInfo info() const = 0;

  const InferenceProblem& problem() const { return problem_; }
  InferenceProblem& mutable_problem() { return problem_; }
  std::size_t step() const { return step_; }
  Rng& rng() { return rng_; }

  // Parameters this inference writes to: latent approximations' plus the
  // declared model parameters.
  const std::vector<Parameter*>& trainable() const { return trainable_; }

 protected:
  // Per-step resolution of the problem's data and inputs against feeds.
  struct Resolved {
    Bindings bindings;  // data bindings; latent bindings are added per algorithm
    Feeds inputs;       // model inputs plus every feed, for approximation builders
  };
  Resolved resolve(const Feeds& feeds) const;
  Trace run_model(Tape& tape, const Resolved& r, Bindings latent) ;

  virtual void validate() const {}
  virtual void on_initialize() {}
  virtual Diagnostics do_update(const Resolved& r) = 0;

  InferenceProblem problem_;
  Rng rng_;
  std::uint64_t seed_;
  std::vector<Parameter*> trainable_;

 private:
  void validate_common() const;
  std::size_t step_ = 0;
  bool initialized_ = false;
};

// Gradient-based inference with a tape-built loss.
class VariationalInference : public Inference {
 public:
  VariationalInference(InferenceProblem problem, std::uint64_t seed, OptimizerConfig opt);
  const Optimizer& optimizer() const { return optimizer_; }
  // Zeroes the optimizer state (moments and step counter) of every trainable
  // parameter without touching the parameters or the RNG.
  void reset_optimizer() { optimizer_.reset(trainable_); }

  // The loss on a fresh tape for the given feeds (used by tests and oracles).
  Value build_loss(Tape& tape, const Feeds& feeds, Diagnostics& diag);

 protected:
  virtual Value loss(Tape& tape, const Resolved& r, Diagnostics& diag) = 0;
  void on_initialize() override;
  Diagnostics do_update(const Resolved& r) override;

  Optimizer optimizer_;
};

double grad_norm(const GradientMap& grads, const std::vector<Parameter*>& params);

}  // namespace ppl
