#pragma once

// Models are host-language functions that create named random variables on a
// Trace. Bindings substitute data, approximations or free tape values for
// chosen RVs at creation time; everything downstream consumes the substitute.

#include <functional>
#include <map>
#include <string>
#include <variant>
#include <vector>

#include "ppl/approximation.hpp"
#include "ppl/dists.hpp"
#include "ppl/parameter.hpp"

namespace ppl {

enum class Source { data, free, approximation, sampled };

struct RandomVariable {
  std::string name;
  DistPtr dist;
  Value value;  // the associated sample tensor on the tape
  Source source = Source::sampled;

  bool observed() const { return source == Source::data; }
};

// Where a bound RV takes its value from.
using Binding = std::variant<Tensor, Value, const Approximation*>;
using Bindings = std::map<std::string, Binding>;
using ScaleMap = std::map<std::string, double>;

class Trace {
 public:
  Trace(Tape& tape, Rng& rng, Bindings bindings = {}, Feeds inputs = {},
        ParameterStore* params = nullptr);

  // Creates RV `name` with distribution `dist` and returns its value. Throws
  // ConfigError on duplicate names.
  Value sample(const std::string& name, DistPtr dist);

  // Placeholder input (e.g. a design matrix) supplied with the trace.
  Value input(const std::string& name);
  // Model parameter theta, read from the store.
  Value param(const std::string& name);

  Tape& tape() const { return *tape_; }
  Rng& rng() const { return *rng_; }
  const Feeds& inputs() const { return inputs_; }

  const std::vector<RandomVariable>& variables() const { return rvs_; }
  const RandomVariable* find(const std::string& name) const;
  const RandomVariable& at(const std::string& name) const;

  // Throws ConfigError naming any binding or input the model never used.
  void check_bindings_used() const;

 private:
  Tape* tape_;
  Rng* rng_;
  Bindings bindings_;
  Feeds inputs_;
  ParameterStore* params_;
  std::vector<RandomVariable> rvs_;
  std::map<std::string, Value> input_values_;
  std::map<std::string, bool> used_;
};

using ModelFn = std::function<void(Trace&)>;

// Runs `model` on a fresh trace over `tape` and checks every binding was used.
Trace trace(const ModelFn& model, Tape& tape, Rng& rng, Bindings bindings = {}, Feeds inputs = {},
            ParameterStore* params = nullptr);

// sum over RVs of scale[name] * sum(log_prob(value)). Unlisted RVs have scale
// 1. Throws ConfigError for a nonpositive scale or a scale naming no RV.
Value log_joint(const Trace& t, const ScaleMap& scale = {});

// Same sum restricted to the RVs accepted by `keep`.
Value log_joint_where(const Trace& t, const ScaleMap& scale,
                     const std::function<bool(const RandomVariable&)>& keep);

void validate_scale(const ScaleMap& scale);

// Stick-breaking draw following the stochastic while loop: a running product
// of Beta(1, alpha) sticks is flipped as a Bernoulli probability until a flip
// comes up 0; the number of sticks broken selects a base draw.
struct DirichletProcessDraw {
  Tensor value;
  std::size_t stick = 0;
};

DirichletProcessDraw dirichlet_process_draw(double alpha,
                                            const std::function<Tensor(std::size_t, Rng&)>& base,
                                            Rng& rng, std::size_t max_iterations = 10000);

}  // namespace ppl
