#pragma once

// Command-line front end. Structured records (one JSON object per line) go to
// `out`; progress and errors go to `err`.

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace ppl::cli {

// Exit codes.
inline constexpr int kOk = 0;
inline constexpr int kFailure = 1;       // benchmark mismatch and other runtime failures
inline constexpr int kConfigError = 2;   // bad flags, incompatible pair, IO, malformed CSV
inline constexpr int kDiverged = 3;      // too many consecutive divergent updates

// args excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

// model -> inferences `fit` accepts for it.
const std::map<std::string, std::vector<std::string>>& compatibility();
const std::vector<std::string>& model_names();
const std::vector<std::string>& inference_names();

struct FitOptions {
  std::string model;
  std::string inference;
  std::size_t n_iter = 0;  // 0: preset default
  std::uint64_t seed = 1;
  std::optional<double> step_size;
  bool step_size_auto = false;  // 0.5 / N
  std::size_t n_steps = 10;
  std::size_t n_samples = 0;  // 0: preset default
  std::size_t iwae_k = 5;
  std::size_t minibatch = 0;  // 0: preset default (svi 128, vae-toy 100, gan-1d 64)
  std::size_t n = 0;  // 0: preset default
  std::size_t d = 0;
  std::size_t k = 0;
  std::string path;
  std::size_t stride = 0;  // 0: n_iter / 10
  std::size_t chains = 1;
  double burn_in = 0.1;
  std::optional<double> lr;
  std::string optimizer = "adam";
  std::size_t max_diverged = 10;
  bool timing = true;
};

int cmd_fit(const FitOptions& options, std::ostream& out, std::ostream& err);

struct BenchOptions {
  std::size_t n = 5000;
  std::size_t d = 20;
  std::size_t n_iter = 100;
  std::size_t n_steps = 10;
  std::optional<double> step_size;  // default 0.5 / n
  std::uint64_t seed = 1;
  std::size_t reps = 3;
};

struct BenchResult {
  double library_seconds = 0.0;      // fastest repetition
  double handwritten_seconds = 0.0;  // fastest repetition
  double ratio = 0.0;
  bool identical = false;
  double acceptance_rate = 0.0;
  std::size_t iterations = 0;
};

// Library HMC through an InferenceProblem vs a handwritten loop on the same
// tape engine, logistic regression on synthetic data.
BenchResult bench_overhead(const BenchOptions& options);

}  // namespace ppl::cli
