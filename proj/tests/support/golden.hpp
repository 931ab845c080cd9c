#pragma once

// Reference CLI transcripts. Each entry is a file name under
// tests/golden/<kernel table> and the `ppl` arguments that produce it. The
// AVX2 reductions reassociate, so each kernel table has its own set.
// Regenerate with golden_regen (once plain, once with PPL_KERNELS=scalar)
// after an intentional change to output or numerics.

#include <filesystem>
#include <string>
#include <vector>

#include "ppl/kernels.hpp"

namespace ppl::testing {

struct GoldenCase {
  std::string name;
  std::vector<std::string> args;
};

inline const std::vector<GoldenCase>& golden_cases() {
  static const std::vector<GoldenCase> cases = {
      {"bb_mh", {"fit", "--model", "beta-bernoulli", "--inference", "mh", "--n-iter", "500", "--seed", "7"}},
      {"bb_hmc", {"fit", "--model", "beta-bernoulli", "--inference", "hmc", "--n-iter", "200", "--seed", "7"}},
      {"bb_score", {"fit", "--model", "beta-bernoulli", "--inference", "klqp-score", "--n-iter", "200"}},
      {"logreg_klqp", {"fit", "--model", "logreg", "--inference", "klqp", "--n-iter", "100", "--n", "200", "--d", "3"}},
      {"logreg_map", {"fit", "--model", "logreg", "--inference", "map", "--n-iter", "100", "--n", "200", "--d", "3"}},
      {"logreg_sgld", {"fit", "--model", "logreg", "--inference", "sgld", "--n-iter", "200", "--n", "200", "--d", "3"}},
      {"logreg_iwae", {"fit", "--model", "logreg", "--inference", "iwae", "--n-iter", "50", "--n", "200", "--d", "3"}},
      {"logreg_hmc_chains",
       {"fit", "--model", "logreg", "--inference", "hmc", "--n-iter", "60", "--n", "200", "--d", "3", "--chains", "2",
        "--step-size", "auto", "--seed", "3"}},
      {"gmm_vem", {"fit", "--model", "gmm", "--inference", "vem", "--n-iter", "20"}},
      {"gmm_svi", {"fit", "--model", "gmm", "--inference", "svi", "--n-iter", "20", "--n", "1000"}},
      {"vae_klqp", {"fit", "--model", "vae-toy", "--inference", "klqp", "--n-iter", "20", "--n", "500"}},
      {"gan", {"fit", "--model", "gan-1d", "--inference", "gan", "--n-iter", "200"}},
      {"dp_sim", {"dp-sim", "--alpha", "0.5", "--n-draws", "200", "--seed", "4"}},
      {"list", {"list"}},
  };
  return cases;
}

// Arguments as run for the transcript: fit gets --no-timing.
inline std::vector<std::string> golden_args(const GoldenCase& c) {
  std::vector<std::string> a = c.args;
  if (!a.empty() && a[0] == "fit") a.push_back("--no-timing");
  return a;
}

inline std::filesystem::path golden_path(const std::string& root, const GoldenCase& c) {
  return std::filesystem::path(root) / std::string(kernels::active().name) / (c.name + ".jsonl");
}

}  // namespace ppl::testing
