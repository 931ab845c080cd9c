#pragma once

// Synthetic datasets with recorded ground truth, and the CSV format used by
// the CLI: a header row, comma-separated reals, label column last.

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "ppl/tensor.hpp"

namespace ppl::data {

struct Dataset {
  std::vector<std::string> columns;  // header; the label column, when present, is last
  Tensor features;                   // [n, d]
  Tensor labels;                     // [n], or shape {0} when unlabeled
  std::map<std::string, Tensor> truth;

  std::size_t rows() const { return features.dim(0); }
  std::size_t dims() const { return features.dim(1); }
  bool labeled() const { return labels.rank() == 1 && labels.dim(0) > 0; }
};

// X ~ Normal(0, 1) [n, d]; beta* ~ Normal(0, 1) [d]; y ~ Bernoulli(sigmoid(X beta*)).
Dataset logreg(std::size_t n, std::size_t d, std::uint64_t seed);

// K means drawn uniformly in a box and rejected until every pair is at least
// `separation` apart; labels uniform; x = mean[label] + sigma_x * Normal(0, I).
Dataset gmm(std::size_t n, std::size_t k, std::size_t d, std::uint64_t seed,
            double sigma_x = 0.5, double separation = 6.0);

// Two random side x side binary prototypes; each row copies one of them and
// flips every pixel with probability `noise`. Label = prototype index.
Dataset vae_toy(std::size_t n, std::uint64_t seed, std::size_t side = 8, double noise = 0.1);

// One column of Normal(mean, sd) draws.
Dataset gaussian_1d(std::size_t n, std::uint64_t seed, double mean = 3.0, double sd = 1.0);

// n binary outcomes of which exactly `s` are ones, in seeded random order.
Dataset coin_flips(std::size_t n, std::size_t s, std::uint64_t seed);

void write_csv(const Dataset& ds, const std::filesystem::path& path);
// Throws std::runtime_error for a missing file and ConfigError for malformed
// content. With `labeled`, the last column becomes `labels`.
Dataset read_csv(const std::filesystem::path& path, bool labeled);

// The truth map as a JSON object of nested arrays.
void write_truth(const Dataset& ds, const std::filesystem::path& path);

}  // namespace ppl::data
