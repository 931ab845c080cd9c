#pragma once

#include <functional>
#include <string>
#include <vector>

#include "ppl/parameter.hpp"
#include "ppl/tape.hpp"

namespace ppl {

struct GradCheckEntry {
  std::string parameter;
  double max_rel_error = 0.0;
};

struct GradCheckReport {
  std::vector<GradCheckEntry> entries;
  double max_rel_error = 0.0;
  bool passed = true;
};

using RootBuilder = std::function<Value(Tape&)>;

/// Compares backward() against central differences for every element of
/// every listed parameter. The relative error uses a unit floor in the
/// denominator, |a - n| / max(1, |a|, |n|), so near-zero gradients are
/// compared absolutely.
///
/// Throws ConfigError when two evaluations at the same point disagree
/// (non-deterministic builder) or when h is outside (0, 1e-2].
GradCheckReport grad_check(const RootBuilder& build, const std::vector<Parameter*>& params,
                           double h = 1e-5, double tol = 1e-6);

}  // namespace ppl
