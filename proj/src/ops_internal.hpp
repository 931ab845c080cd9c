#pragma once

#include <functional>

#include "ppl/tape.hpp"

namespace ppl::detail {

using Accumulate = std::function<void(std::int32_t input, Tensor grad)>;

// Propagates the adjoint `g` of `node` to those of its inputs that need
// gradients.
void backprop(const Tape& tape, const Node& node, const Tensor& g, const Accumulate& acc);

}  // namespace ppl::detail
