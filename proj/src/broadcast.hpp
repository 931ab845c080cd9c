#pragma once

// Strided traversal helpers shared by tensor utilities and tape ops.

#include <cstddef>
#include <vector>

#include "ppl/tensor.hpp"

namespace ppl::detail {

// Strides of `in` when viewed with the (broadcast) shape `out`: 0 on axes that
// are missing or stretched.
inline std::vector<std::size_t> broadcast_strides(const Shape& in, const Shape& out) {
  std::vector<std::size_t> strides(out.size(), 0);
  std::size_t stride = 1;
  const std::size_t offset = out.size() - in.size();
  for (std::size_t i = in.size(); i-- > 0;) {
    if (in[i] != 1) strides[offset + i] = stride;
    stride *= in[i];
  }
  return strides;
}

// Calls row(a_off, a_step, b_off, b_step, out_off, len) for every innermost row
// of `out`, where steps are 0 or 1.
template <class RowFn>
void for_each_row(const Shape& out, const std::vector<std::size_t>& sa,
                  const std::vector<std::size_t>& sb, RowFn&& row) {
  const std::size_t rank = out.size();
  if (rank == 0) {
    row(0, 0, 0, 0, 0, 1);
    return;
  }
  const std::size_t len = out[rank - 1];
  const std::size_t rows = len == 0 ? 0 : numel(out) / len;
  std::vector<std::size_t> idx(rank, 0);
  std::size_t a_off = 0, b_off = 0;
  for (std::size_t r = 0; r < rows; ++r) {
    row(a_off, sa[rank - 1], b_off, sb[rank - 1], r * len, len);
    // advance odometer over axes [0, rank-1)
    for (std::size_t ax = rank - 1; ax-- > 0;) {
      ++idx[ax];
      a_off += sa[ax];
      b_off += sb[ax];
      if (idx[ax] < out[ax]) break;
      a_off -= sa[ax] * out[ax];
      b_off -= sb[ax] * out[ax];
      idx[ax] = 0;
    }
  }
}

}  // namespace ppl::detail
