#pragma once

#include <cstddef>
#include <vector>

#include "ppl/kernels.hpp"

namespace ppl::kernels {

// dst[cols, rows] = src[rows, cols]^T
void transpose(const double* src, std::size_t rows, std::size_t cols, std::vector<double>& dst);

#if defined(PPL_HAVE_AVX2)
const KernelTable& avx2_table_unchecked();
#endif

}  // namespace ppl::kernels
