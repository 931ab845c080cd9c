#pragma once

// Dense double-precision inner loops used by the tensor engine.
//
// Every kernel has a scalar reference implementation. Vectorized variants are
// compiled into separate translation units and chosen once at startup based
// on what the CPU supports. The environment variable PPL_KERNELS=scalar forces
// the reference path.
//
// Elementwise kernels, axpy and the gemm family round identically to the
// scalar reference (no fused multiply-add, same accumulation order per output
// element). Only the horizontal reductions (sum, dot) reassociate.

#include <cstddef>
#include <string_view>

namespace ppl::kernels {

using BinaryVV = void (*)(const double* a, const double* b, double* out, std::size_t n);
using BinaryVS = void (*)(const double* a, double s, double* out, std::size_t n);
using BinarySV = void (*)(double s, const double* b, double* out, std::size_t n);

struct KernelTable {
  std::string_view name;

  BinaryVV add_vv;
  BinaryVV sub_vv;
  BinaryVV mul_vv;
  BinaryVV div_vv;

  BinaryVS add_vs;
  BinaryVS sub_vs;  // a - s
  BinaryVS mul_vs;
  BinaryVS div_vs;  // a / s
  BinarySV sub_sv;  // s - b
  BinarySV div_sv;  // s / b

  // y += alpha * x
  void (*axpy)(double alpha, const double* x, double* y, std::size_t n);
  double (*sum)(const double* a, std::size_t n);
  double (*dot)(const double* a, const double* b, std::size_t n);

  // Row-major C[m,n] = A[m,k] * B[k,n]. C is overwritten.
  void (*gemm)(std::size_t m, std::size_t k, std::size_t n, const double* a, const double* b,
               double* c);
  // C[k,n] = A[m,k]^T * B[m,n]
  void (*gemm_tn)(std::size_t m, std::size_t k, std::size_t n, const double* a, const double* b,
                  double* c);
  // C[m,k] = A[m,n] * B[k,n]^T
  void (*gemm_nt)(std::size_t m, std::size_t n, std::size_t k, const double* a, const double* b,
                  double* c);
};

enum class Isa { scalar, avx2 };

const KernelTable& scalar_table();

// nullptr when the variant was not compiled in or the CPU lacks support.
const KernelTable* avx2_table();

// The table in use. Resolved on first call.
const KernelTable& active();
Isa active_isa();

}  // namespace ppl::kernels
