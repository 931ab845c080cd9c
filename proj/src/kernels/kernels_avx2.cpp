#include <immintrin.h>

#include <vector>

#include "kernels_impl.hpp"
#include "ppl/kernels.hpp"

namespace ppl::kernels {
namespace avx2 {
namespace {

struct Add {
  static __m256d v(__m256d a, __m256d b) { return _mm256_add_pd(a, b); }
  static double s(double a, double b) { return a + b; }
};
struct Sub {
  static __m256d v(__m256d a, __m256d b) { return _mm256_sub_pd(a, b); }
  static double s(double a, double b) { return a - b; }
};
struct Mul {
  static __m256d v(__m256d a, __m256d b) { return _mm256_mul_pd(a, b); }
  static double s(double a, double b) { return a * b; }
};
struct Div {
  static __m256d v(__m256d a, __m256d b) { return _mm256_div_pd(a, b); }
  static double s(double a, double b) { return a / b; }
};

template <class Op>
void binary_vv(const double* a, const double* b, double* out, std::size_t n) {
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4)
    _mm256_storeu_pd(out + i, Op::v(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i)));
  for (; i < n; ++i) out[i] = Op::s(a[i], b[i]);
}

template <class Op>
void binary_vs(const double* a, double s, double* out, std::size_t n) {
  const __m256d vs = _mm256_set1_pd(s);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) _mm256_storeu_pd(out + i, Op::v(_mm256_loadu_pd(a + i), vs));
  for (; i < n; ++i) out[i] = Op::s(a[i], s);
}

template <class Op>
void binary_sv(double s, const double* b, double* out, std::size_t n) {
  const __m256d vs = _mm256_set1_pd(s);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) _mm256_storeu_pd(out + i, Op::v(vs, _mm256_loadu_pd(b + i)));
  for (; i < n; ++i) out[i] = Op::s(s, b[i]);
}

double hsum(__m256d v) {
  __m128d lo = _mm256_castpd256_pd128(v);
  __m128d hi = _mm256_extractf128_pd(v, 1);
  lo = _mm_add_pd(lo, hi);
  __m128d shuf = _mm_unpackhi_pd(lo, lo);
  return _mm_cvtsd_f64(_mm_add_sd(lo, shuf));
}

}  // namespace

void axpy(double alpha, const double* x, double* y, std::size_t n) {
  const __m256d va = _mm256_set1_pd(alpha);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d prod = _mm256_mul_pd(va, _mm256_loadu_pd(x + i));
    _mm256_storeu_pd(y + i, _mm256_add_pd(_mm256_loadu_pd(y + i), prod));
  }
  for (; i < n; ++i) y[i] = y[i] + alpha * x[i];
}

double sum(const double* a, std::size_t n) {
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    acc0 = _mm256_add_pd(acc0, _mm256_loadu_pd(a + i));
    acc1 = _mm256_add_pd(acc1, _mm256_loadu_pd(a + i + 4));
  }
  for (; i + 4 <= n; i += 4) acc0 = _mm256_add_pd(acc0, _mm256_loadu_pd(a + i));
  double total = hsum(_mm256_add_pd(acc0, acc1));
  for (; i < n; ++i) total += a[i];
  return total;
}

double dot(const double* a, const double* b, std::size_t n) {
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    acc0 = _mm256_add_pd(acc0, _mm256_mul_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i)));
    acc1 = _mm256_add_pd(acc1,
                         _mm256_mul_pd(_mm256_loadu_pd(a + i + 4), _mm256_loadu_pd(b + i + 4)));
  }
  for (; i + 4 <= n; i += 4)
    acc0 = _mm256_add_pd(acc0, _mm256_mul_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i)));
  double total = hsum(_mm256_add_pd(acc0, acc1));
  for (; i < n; ++i) total += a[i] * b[i];
  return total;
}

void gemm(std::size_t m, std::size_t k, std::size_t n, const double* a, const double* b,
          double* c) {
  for (std::size_t i = 0; i < m; ++i) {
    double* crow = c + i * n;
    for (std::size_t j = 0; j < n; ++j) crow[j] = 0.0;
    for (std::size_t p = 0; p < k; ++p) axpy(a[i * k + p], b + p * n, crow, n);
  }
}

void gemm_tn(std::size_t m, std::size_t k, std::size_t n, const double* a, const double* b,
             double* c) {
  for (std::size_t i = 0; i < k * n; ++i) c[i] = 0.0;
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t p = 0; p < k; ++p) axpy(a[i * k + p], b + i * n, c + p * n, n);
}

void gemm_nt(std::size_t m, std::size_t n, std::size_t k, const double* a, const double* b,
             double* c) {
  std::vector<double> bt;
  transpose(b, k, n, bt);
  gemm(m, n, k, a, bt.data(), c);
}

}  // namespace avx2

const KernelTable& avx2_table_unchecked() {
  static const KernelTable table{
      "avx2",
      avx2::binary_vv<avx2::Add>,
      avx2::binary_vv<avx2::Sub>,
      avx2::binary_vv<avx2::Mul>,
      avx2::binary_vv<avx2::Div>,
      avx2::binary_vs<avx2::Add>,
      avx2::binary_vs<avx2::Sub>,
      avx2::binary_vs<avx2::Mul>,
      avx2::binary_vs<avx2::Div>,
      avx2::binary_sv<avx2::Sub>,
      avx2::binary_sv<avx2::Div>,
      avx2::axpy,
      avx2::sum,
      avx2::dot,
      avx2::gemm,
      avx2::gemm_tn,
      avx2::gemm_nt,
  };
  return table;
}

}  // namespace ppl::kernels
