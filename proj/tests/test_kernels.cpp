#include <array>
#include <cmath>
#include <cstdlib>
#include <string_view>
#include <cstring>
#include <random>
#include <vector>

#include "doctest.h"
#include "ppl/kernels.hpp"

using namespace ppl::kernels;

namespace {

std::vector<double> random_vec(std::size_t n, std::mt19937_64& g, double lo = -3, double hi = 3) {
  std::uniform_real_distribution<double> u(lo, hi);
  std::vector<double> v(n);
  for (auto& x : v) x = u(g);
  return v;
}

bool bit_equal(const std::vector<double>& a, const std::vector<double>& b) {
  return a.size() == b.size() && std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0;
}

const KernelTable* simd() {
  const KernelTable* t = avx2_table();
  if (!t) MESSAGE("AVX2 variant unavailable; equivalence checks skipped");
  return t;
}

}  // namespace

TEST_CASE("elementwise kernels match the scalar reference bit for bit") {
  const KernelTable* v = simd();
  if (!v) return;
  const KernelTable& s = scalar_table();
  std::mt19937_64 g(11);
  for (std::size_t n : {0u, 1u, 3u, 4u, 5u, 7u, 8u, 15u, 16u, 17u, 63u, 64u, 257u}) {
    auto a = random_vec(n, g);
    auto b = random_vec(n, g, 0.5, 4.0);
    const double c = 1.7;
    std::vector<double> r1(n), r2(n);

    const BinaryVV vv_s[] = {s.add_vv, s.sub_vv, s.mul_vv, s.div_vv};
    const BinaryVV vv_v[] = {v->add_vv, v->sub_vv, v->mul_vv, v->div_vv};
    for (int i = 0; i < 4; ++i) {
      vv_s[i](a.data(), b.data(), r1.data(), n);
      vv_v[i](a.data(), b.data(), r2.data(), n);
      CHECK(bit_equal(r1, r2));
    }
    const BinaryVS vs_s[] = {s.add_vs, s.sub_vs, s.mul_vs, s.div_vs};
    const BinaryVS vs_v[] = {v->add_vs, v->sub_vs, v->mul_vs, v->div_vs};
    for (int i = 0; i < 4; ++i) {
      vs_s[i](a.data(), c, r1.data(), n);
      vs_v[i](a.data(), c, r2.data(), n);
      CHECK(bit_equal(r1, r2));
    }
    s.sub_sv(c, b.data(), r1.data(), n);
    v->sub_sv(c, b.data(), r2.data(), n);
    CHECK(bit_equal(r1, r2));
    s.div_sv(c, b.data(), r1.data(), n);
    v->div_sv(c, b.data(), r2.data(), n);
    CHECK(bit_equal(r1, r2));

    r1 = b;
    r2 = b;
    s.axpy(-0.3, a.data(), r1.data(), n);
    v->axpy(-0.3, a.data(), r2.data(), n);
    CHECK(bit_equal(r1, r2));
  }
}

TEST_CASE("in-place aliasing is allowed for elementwise kernels") {
  const KernelTable* v = simd();
  if (!v) return;
  std::mt19937_64 g(3);
  auto a = random_vec(37, g);
  auto b = random_vec(37, g);
  auto x1 = a, x2 = a;
  scalar_table().add_vv(x1.data(), b.data(), x1.data(), 37);
  v->add_vv(x2.data(), b.data(), x2.data(), 37);
  CHECK(bit_equal(x1, x2));
}

TEST_CASE("reductions agree with the reference to rounding") {
  const KernelTable* v = simd();
  if (!v) return;
  const KernelTable& s = scalar_table();
  std::mt19937_64 g(5);
  for (std::size_t n : {0u, 1u, 6u, 9u, 33u, 1000u, 4097u}) {
    auto a = random_vec(n, g);
    auto b = random_vec(n, g);
    double abs_sum = 0.0, abs_dot = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      abs_sum += std::abs(a[i]);
      abs_dot += std::abs(a[i] * b[i]);
    }
    CHECK(std::abs(s.sum(a.data(), n) - v->sum(a.data(), n)) <= 1e-14 * (1.0 + abs_sum) * n);
    CHECK(std::abs(s.dot(a.data(), b.data(), n) - v->dot(a.data(), b.data(), n)) <=
          1e-14 * (1.0 + abs_dot) * n);
  }
}

TEST_CASE("gemm family matches the reference bit for bit") {
  const KernelTable* v = simd();
  if (!v) return;
  const KernelTable& s = scalar_table();
  std::mt19937_64 g(9);
  for (auto [m, k, n] : std::vector<std::array<std::size_t, 3>>{
           {1, 1, 1}, {2, 3, 4}, {5, 7, 9}, {17, 4, 33}, {8, 20, 1}, {1, 20, 8}}) {
    auto a = random_vec(m * k, g);
    auto b = random_vec(k * n, g);
    std::vector<double> c1(m * n), c2(m * n);
    s.gemm(m, k, n, a.data(), b.data(), c1.data());
    v->gemm(m, k, n, a.data(), b.data(), c2.data());
    CHECK(bit_equal(c1, c2));

    // A[m,k]^T B[m,n]
    auto bt = random_vec(m * n, g);
    std::vector<double> d1(k * n), d2(k * n);
    s.gemm_tn(m, k, n, a.data(), bt.data(), d1.data());
    v->gemm_tn(m, k, n, a.data(), bt.data(), d2.data());
    CHECK(bit_equal(d1, d2));

    // A[m,n] B[k,n]^T
    auto an = random_vec(m * n, g);
    auto bk = random_vec(k * n, g);
    std::vector<double> e1(m * k), e2(m * k);
    s.gemm_nt(m, n, k, an.data(), bk.data(), e1.data());
    v->gemm_nt(m, n, k, an.data(), bk.data(), e2.data());
    CHECK(bit_equal(e1, e2));
  }
}

TEST_CASE("gemm reference agrees with a naive triple loop") {
  const KernelTable& s = scalar_table();
  std::mt19937_64 g(2);
  const std::size_t m = 4, k = 6, n = 3;
  auto a = random_vec(m * k, g);
  auto b = random_vec(k * n, g);
  std::vector<double> c(m * n);
  s.gemm(m, k, n, a.data(), b.data(), c.data());
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      double acc = 0.0;
      for (std::size_t p = 0; p < k; ++p) acc += a[i * k + p] * b[p * n + j];
      CHECK(c[i * n + j] == doctest::Approx(acc).epsilon(1e-13));
    }
}

TEST_CASE("active table honours the runtime selection") {
  const KernelTable& t = active();
  if (const char* env = std::getenv("PPL_KERNELS"); env && std::string_view(env) == "scalar")
    CHECK(active_isa() == Isa::scalar);
  else if (avx2_table())
    CHECK(active_isa() == Isa::avx2);
  CHECK(!t.name.empty());
}
