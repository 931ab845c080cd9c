#include <cstdlib>
#include <string_view>

#include "kernels_impl.hpp"
#include "ppl/kernels.hpp"

namespace ppl::kernels {
namespace {

bool cpu_has_avx2() {
#if defined(PPL_HAVE_AVX2) && (defined(__GNUC__) || defined(__clang__))
  __builtin_cpu_init();
  return __builtin_cpu_supports("avx2");
#else
  return false;
#endif
}

const KernelTable& resolve() {
  const char* forced = std::getenv("PPL_KERNELS");
  if (forced != nullptr && std::string_view(forced) == "scalar") return scalar_table();
  if (const KernelTable* t = avx2_table()) return *t;
  return scalar_table();
}

}  // namespace

const KernelTable* avx2_table() {
#if defined(PPL_HAVE_AVX2)
  static const bool supported = cpu_has_avx2();
  return supported ? &avx2_table_unchecked() : nullptr;
#else
  return nullptr;
#endif
}

const KernelTable& active() {
  static const KernelTable& table = resolve();
  return table;
}

Isa active_isa() { return active().name == "avx2" ? Isa::avx2 : Isa::scalar; }

}  // namespace ppl::kernels
