#include <atomic>
#include <cstdlib>
#include <string_view>

#include "kernels_internal.hpp"

namespace bbis::simd {
namespace {

bool cpu_has_avx2() {
#if defined(BBIS_HAVE_AVX2_KERNELS) && (defined(__GNUC__) || defined(__clang__))
  __builtin_cpu_init();
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

const KernelTable& initial_table() {
  const char* env = std::getenv("BBIS_SIMD");
  if (env != nullptr && std::string_view(env) == "scalar") return scalar_kernels();
  if (const KernelTable* t = avx2_kernels()) return *t;
  return scalar_kernels();
}

std::atomic<const KernelTable*>& slot() {
  static std::atomic<const KernelTable*> current{&initial_table()};
  return current;
}

}  // namespace

std::string_view to_string(Isa isa) {
  switch (isa) {
    case Isa::Scalar: return "scalar";
    case Isa::Avx2: return "avx2";
  }
  return "unknown";
}

const KernelTable& scalar_kernels() { return detail::scalar_table(); }

const KernelTable* avx2_kernels() {
#if defined(BBIS_HAVE_AVX2_KERNELS)
  static const bool supported = cpu_has_avx2();
  return supported ? &detail::avx2_table() : nullptr;
#else
  return nullptr;
#endif
}

const KernelTable& active() { return *slot().load(std::memory_order_acquire); }

bool select(Isa isa) {
  const KernelTable* table = isa == Isa::Scalar ? &scalar_kernels() : avx2_kernels();
  if (table == nullptr) return false;
  slot().store(table, std::memory_order_release);
  return true;
}

}  // namespace bbis::simd
