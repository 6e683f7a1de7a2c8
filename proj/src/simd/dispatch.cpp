#include <atomic>
#include <cstdlib>
#include <string>

#include "morphouq/simd/kernels.hpp"

namespace morphouq::simd {

std::string_view isa_name(Isa isa) {
  switch (isa) {
    case Isa::Scalar:
      return "scalar";
    case Isa::Avx2:
      return "avx2";
  }
  return "unknown";
}

Isa detect_isa() {
#if (defined(__x86_64__) || defined(__i386__)) && (defined(__GNUC__) || defined(__clang__))
  static const bool has_avx2 = [] {
    __builtin_cpu_init();
    return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
  }();
  return has_avx2 ? Isa::Avx2 : Isa::Scalar;
#else
  return Isa::Scalar;
#endif
}

namespace {

const KernelTable* table_for(Isa isa) {
  if (isa == Isa::Avx2) {
    if (const KernelTable* t = avx2_kernels()) return t;
  }
  return &scalar_kernels();
}

const KernelTable* initial_table() {
  const char* env = std::getenv("MORPHOUQ_SIMD");
  if (env != nullptr) {
    const std::string v(env);
    if (v == "scalar") return &scalar_kernels();
    if (v == "avx2") return table_for(Isa::Avx2);
  }
  return table_for(detect_isa());
}

std::atomic<const KernelTable*>& active_slot() {
  static std::atomic<const KernelTable*> slot{initial_table()};
  return slot;
}

}  // namespace

const KernelTable& active_kernels() { return *active_slot().load(std::memory_order_acquire); }

Isa set_active_isa(Isa isa) {
  const KernelTable* t = table_for(isa);
  active_slot().store(t, std::memory_order_release);
  return t->isa;
}

}  // namespace morphouq::simd
