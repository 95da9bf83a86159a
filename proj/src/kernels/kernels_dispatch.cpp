#include "qflow/kernels.hpp"

#include <cstdlib>
#include <cstring>

namespace qflow::kernels {

#if defined(__x86_64__)
const Table* avx2_table_impl(); // defined in kernels_avx2.cpp when compiled in
#endif
#if defined(__aarch64__) && defined(__ARM_NEON)
const Table* neon_table_impl();
#endif

namespace {

std::vector<const Table*> build_available() {
  std::vector<const Table*> out;
  out.push_back(&scalar());
#if defined(__x86_64__) && defined(QFLOW_HAVE_AVX2_TU)
  if (__builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma"))
    out.push_back(avx2_table_impl());
#endif
#if defined(__aarch64__) && defined(__ARM_NEON)
  out.push_back(neon_table_impl());
#endif
  return out;
}

const Table* resolve_active(const std::vector<const Table*>& tables) {
  const char* want = std::getenv("QFLOW_KERNELS");
  if (want != nullptr) {
    for (const Table* t : tables)
      if (std::strcmp(t->name, want) == 0) return t;
  }
  return tables.back();
}

} // namespace

const std::vector<const Table*>& available() {
  static const std::vector<const Table*> tables = build_available();
  return tables;
}

const Table& active() {
  static const Table* chosen = resolve_active(available());
  return *chosen;
}

} // namespace qflow::kernels
