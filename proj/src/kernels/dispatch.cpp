// SPDX-License-Identifier: Apache-2.0
#include <cstdlib>

#include "stratdisc/kernels.hpp"

namespace stratdisc::kernels {

#if defined(STRATDISC_HAVE_AVX2)
const KernelTable& avx2_table();
#endif

const KernelTable* avx2() {
#if defined(STRATDISC_HAVE_AVX2)
  static const bool supported = [] {
    __builtin_cpu_init();
    return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma") &&
           __builtin_cpu_supports("popcnt");
  }();
  return supported ? &avx2_table() : nullptr;
#else
  return nullptr;
#endif
}

const KernelTable& active() {
  static const KernelTable* chosen = [] {
    const char* force = std::getenv("STRATDISC_FORCE_SCALAR");
    if (force != nullptr && force[0] != '\0' && force[0] != '0') return &scalar();
    const KernelTable* v = avx2();
    return v != nullptr ? v : &scalar();
  }();
  return *chosen;
}

}  // namespace stratdisc::kernels
