// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <string_view>

namespace stratdisc::kernels {

/// Table of numeric and bitset kernels. Every entry has a scalar reference
/// implementation; vector variants must agree with it (bit-exact for the
/// bitset kernels, to rounding for the floating-point ones).
struct KernelTable {
  std::string_view name;

  /// out[r] = dot(mat[r * cols .. r * cols + cols), x)
  void (*gemv)(const double* mat, std::size_t rows, std::size_t cols, const double* x,
               double* out);
  /// y += a * x
  void (*axpy)(double a, const double* x, double* y, std::size_t n);
  /// h += a * x * x^T, h is n x n row-major
  void (*syr)(double a, const double* x, double* h, std::size_t n);

  std::size_t (*popcount)(const std::uint64_t* a, std::size_t words);
  /// popcount(a & b)
  std::size_t (*and_popcount)(const std::uint64_t* a, const std::uint64_t* b, std::size_t words);
  /// popcount(a & ~b)
  std::size_t (*andnot_popcount)(const std::uint64_t* a, const std::uint64_t* b,
                                 std::size_t words);
  /// popcount(a ^ b)
  std::size_t (*xor_popcount)(const std::uint64_t* a, const std::uint64_t* b, std::size_t words);
  /// popcount(a & b & c)
  std::size_t (*and3_popcount)(const std::uint64_t* a, const std::uint64_t* b,
                               const std::uint64_t* c, std::size_t words);
  /// dst = a & b
  void (*and_into)(std::uint64_t* dst, const std::uint64_t* a, const std::uint64_t* b,
                   std::size_t words);
};

const KernelTable& scalar();

/// AVX2 table, or nullptr when not compiled in or not supported by the CPU.
const KernelTable* avx2();

/// Table chosen at first use: AVX2 when available unless the environment
/// variable STRATDISC_FORCE_SCALAR is set.
const KernelTable& active();

}  // namespace stratdisc::kernels
