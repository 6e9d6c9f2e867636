// SPDX-License-Identifier: Apache-2.0
#include <bit>

#include "stratdisc/kernels.hpp"

namespace stratdisc::kernels {
namespace {

void gemv(const double* mat, std::size_t rows, std::size_t cols, const double* x, double* out) {
  for (std::size_t r = 0; r < rows; ++r) {
    const double* row = mat + r * cols;
    double s = 0.0;
    for (std::size_t c = 0; c < cols; ++c) s += row[c] * x[c];
    out[r] = s;
  }
}

void axpy(double a, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += a * x[i];
}

void syr(double a, const double* x, double* h, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) {
    const double ax = a * x[i];
    double* row = h + i * n;
    for (std::size_t j = 0; j < n; ++j) row[j] += ax * x[j];
  }
}

std::size_t popcount(const std::uint64_t* a, std::size_t words) {
  std::size_t s = 0;
  for (std::size_t i = 0; i < words; ++i) s += std::popcount(a[i]);
  return s;
}

std::size_t and_popcount(const std::uint64_t* a, const std::uint64_t* b, std::size_t words) {
  std::size_t s = 0;
  for (std::size_t i = 0; i < words; ++i) s += std::popcount(a[i] & b[i]);
  return s;
}

std::size_t andnot_popcount(const std::uint64_t* a, const std::uint64_t* b, std::size_t words) {
  std::size_t s = 0;
  for (std::size_t i = 0; i < words; ++i) s += std::popcount(a[i] & ~b[i]);
  return s;
}

std::size_t xor_popcount(const std::uint64_t* a, const std::uint64_t* b, std::size_t words) {
  std::size_t s = 0;
  for (std::size_t i = 0; i < words; ++i) s += std::popcount(a[i] ^ b[i]);
  return s;
}

std::size_t and3_popcount(const std::uint64_t* a, const std::uint64_t* b, const std::uint64_t* c,
                          std::size_t words) {
  std::size_t s = 0;
  for (std::size_t i = 0; i < words; ++i) s += std::popcount(a[i] & b[i] & c[i]);
  return s;
}

void and_into(std::uint64_t* dst, const std::uint64_t* a, const std::uint64_t* b,
              std::size_t words) {
  for (std::size_t i = 0; i < words; ++i) dst[i] = a[i] & b[i];
}

}  // namespace

const KernelTable& scalar() {
  static const KernelTable table{"scalar",       gemv,         axpy,          syr,
                                 popcount,       and_popcount, andnot_popcount, xor_popcount,
                                 and3_popcount,  and_into};
  return table;
}

}  // namespace stratdisc::kernels
