// SPDX-License-Identifier: Apache-2.0
#include <immintrin.h>

#include <bit>

#include "stratdisc/kernels.hpp"

namespace stratdisc::kernels {
namespace {

inline double hsum(__m256d v) {
  __m128d lo = _mm256_castpd256_pd128(v);
  __m128d hi = _mm256_extractf128_pd(v, 1);
  lo = _mm_add_pd(lo, hi);
  __m128d sh = _mm_unpackhi_pd(lo, lo);
  return _mm_cvtsd_f64(_mm_add_sd(lo, sh));
}

void gemv(const double* mat, std::size_t rows, std::size_t cols, const double* x, double* out) {
  const std::size_t vec = cols & ~std::size_t{3};
  for (std::size_t r = 0; r < rows; ++r) {
    const double* row = mat + r * cols;
    __m256d acc = _mm256_setzero_pd();
    std::size_t c = 0;
    for (; c < vec; c += 4)
      acc = _mm256_fmadd_pd(_mm256_loadu_pd(row + c), _mm256_loadu_pd(x + c), acc);
    double s = hsum(acc);
    for (; c < cols; ++c) s += row[c] * x[c];
    out[r] = s;
  }
}

void axpy(double a, const double* x, double* y, std::size_t n) {
  const __m256d va = _mm256_set1_pd(a);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4)
    _mm256_storeu_pd(y + i, _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
  for (; i < n; ++i) y[i] += a * x[i];
}

void syr(double a, const double* x, double* h, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) axpy(a * x[i], x, h + i * n, n);
}

// Nibble lookup popcount over 256-bit lanes, reduced with SAD.
inline __m256i popcnt_epi8(__m256i v) {
  const __m256i lut = _mm256_setr_epi8(0, 1, 1, 2, 1, 2, 2, 3, 1, 2, 2, 3, 2, 3, 3, 4, 0, 1, 1, 2,
                                       1, 2, 2, 3, 1, 2, 2, 3, 2, 3, 3, 4);
  const __m256i low = _mm256_set1_epi8(0x0f);
  const __m256i lo = _mm256_and_si256(v, low);
  const __m256i hi = _mm256_and_si256(_mm256_srli_epi16(v, 4), low);
  return _mm256_add_epi8(_mm256_shuffle_epi8(lut, lo), _mm256_shuffle_epi8(lut, hi));
}

inline std::size_t reduce64(__m256i acc) {
  return static_cast<std::size_t>(_mm256_extract_epi64(acc, 0) + _mm256_extract_epi64(acc, 1) +
                                  _mm256_extract_epi64(acc, 2) + _mm256_extract_epi64(acc, 3));
}

template <typename Op>
std::size_t popcount_op(std::size_t words, Op op) {
  __m256i acc = _mm256_setzero_si256();
  std::size_t i = 0;
  for (; i + 4 <= words; i += 4)
    acc = _mm256_add_epi64(acc, _mm256_sad_epu8(popcnt_epi8(op.vec(i)), _mm256_setzero_si256()));
  std::size_t s = reduce64(acc);
  for (; i < words; ++i) s += std::popcount(op.word(i));
  return s;
}

inline __m256i ld(const std::uint64_t* p) {
  return _mm256_loadu_si256(reinterpret_cast<const __m256i*>(p));
}

std::size_t popcount(const std::uint64_t* a, std::size_t words) {
  struct {
    const std::uint64_t* a;
    __m256i vec(std::size_t i) const { return ld(a + i); }
    std::uint64_t word(std::size_t i) const { return a[i]; }
  } op{a};
  return popcount_op(words, op);
}

std::size_t and_popcount(const std::uint64_t* a, const std::uint64_t* b, std::size_t words) {
  struct {
    const std::uint64_t *a, *b;
    __m256i vec(std::size_t i) const { return _mm256_and_si256(ld(a + i), ld(b + i)); }
    std::uint64_t word(std::size_t i) const { return a[i] & b[i]; }
  } op{a, b};
  return popcount_op(words, op);
}

std::size_t andnot_popcount(const std::uint64_t* a, const std::uint64_t* b, std::size_t words) {
  struct {
    const std::uint64_t *a, *b;
    __m256i vec(std::size_t i) const { return _mm256_andnot_si256(ld(b + i), ld(a + i)); }
    std::uint64_t word(std::size_t i) const { return a[i] & ~b[i]; }
  } op{a, b};
  return popcount_op(words, op);
}

std::size_t xor_popcount(const std::uint64_t* a, const std::uint64_t* b, std::size_t words) {
  struct {
    const std::uint64_t *a, *b;
    __m256i vec(std::size_t i) const { return _mm256_xor_si256(ld(a + i), ld(b + i)); }
    std::uint64_t word(std::size_t i) const { return a[i] ^ b[i]; }
  } op{a, b};
  return popcount_op(words, op);
}

std::size_t and3_popcount(const std::uint64_t* a, const std::uint64_t* b, const std::uint64_t* c,
                          std::size_t words) {
  struct {
    const std::uint64_t *a, *b, *c;
    __m256i vec(std::size_t i) const {
      return _mm256_and_si256(_mm256_and_si256(ld(a + i), ld(b + i)), ld(c + i));
    }
    std::uint64_t word(std::size_t i) const { return a[i] & b[i] & c[i]; }
  } op{a, b, c};
  return popcount_op(words, op);
}

void and_into(std::uint64_t* dst, const std::uint64_t* a, const std::uint64_t* b,
              std::size_t words) {
  std::size_t i = 0;
  for (; i + 4 <= words; i += 4)
    _mm256_storeu_si256(reinterpret_cast<__m256i*>(dst + i),
                        _mm256_and_si256(ld(a + i), ld(b + i)));
  for (; i < words; ++i) dst[i] = a[i] & b[i];
}

}  // namespace

const KernelTable& avx2_table() {
  static const KernelTable table{"avx2",        gemv,         axpy,          syr,
                                 popcount,      and_popcount, andnot_popcount, xor_popcount,
                                 and3_popcount, and_into};
  return table;
}

}  // namespace stratdisc::kernels
