// SPDX-License-Identifier: Apache-2.0
#include <bit>
#include <cmath>
#include <vector>

#include "doctest.h"
#include "stratdisc/kernels.hpp"
#include "stratdisc/rng.hpp"

using namespace stratdisc;

namespace {

std::vector<std::uint64_t> bits(Rng& r, std::size_t n) {
  std::vector<std::uint64_t> v(n);
  for (auto& x : v) x = r.next() & r.next();  // sparser than uniform
  return v;
}

std::vector<double> reals(Rng& r, std::size_t n) {
  std::vector<double> v(n);
  for (auto& x : v) x = r.normal();
  return v;
}

std::vector<const kernels::KernelTable*> tables() {
  std::vector<const kernels::KernelTable*> t{&kernels::scalar()};
  if (kernels::avx2()) t.push_back(kernels::avx2());
  return t;
}

}  // namespace

TEST_CASE("bitset kernels agree with plain loops") {
  Rng rng(11);
  for (const auto* K : tables()) {
    CAPTURE(K->name);
    for (std::size_t words : {0, 1, 3, 4, 5, 8, 13, 64, 67}) {
      const auto a = bits(rng, words), b = bits(rng, words), c = bits(rng, words);
      std::size_t pc = 0, ab = 0, anb = 0, ax = 0, abc = 0;
      std::vector<std::uint64_t> want(words);
      for (std::size_t w = 0; w < words; ++w) {
        pc += std::popcount(a[w]);
        ab += std::popcount(a[w] & b[w]);
        anb += std::popcount(a[w] & ~b[w]);
        ax += std::popcount(a[w] ^ b[w]);
        abc += std::popcount(a[w] & b[w] & c[w]);
        want[w] = a[w] & b[w];
      }
      CHECK(K->popcount(a.data(), words) == pc);
      CHECK(K->and_popcount(a.data(), b.data(), words) == ab);
      CHECK(K->andnot_popcount(a.data(), b.data(), words) == anb);
      CHECK(K->xor_popcount(a.data(), b.data(), words) == ax);
      CHECK(K->and3_popcount(a.data(), b.data(), c.data(), words) == abc);
      std::vector<std::uint64_t> got(words);
      K->and_into(got.data(), a.data(), b.data(), words);
      CHECK(got == want);
    }
  }
}

TEST_CASE("vector kernels match the scalar reference") {
  const auto* V = kernels::avx2();
  if (!V) {
    MESSAGE("AVX2 not available; only the scalar table is exercised");
    return;
  }
  const auto& S = kernels::scalar();
  Rng rng(5);
  for (int rep = 0; rep < 50; ++rep) {
    const std::size_t rows = 1 + rng.below(30), cols = 1 + rng.below(25);
    const auto m = reals(rng, rows * cols), x = reals(rng, cols);
    std::vector<double> o1(rows), o2(rows);
    S.gemv(m.data(), rows, cols, x.data(), o1.data());
    V->gemv(m.data(), rows, cols, x.data(), o2.data());
    for (std::size_t i = 0; i < rows; ++i) CHECK(o2[i] == doctest::Approx(o1[i]).epsilon(1e-12));

    const double a = rng.normal();
    auto y1 = reals(rng, cols), y2 = y1;
    S.axpy(a, x.data(), y1.data(), cols);
    V->axpy(a, x.data(), y2.data(), cols);
    for (std::size_t i = 0; i < cols; ++i) CHECK(y2[i] == doctest::Approx(y1[i]).epsilon(1e-12));

    auto h1 = reals(rng, cols * cols), h2 = h1;
    S.syr(a, x.data(), h1.data(), cols);
    V->syr(a, x.data(), h2.data(), cols);
    for (std::size_t i = 0; i < cols * cols; ++i) CHECK(h2[i] == doctest::Approx(h1[i]).epsilon(1e-12));
  }
}

TEST_CASE("scalar float kernels compute the textbook operations") {
  const auto& S = kernels::scalar();
  const std::vector<double> m = {1, 2, 3, 4, 5, 6};
  const std::vector<double> x = {1, -1, 2};
  std::vector<double> out(2);
  S.gemv(m.data(), 2, 3, x.data(), out.data());
  CHECK(out[0] == 5.0);
  CHECK(out[1] == 11.0);
  std::vector<double> y = {1, 1, 1};
  S.axpy(2.0, x.data(), y.data(), 3);
  CHECK(y == std::vector<double>{3, -1, 5});
  std::vector<double> h(9, 0.0);
  S.syr(1.0, x.data(), h.data(), 3);
  CHECK(h == std::vector<double>{1, -1, 2, -1, 1, -2, 2, -2, 4});
}

TEST_CASE("active table is one of the known tables") {
  const auto& A = kernels::active();
  CHECK((&A == &kernels::scalar() || &A == kernels::avx2()));
}
