#include <doctest.h>

#include <cmath>
#include <vector>

#include "smrec/kernels.hpp"
#include "smrec/rng.hpp"

using namespace smrec;

namespace {

std::vector<double> random_vec(size_t n, Rng& rng) {
  std::vector<double> v(n);
  for (double& x : v) x = rng.uniform(-2.0, 2.0);
  return v;
}

void check_variant_equivalence(const kern::Kernels& a, const kern::Kernels& b) {
  Rng rng(99);
  for (size_t n : {0ul, 1ul, 3ul, 4ul, 7ul, 16ul, 33ul, 80ul, 257ul}) {
    auto x = random_vec(n, rng);
    auto y = random_vec(n, rng);

    const double da = a.dot(x.data(), y.data(), n);
    const double db = b.dot(x.data(), y.data(), n);
    CHECK(std::abs(da - db) <= 1e-12 * (1.0 + std::abs(da)));

    auto ya = y, yb = y;
    a.axpy(0.37, x.data(), ya.data(), n);
    b.axpy(0.37, x.data(), yb.data(), n);
    for (size_t i = 0; i < n; ++i) CHECK(ya[i] == yb[i]);

    auto xa = x, xb = x;
    a.scale(-1.25, xa.data(), n);
    b.scale(-1.25, xb.data(), n);
    for (size_t i = 0; i < n; ++i) CHECK(xa[i] == xb[i]);

    auto wa = x, wb = x;
    auto acca = random_vec(n, rng), gb = random_vec(n, rng);
    for (double& v : acca) v = std::abs(v);
    auto accb = acca;
    a.adagrad(wa.data(), acca.data(), gb.data(), n, 0.05, 1e-8);
    b.adagrad(wb.data(), accb.data(), gb.data(), n, 0.05, 1e-8);
    for (size_t i = 0; i < n; ++i) {
      CHECK(wa[i] == wb[i]);
      CHECK(acca[i] == accb[i]);
    }
  }
}

}  // namespace

TEST_CASE("scalar dot matches a plain loop") {
  const double a[] = {1.0, 2.0, 3.0};
  const double b[] = {4.0, -5.0, 6.0};
  CHECK(kern::scalar().dot(a, b, 3) == doctest::Approx(12.0));
}

TEST_CASE("adagrad scalar: first step is lr-normalized") {
  double w = 1.0, acc = 0.0, g = 2.0;
  kern::scalar().adagrad(&w, &acc, &g, 1, 0.1, 0.0);
  CHECK(acc == doctest::Approx(4.0));
  // step = lr * g / sqrt(g^2) = lr
  CHECK(w == doctest::Approx(0.9));
}

TEST_CASE("runtime-selected kernels agree with the scalar reference") {
  check_variant_equivalence(kern::scalar(), kern::active());
}

TEST_CASE("active kernel is one of the known variants") {
  const std::string name = kern::active().name;
  CHECK((name == "scalar" || name == "avx2"));
}
