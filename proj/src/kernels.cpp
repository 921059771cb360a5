#include "smrec/kernels.hpp"

#include <cmath>
#include <cstdlib>
#include <cstring>

namespace smrec::kern {

namespace {

double dot_scalar(const double* a, const double* b, size_t n) {
  double s = 0.0;
  for (size_t i = 0; i < n; ++i) s += a[i] * b[i];
  return s;
}

void axpy_scalar(double alpha, const double* x, double* y, size_t n) {
  for (size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

void scale_scalar(double alpha, double* x, size_t n) {
  for (size_t i = 0; i < n; ++i) x[i] *= alpha;
}

void adagrad_scalar(double* w, double* acc, const double* g, size_t n, double lr, double eps) {
  for (size_t i = 0; i < n; ++i) {
    acc[i] += g[i] * g[i];
    w[i] -= lr * g[i] / (std::sqrt(acc[i]) + eps);
  }
}

const Kernels kScalar{"scalar", dot_scalar, axpy_scalar, scale_scalar, adagrad_scalar};

const Kernels& select() {
  if (const char* env = std::getenv("SMREC_KERNELS")) {
    if (std::strcmp(env, "scalar") == 0) return kScalar;
#if defined(SMREC_HAVE_AVX2)
    if (std::strcmp(env, "avx2") == 0) return avx2();
#endif
  }
#if defined(SMREC_HAVE_AVX2)
  if (__builtin_cpu_supports("avx2")) return avx2();
#endif
  return kScalar;
}

}  // namespace

const Kernels& scalar() { return kScalar; }

const Kernels& active() {
  static const Kernels& k = select();
  return k;
}

}  // namespace smrec::kern
