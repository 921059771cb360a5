#pragma once

#include <cstddef>
#include <string>

namespace smrec::kern {

// Data-parallel inner loops used by pooling, the MLP and Adagrad updates.
// Scalar reference implementations always exist; an AVX2 variant is selected
// at runtime when the CPU supports it. Override with SMREC_KERNELS=scalar|avx2.
struct Kernels {
  const char* name;
  double (*dot)(const double* a, const double* b, size_t n);
  void (*axpy)(double alpha, const double* x, double* y, size_t n);  // y += alpha*x
  void (*scale)(double alpha, double* x, size_t n);                  // x *= alpha
  // w[i] -= lr * g[i] / (sqrt(acc[i] += g[i]^2) + eps)
  void (*adagrad)(double* w, double* acc, const double* g, size_t n, double lr, double eps);
};

const Kernels& scalar();
#if defined(SMREC_HAVE_AVX2)
const Kernels& avx2();
#endif

// Runtime-selected implementation (cached after first call).
const Kernels& active();

inline double dot(const double* a, const double* b, size_t n) { return active().dot(a, b, n); }
inline void axpy(double alpha, const double* x, double* y, size_t n) { active().axpy(alpha, x, y, n); }
inline void scale(double alpha, double* x, size_t n) { active().scale(alpha, x, n); }
inline void adagrad(double* w, double* acc, const double* g, size_t n, double lr, double eps) {
  active().adagrad(w, acc, g, n, lr, eps);
}

}  // namespace smrec::kern
