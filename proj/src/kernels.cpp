#include "beats/kernels.hpp"

#include <cstdlib>
#include <cstring>

namespace beats::kernels {

// ---------------------------------------------------------------------------
// Scalar reference kernels
// ---------------------------------------------------------------------------

namespace scalar {

// i,k,j loop order: each c[i][j] accumulates its k-terms in ascending k.
// The SIMD variants keep exactly this per-element order.
void matmul(double* c, const double* a, const double* b, std::size_t m, std::size_t k,
            std::size_t n) {
  for (std::size_t i = 0; i < m; ++i) {
    double* crow = c + i * n;
    for (std::size_t j = 0; j < n; ++j) crow[j] = 0.0;
    for (std::size_t kk = 0; kk < k; ++kk) {
      const double av = a[i * k + kk];
      const double* brow = b + kk * n;
      for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
}

void add(double* out, const double* a, const double* b, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] = a[i] + b[i];
}

void sub(double* out, const double* a, const double* b, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] = a[i] - b[i];
}

void mul(double* out, const double* a, const double* b, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] = a[i] * b[i];
}

void scale(double* out, const double* x, double s, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] = s * x[i];
}

void axpy(double* y, const double* x, double s, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += s * x[i];
}

}  // namespace scalar

// AVX2 variants live in kernels_avx2.cpp (compiled with -mavx2 only), NEON
// variants in kernels_neon.cpp.
#if defined(BEATS_HAVE_AVX2)
namespace avx2 {
void matmul(double* c, const double* a, const double* b, std::size_t m, std::size_t k,
            std::size_t n);
void add(double* out, const double* a, const double* b, std::size_t n);
void sub(double* out, const double* a, const double* b, std::size_t n);
void mul(double* out, const double* a, const double* b, std::size_t n);
void scale(double* out, const double* x, double s, std::size_t n);
void axpy(double* y, const double* x, double s, std::size_t n);
}  // namespace avx2
#endif
#if defined(BEATS_HAVE_NEON)
namespace neon {
void matmul(double* c, const double* a, const double* b, std::size_t m, std::size_t k,
            std::size_t n);
void add(double* out, const double* a, const double* b, std::size_t n);
void sub(double* out, const double* a, const double* b, std::size_t n);
void mul(double* out, const double* a, const double* b, std::size_t n);
void scale(double* out, const double* x, double s, std::size_t n);
void axpy(double* y, const double* x, double s, std::size_t n);
}  // namespace neon
#endif

// ---------------------------------------------------------------------------
// Dispatch
// ---------------------------------------------------------------------------

bool supported(Mode mode) {
  switch (mode) {
    case Mode::kScalar:
      return true;
    case Mode::kAvx2:
#if defined(BEATS_HAVE_AVX2)
      return __builtin_cpu_supports("avx2") != 0;
#else
      return false;
#endif
    case Mode::kNeon:
#if defined(BEATS_HAVE_NEON)
      return true;  // NEON is baseline on aarch64
#else
      return false;
#endif
  }
  return false;
}

std::string mode_name(Mode mode) {
  switch (mode) {
    case Mode::kScalar:
      return "scalar";
    case Mode::kAvx2:
      return "avx2";
    case Mode::kNeon:
      return "neon";
  }
  return "?";
}

static Mode pick_mode() {
  const char* env = std::getenv("BEATS_SIMD");
  if (env != nullptr && std::strcmp(env, "auto") != 0) {
    if (std::strcmp(env, "scalar") == 0) return Mode::kScalar;
    if (std::strcmp(env, "avx2") == 0 && supported(Mode::kAvx2)) return Mode::kAvx2;
    if (std::strcmp(env, "neon") == 0 && supported(Mode::kNeon)) return Mode::kNeon;
    return Mode::kScalar;
  }
  if (supported(Mode::kAvx2)) return Mode::kAvx2;
  if (supported(Mode::kNeon)) return Mode::kNeon;
  return Mode::kScalar;
}

Mode active_mode() {
  static const Mode mode = pick_mode();
  return mode;
}

void matmul_mode(Mode mode, double* c, const double* a, const double* b, std::size_t m,
                 std::size_t k, std::size_t n) {
#if defined(BEATS_HAVE_AVX2)
  if (mode == Mode::kAvx2) return avx2::matmul(c, a, b, m, k, n);
#endif
#if defined(BEATS_HAVE_NEON)
  if (mode == Mode::kNeon) return neon::matmul(c, a, b, m, k, n);
#endif
  (void)mode;
  scalar::matmul(c, a, b, m, k, n);
}

void add_mode(Mode mode, double* out, const double* a, const double* b, std::size_t n) {
#if defined(BEATS_HAVE_AVX2)
  if (mode == Mode::kAvx2) return avx2::add(out, a, b, n);
#endif
#if defined(BEATS_HAVE_NEON)
  if (mode == Mode::kNeon) return neon::add(out, a, b, n);
#endif
  (void)mode;
  scalar::add(out, a, b, n);
}

void sub_mode(Mode mode, double* out, const double* a, const double* b, std::size_t n) {
#if defined(BEATS_HAVE_AVX2)
  if (mode == Mode::kAvx2) return avx2::sub(out, a, b, n);
#endif
#if defined(BEATS_HAVE_NEON)
  if (mode == Mode::kNeon) return neon::sub(out, a, b, n);
#endif
  (void)mode;
  scalar::sub(out, a, b, n);
}

void mul_mode(Mode mode, double* out, const double* a, const double* b, std::size_t n) {
#if defined(BEATS_HAVE_AVX2)
  if (mode == Mode::kAvx2) return avx2::mul(out, a, b, n);
#endif
#if defined(BEATS_HAVE_NEON)
  if (mode == Mode::kNeon) return neon::mul(out, a, b, n);
#endif
  (void)mode;
  scalar::mul(out, a, b, n);
}

void scale_mode(Mode mode, double* out, const double* x, double s, std::size_t n) {
#if defined(BEATS_HAVE_AVX2)
  if (mode == Mode::kAvx2) return avx2::scale(out, x, s, n);
#endif
#if defined(BEATS_HAVE_NEON)
  if (mode == Mode::kNeon) return neon::scale(out, x, s, n);
#endif
  (void)mode;
  scalar::scale(out, x, s, n);
}

void axpy_mode(Mode mode, double* y, const double* x, double s, std::size_t n) {
#if defined(BEATS_HAVE_AVX2)
  if (mode == Mode::kAvx2) return avx2::axpy(y, x, s, n);
#endif
#if defined(BEATS_HAVE_NEON)
  if (mode == Mode::kNeon) return neon::axpy(y, x, s, n);
#endif
  (void)mode;
  scalar::axpy(y, x, s, n);
}

void matmul(double* c, const double* a, const double* b, std::size_t m, std::size_t k,
            std::size_t n) {
  matmul_mode(active_mode(), c, a, b, m, k, n);
}
void add(double* out, const double* a, const double* b, std::size_t n) {
  add_mode(active_mode(), out, a, b, n);
}
void sub(double* out, const double* a, const double* b, std::size_t n) {
  sub_mode(active_mode(), out, a, b, n);
}
void mul(double* out, const double* a, const double* b, std::size_t n) {
  mul_mode(active_mode(), out, a, b, n);
}
void scale(double* out, const double* x, double s, std::size_t n) {
  scale_mode(active_mode(), out, x, s, n);
}
void axpy(double* y, const double* x, double s, std::size_t n) {
  axpy_mode(active_mode(), y, x, s, n);
}

}  // namespace beats::kernels
