#pragma once

#include <cstddef>
#include <string>

// Dense double-precision inner loops. Every kernel has a scalar reference
// implementation and, where the target supports it, an AVX2 (x86-64) or NEON
// (aarch64) variant selected once at startup. The SIMD variants perform the
// same IEEE operations in the same per-element order as the scalar reference
// (no FMA contraction), so all variants produce bitwise-identical results;
// the equivalence tests assert exact equality.

namespace beats::kernels {

enum class Mode {
  kScalar,
  kAvx2,
  kNeon,
};

// True if this binary/CPU can run the given mode.
bool supported(Mode mode);

// Mode chosen at startup: best supported, unless the BEATS_SIMD environment
// variable ("scalar", "avx2", "neon", "auto") overrides it. Requesting an
// unsupported mode falls back to scalar.
Mode active_mode();
std::string mode_name(Mode mode);

// c[m x n] = a[m x k] * b[k x n], row-major. c is overwritten.
void matmul(double* c, const double* a, const double* b, std::size_t m, std::size_t k,
            std::size_t n);

// Elementwise out = a + b, out = a - b, out = a * b.
void add(double* out, const double* a, const double* b, std::size_t n);
void sub(double* out, const double* a, const double* b, std::size_t n);
void mul(double* out, const double* a, const double* b, std::size_t n);

// out = s * x.
void scale(double* out, const double* x, double s, std::size_t n);

// y += s * x.
void axpy(double* y, const double* x, double s, std::size_t n);

// Explicit-mode entry points for equivalence testing.
void matmul_mode(Mode mode, double* c, const double* a, const double* b, std::size_t m,
                 std::size_t k, std::size_t n);
void add_mode(Mode mode, double* out, const double* a, const double* b, std::size_t n);
void sub_mode(Mode mode, double* out, const double* a, const double* b, std::size_t n);
void mul_mode(Mode mode, double* out, const double* a, const double* b, std::size_t n);
void scale_mode(Mode mode, double* out, const double* x, double s, std::size_t n);
void axpy_mode(Mode mode, double* y, const double* x, double s, std::size_t n);

}  // namespace beats::kernels
