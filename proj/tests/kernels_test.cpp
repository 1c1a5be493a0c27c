#include <doctest.h>

#include <vector>

#include "beats/kernels.hpp"
#include "beats/rng.hpp"

using namespace beats;

namespace {

std::vector<double> random_vec(Rng& rng, std::size_t n) {
  std::vector<double> v(n);
  for (double& x : v) x = rng.normal();
  return v;
}

// Independent reference: j-inner triple loop with a local accumulator.
std::vector<double> matmul_ref(const std::vector<double>& a, const std::vector<double>& b,
                               std::size_t m, std::size_t k, std::size_t n) {
  std::vector<double> c(m * n, 0.0);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      double acc = 0.0;
      for (std::size_t kk = 0; kk < k; ++kk) acc += a[i * k + kk] * b[kk * n + j];
      c[i * n + j] = acc;
    }
  return c;
}

std::vector<kernels::Mode> enabled_modes() {
  std::vector<kernels::Mode> modes{kernels::Mode::kScalar};
  if (kernels::supported(kernels::Mode::kAvx2)) modes.push_back(kernels::Mode::kAvx2);
  if (kernels::supported(kernels::Mode::kNeon)) modes.push_back(kernels::Mode::kNeon);
  return modes;
}

}  // namespace

TEST_CASE("matmul identity and annihilating products") {
  const std::vector<double> eye{1, 0, 0, 1};
  const std::vector<double> m{1, 2, 3, 4};
  std::vector<double> out(4);
  kernels::matmul(out.data(), eye.data(), m.data(), 2, 2, 2);
  CHECK(out == m);

  const std::vector<double> a{1, 0, 0, 0};
  const std::vector<double> b{0, 0, 0, 1};
  kernels::matmul(out.data(), a.data(), b.data(), 2, 2, 2);
  CHECK(out == std::vector<double>{0, 0, 0, 0});
}

TEST_CASE("matmul matches triple-loop reference exactly") {
  Rng rng(11);
  const std::size_t m = 3, k = 4, n = 2;
  const auto a = random_vec(rng, m * k);
  const auto b = random_vec(rng, k * n);
  const auto ref = matmul_ref(a, b, m, k, n);
  std::vector<double> out(m * n);
  kernels::matmul(out.data(), a.data(), b.data(), m, k, n);
  CHECK(out == ref);
}

TEST_CASE("every enabled kernel mode is bitwise equal to scalar") {
  Rng rng(42);
  const auto modes = enabled_modes();
  for (int iter = 0; iter < 25; ++iter) {
    const std::size_t m = 1 + rng.below(7);
    const std::size_t k = 1 + rng.below(23);
    const std::size_t n = 1 + rng.below(37);
    const auto a = random_vec(rng, m * k);
    const auto b = random_vec(rng, k * n);
    std::vector<double> ref(m * n);
    kernels::matmul_mode(kernels::Mode::kScalar, ref.data(), a.data(), b.data(), m, k, n);
    for (auto mode : modes) {
      std::vector<double> out(m * n);
      kernels::matmul_mode(mode, out.data(), a.data(), b.data(), m, k, n);
      CHECK(out == ref);
    }
  }
}

TEST_CASE("elementwise kernels agree exactly across modes") {
  Rng rng(7);
  const auto modes = enabled_modes();
  for (std::size_t n : {1u, 3u, 4u, 5u, 17u, 64u, 301u}) {
    const auto a = random_vec(rng, n);
    const auto b = random_vec(rng, n);
    const double s = rng.normal();
    for (auto mode : modes) {
      std::vector<double> got(n), want(n);
      kernels::add_mode(kernels::Mode::kScalar, want.data(), a.data(), b.data(), n);
      kernels::add_mode(mode, got.data(), a.data(), b.data(), n);
      CHECK(got == want);
      kernels::sub_mode(kernels::Mode::kScalar, want.data(), a.data(), b.data(), n);
      kernels::sub_mode(mode, got.data(), a.data(), b.data(), n);
      CHECK(got == want);
      kernels::mul_mode(kernels::Mode::kScalar, want.data(), a.data(), b.data(), n);
      kernels::mul_mode(mode, got.data(), a.data(), b.data(), n);
      CHECK(got == want);
      kernels::scale_mode(kernels::Mode::kScalar, want.data(), a.data(), s, n);
      kernels::scale_mode(mode, got.data(), a.data(), s, n);
      CHECK(got == want);
      want = b;
      got = b;
      kernels::axpy_mode(kernels::Mode::kScalar, want.data(), a.data(), s, n);
      kernels::axpy_mode(mode, got.data(), a.data(), s, n);
      CHECK(got == want);
    }
  }
}

TEST_CASE("active mode is supported and named") {
  const auto mode = kernels::active_mode();
  CHECK(kernels::supported(mode));
  CHECK(!kernels::mode_name(mode).empty());
}
