// Dense 2-D tensors (row-major doubles) with reverse-mode gradients.
//
// Every op builds a node holding its parents and a backward closure. backward()
// walks the reachable graph in descending creation order, so gradient
// accumulation order is fixed and two runs over the same graph produce
// bitwise-identical gradients.
#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <vector>

namespace beats {

class Tensor {
 public:
  struct Impl {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data;
    bool requires_grad = false;
    std::vector<double> grad;  // sized lazily by ensure_grad()
    std::uint64_t id = 0;      // creation order, fixes backward order
    std::vector<std::shared_ptr<Impl>> parents;
    std::function<void(Impl&)> backward_fn;  // reads this->grad, accumulates into parents
  };

  Tensor() = default;
  Tensor(std::size_t rows, std::size_t cols, bool requires_grad = false);
  Tensor(std::size_t rows, std::size_t cols, std::vector<double> values,
         bool requires_grad = false);

  static Tensor scalar(double value, bool requires_grad = false);
  static Tensor zeros(std::size_t rows, std::size_t cols, bool requires_grad = false);
  static Tensor full(std::size_t rows, std::size_t cols, double value,
                     bool requires_grad = false);

  bool defined() const { return impl_ != nullptr; }
  std::size_t rows() const { return impl_->rows; }
  std::size_t cols() const { return impl_->cols; }
  std::size_t size() const { return impl_->data.size(); }

  double* data() { return impl_->data.data(); }
  const double* data() const { return impl_->data.data(); }
  double& at(std::size_t r, std::size_t c) { return impl_->data[r * impl_->cols + c]; }
  double at(std::size_t r, std::size_t c) const { return impl_->data[r * impl_->cols + c]; }
  double item() const;  // 1x1 only

  bool requires_grad() const { return impl_->requires_grad; }
  void set_requires_grad(bool v) { impl_->requires_grad = v; }
  const std::vector<double>& grad() const;  // zeros if backward never reached it
  void zero_grad();

  // Runs the reverse pass from this scalar; seeds its gradient with 1.
  void backward() const;

  bool all_finite() const;

  std::shared_ptr<Impl> impl() const { return impl_; }

 private:
  std::shared_ptr<Impl> impl_;
};

// Allocates impl->grad (zero-filled) if absent.
void ensure_grad(Tensor::Impl& impl);

bool grad_enabled();

// Disables graph construction in scope (evaluation, finite differences).
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool saved_;
};

}  // namespace beats
