#include "beats/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

#include "beats/errors.hpp"

namespace beats {

namespace {
thread_local std::uint64_t g_next_id = 1;
thread_local bool g_grad_enabled = true;
}  // namespace

Tensor::Tensor(std::size_t rows, std::size_t cols, bool requires_grad) {
  if (rows == 0 || cols == 0) throw DimError("tensor: zero extent");
  impl_ = std::make_shared<Impl>();
  impl_->rows = rows;
  impl_->cols = cols;
  impl_->data.assign(rows * cols, 0.0);
  impl_->requires_grad = requires_grad;
  impl_->id = g_next_id++;
}

Tensor::Tensor(std::size_t rows, std::size_t cols, std::vector<double> values,
               bool requires_grad)
    : Tensor(rows, cols, requires_grad) {
  if (values.size() != rows * cols)
    throw DimError("tensor: " + std::to_string(values.size()) + " values for " +
                   std::to_string(rows) + "x" + std::to_string(cols));
  impl_->data = std::move(values);
}

Tensor Tensor::scalar(double value, bool requires_grad) {
  return Tensor(1, 1, {value}, requires_grad);
}

Tensor Tensor::zeros(std::size_t rows, std::size_t cols, bool requires_grad) {
  return Tensor(rows, cols, requires_grad);
}

Tensor Tensor::full(std::size_t rows, std::size_t cols, double value, bool requires_grad) {
  Tensor t(rows, cols, requires_grad);
  std::fill(t.impl_->data.begin(), t.impl_->data.end(), value);
  return t;
}

double Tensor::item() const {
  if (rows() != 1 || cols() != 1)
    throw DimError("item: tensor is " + std::to_string(rows()) + "x" + std::to_string(cols()));
  return impl_->data[0];
}

const std::vector<double>& Tensor::grad() const {
  ensure_grad(*impl_);
  return impl_->grad;
}

void Tensor::zero_grad() {
  if (!impl_->grad.empty()) std::fill(impl_->grad.begin(), impl_->grad.end(), 0.0);
}

void ensure_grad(Tensor::Impl& impl) {
  if (impl.grad.empty()) impl.grad.assign(impl.data.size(), 0.0);
}

bool Tensor::all_finite() const {
  for (double v : impl_->data)
    if (!std::isfinite(v)) return false;
  return true;
}

void Tensor::backward() const {
  if (!defined()) throw ValidationError("backward: undefined tensor");
  if (rows() != 1 || cols() != 1)
    throw ValidationError("backward: loss must be scalar, got " + std::to_string(rows()) + "x" +
                          std::to_string(cols()));

  // Collect the reachable graph, then run closures in descending creation
  // order; every consumer finishes before its producer runs.
  std::vector<Impl*> nodes;
  std::unordered_set<Impl*> seen;
  std::vector<Impl*> stack{impl_.get()};
  seen.insert(impl_.get());
  while (!stack.empty()) {
    Impl* node = stack.back();
    stack.pop_back();
    nodes.push_back(node);
    for (const auto& parent : node->parents) {
      if (parent && seen.insert(parent.get()).second) stack.push_back(parent.get());
    }
  }
  std::sort(nodes.begin(), nodes.end(),
            [](const Impl* a, const Impl* b) { return a->id > b->id; });

  ensure_grad(*impl_);
  impl_->grad[0] += 1.0;
  for (Impl* node : nodes) {
    if (node->backward_fn) node->backward_fn(*node);
  }
}

bool grad_enabled() { return g_grad_enabled; }

NoGradGuard::NoGradGuard() : saved_(g_grad_enabled) { g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { g_grad_enabled = saved_; }

}  // namespace beats
