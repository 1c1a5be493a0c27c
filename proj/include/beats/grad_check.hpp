#pragma once

#include <functional>
#include <vector>

#include "beats/tensor.hpp"

namespace beats {

// Compares analytic gradients of a scalar function against central finite
// differences (f(x+h) - f(x-h)) / 2h, elementwise over every requires_grad
// input. Returns the worst relative error with denominator
// max(|analytic|, |numeric|, 1e-8).
double grad_check(const std::function<Tensor(const std::vector<Tensor>&)>& f,
                  std::vector<Tensor> inputs, double h = 1e-4);

}  // namespace beats
