#include "beats/grad_check.hpp"

#include <algorithm>
#include <cmath>

#include "beats/errors.hpp"

namespace beats {

double grad_check(const std::function<Tensor(const std::vector<Tensor>&)>& f,
                  std::vector<Tensor> inputs, double h) {
  if (!(h > 0.0)) throw ValidationError("grad_check: h must be > 0");
  for (Tensor& t : inputs) t.zero_grad();
  Tensor y = f(inputs);
  if (y.rows() != 1 || y.cols() != 1)
    throw ValidationError("grad_check: f must return a scalar");
  y.backward();

  std::vector<std::vector<double>> analytic;
  analytic.reserve(inputs.size());
  for (const Tensor& t : inputs) analytic.push_back(t.grad());

  double worst = 0.0;
  NoGradGuard guard;
  for (std::size_t ti = 0; ti < inputs.size(); ++ti) {
    if (!inputs[ti].requires_grad()) continue;
    double* data = inputs[ti].data();
    for (std::size_t e = 0; e < inputs[ti].size(); ++e) {
      const double saved = data[e];
      data[e] = saved + h;
      const double fp = f(inputs).item();
      data[e] = saved - h;
      const double fm = f(inputs).item();
      data[e] = saved;
      if (!std::isfinite(fp) || !std::isfinite(fm))
        throw NumericError("grad_check: non-finite f at perturbed input");
      const double num = (fp - fm) / (2.0 * h);
      const double a = analytic[ti][e];
      const double rel = std::abs(a - num) / std::max({std::abs(a), std::abs(num), 1e-8});
      worst = std::max(worst, rel);
    }
  }
  return worst;
}

}  // namespace beats
