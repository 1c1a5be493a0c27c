#include "beats/ops.hpp"

#include <cmath>
#include <string>
#include <utility>

#include "beats/errors.hpp"
#include "beats/kernels.hpp"

namespace beats::ops {

namespace {

using Impl = Tensor::Impl;

constexpr double kInvSqrt2 = 0.70710678118654752440;
constexpr double kInvSqrt2Pi = 0.39894228040143267794;
constexpr double kSqrt2OverPi = 0.79788456080286535588;

std::string shape_str(const Tensor& t) {
  return std::to_string(t.rows()) + "x" + std::to_string(t.cols());
}

bool track(std::initializer_list<Tensor> parents) {
  if (!grad_enabled()) return false;
  for (const Tensor& p : parents)
    if (p.requires_grad()) return true;
  return false;
}

void attach(Tensor& out, std::initializer_list<Tensor> parents,
            std::function<void(Impl&)> fn) {
  out.set_requires_grad(true);
  auto impl = out.impl();
  impl->parents.reserve(parents.size());
  for (const Tensor& p : parents) impl->parents.push_back(p.impl());
  impl->backward_fn = std::move(fn);
}

void attach(Tensor& out, const std::vector<Tensor>& parents, std::function<void(Impl&)> fn) {
  out.set_requires_grad(true);
  auto impl = out.impl();
  impl->parents.reserve(parents.size());
  for (const Tensor& p : parents) impl->parents.push_back(p.impl());
  impl->backward_fn = std::move(fn);
}

// p.grad += s * g
void acc(Impl& p, const double* g, double s, std::size_t n) {
  ensure_grad(p);
  kernels::axpy(p.grad.data(), g, s, n);
}

std::vector<double> transpose_copy(const double* src, std::size_t r, std::size_t c) {
  std::vector<double> out(r * c);
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j) out[j * r + i] = src[i * c + j];
  return out;
}

}  // namespace

Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.cols() != b.rows())
    throw DimError("matmul: " + shape_str(a) + " by " + shape_str(b));
  const std::size_t m = a.rows(), k = a.cols(), n = b.cols();
  Tensor out(m, n);
  kernels::matmul(out.data(), a.data(), b.data(), m, k, n);
  if (track({a, b})) {
    attach(out, {a, b}, [pa = a.impl(), pb = b.impl(), m, k, n](Impl& self) {
      if (self.grad.empty()) return;
      const double* dc = self.grad.data();
      if (pa->requires_grad) {
        auto bt = transpose_copy(pb->data.data(), k, n);
        std::vector<double> tmp(m * k);
        kernels::matmul(tmp.data(), dc, bt.data(), m, n, k);
        acc(*pa, tmp.data(), 1.0, m * k);
      }
      if (pb->requires_grad) {
        auto at = transpose_copy(pa->data.data(), m, k);
        std::vector<double> tmp(k * n);
        kernels::matmul(tmp.data(), at.data(), dc, k, m, n);
        acc(*pb, tmp.data(), 1.0, k * n);
      }
    });
  }
  return out;
}

Tensor transpose(const Tensor& a) {
  const std::size_t r = a.rows(), c = a.cols();
  Tensor out(c, r, transpose_copy(a.data(), r, c));
  if (track({a})) {
    attach(out, {a}, [pa = a.impl(), r, c](Impl& self) {
      if (self.grad.empty()) return;
      ensure_grad(*pa);
      for (std::size_t j = 0; j < c; ++j)
        for (std::size_t i = 0; i < r; ++i) pa->grad[i * c + j] += self.grad[j * r + i];
    });
  }
  return out;
}

Tensor add(const Tensor& a, const Tensor& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw DimError("add: " + shape_str(a) + " vs " + shape_str(b));
  const std::size_t n = a.size();
  Tensor out(a.rows(), a.cols());
  kernels::add(out.data(), a.data(), b.data(), n);
  if (track({a, b})) {
    attach(out, {a, b}, [pa = a.impl(), pb = b.impl(), n](Impl& self) {
      if (self.grad.empty()) return;
      if (pa->requires_grad) acc(*pa, self.grad.data(), 1.0, n);
      if (pb->requires_grad) acc(*pb, self.grad.data(), 1.0, n);
    });
  }
  return out;
}

Tensor sub(const Tensor& a, const Tensor& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw DimError("sub: " + shape_str(a) + " vs " + shape_str(b));
  const std::size_t n = a.size();
  Tensor out(a.rows(), a.cols());
  kernels::sub(out.data(), a.data(), b.data(), n);
  if (track({a, b})) {
    attach(out, {a, b}, [pa = a.impl(), pb = b.impl(), n](Impl& self) {
      if (self.grad.empty()) return;
      if (pa->requires_grad) acc(*pa, self.grad.data(), 1.0, n);
      if (pb->requires_grad) acc(*pb, self.grad.data(), -1.0, n);
    });
  }
  return out;
}

Tensor mul(const Tensor& a, const Tensor& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw DimError("mul: " + shape_str(a) + " vs " + shape_str(b));
  const std::size_t n = a.size();
  Tensor out(a.rows(), a.cols());
  kernels::mul(out.data(), a.data(), b.data(), n);
  if (track({a, b})) {
    attach(out, {a, b}, [pa = a.impl(), pb = b.impl(), n](Impl& self) {
      if (self.grad.empty()) return;
      if (pa->requires_grad) {
        ensure_grad(*pa);
        for (std::size_t i = 0; i < n; ++i) pa->grad[i] += pb->data[i] * self.grad[i];
      }
      if (pb->requires_grad) {
        ensure_grad(*pb);
        for (std::size_t i = 0; i < n; ++i) pb->grad[i] += pa->data[i] * self.grad[i];
      }
    });
  }
  return out;
}

Tensor scale(const Tensor& a, double s) {
  const std::size_t n = a.size();
  Tensor out(a.rows(), a.cols());
  kernels::scale(out.data(), a.data(), s, n);
  if (track({a})) {
    attach(out, {a}, [pa = a.impl(), s, n](Impl& self) {
      if (self.grad.empty()) return;
      acc(*pa, self.grad.data(), s, n);
    });
  }
  return out;
}

Tensor add_const(const Tensor& a, double c) {
  const std::size_t n = a.size();
  Tensor out(a.rows(), a.cols());
  for (std::size_t i = 0; i < n; ++i) out.data()[i] = a.data()[i] + c;
  if (track({a})) {
    attach(out, {a}, [pa = a.impl(), n](Impl& self) {
      if (self.grad.empty()) return;
      acc(*pa, self.grad.data(), 1.0, n);
    });
  }
  return out;
}

Tensor add_rowvec(const Tensor& m, const Tensor& v) {
  if (v.rows() != 1 || v.cols() != m.cols())
    throw DimError("add_rowvec: " + shape_str(m) + " plus " + shape_str(v));
  const std::size_t r = m.rows(), c = m.cols();
  Tensor out(r, c);
  for (std::size_t i = 0; i < r; ++i)
    kernels::add(out.data() + i * c, m.data() + i * c, v.data(), c);
  if (track({m, v})) {
    attach(out, {m, v}, [pm = m.impl(), pv = v.impl(), r, c](Impl& self) {
      if (self.grad.empty()) return;
      if (pm->requires_grad) acc(*pm, self.grad.data(), 1.0, r * c);
      if (pv->requires_grad) {
        ensure_grad(*pv);
        for (std::size_t i = 0; i < r; ++i)
          kernels::axpy(pv->grad.data(), self.grad.data() + i * c, 1.0, c);
      }
    });
  }
  return out;
}

Tensor add_colvec(const Tensor& m, const Tensor& v) {
  if (v.cols() != 1 || v.rows() != m.rows())
    throw DimError("add_colvec: " + shape_str(m) + " plus " + shape_str(v));
  const std::size_t r = m.rows(), c = m.cols();
  Tensor out(r, c);
  for (std::size_t i = 0; i < r; ++i) {
    const double vi = v.data()[i];
    for (std::size_t j = 0; j < c; ++j) out.data()[i * c + j] = m.data()[i * c + j] + vi;
  }
  if (track({m, v})) {
    attach(out, {m, v}, [pm = m.impl(), pv = v.impl(), r, c](Impl& self) {
      if (self.grad.empty()) return;
      if (pm->requires_grad) acc(*pm, self.grad.data(), 1.0, r * c);
      if (pv->requires_grad) {
        ensure_grad(*pv);
        for (std::size_t i = 0; i < r; ++i) {
          double s = 0.0;
          for (std::size_t j = 0; j < c; ++j) s += self.grad[i * c + j];
          pv->grad[i] += s;
        }
      }
    });
  }
  return out;
}

Tensor gelu(const Tensor& x, bool tanh_approx) {
  const std::size_t n = x.size();
  Tensor out(x.rows(), x.cols());
  if (!tanh_approx) {
    std::vector<double> cdf(n);
    for (std::size_t i = 0; i < n; ++i) {
      const double xi = x.data()[i];
      cdf[i] = 0.5 * std::erfc(-xi * kInvSqrt2);
      out.data()[i] = xi * cdf[i];
    }
    if (track({x})) {
      attach(out, {x}, [px = x.impl(), cdf = std::move(cdf), n](Impl& self) {
        if (self.grad.empty()) return;
        ensure_grad(*px);
        for (std::size_t i = 0; i < n; ++i) {
          const double xi = px->data[i];
          const double pdf = kInvSqrt2Pi * std::exp(-0.5 * xi * xi);
          px->grad[i] += self.grad[i] * (cdf[i] + xi * pdf);
        }
      });
    }
    return out;
  }
  std::vector<double> th(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double xi = x.data()[i];
    th[i] = std::tanh(kSqrt2OverPi * (xi + 0.044715 * xi * xi * xi));
    out.data()[i] = 0.5 * xi * (1.0 + th[i]);
  }
  if (track({x})) {
    attach(out, {x}, [px = x.impl(), th = std::move(th), n](Impl& self) {
      if (self.grad.empty()) return;
      ensure_grad(*px);
      for (std::size_t i = 0; i < n; ++i) {
        const double xi = px->data[i];
        const double t = th[i];
        const double du = kSqrt2OverPi * (1.0 + 0.134145 * xi * xi);
        px->grad[i] += self.grad[i] * (0.5 * (1.0 + t) + 0.5 * xi * (1.0 - t * t) * du);
      }
    });
  }
  return out;
}

Tensor exp_(const Tensor& x) {
  const std::size_t n = x.size();
  Tensor out(x.rows(), x.cols());
  for (std::size_t i = 0; i < n; ++i) out.data()[i] = std::exp(x.data()[i]);
  if (track({x})) {
    attach(out, {x}, [px = x.impl(), n](Impl& self) {
      if (self.grad.empty()) return;
      ensure_grad(*px);
      for (std::size_t i = 0; i < n; ++i) px->grad[i] += self.data[i] * self.grad[i];
    });
  }
  return out;
}

Tensor log_(const Tensor& x) {
  const std::size_t n = x.size();
  Tensor out(x.rows(), x.cols());
  for (std::size_t i = 0; i < n; ++i) {
    if (!(x.data()[i] > 0.0))
      throw NumericError("log: non-positive input at index " + std::to_string(i));
    out.data()[i] = std::log(x.data()[i]);
  }
  if (track({x})) {
    attach(out, {x}, [px = x.impl(), n](Impl& self) {
      if (self.grad.empty()) return;
      ensure_grad(*px);
      for (std::size_t i = 0; i < n; ++i) px->grad[i] += self.grad[i] / px->data[i];
    });
  }
  return out;
}

Tensor softmax_rows(const Tensor& m) {
  const std::size_t r = m.rows(), c = m.cols();
  Tensor out(r, c);
  for (std::size_t i = 0; i < r; ++i) {
    const double* row = m.data() + i * c;
    double mx = row[0];
    for (std::size_t j = 1; j < c; ++j) mx = std::max(mx, row[j]);
    double sum = 0.0;
    double* orow = out.data() + i * c;
    for (std::size_t j = 0; j < c; ++j) {
      orow[j] = std::exp(row[j] - mx);
      sum += orow[j];
    }
    for (std::size_t j = 0; j < c; ++j) orow[j] /= sum;
  }
  if (track({m})) {
    attach(out, {m}, [pm = m.impl(), r, c](Impl& self) {
      if (self.grad.empty()) return;
      ensure_grad(*pm);
      for (std::size_t i = 0; i < r; ++i) {
        const double* y = self.data.data() + i * c;
        const double* dy = self.grad.data() + i * c;
        double dot = 0.0;
        for (std::size_t j = 0; j < c; ++j) dot += dy[j] * y[j];
        for (std::size_t j = 0; j < c; ++j) pm->grad[i * c + j] += y[j] * (dy[j] - dot);
      }
    });
  }
  return out;
}

Tensor layer_norm(const Tensor& x, const Tensor& gain, const Tensor& bias, double eps) {
  const std::size_t r = x.rows(), c = x.cols();
  if (gain.rows() != 1 || gain.cols() != c)
    throw DimError("layer_norm: gain " + shape_str(gain) + " for input " + shape_str(x));
  if (bias.rows() != 1 || bias.cols() != c)
    throw DimError("layer_norm: bias " + shape_str(bias) + " for input " + shape_str(x));
  if (!(eps > 0.0)) throw ValidationError("layer_norm: eps must be > 0");

  Tensor out(r, c);
  std::vector<double> xhat(r * c);
  std::vector<double> inv_std(r);
  for (std::size_t i = 0; i < r; ++i) {
    const double* row = x.data() + i * c;
    double mu = 0.0;
    for (std::size_t j = 0; j < c; ++j) mu += row[j];
    mu /= static_cast<double>(c);
    double var = 0.0;
    for (std::size_t j = 0; j < c; ++j) {
      const double d = row[j] - mu;
      var += d * d;
    }
    var /= static_cast<double>(c);
    const double inv = 1.0 / std::sqrt(var + eps);
    inv_std[i] = inv;
    for (std::size_t j = 0; j < c; ++j) {
      const double h = (row[j] - mu) * inv;
      xhat[i * c + j] = h;
      out.data()[i * c + j] = gain.data()[j] * h + bias.data()[j];
    }
  }
  if (track({x, gain, bias})) {
    attach(out, {x, gain, bias},
           [px = x.impl(), pg = gain.impl(), pb = bias.impl(), xhat = std::move(xhat),
            inv_std = std::move(inv_std), r, c](Impl& self) {
             if (self.grad.empty()) return;
             for (std::size_t i = 0; i < r; ++i) {
               const double* dy = self.grad.data() + i * c;
               const double* h = xhat.data() + i * c;
               if (pg->requires_grad) {
                 ensure_grad(*pg);
                 for (std::size_t j = 0; j < c; ++j) pg->grad[j] += dy[j] * h[j];
               }
               if (pb->requires_grad) {
                 ensure_grad(*pb);
                 for (std::size_t j = 0; j < c; ++j) pb->grad[j] += dy[j];
               }
               if (px->requires_grad) {
                 ensure_grad(*px);
                 double m1 = 0.0, m2 = 0.0;
                 for (std::size_t j = 0; j < c; ++j) {
                   const double dh = dy[j] * pg->data[j];
                   m1 += dh;
                   m2 += dh * h[j];
                 }
                 m1 /= static_cast<double>(c);
                 m2 /= static_cast<double>(c);
                 for (std::size_t j = 0; j < c; ++j) {
                   const double dh = dy[j] * pg->data[j];
                   px->grad[i * c + j] += inv_std[i] * (dh - m1 - h[j] * m2);
                 }
               }
             }
           });
  }
  return out;
}

Tensor logsumexp_rows(const Tensor& m) {
  const std::size_t r = m.rows(), c = m.cols();
  Tensor out(r, 1);
  std::vector<double> w(r * c);
  for (std::size_t i = 0; i < r; ++i) {
    const double* row = m.data() + i * c;
    double mx = row[0];
    for (std::size_t j = 1; j < c; ++j) mx = std::max(mx, row[j]);
    double sum = 0.0;
    for (std::size_t j = 0; j < c; ++j) {
      w[i * c + j] = std::exp(row[j] - mx);
      sum += w[i * c + j];
    }
    for (std::size_t j = 0; j < c; ++j) w[i * c + j] /= sum;
    out.data()[i] = mx + std::log(sum);
  }
  if (track({m})) {
    attach(out, {m}, [pm = m.impl(), w = std::move(w), r, c](Impl& self) {
      if (self.grad.empty()) return;
      ensure_grad(*pm);
      for (std::size_t i = 0; i < r; ++i)
        kernels::axpy(pm->grad.data() + i * c, w.data() + i * c, self.grad[i], c);
    });
  }
  return out;
}

Tensor logsumexp_cols(const Tensor& m) {
  const std::size_t r = m.rows(), c = m.cols();
  Tensor out(1, c);
  std::vector<double> w(r * c);
  for (std::size_t j = 0; j < c; ++j) {
    double mx = m.data()[j];
    for (std::size_t i = 1; i < r; ++i) mx = std::max(mx, m.data()[i * c + j]);
    double sum = 0.0;
    for (std::size_t i = 0; i < r; ++i) {
      w[i * c + j] = std::exp(m.data()[i * c + j] - mx);
      sum += w[i * c + j];
    }
    for (std::size_t i = 0; i < r; ++i) w[i * c + j] /= sum;
    out.data()[j] = mx + std::log(sum);
  }
  if (track({m})) {
    attach(out, {m}, [pm = m.impl(), w = std::move(w), r, c](Impl& self) {
      if (self.grad.empty()) return;
      ensure_grad(*pm);
      for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < c; ++j)
          pm->grad[i * c + j] += w[i * c + j] * self.grad[j];
    });
  }
  return out;
}

Tensor sum_all(const Tensor& m) {
  const std::size_t n = m.size();
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += m.data()[i];
  Tensor out = Tensor::scalar(s);
  if (track({m})) {
    attach(out, {m}, [pm = m.impl(), n](Impl& self) {
      if (self.grad.empty()) return;
      ensure_grad(*pm);
      const double d0 = self.grad[0];
      for (std::size_t i = 0; i < n; ++i) pm->grad[i] += d0;
    });
  }
  return out;
}

Tensor mean_over_rows(const Tensor& m) {
  const std::size_t r = m.rows(), c = m.cols();
  Tensor out(1, c);
  for (std::size_t i = 0; i < r; ++i) kernels::add(out.data(), out.data(), m.data() + i * c, c);
  kernels::scale(out.data(), out.data(), 1.0 / static_cast<double>(r), c);
  if (track({m})) {
    attach(out, {m}, [pm = m.impl(), r, c](Impl& self) {
      if (self.grad.empty()) return;
      ensure_grad(*pm);
      const double inv = 1.0 / static_cast<double>(r);
      for (std::size_t i = 0; i < r; ++i)
        kernels::axpy(pm->grad.data() + i * c, self.grad.data(), inv, c);
    });
  }
  return out;
}

Tensor reshape(const Tensor& m, std::size_t rows, std::size_t cols) {
  if (rows * cols != m.size())
    throw DimError("reshape: " + std::to_string(m.rows()) + "x" + std::to_string(m.cols()) +
                   " to " + std::to_string(rows) + "x" + std::to_string(cols));
  Tensor out(rows, cols, std::vector<double>(m.data(), m.data() + m.size()));
  if (track({m})) {
    attach(out, {m}, [pm = m.impl()](Impl& self) {
      if (self.grad.empty()) return;
      ensure_grad(*pm);
      kernels::axpy(pm->grad.data(), self.grad.data(), 1.0, self.grad.size());
    });
  }
  return out;
}

Tensor slice_rows(const Tensor& m, std::size_t r0, std::size_t r1) {
  if (r0 >= r1 || r1 > m.rows())
    throw IndexError("slice_rows: [" + std::to_string(r0) + "," + std::to_string(r1) +
                     ") of " + std::to_string(m.rows()) + " rows");
  const std::size_t c = m.cols(), rr = r1 - r0;
  Tensor out(rr, c,
             std::vector<double>(m.data() + r0 * c, m.data() + r1 * c));
  if (track({m})) {
    attach(out, {m}, [pm = m.impl(), r0, rr, c](Impl& self) {
      if (self.grad.empty()) return;
      ensure_grad(*pm);
      kernels::axpy(pm->grad.data() + r0 * c, self.grad.data(), 1.0, rr * c);
    });
  }
  return out;
}

Tensor slice_cols(const Tensor& m, std::size_t c0, std::size_t c1) {
  if (c0 >= c1 || c1 > m.cols())
    throw IndexError("slice_cols: [" + std::to_string(c0) + "," + std::to_string(c1) +
                     ") of " + std::to_string(m.cols()) + " cols");
  const std::size_t r = m.rows(), c = m.cols(), cc = c1 - c0;
  Tensor out(r, cc);
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < cc; ++j) out.data()[i * cc + j] = m.data()[i * c + c0 + j];
  if (track({m})) {
    attach(out, {m}, [pm = m.impl(), c0, r, c, cc](Impl& self) {
      if (self.grad.empty()) return;
      ensure_grad(*pm);
      for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < cc; ++j)
          pm->grad[i * c + c0 + j] += self.grad[i * cc + j];
    });
  }
  return out;
}

Tensor concat_rows(const std::vector<Tensor>& parts) {
  if (parts.empty()) throw DimError("concat_rows: no parts");
  const std::size_t c = parts[0].cols();
  std::size_t total = 0;
  for (const Tensor& p : parts) {
    if (p.cols() != c)
      throw DimError("concat_rows: " + shape_str(parts[0]) + " vs " + shape_str(p));
    total += p.rows();
  }
  Tensor out(total, c);
  std::size_t off = 0;
  for (const Tensor& p : parts) {
    std::copy(p.data(), p.data() + p.size(), out.data() + off);
    off += p.size();
  }
  bool any = false;
  if (grad_enabled())
    for (const Tensor& p : parts) any = any || p.requires_grad();
  if (any) {
    std::vector<std::shared_ptr<Impl>> impls;
    for (const Tensor& p : parts) impls.push_back(p.impl());
    attach(out, parts, [impls = std::move(impls)](Impl& self) {
      if (self.grad.empty()) return;
      std::size_t off = 0;
      for (const auto& p : impls) {
        const std::size_t n = p->data.size();
        if (p->requires_grad) acc(*p, self.grad.data() + off, 1.0, n);
        off += n;
      }
    });
  }
  return out;
}

Tensor concat_cols(const std::vector<Tensor>& parts) {
  if (parts.empty()) throw DimError("concat_cols: no parts");
  const std::size_t r = parts[0].rows();
  std::size_t total = 0;
  for (const Tensor& p : parts) {
    if (p.rows() != r)
      throw DimError("concat_cols: " + shape_str(parts[0]) + " vs " + shape_str(p));
    total += p.cols();
  }
  Tensor out(r, total);
  std::size_t off = 0;
  for (const Tensor& p : parts) {
    for (std::size_t i = 0; i < r; ++i)
      std::copy(p.data() + i * p.cols(), p.data() + (i + 1) * p.cols(),
                out.data() + i * total + off);
    off += p.cols();
  }
  bool any = false;
  if (grad_enabled())
    for (const Tensor& p : parts) any = any || p.requires_grad();
  if (any) {
    std::vector<std::shared_ptr<Impl>> impls;
    for (const Tensor& p : parts) impls.push_back(p.impl());
    attach(out, parts, [impls = std::move(impls), r, total](Impl& self) {
      if (self.grad.empty()) return;
      std::size_t off = 0;
      for (const auto& p : impls) {
        const std::size_t pc = p->data.size() / r;
        if (p->requires_grad) {
          ensure_grad(*p);
          for (std::size_t i = 0; i < r; ++i)
            kernels::axpy(p->grad.data() + i * pc, self.grad.data() + i * total + off, 1.0, pc);
        }
        off += pc;
      }
    });
  }
  return out;
}

Tensor gather_rows(const Tensor& m, const std::vector<std::size_t>& idx) {
  if (idx.empty()) throw DimError("gather_rows: empty index list");
  const std::size_t c = m.cols();
  for (std::size_t i : idx)
    if (i >= m.rows())
      throw IndexError("gather_rows: index " + std::to_string(i) + " out of range for " +
                       std::to_string(m.rows()) + " rows");
  Tensor out(idx.size(), c);
  for (std::size_t i = 0; i < idx.size(); ++i)
    std::copy(m.data() + idx[i] * c, m.data() + (idx[i] + 1) * c, out.data() + i * c);
  if (track({m})) {
    attach(out, {m}, [pm = m.impl(), idx, c](Impl& self) {
      if (self.grad.empty()) return;
      ensure_grad(*pm);
      for (std::size_t i = 0; i < idx.size(); ++i)
        kernels::axpy(pm->grad.data() + idx[i] * c, self.grad.data() + i * c, 1.0, c);
    });
  }
  return out;
}

std::size_t frame_count(std::size_t length, std::size_t kernel, std::size_t stride) {
  if (kernel == 0 || stride == 0)
    throw ValidationError("frame_count: kernel and stride must be >= 1");
  if (length < kernel) return 0;
  return (length - kernel) / stride + 1;
}

Tensor frame_stack(const Tensor& m, std::size_t kernel, std::size_t stride) {
  const std::size_t rows = m.rows(), c = m.cols();
  const std::size_t t = frame_count(rows, kernel, stride);
  if (t == 0)
    throw DimError("frame_stack: " + std::to_string(rows) + " rows < kernel " +
                   std::to_string(kernel));
  const std::size_t w = kernel * c;
  Tensor out(t, w);
  for (std::size_t i = 0; i < t; ++i)
    std::copy(m.data() + i * stride * c, m.data() + (i * stride + kernel) * c,
              out.data() + i * w);
  if (track({m})) {
    attach(out, {m}, [pm = m.impl(), t, c, w, stride](Impl& self) {
      if (self.grad.empty()) return;
      ensure_grad(*pm);
      for (std::size_t i = 0; i < t; ++i)
        kernels::axpy(pm->grad.data() + i * stride * c, self.grad.data() + i * w, 1.0, w);
    });
  }
  return out;
}

Tensor dropout(const Tensor& x, double p, Rng& rng, bool training) {
  if (p < 0.0 || p >= 1.0) throw ValidationError("dropout: p must be in [0,1)");
  if (!training || p == 0.0) return x;
  const std::size_t n = x.size();
  const double inv = 1.0 / (1.0 - p);
  std::vector<double> mask(n);
  for (std::size_t i = 0; i < n; ++i) mask[i] = rng.uniform() >= p ? inv : 0.0;
  Tensor out(x.rows(), x.cols());
  kernels::mul(out.data(), x.data(), mask.data(), n);
  if (track({x})) {
    attach(out, {x}, [px = x.impl(), mask = std::move(mask), n](Impl& self) {
      if (self.grad.empty()) return;
      ensure_grad(*px);
      for (std::size_t i = 0; i < n; ++i) px->grad[i] += mask[i] * self.grad[i];
    });
  }
  return out;
}

Tensor cross_entropy_mean(const Tensor& logits, const std::vector<std::size_t>& labels) {
  const std::size_t n = logits.rows(), c = logits.cols();
  if (labels.size() != n)
    throw DimError("cross_entropy: " + std::to_string(labels.size()) + " labels for " +
                   std::to_string(n) + " rows");
  for (std::size_t l : labels)
    if (l >= c)
      throw IndexError("label " + std::to_string(l) + " out of range for " + std::to_string(c) +
                       " classes");
  std::vector<double> w(n * c);
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double* row = logits.data() + i * c;
    double mx = row[0];
    for (std::size_t j = 1; j < c; ++j) mx = std::max(mx, row[j]);
    double sum = 0.0;
    for (std::size_t j = 0; j < c; ++j) {
      w[i * c + j] = std::exp(row[j] - mx);
      sum += w[i * c + j];
    }
    for (std::size_t j = 0; j < c; ++j) w[i * c + j] /= sum;
    total += mx + std::log(sum) - row[labels[i]];
  }
  Tensor out = Tensor::scalar(total / static_cast<double>(n));
  if (track({logits})) {
    attach(out, {logits}, [pl = logits.impl(), w = std::move(w), labels, n, c](Impl& self) {
      if (self.grad.empty()) return;
      ensure_grad(*pl);
      const double d0 = self.grad[0] / static_cast<double>(n);
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < c; ++j) {
          const double delta = (j == labels[i]) ? 1.0 : 0.0;
          pl->grad[i * c + j] += (w[i * c + j] - delta) * d0;
        }
      }
    });
  }
  return out;
}

Tensor cross_entropy(const Tensor& logits, std::size_t label) {
  if (logits.rows() != 1)
    throw DimError("cross_entropy: logits must be a single row, got " + shape_str(logits));
  return cross_entropy_mean(logits, {label});
}

Tensor randn(std::size_t rows, std::size_t cols, Rng& rng, double sd, bool requires_grad) {
  Tensor t(rows, cols, requires_grad);
  for (std::size_t i = 0; i < t.size(); ++i) t.data()[i] = rng.normal() * sd;
  return t;
}

}  // namespace beats::ops
