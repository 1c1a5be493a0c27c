// Differentiable tensor operations. Forward values go through the kernels
// layer where a data-parallel loop exists; each op records a backward closure
// on the output node.
#pragma once

#include <cstddef>
#include <vector>

#include "beats/rng.hpp"
#include "beats/tensor.hpp"

namespace beats::ops {

Tensor matmul(const Tensor& a, const Tensor& b);
Tensor transpose(const Tensor& a);

Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double s);
Tensor add_const(const Tensor& a, double c);
Tensor add_rowvec(const Tensor& m, const Tensor& v);  // v: 1 x cols, added to every row
Tensor add_colvec(const Tensor& m, const Tensor& v);  // v: rows x 1, added to every column

Tensor gelu(const Tensor& x, bool tanh_approx = false);
Tensor exp_(const Tensor& x);
Tensor log_(const Tensor& x);

Tensor softmax_rows(const Tensor& m);
Tensor layer_norm(const Tensor& x, const Tensor& gain, const Tensor& bias, double eps = 1e-5);
Tensor logsumexp_rows(const Tensor& m);  // rows x 1
Tensor logsumexp_cols(const Tensor& m);  // 1 x cols

Tensor sum_all(const Tensor& m);
Tensor mean_over_rows(const Tensor& m);  // 1 x cols

Tensor reshape(const Tensor& m, std::size_t rows, std::size_t cols);  // same element count
Tensor slice_rows(const Tensor& m, std::size_t r0, std::size_t r1);
Tensor slice_cols(const Tensor& m, std::size_t c0, std::size_t c1);
Tensor concat_rows(const std::vector<Tensor>& parts);
Tensor concat_cols(const std::vector<Tensor>& parts);
Tensor gather_rows(const Tensor& m, const std::vector<std::size_t>& idx);

// Sliding-window gather over rows: out[t] = rows [t*stride, t*stride+kernel)
// flattened. Input L x C, output T x (kernel*C) with T = frame_count(L).
Tensor frame_stack(const Tensor& m, std::size_t kernel, std::size_t stride);
std::size_t frame_count(std::size_t length, std::size_t kernel, std::size_t stride);

Tensor dropout(const Tensor& x, double p, Rng& rng, bool training);

Tensor cross_entropy(const Tensor& logits, std::size_t label);  // logits 1 x C
Tensor cross_entropy_mean(const Tensor& logits, const std::vector<std::size_t>& labels);

Tensor randn(std::size_t rows, std::size_t cols, Rng& rng, double sd = 1.0,
             bool requires_grad = false);

}  // namespace beats::ops
