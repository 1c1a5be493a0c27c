#pragma once

#include <cstdint>
#include <vector>

#include "beats/encoders.hpp"
#include "beats/rng.hpp"
#include "beats/tensor.hpp"

namespace beats {

// Entropic-regularized transport between uniform marginals (1/n rows, 1/p
// columns). plan stays on the autodiff tape; the residual bookkeeping is
// plain bookkeeping.
struct TransportPlan {
  Tensor plan;            // n x p, entries >= 0, total mass 1
  double epsilon = 0.0;
  double residual = 0.0;  // max marginal violation at exit
  bool converged = false;
  std::vector<double> residual_history;  // one entry per completed sweep
};

// Log-domain Sinkhorn, iterations unrolled through the tape so gradients flow
// into the cost. Stops when the residual drops below tol or after max_iter
// sweeps (converged=false in that case). A sweep is one row-dual update plus
// one column-dual update.
TransportPlan sinkhorn(const Tensor& cost, double epsilon, double tol, std::size_t max_iter);

// Brute-force exact OT between uniform marginals: with both marginals uniform
// the extreme couplings are scaled permutation matrices, so enumerating all
// n! permutations is exact. Ties keep the lexicographically first permutation.
struct ExactPlan {
  Tensor plan;  // (1/n) * permutation matrix
  double cost = 0.0;
};
ExactPlan exact_ot_oracle(const Tensor& cost);  // square, n <= 6

// Transport-weighted set pooling against learned references: cost is the
// negative scaled dot-product similarity, and output row j = p * sum_i
// plan[i,j] * feature_i, so a uniform plan puts the feature mean in every
// slot. embedding is the row-major flattening of the p x d pooled matrix.
struct OtkResult {
  Tensor embedding;  // 1 x (p*d)
  TransportPlan plan;
};
OtkResult otk_pool(const Tensor& features, const Tensor& refs, double epsilon, double tol,
                   std::size_t max_iter);

Tensor make_reference_set(std::size_t p, std::size_t d, Rng& rng);  // p x d, sd 1/sqrt(d)

// [CLS, audio frames + audio type embedding, text tokens + text type
// embedding]; boundary is the index of the first text row.
struct FusedSequence {
  Tensor values;  // (1 + T_a + T_t) x d
  std::size_t boundary = 0;
};

struct FusionParams {
  Tensor cls;         // 1 x d
  Tensor type_audio;  // 1 x d
  Tensor type_text;   // 1 x d
  std::vector<BlockParams> blocks;
};

FusionParams make_fusion_params(std::size_t d, std::size_t ff, std::size_t blocks, Rng& rng);

FusedSequence concat_with_cls(const Tensor& audio, const Tensor& text, const FusionParams& p);

// Runs the blocks over the fused sequence and returns the CLS position's
// output feature (1 x d).
Tensor fusion_transformer(const FusedSequence& f, const FusionParams& p, std::size_t heads,
                          ForwardCtx* ctx = nullptr);

void visit_params(FusionParams& p, const std::string& prefix, const ParamVisitor& fn);

}  // namespace beats
