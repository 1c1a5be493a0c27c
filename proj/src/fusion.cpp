#include "beats/fusion.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

#include "beats/errors.hpp"
#include "beats/ops.hpp"

namespace beats {
namespace {

using ops::add_colvec;
using ops::add_const;
using ops::add_rowvec;
using ops::concat_rows;
using ops::exp_;
using ops::logsumexp_cols;
using ops::logsumexp_rows;
using ops::matmul;
using ops::reshape;
using ops::scale;
using ops::slice_rows;
using ops::transpose;

// Marginal residual of the plan implied by the current duals, computed off
// the tape: plan_ij = exp(m_ij + u_i + v_j) with m = -cost/epsilon.
double dual_residual(const Tensor& m, const Tensor& u, const Tensor& v) {
  const std::size_t n = m.rows(), p = m.cols();
  double worst = 0.0;
  std::vector<double> col_sum(p, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    double row_sum = 0.0;
    for (std::size_t j = 0; j < p; ++j) {
      double e = std::exp(m.at(i, j) + u.at(i, 0) + v.at(0, j));
      row_sum += e;
      col_sum[j] += e;
    }
    worst = std::max(worst, std::abs(row_sum - 1.0 / static_cast<double>(n)));
  }
  for (std::size_t j = 0; j < p; ++j)
    worst = std::max(worst, std::abs(col_sum[j] - 1.0 / static_cast<double>(p)));
  return worst;
}

}  // namespace

TransportPlan sinkhorn(const Tensor& cost, double epsilon, double tol, std::size_t max_iter) {
  if (!(epsilon > 0.0)) throw ValidationError("sinkhorn: epsilon must be > 0");
  if (!(tol > 0.0)) throw ValidationError("sinkhorn: tol must be > 0");
  if (max_iter == 0) throw ValidationError("sinkhorn: max_iter must be >= 1");
  if (!cost.all_finite()) throw ValidationError("sinkhorn: cost has non-finite entries");

  const std::size_t n = cost.rows(), p = cost.cols();
  const double log_a = std::log(1.0 / static_cast<double>(n));
  const double log_b = std::log(1.0 / static_cast<double>(p));

  Tensor m = scale(cost, -1.0 / epsilon);  // n x p
  Tensor u;                                // n x 1 row duals (scaled by 1/epsilon)
  Tensor v = Tensor::zeros(1, p);          // 1 x p column duals

  TransportPlan out;
  out.epsilon = epsilon;
  for (std::size_t it = 0; it < max_iter; ++it) {
    u = add_const(scale(logsumexp_rows(add_rowvec(m, v)), -1.0), log_a);
    v = add_const(scale(logsumexp_cols(add_colvec(m, u)), -1.0), log_b);
    if (!u.all_finite() || !v.all_finite())
      throw NumericError("sinkhorn: non-finite scaling at epsilon=" + std::to_string(epsilon));
    out.residual = dual_residual(m, u, v);
    out.residual_history.push_back(out.residual);
    if (out.residual < tol) {
      out.converged = true;
      break;
    }
  }
  out.plan = exp_(add_colvec(add_rowvec(m, v), u));
  return out;
}

ExactPlan exact_ot_oracle(const Tensor& cost) {
  const std::size_t n = cost.rows();
  if (cost.cols() != n)
    throw DimError("exact OT oracle needs a square cost, got " + std::to_string(n) + "x" +
                   std::to_string(cost.cols()));
  if (n > 6)
    throw ValidationError("exact OT oracle refuses n=" + std::to_string(n) + " (max 6)");
  if (!cost.all_finite()) throw ValidationError("exact OT oracle: non-finite cost");

  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  std::vector<std::size_t> best = perm;
  double best_cost = std::numeric_limits<double>::infinity();
  do {
    double c = 0.0;
    for (std::size_t i = 0; i < n; ++i) c += cost.at(i, perm[i]);
    c /= static_cast<double>(n);
    if (c < best_cost) {
      best_cost = c;
      best = perm;
    }
  } while (std::next_permutation(perm.begin(), perm.end()));

  ExactPlan out;
  out.plan = Tensor::zeros(n, n);
  for (std::size_t i = 0; i < n; ++i) out.plan.at(i, best[i]) = 1.0 / static_cast<double>(n);
  out.cost = best_cost;
  return out;
}

OtkResult otk_pool(const Tensor& features, const Tensor& refs, double epsilon, double tol,
                   std::size_t max_iter) {
  if (features.cols() != refs.cols())
    throw DimError("otk_pool: feature width " + std::to_string(features.cols()) +
                   " vs reference width " + std::to_string(refs.cols()));
  const std::size_t d = features.cols(), p = refs.rows();
  Tensor cost =
      scale(matmul(features, transpose(refs)), -1.0 / std::sqrt(static_cast<double>(d)));
  OtkResult out;
  out.plan = sinkhorn(cost, epsilon, tol, max_iter);
  Tensor pooled = scale(matmul(transpose(out.plan.plan), features), static_cast<double>(p));
  out.embedding = reshape(pooled, 1, p * d);
  return out;
}

Tensor make_reference_set(std::size_t p, std::size_t d, Rng& rng) {
  if (p == 0 || d == 0) throw ValidationError("reference set needs p >= 1 and d >= 1");
  std::vector<double> v(p * d);
  const double s = 1.0 / std::sqrt(static_cast<double>(d));
  for (double& x : v) x = rng.normal(0.0, s);
  return Tensor(p, d, std::move(v), true);
}

FusionParams make_fusion_params(std::size_t d, std::size_t ff, std::size_t blocks, Rng& rng) {
  FusionParams p;
  const double s = 1.0 / std::sqrt(static_cast<double>(d));
  std::vector<double> cls(d), ta(d), tt(d);
  for (double& x : cls) x = rng.normal(0.0, s);
  for (double& x : ta) x = rng.normal(0.0, s);
  for (double& x : tt) x = rng.normal(0.0, s);
  p.cls = Tensor(1, d, std::move(cls), true);
  p.type_audio = Tensor(1, d, std::move(ta), true);
  p.type_text = Tensor(1, d, std::move(tt), true);
  for (std::size_t i = 0; i < blocks; ++i) p.blocks.push_back(make_block_params(d, ff, rng));
  return p;
}

FusedSequence concat_with_cls(const Tensor& audio, const Tensor& text, const FusionParams& p) {
  if (audio.cols() != text.cols() || audio.cols() != p.cls.cols())
    throw DimError("concat_with_cls: widths " + std::to_string(audio.cols()) + " (audio), " +
                   std::to_string(text.cols()) + " (text), " + std::to_string(p.cls.cols()) +
                   " (cls)");
  FusedSequence f;
  f.values = concat_rows(
      {p.cls, add_rowvec(audio, p.type_audio), add_rowvec(text, p.type_text)});
  f.boundary = 1 + audio.rows();
  return f;
}

Tensor fusion_transformer(const FusedSequence& f, const FusionParams& p, std::size_t heads,
                          ForwardCtx* ctx) {
  Tensor x = f.values;
  for (const BlockParams& block : p.blocks) x = self_attention_block(x, block, heads, ctx);
  return slice_rows(x, 0, 1);
}

void visit_params(FusionParams& p, const std::string& prefix, const ParamVisitor& fn) {
  fn(prefix + ".cls", p.cls);
  fn(prefix + ".type_audio", p.type_audio);
  fn(prefix + ".type_text", p.type_text);
  for (std::size_t i = 0; i < p.blocks.size(); ++i)
    visit_params(p.blocks[i], prefix + ".block" + std::to_string(i), fn);
}

}  // namespace beats
