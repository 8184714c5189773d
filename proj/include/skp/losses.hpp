#pragma once

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <string_view>

#include "skp/error.hpp"

namespace skp {

inline constexpr double kProbabilityFloor = 1e-12;
inline constexpr double kDefaultAlpha = 0.6;

enum class InfoNceVariant {
  paper,     // denominator sums only the N-1 in-batch negatives
  standard,  // denominator also includes the positive pair
};

enum class NegativeSource {
  positives,  // n_j = positive representation of batch member j
  originals,  // n_j = original representation of batch member j
};

inline InfoNceVariant parse_infonce_variant(std::string_view name) {
  if (name == "paper") return InfoNceVariant::paper;
  if (name == "standard") return InfoNceVariant::standard;
  throw ArgumentError("unknown InfoNCE variant '" + std::string(name) + "'");
}

inline std::string_view to_string(InfoNceVariant v) {
  return v == InfoNceVariant::paper ? "paper" : "standard";
}

/// Masked-token negative log-likelihood, -sum log P(x_m), un-normalized.
/// Entries are floored at kProbabilityFloor before the log.
template <typename Derived>
typename Derived::Scalar mlm_loss(const Eigen::DenseBase<Derived>& probs) {
  using Scalar = typename Derived::Scalar;
  if (probs.size() == 0) throw ArgumentError("mlm_loss: no masked tokens");
  if (!((probs.derived().array() >= Scalar(0)) && (probs.derived().array() <= Scalar(1))).all())
    throw ArgumentError("mlm_loss: probabilities must lie in [0, 1]");
  return -probs.derived().array().max(Scalar(kProbabilityFloor)).log().sum();
}

template <typename DerivedU, typename DerivedV>
typename DerivedU::Scalar cosine_similarity(const Eigen::MatrixBase<DerivedU>& u,
                                            const Eigen::MatrixBase<DerivedV>& v) {
  using Scalar = typename DerivedU::Scalar;
  if (u.size() != v.size()) throw ArgumentError("cosine_similarity: dimension mismatch");
  const Scalar nu = u.norm();
  const Scalar nv = v.norm();
  if (nu == Scalar(0) || nv == Scalar(0)) throw ArgumentError("cosine_similarity: zero vector");
  const Scalar c = u.dot(v) / (nu * nv);
  return std::clamp(c, Scalar(-1), Scalar(1));
}

namespace detail {

template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, Eigen::Dynamic> unit_rows(
    const Eigen::MatrixBase<Derived>& m, const char* what) {
  using Scalar = typename Derived::Scalar;
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> out = m;
  if (!out.allFinite()) throw ArgumentError(std::string("infonce_loss: non-finite entry in ") + what);
  for (Eigen::Index i = 0; i < out.rows(); ++i) {
    const Scalar n = out.row(i).norm();
    if (n == Scalar(0)) throw ArgumentError(std::string("infonce_loss: zero row in ") + what);
    out.row(i) /= n;
  }
  return out;
}

}  // namespace detail

/// In-batch InfoNCE over cosine similarity.
///
/// Row i of `originals` is pulled toward row i of `positives` and pushed
/// from the other batch members' representations (their positives by
/// default). Under InfoNceVariant::paper the positive pair is absent from
/// the denominator, so the loss can be negative.
template <typename DerivedO, typename DerivedP>
typename DerivedO::Scalar infonce_loss(const Eigen::MatrixBase<DerivedO>& originals,
                                       const Eigen::MatrixBase<DerivedP>& positives,
                                       typename DerivedO::Scalar tau,
                                       InfoNceVariant variant = InfoNceVariant::paper,
                                       NegativeSource negatives = NegativeSource::positives) {
  using Scalar = typename DerivedO::Scalar;
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  const Eigen::Index n = originals.rows();
  if (n < 2) throw ArgumentError("infonce_loss: need at least 2 examples per batch");
  if (positives.rows() != n || positives.cols() != originals.cols())
    throw ArgumentError("infonce_loss: originals and positives differ in shape");
  if (!(tau > Scalar(0))) throw ArgumentError("infonce_loss: tau must be positive");

  const Matrix o = detail::unit_rows(originals, "originals");
  const Matrix p = detail::unit_rows(positives, "positives");
  const Matrix pos_sim = o * p.transpose();
  const Matrix neg_sim = negatives == NegativeSource::positives ? pos_sim : Matrix(o * o.transpose());

  Scalar total(0);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Scalar pos = pos_sim(i, i) / tau;
    Scalar max_logit = variant == InfoNceVariant::standard ? pos : -std::numeric_limits<Scalar>::infinity();
    for (Eigen::Index j = 0; j < n; ++j)
      if (j != i) max_logit = std::max(max_logit, neg_sim(i, j) / tau);
    Scalar sum = variant == InfoNceVariant::standard ? std::exp(pos - max_logit) : Scalar(0);
    for (Eigen::Index j = 0; j < n; ++j)
      if (j != i) sum += std::exp(neg_sim(i, j) / tau - max_logit);
    total += (max_logit + std::log(sum)) - pos;
  }
  return total / static_cast<Scalar>(n);
}

template <typename Scalar = double>
struct LossReport {
  Scalar l_mlm;
  Scalar l_c;
  Scalar l_joint;
  Scalar alpha;
};

/// alpha * l_mlm + (1 - alpha) * l_c, alpha in [0, 1].
template <typename Scalar>
LossReport<Scalar> joint_loss(Scalar l_mlm, Scalar l_c, Scalar alpha = Scalar(kDefaultAlpha)) {
  if (!(alpha >= Scalar(0) && alpha <= Scalar(1))) throw ArgumentError("joint_loss: alpha must lie in [0, 1]");
  Scalar joint;
  if (alpha == Scalar(1))
    joint = l_mlm;
  else if (alpha == Scalar(0))
    joint = l_c;
  else
    joint = alpha * l_mlm + (Scalar(1) - alpha) * l_c;
  return {l_mlm, l_c, joint, alpha};
}

}  // namespace skp
