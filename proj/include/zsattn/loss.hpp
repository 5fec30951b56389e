#ifndef ZSATTN_LOSS_HPP
#define ZSATTN_LOSS_HPP

#include <cmath>
#include <cstddef>
#include <map>
#include <vector>

#include "core.hpp"
#include "dataset.hpp"
#include "model.hpp"

namespace zsattn {

// max(0, delta + y_neg - y_pos)
inline double hinge(double y_pos, double y_neg, double delta) {
  if (delta < 0.0) throw ValidationError("hinge margin delta must be >= 0");
  return std::max(0.0, delta + y_neg - y_pos);
}

// Partial harmonic sum H_rank; 0 for rank 0.
inline double ranking_penalty(std::size_t rank) {
  double b = 0.0;
  for (std::size_t j = 1; j <= rank; ++j) b += 1.0 / static_cast<double>(j);
  return b;
}

struct LossBreakdown {
  double total = 0.0;
  struct PerPositive {
    std::size_t rank = 0;        // 1-based position in the descending sort
    double penalty_weight = 0.0; // beta(rank)/rank
    double pair_losses = 0.0;    // sum of hinge terms against all negatives
  };
  std::map<std::size_t, PerPositive> per_positive;  // keyed by class index
};

namespace detail {

inline void check_positives(std::size_t n_classes, const std::vector<std::size_t>& positives) {
  if (positives.empty())
    throw ValidationError("warp loss: positives must be non-empty");
  std::vector<bool> seen(n_classes, false);
  for (std::size_t p : positives) {
    if (p >= n_classes)
      throw ValidationError("warp loss: positive index " + std::to_string(p) +
                            " out of range");
    if (seen[p]) throw ValidationError("warp loss: duplicate positive index");
    seen[p] = true;
  }
  if (positives.size() == n_classes)
    throw ValidationError("warp loss: positives cover every class, no negatives left");
}

// 1-based rank in the descending score order, ties broken by ascending index.
inline std::size_t rank_of(const Vec& y_hat, std::size_t c) {
  std::size_t r = 1;
  for (std::size_t i = 0; i < y_hat.size(); ++i) {
    if (y_hat[i] > y_hat[c] || (y_hat[i] == y_hat[c] && i < c)) ++r;
  }
  return r;
}

}  // namespace detail

// Deterministic full-pairwise WARP objective for one sample: every positive
// is paired with every negative, and each positive's pair sum is weighted by
// beta(rank)/rank using its global rank among all classes.
inline LossBreakdown warp_loss(const Vec& y_hat, const std::vector<std::size_t>& positives,
                               double delta) {
  detail::check_positives(y_hat.size(), positives);
  std::vector<bool> is_pos(y_hat.size(), false);
  for (std::size_t p : positives) is_pos[p] = true;

  LossBreakdown out;
  for (std::size_t p : positives) {
    LossBreakdown::PerPositive pp;
    pp.rank = detail::rank_of(y_hat, p);
    pp.penalty_weight = ranking_penalty(pp.rank) / static_cast<double>(pp.rank);
    for (std::size_t n = 0; n < y_hat.size(); ++n)
      if (!is_pos[n]) pp.pair_losses += hinge(y_hat[p], y_hat[n], delta);
    out.total += pp.penalty_weight * pp.pair_losses;
    out.per_positive.emplace(p, pp);
  }
  return out;
}

// Exact subgradient of warp_loss w.r.t. the score vector. Penalty weights are
// constants of the current ranking; a hinge sitting exactly at zero
// contributes nothing.
inline Vec warp_grad(const Vec& y_hat, const std::vector<std::size_t>& positives,
                     double delta) {
  detail::check_positives(y_hat.size(), positives);
  std::vector<bool> is_pos(y_hat.size(), false);
  for (std::size_t p : positives) is_pos[p] = true;

  Vec g(y_hat.size(), 0.0);
  for (std::size_t p : positives) {
    std::size_t r = detail::rank_of(y_hat, p);
    double w = ranking_penalty(r) / static_cast<double>(r);
    for (std::size_t n = 0; n < y_hat.size(); ++n) {
      if (is_pos[n]) continue;
      if (delta + y_hat[n] - y_hat[p] > 0.0) {
        g[n] += w;
        g[p] -= w;
      }
    }
  }
  return g;
}

enum class AttentionKind { Softmax, Uniform };

struct BatchItem {
  const AcousticEmbedding* acoustic = nullptr;
  std::vector<std::size_t> positives;  // indices into the training class order
};

struct BatchResult {
  double loss = 0.0;
  ModelParams grads;
};

inline Mat semantic_matrix(const SemanticTable& sems,
                           const std::vector<std::string>& class_order) {
  Mat m(class_order.size(), sems.dim());
  for (std::size_t c = 0; c < class_order.size(); ++c) {
    const Vec& v = sems.at(class_order[c]);
    for (std::size_t j = 0; j < v.size(); ++j) m(c, j) = v[j];
  }
  return m;
}

// Mean WARP loss over the batch and its exact gradient through the attention
// pooling (d y_hat / d s_t = alpha_t * (1 + s_t - y_hat)), the bilinear
// compatibility, and both tanh stacks. Samples whose positives cover every
// training class have no pairs and are skipped. Summation runs in a fixed
// order (batch order, ascending class, ascending segment).
inline BatchResult backward(const ModelParams& p, const Mat& class_sems,
                            const std::vector<BatchItem>& batch, double delta,
                            AttentionKind kind = AttentionKind::Softmax) {
  if (batch.empty()) throw ValidationError("backward: empty batch");
  const std::size_t n_classes = class_sems.rows();
  const std::size_t d = p.dims.d_model;
  const std::size_t hidden = p.dims.d_hidden;
  if (class_sems.cols() != p.dims.f_s)
    throw ValidationError("dimension mismatch: class semantics have dim " +
                          std::to_string(class_sems.cols()) + ", model expects " +
                          std::to_string(p.dims.f_s));

  // Semantic stack forward, once per call; params are fixed within a batch.
  Mat h_all(n_classes, hidden), vc_all(n_classes, d);
  for (std::size_t c = 0; c < n_classes; ++c) {
    for (std::size_t i = 0; i < hidden; ++i) {
      double acc = p.c1[i];
      for (std::size_t j = 0; j < p.dims.f_s; ++j) acc += p.v1(i, j) * class_sems(c, j);
      h_all(c, i) = std::tanh(acc);
    }
    for (std::size_t i = 0; i < d; ++i) {
      double acc = p.c2[i];
      for (std::size_t j = 0; j < hidden; ++j) acc += p.v2(i, j) * h_all(c, j);
      vc_all(c, i) = std::tanh(acc);
    }
  }

  BatchResult res;
  res.grads = ModelParams::zeros(p.dims);
  Mat dvc(n_classes, d);  // d loss / d v_c, accumulated over the batch

  double loss_sum = 0.0;
  for (const BatchItem& item : batch) {
    const AcousticEmbedding& a = *item.acoustic;
    const std::size_t t_len = a.segments();
    Mat vx = project_audio(p, a);

    Mat s(n_classes, t_len);
    for (std::size_t c = 0; c < n_classes; ++c)
      for (std::size_t t = 0; t < t_len; ++t) {
        double acc = 0.0;
        for (std::size_t i = 0; i < d; ++i) acc += vc_all(c, i) * vx(i, t);
        s(c, t) = acc;
      }

    Mat alpha;
    Vec y_hat(n_classes);
    if (kind == AttentionKind::Softmax) {
      alpha = Mat(n_classes, t_len);
      for (std::size_t c = 0; c < n_classes; ++c) {
        Vec row(t_len);
        for (std::size_t t = 0; t < t_len; ++t) row[t] = s(c, t);
        Vec w = attention_weights(row);
        double y = 0.0;
        for (std::size_t t = 0; t < t_len; ++t) {
          alpha(c, t) = w[t];
          y += w[t] * row[t];
        }
        y_hat[c] = y;
      }
    } else {
      for (std::size_t c = 0; c < n_classes; ++c) {
        double sum = 0.0;
        for (std::size_t t = 0; t < t_len; ++t) sum += s(c, t);
        y_hat[c] = sum / static_cast<double>(t_len);
      }
    }

    if (item.positives.size() >= n_classes) continue;  // no negatives, no pairs
    LossBreakdown lb = warp_loss(y_hat, item.positives, delta);
    loss_sum += lb.total;
    Vec g = warp_grad(y_hat, item.positives, delta);

    Mat dvx(d, t_len);
    for (std::size_t c = 0; c < n_classes; ++c) {
      if (g[c] == 0.0) continue;
      for (std::size_t t = 0; t < t_len; ++t) {
        double dy_ds = (kind == AttentionKind::Softmax)
                           ? alpha(c, t) * (1.0 + s(c, t) - y_hat[c])
                           : 1.0 / static_cast<double>(t_len);
        double ds = g[c] * dy_ds;
        if (ds == 0.0) continue;
        for (std::size_t i = 0; i < d; ++i) {
          dvc(c, i) += ds * vx(i, t);
          dvx(i, t) += ds * vc_all(c, i);
        }
      }
    }

    for (std::size_t t = 0; t < t_len; ++t) {
      for (std::size_t i = 0; i < d; ++i) {
        double du = dvx(i, t) * (1.0 - vx(i, t) * vx(i, t));
        if (du == 0.0) continue;
        for (std::size_t j = 0; j < p.dims.f_a; ++j)
          res.grads.w1(i, j) += du * a.values(j, t);
        res.grads.b1[i] += du;
      }
    }
  }

  // Semantic stack backward, once per class over the batch-accumulated dvc.
  Vec dh(hidden);
  for (std::size_t c = 0; c < n_classes; ++c) {
    std::fill(dh.begin(), dh.end(), 0.0);
    for (std::size_t i = 0; i < d; ++i) {
      double dz2 = dvc(c, i) * (1.0 - vc_all(c, i) * vc_all(c, i));
      if (dz2 == 0.0) continue;
      for (std::size_t j = 0; j < hidden; ++j) {
        res.grads.v2(i, j) += dz2 * h_all(c, j);
        dh[j] += p.v2(i, j) * dz2;
      }
      res.grads.c2[i] += dz2;
    }
    for (std::size_t i = 0; i < hidden; ++i) {
      double dz1 = dh[i] * (1.0 - h_all(c, i) * h_all(c, i));
      if (dz1 == 0.0) continue;
      for (std::size_t j = 0; j < p.dims.f_s; ++j)
        res.grads.v1(i, j) += dz1 * class_sems(c, j);
      res.grads.c1[i] += dz1;
    }
  }

  const double inv_n = 1.0 / static_cast<double>(batch.size());
  res.loss = loss_sum * inv_n;
  res.grads.scale(inv_n);
  return res;
}

}  // namespace zsattn

#endif  // ZSATTN_LOSS_HPP
