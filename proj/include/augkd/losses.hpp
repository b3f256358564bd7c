#pragma once

#include <cmath>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "augkd/joint_label.hpp"
#include "augkd/tensor.hpp"

namespace augkd::losses {

// Probability / cross-entropy / distillation losses over logit bundles.
//
// Conventions, fixed project-wide:
//  - every loss is an arithmetic mean over the batch dimension; sums over
//    branches l and views j are written out as in the loss definitions;
//  - KL mimicry terms are D_KL(target || learner) * tau^2, with the target
//    side treated as a constant (no gradient ever flows to it);
//  - log-softmax uses max-subtraction; inner math runs in double.

struct Taus {
  double tau_ce = 1.0;  // cross-entropy temperature
  double tau_kd = 3.0;  // KL mimicry temperature

  void validate() const {
    if (!(tau_ce > 0) || !(tau_kd > 0))
      throw std::invalid_argument("Taus: temperatures must be positive");
  }
};

// Per-forward logits of one network: backbone outputs for all M views plus
// per-branch head outputs. q is the joint-space head; mu/scpd are the
// ablation heads and stay empty unless configured.
template <typename T>
struct LogitsBundle {
  Tensor<T> p;     // [M,B,N]
  Tensor<T> q;     // [L,M,B,N*M]
  Tensor<T> mu;    // [L,M,B,M]
  Tensor<T> scpd;  // [L,B,N]
  int L = 0, M = 0, B = 0, N = 0;
};

template <typename T>
struct BundleGrad {
  Tensor<T> p, q, mu, scpd;

  static BundleGrad like(const LogitsBundle<T>& b) {
    BundleGrad g;
    g.p = Tensor<T>(b.p.shape());
    if (!b.q.empty()) g.q = Tensor<T>(b.q.shape());
    if (!b.mu.empty()) g.mu = Tensor<T>(b.mu.shape());
    if (!b.scpd.empty()) g.scpd = Tensor<T>(b.scpd.shape());
    return g;
  }
};

using Components = std::map<std::string, double>;

namespace detail {

template <typename T>
void check_finite(const Tensor<T>& t, const char* what) {
  for (int64_t i = 0; i < t.numel(); ++i)
    if (!std::isfinite(static_cast<double>(t[i])))
      throw std::invalid_argument(std::string(what) + ": non-finite logit");
}

// log-softmax of one row at temperature tau; returns log-probs in `logp`.
template <typename T>
inline void row_log_softmax(const T* z, int K, double tau, double* logp) {
  double m = -1e300;
  for (int k = 0; k < K; ++k) m = std::max(m, static_cast<double>(z[k]) / tau);
  double s = 0;
  for (int k = 0; k < K; ++k) {
    logp[k] = static_cast<double>(z[k]) / tau - m;
    s += std::exp(logp[k]);
  }
  const double lse = std::log(s);
  for (int k = 0; k < K; ++k) logp[k] -= lse;
}

// Mean-over-rows cross-entropy on a [B,K] block. If dz is non-null, the
// gradient of (gscale * loss) is accumulated into it.
template <typename T>
double ce_block(const T* z, int B, int K, const int* labels, double tau, T* dz, double gscale) {
  std::vector<double> logp(static_cast<size_t>(K));
  double total = 0;
  for (int b = 0; b < B; ++b) {
    const int y = labels[b];
    if (y < 0 || y >= K)
      throw std::invalid_argument("cross_entropy: label " + std::to_string(y) + " out of [0," +
                                  std::to_string(K) + ")");
    const T* zb = z + static_cast<int64_t>(b) * K;
    row_log_softmax(zb, K, tau, logp.data());
    total -= logp[static_cast<size_t>(y)];
    if (dz) {
      T* db = dz + static_cast<int64_t>(b) * K;
      const double coef = gscale / (tau * static_cast<double>(B));
      for (int k = 0; k < K; ++k) {
        double p = std::exp(logp[static_cast<size_t>(k)]);
        db[k] += static_cast<T>(coef * (p - (k == y ? 1.0 : 0.0)));
      }
    }
  }
  return total / static_cast<double>(B);
}

// Mean-over-rows KL(target || learner) at temperature tau on [B,K] blocks,
// without the tau^2 factor. Gradient of (gscale * value) w.r.t. the learner
// logits is accumulated into ds when non-null; the target side is constant.
template <typename T>
double kl_block(const T* zt, const T* zs, int B, int K, double tau, T* ds, double gscale) {
  std::vector<double> lpt(static_cast<size_t>(K)), lps(static_cast<size_t>(K));
  double total = 0;
  for (int b = 0; b < B; ++b) {
    const T* tb = zt + static_cast<int64_t>(b) * K;
    const T* sb = zs + static_cast<int64_t>(b) * K;
    row_log_softmax(tb, K, tau, lpt.data());
    row_log_softmax(sb, K, tau, lps.data());
    double kl = 0;
    for (int k = 0; k < K; ++k)
      kl += std::exp(lpt[static_cast<size_t>(k)]) * (lpt[static_cast<size_t>(k)] - lps[static_cast<size_t>(k)]);
    total += kl;
    if (ds) {
      T* db = ds + static_cast<int64_t>(b) * K;
      const double coef = gscale / (tau * static_cast<double>(B));
      for (int k = 0; k < K; ++k)
        db[k] += static_cast<T>(
            coef * (std::exp(lps[static_cast<size_t>(k)]) - std::exp(lpt[static_cast<size_t>(k)])));
    }
  }
  return total / static_cast<double>(B);
}

inline void require(bool ok, const std::string& msg) {
  if (!ok) throw std::invalid_argument(msg);
}

}  // namespace detail

/// Softmax over the last dimension at temperature tau.
template <typename T>
Tensor<T> tempered_softmax(const Tensor<T>& logits, double tau) {
  if (!(tau > 0)) throw std::invalid_argument("tempered_softmax: tau must be positive");
  if (logits.ndim() < 1) throw std::invalid_argument("tempered_softmax: rank-0 input");
  detail::check_finite(logits, "tempered_softmax");
  const int K = logits.dim(logits.ndim() - 1);
  const int64_t rows = logits.numel() / K;
  Tensor<T> out(logits.shape());
  std::vector<double> logp(static_cast<size_t>(K));
  for (int64_t r = 0; r < rows; ++r) {
    detail::row_log_softmax(logits.data() + r * K, K, tau, logp.data());
    for (int k = 0; k < K; ++k)
      out[r * K + k] = static_cast<T>(std::exp(logp[static_cast<size_t>(k)]));
  }
  return out;
}

/// Mean-over-batch cross-entropy; logits [B,K], labels in [0,K).
/// If dlogits is non-null it is resized and assigned the gradient.
template <typename T>
double cross_entropy(const Tensor<T>& logits, const std::vector<int>& labels, double tau,
                     Tensor<T>* dlogits = nullptr) {
  if (!(tau > 0)) throw std::invalid_argument("cross_entropy: tau must be positive");
  detail::require(logits.ndim() == 2, "cross_entropy: logits must be [B,K]");
  const int B = logits.dim(0), K = logits.dim(1);
  detail::require(static_cast<int>(labels.size()) == B, "cross_entropy: labels size != B");
  if (dlogits) *dlogits = Tensor<T>(logits.shape());
  return detail::ce_block(logits.data(), B, K, labels.data(), tau,
                          dlogits ? dlogits->data() : nullptr, 1.0);
}

/// Mean-over-batch KL(teacher || student) at temperature tau, no tau^2
/// factor. Exposed so the tau^2 weighting of kd_kl is testable.
template <typename T>
double kl_mean(const Tensor<T>& teacher_logits, const Tensor<T>& student_logits, double tau) {
  if (!(tau > 0)) throw std::invalid_argument("kl_mean: tau must be positive");
  detail::require(teacher_logits.ndim() == 2 && teacher_logits.same_shape(student_logits),
                  "kl_mean: teacher/student logits must both be [B,K] with equal shapes");
  return detail::kl_block(teacher_logits.data(), student_logits.data(), teacher_logits.dim(0),
                          teacher_logits.dim(1), tau, static_cast<T*>(nullptr), 1.0);
}

/// tau^2-weighted batch-mean KL(teacher || student). The teacher is a
/// constant: dteacher, when requested, is zero-filled by contract.
template <typename T>
double kd_kl(const Tensor<T>& teacher_logits, const Tensor<T>& student_logits, double tau,
             Tensor<T>* dstudent = nullptr, Tensor<T>* dteacher = nullptr) {
  if (!(tau > 0)) throw std::invalid_argument("kd_kl: tau must be positive");
  detail::require(teacher_logits.ndim() == 2 && teacher_logits.same_shape(student_logits),
                  "kd_kl: shape mismatch between teacher and student logits");
  if (dstudent) *dstudent = Tensor<T>(student_logits.shape());
  if (dteacher) *dteacher = Tensor<T>(teacher_logits.shape());
  const double kl = detail::kl_block(teacher_logits.data(), student_logits.data(),
                                     teacher_logits.dim(0), teacher_logits.dim(1), tau,
                                     dstudent ? dstudent->data() : nullptr, tau * tau);
  return tau * tau * kl;
}

/// Primary task loss: cross-entropy on the untransformed view's backbone
/// logits [B,N] at tau_ce.
template <typename T>
double loss_task(const Tensor<T>& p_logits_view0, const std::vector<int>& labels,
                 const Taus& taus, Tensor<T>* dlogits = nullptr) {
  taus.validate();
  return cross_entropy(p_logits_view0, labels, taus.tau_ce, dlogits);
}

/// Joint-space auxiliary loss: (1/M) sum_j sum_l CE(q[l,j], (y,j)).
template <typename T>
double loss_aux_ssad(const Tensor<T>& q_logits, const std::vector<int>& labels, int N, int M,
                     const Taus& taus, Tensor<T>* dq = nullptr) {
  taus.validate();
  detail::require(q_logits.ndim() == 4, "loss_aux_ssad: q_logits must be [L,M,B,N*M]");
  const int L = q_logits.dim(0), Mv = q_logits.dim(1), B = q_logits.dim(2), K = q_logits.dim(3);
  detail::require(Mv == M, "loss_aux_ssad: view dimension != M");
  detail::require(K == N * M, "loss_aux_ssad: head width != N*M");
  detail::require(static_cast<int>(labels.size()) == B, "loss_aux_ssad: labels size != B");
  if (dq) *dq = Tensor<T>(q_logits.shape());
  std::vector<int> joint(static_cast<size_t>(B));
  double total = 0;
  const int64_t block = static_cast<int64_t>(B) * K;
  for (int j = 0; j < M; ++j) {
    for (int b = 0; b < B; ++b) joint[static_cast<size_t>(b)] = joint::encode(labels[static_cast<size_t>(b)], j, N, M);
    for (int l = 0; l < L; ++l) {
      const int64_t off = (static_cast<int64_t>(l) * M + j) * block;
      total += detail::ce_block(q_logits.data() + off, B, K, joint.data(), taus.tau_ce,
                                dq ? dq->data() + off : nullptr, 1.0 / M) /
               M;
    }
  }
  return total;
}

/// Supervised auxiliary loss on untransformed-view branch heads:
/// sum_l CE(scpd[l], y).
template <typename T>
double loss_aux_scpd(const Tensor<T>& scpd_logits, const std::vector<int>& labels,
                     const Taus& taus, Tensor<T>* dscpd = nullptr) {
  taus.validate();
  detail::require(scpd_logits.ndim() == 3, "loss_aux_scpd: scpd_logits must be [L,B,N]");
  const int L = scpd_logits.dim(0), B = scpd_logits.dim(1), N = scpd_logits.dim(2);
  detail::require(static_cast<int>(labels.size()) == B, "loss_aux_scpd: labels size != B");
  if (dscpd) *dscpd = Tensor<T>(scpd_logits.shape());
  double total = 0;
  const int64_t block = static_cast<int64_t>(B) * N;
  for (int l = 0; l < L; ++l) {
    const int64_t off = static_cast<int64_t>(l) * block;
    total += detail::ce_block(scpd_logits.data() + off, B, N, labels.data(), taus.tau_ce,
                              dscpd ? dscpd->data() + off : nullptr, 1.0);
  }
  return total;
}

/// Transform-classification auxiliary loss: (1/M) sum_j sum_l CE(mu[l,j], j).
template <typename T>
double loss_aux_sscpd(const Tensor<T>& mu_logits, const Taus& taus, Tensor<T>* dmu = nullptr) {
  taus.validate();
  detail::require(mu_logits.ndim() == 4, "loss_aux_sscpd: mu_logits must be [L,M,B,M]");
  const int L = mu_logits.dim(0), M = mu_logits.dim(1), B = mu_logits.dim(2), K = mu_logits.dim(3);
  detail::require(K == M, "loss_aux_sscpd: head width != M");
  if (dmu) *dmu = Tensor<T>(mu_logits.shape());
  double total = 0;
  const int64_t block = static_cast<int64_t>(B) * K;
  std::vector<int> lab(static_cast<size_t>(B));
  for (int j = 0; j < M; ++j) {
    std::fill(lab.begin(), lab.end(), j);
    for (int l = 0; l < L; ++l) {
      const int64_t off = (static_cast<int64_t>(l) * M + j) * block;
      total += detail::ce_block(mu_logits.data() + off, B, K, lab.data(), taus.tau_ce,
                                dmu ? dmu->data() + off : nullptr, 1.0 / M) /
               M;
    }
  }
  return total;
}

struct MultitaskLoss {
  double total = 0, scpd = 0, sscpd = 0;
};

/// Dual-head auxiliary loss: loss_aux_scpd + loss_aux_sscpd.
template <typename T>
MultitaskLoss loss_aux_multitask(const Tensor<T>& scpd_logits, const Tensor<T>& mu_logits,
                                 const std::vector<int>& labels, const Taus& taus,
                                 Tensor<T>* dscpd = nullptr, Tensor<T>* dmu = nullptr) {
  MultitaskLoss out;
  out.scpd = loss_aux_scpd(scpd_logits, labels, taus, dscpd);
  out.sscpd = loss_aux_sscpd(mu_logits, taus, dmu);
  out.total = out.scpd + out.sscpd;
  return out;
}

/// One-to-one branch mimicry: (1/M) sum_j sum_l kd_kl(qT[l,j], qS[l,j]).
template <typename T>
double loss_kl_q_offline(const Tensor<T>& q_teacher, const Tensor<T>& q_student, const Taus& taus,
                         Tensor<T>* dq_student = nullptr) {
  taus.validate();
  detail::require(q_teacher.ndim() == 4 && q_teacher.same_shape(q_student),
                  "loss_kl_q_offline: teacher/student q bundles must match in [L,M,B,N*M]");
  const int L = q_teacher.dim(0), M = q_teacher.dim(1), B = q_teacher.dim(2), K = q_teacher.dim(3);
  if (dq_student) *dq_student = Tensor<T>(q_student.shape());
  const double tau = taus.tau_kd;
  double total = 0;
  const int64_t block = static_cast<int64_t>(B) * K;
  for (int l = 0; l < L; ++l)
    for (int j = 0; j < M; ++j) {
      const int64_t off = (static_cast<int64_t>(l) * M + j) * block;
      total += tau * tau *
               detail::kl_block(q_teacher.data() + off, q_student.data() + off, B, K, tau,
                                dq_student ? dq_student->data() + off : nullptr,
                                tau * tau / M) /
               M;
    }
  return total;
}

/// Backbone-distribution mimicry across all views:
/// (1/M) sum_j kd_kl(pT[j], pS[j]).
template <typename T>
double loss_kl_p_offline(const Tensor<T>& p_teacher, const Tensor<T>& p_student, const Taus& taus,
                         Tensor<T>* dp_student = nullptr) {
  taus.validate();
  detail::require(p_teacher.ndim() == 3 && p_teacher.same_shape(p_student),
                  "loss_kl_p_offline: teacher/student p bundles must match in [M,B,N]");
  const int M = p_teacher.dim(0), B = p_teacher.dim(1), N = p_teacher.dim(2);
  if (dp_student) *dp_student = Tensor<T>(p_student.shape());
  const double tau = taus.tau_kd;
  double total = 0;
  const int64_t block = static_cast<int64_t>(B) * N;
  for (int j = 0; j < M; ++j) {
    const int64_t off = static_cast<int64_t>(j) * block;
    total += tau * tau *
             detail::kl_block(p_teacher.data() + off, p_student.data() + off, B, N, tau,
                              dp_student ? dp_student->data() + off : nullptr, tau * tau / M) /
             M;
  }
  return total;
}

template <typename T>
struct OfflineLossResult {
  double total = 0;
  Components components;      // task, kl_q, kl_p
  BundleGrad<T> grad;         // w.r.t. the student bundle
};

/// Student objective under a frozen teacher: task + KL_q + KL_p, unweighted.
template <typename T>
OfflineLossResult<T> loss_offline_student(const LogitsBundle<T>& student,
                                          const LogitsBundle<T>& teacher,
                                          const std::vector<int>& labels, const Taus& taus,
                                          bool want_grad = true) {
  taus.validate();
  detail::require(student.q.ndim() == 4 && teacher.q.ndim() == 4,
                  "loss_offline_student: both bundles need joint-space heads");
  detail::require(teacher.q.same_shape(student.q),
                  "loss_offline_student: branch count or view count mismatch "
                  "between teacher and student");
  detail::require(teacher.p.same_shape(student.p),
                  "loss_offline_student: backbone logits shape mismatch");

  OfflineLossResult<T> out;
  if (want_grad) out.grad = BundleGrad<T>::like(student);

  const int B = student.p.dim(1), N = student.p.dim(2);
  // task CE sees only view 0; gradient goes into the view-0 slice of p.
  Tensor<T> p0({B, N});
  std::copy(student.p.data(), student.p.data() + static_cast<int64_t>(B) * N, p0.data());
  Tensor<T> dp0;
  const double task = loss_task(p0, labels, taus, want_grad ? &dp0 : nullptr);

  Tensor<T> dq, dp;
  const double klq =
      loss_kl_q_offline(teacher.q, student.q, taus, want_grad ? &dq : nullptr);
  const double klp =
      loss_kl_p_offline(teacher.p, student.p, taus, want_grad ? &dp : nullptr);

  if (want_grad) {
    out.grad.q = std::move(dq);
    out.grad.p = std::move(dp);
    for (int64_t i = 0; i < dp0.numel(); ++i) out.grad.p[i] += dp0[i];
  }
  out.components["task"] = task;
  out.components["kl_q"] = klq;
  out.components["kl_p"] = klp;
  out.total = task + klq + klp;
  return out;
}

template <typename T>
struct OnlineLossResult {
  double total = 0;
  std::vector<Components> per_network;  // task, aux_ssad, kl_q, kl_p per peer
  std::vector<BundleGrad<T>> grads;
};

/// Cohort objective: per-peer task + joint-space auxiliary CE, plus both
/// directions of KL mimicry for every pair. Each directed term updates only
/// its learner; the target bundle is a constant.
template <typename T>
OnlineLossResult<T> loss_online(const std::vector<LogitsBundle<T>>& bundles,
                                const std::vector<int>& labels, const Taus& taus,
                                bool want_grad = true) {
  taus.validate();
  const int K = static_cast<int>(bundles.size());
  detail::require(K >= 2, "loss_online: need at least two peer networks");
  const int M = bundles[0].M, N = bundles[0].N, L = bundles[0].L;
  for (const auto& b : bundles) {
    detail::require(b.N == N && b.M == M, "loss_online: peers disagree on N or M");
    detail::require(b.L == L, "loss_online: peers disagree on branch count L");
    detail::require(b.q.ndim() == 4, "loss_online: every peer needs joint-space heads");
  }

  OnlineLossResult<T> out;
  out.per_network.resize(static_cast<size_t>(K));
  if (want_grad)
    for (const auto& b : bundles) out.grads.push_back(BundleGrad<T>::like(b));

  const int B = bundles[0].p.dim(1);
  for (int k = 0; k < K; ++k) {
    const auto& bk = bundles[static_cast<size_t>(k)];
    Tensor<T> p0({B, N});
    std::copy(bk.p.data(), bk.p.data() + static_cast<int64_t>(B) * N, p0.data());
    Tensor<T> dp0, dq;
    const double task = loss_task(p0, labels, taus, want_grad ? &dp0 : nullptr);
    const double aux =
        loss_aux_ssad(bk.q, labels, N, M, taus, want_grad ? &dq : nullptr);
    double klq = 0, klp = 0;
    Tensor<T> dklq, dklp;
    if (want_grad) {
      dklq = Tensor<T>(bk.q.shape());
      dklp = Tensor<T>(bk.p.shape());
    }
    for (int o = 0; o < K; ++o) {
      if (o == k) continue;
      const auto& bo = bundles[static_cast<size_t>(o)];
      Tensor<T> g;
      klq += loss_kl_q_offline(bo.q, bk.q, taus, want_grad ? &g : nullptr);
      if (want_grad)
        for (int64_t i = 0; i < g.numel(); ++i) dklq[i] += g[i];
      Tensor<T> gp;
      klp += loss_kl_p_offline(bo.p, bk.p, taus, want_grad ? &gp : nullptr);
      if (want_grad)
        for (int64_t i = 0; i < gp.numel(); ++i) dklp[i] += gp[i];
    }
    if (want_grad) {
      auto& gk = out.grads[static_cast<size_t>(k)];
      gk.q = std::move(dq);
      for (int64_t i = 0; i < dklq.numel(); ++i) gk.q[i] += dklq[i];
      gk.p = std::move(dklp);
      for (int64_t i = 0; i < dp0.numel(); ++i) gk.p[i] += dp0[i];
    }
    auto& comp = out.per_network[static_cast<size_t>(k)];
    comp["task"] = task;
    comp["aux_ssad"] = aux;
    comp["kl_q"] = klq;
    comp["kl_p"] = klp;
    out.total += task + aux + klq + klp;
  }
  return out;
}

}  // namespace augkd::losses
