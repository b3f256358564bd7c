#include <cmath>
#include <random>

#include "augkd/joint_label.hpp"
#include "augkd/losses.hpp"
#include "doctest.h"

using namespace augkd;
using losses::Taus;

// ---------------------------------------------------------------------------
// Independent scalar oracles: plain double loops, no shared helpers with the
// library implementation.
namespace oracle {

std::vector<double> softmax(const std::vector<double>& z, double tau) {
  std::vector<double> p(z.size());
  double m = z[0] / tau;
  for (double v : z) m = std::max(m, v / tau);
  double s = 0;
  for (size_t i = 0; i < z.size(); ++i) s += (p[i] = std::exp(z[i] / tau - m));
  for (auto& v : p) v /= s;
  return p;
}

// mean over batch of -log p[label]
double ce(const std::vector<std::vector<double>>& logits, const std::vector<int>& labels,
          double tau) {
  double total = 0;
  for (size_t b = 0; b < logits.size(); ++b) {
    auto p = softmax(logits[b], tau);
    total -= std::log(p[static_cast<size_t>(labels[b])]);
  }
  return total / static_cast<double>(logits.size());
}

// mean over batch of KL(pT || pS), no tau^2
double kl(const std::vector<std::vector<double>>& t, const std::vector<std::vector<double>>& s,
          double tau) {
  double total = 0;
  for (size_t b = 0; b < t.size(); ++b) {
    auto pt = softmax(t[b], tau);
    auto ps = softmax(s[b], tau);
    for (size_t k = 0; k < pt.size(); ++k) total += pt[k] * (std::log(pt[k]) - std::log(ps[k]));
  }
  return total / static_cast<double>(t.size());
}

}  // namespace oracle

namespace {

using TD = Tensor<double>;

std::mt19937_64 g_rng(2024);

TD random_tensor(std::vector<int> shape, double lo = -2.0, double hi = 2.0) {
  TD t(std::move(shape));
  std::uniform_real_distribution<double> dist(lo, hi);
  for (int64_t i = 0; i < t.numel(); ++i) t[i] = dist(g_rng);
  return t;
}

std::vector<int> random_labels(int B, int N) {
  std::vector<int> y(static_cast<size_t>(B));
  for (auto& v : y) v = static_cast<int>(g_rng() % static_cast<uint64_t>(N));
  return y;
}

// rows of a [B,K] tensor as a vector-of-vectors for the oracle
std::vector<std::vector<double>> rows(const TD& t) {
  const int B = t.dim(0), K = t.dim(1);
  std::vector<std::vector<double>> out(static_cast<size_t>(B),
                                       std::vector<double>(static_cast<size_t>(K)));
  for (int b = 0; b < B; ++b)
    for (int k = 0; k < K; ++k) out[static_cast<size_t>(b)][static_cast<size_t>(k)] = t(b, k);
  return out;
}

// rows of block (l,j) in a [L,M,B,K] tensor
std::vector<std::vector<double>> block_rows(const TD& t, int l, int j) {
  const int B = t.dim(2), K = t.dim(3);
  std::vector<std::vector<double>> out(static_cast<size_t>(B),
                                       std::vector<double>(static_cast<size_t>(K)));
  for (int b = 0; b < B; ++b)
    for (int k = 0; k < K; ++k)
      out[static_cast<size_t>(b)][static_cast<size_t>(k)] = t(l, j, b, k);
  return out;
}

std::vector<std::vector<double>> view_rows(const TD& t, int j) {
  const int B = t.dim(1), K = t.dim(2);
  std::vector<std::vector<double>> out(static_cast<size_t>(B),
                                       std::vector<double>(static_cast<size_t>(K)));
  for (int b = 0; b < B; ++b)
    for (int k = 0; k < K; ++k) out[static_cast<size_t>(b)][static_cast<size_t>(k)] = t(j, b, k);
  return out;
}

losses::LogitsBundle<double> random_bundle(int L, int M, int B, int N) {
  losses::LogitsBundle<double> bd;
  bd.L = L;
  bd.M = M;
  bd.B = B;
  bd.N = N;
  bd.p = random_tensor({M, B, N});
  bd.q = random_tensor({L, M, B, N * M});
  return bd;
}

// central finite difference of `fn` w.r.t. every element of `x`
template <typename Fn>
void fd_check(TD& x, const TD& analytic, Fn fn, double step = 1e-4, double tol = 1e-4) {
  REQUIRE(analytic.shape() == x.shape());
  for (int64_t i = 0; i < x.numel(); ++i) {
    const double orig = x[i];
    x[i] = orig + step;
    const double up = fn();
    x[i] = orig - step;
    const double down = fn();
    x[i] = orig;
    const double fd = (up - down) / (2 * step);
    const double scale = std::max({1.0, std::abs(fd), std::abs(analytic[i])});
    CHECK(std::abs(fd - analytic[i]) <= tol * scale);
  }
}

}  // namespace

TEST_CASE("tempered_softmax: closed forms and invariances") {
  TD zeros({1, 5});
  auto u = losses::tempered_softmax(zeros, 1.0);
  for (int k = 0; k < 5; ++k) CHECK(u(0, k) == doctest::Approx(0.2).epsilon(1e-12));

  TD two({1, 2});
  two(0, 1) = std::log(4.0);
  auto p1 = losses::tempered_softmax(two, 1.0);
  CHECK(p1(0, 0) == doctest::Approx(0.2).epsilon(1e-12));
  CHECK(p1(0, 1) == doctest::Approx(0.8).epsilon(1e-12));
  auto p2 = losses::tempered_softmax(two, 2.0);
  CHECK(p2(0, 0) == doctest::Approx(1.0 / 3).epsilon(1e-12));
  CHECK(p2(0, 1) == doctest::Approx(2.0 / 3).epsilon(1e-12));

  // adding a constant to a row changes nothing
  TD z = random_tensor({3, 7});
  auto base = losses::tempered_softmax(z, 1.7);
  TD shifted = z;
  for (int b = 0; b < 3; ++b)
    for (int k = 0; k < 7; ++k) shifted(b, k) += 123.0;
  auto moved = losses::tempered_softmax(shifted, 1.7);
  for (int64_t i = 0; i < base.numel(); ++i)
    CHECK(moved[i] == doctest::Approx(base[i]).epsilon(1e-12));
  // rows sum to one
  for (int b = 0; b < 3; ++b) {
    double s = 0;
    for (int k = 0; k < 7; ++k) s += base(b, k);
    CHECK(s == doctest::Approx(1.0).epsilon(1e-12));
  }

  CHECK_THROWS_AS(losses::tempered_softmax(z, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(losses::tempered_softmax(z, -1.0), std::invalid_argument);
  TD bad({1, 2});
  bad(0, 0) = std::numeric_limits<double>::infinity();
  CHECK_THROWS_AS(losses::tempered_softmax(bad, 1.0), std::invalid_argument);
  bad(0, 0) = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(losses::tempered_softmax(bad, 1.0), std::invalid_argument);
}

TEST_CASE("cross_entropy: frozen values, oracle, gradient") {
  TD sym({1, 2});
  CHECK(losses::cross_entropy(sym, {0}, 1.0) == doctest::Approx(std::log(2.0)).epsilon(1e-12));

  TD sat({1, 3});
  sat(0, 1) = 1000.0;
  CHECK(losses::cross_entropy(sat, {1}, 1.0) == doctest::Approx(0.0).epsilon(1e-9));

  TD z = random_tensor({3, 5});
  auto y = random_labels(3, 5);
  const double got = losses::cross_entropy(z, y, 1.0);
  CHECK(got == doctest::Approx(oracle::ce(rows(z), y, 1.0)).epsilon(1e-9));

  CHECK_THROWS_AS(losses::cross_entropy(z, {0, 1, 5}, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(losses::cross_entropy(z, {0, 1, -1}, 1.0), std::invalid_argument);

  TD grad;
  losses::cross_entropy(z, y, 1.4, &grad);
  fd_check(z, grad, [&] { return losses::cross_entropy(z, y, 1.4); });
}

TEST_CASE("kd_kl: frozen value, tau^2 weighting, stop gradient") {
  TD a = random_tensor({2, 6});
  CHECK(losses::kd_kl(a, a, 3.0) == doctest::Approx(0.0).epsilon(1e-12));

  TD t({1, 2}), s({1, 2});
  t(0, 0) = 1.0;
  s(0, 1) = 1.0;
  const double e = std::exp(1.0);
  CHECK(losses::kd_kl(t, s, 1.0) == doctest::Approx((e - 1) / (e + 1)).epsilon(1e-9));

  TD x = random_tensor({3, 4}), yv = random_tensor({3, 4});
  for (double tau : {1.0, 2.0, 3.0, 4.0, 5.0}) {
    const double weighted = losses::kd_kl(x, yv, tau);
    const double unweighted = losses::kl_mean(x, yv, tau);
    CHECK(std::abs(weighted - tau * tau * unweighted) <= 1e-12 * std::max(1.0, weighted));
    CHECK(weighted >= 0.0);
  }

  // teacher side is constant: requested teacher gradient is exactly zero
  TD ds, dt;
  losses::kd_kl(x, yv, 3.0, &ds, &dt);
  for (int64_t i = 0; i < dt.numel(); ++i) CHECK(dt[i] == 0.0);
  fd_check(yv, ds, [&] { return losses::kd_kl(x, yv, 3.0); });

  TD wrong({2, 5});
  CHECK_THROWS_AS(losses::kd_kl(x, wrong, 3.0), std::invalid_argument);
}

TEST_CASE("loss_aux_ssad: degenerate, all-zero closed form, loop oracle") {
  Taus taus;

  // L=1, M=1 degenerates to plain cross-entropy over N classes
  TD q({1, 1, 3, 5});
  TD flat({3, 5});
  for (int64_t i = 0; i < flat.numel(); ++i) flat[i] = (q[i] = 0.1 * static_cast<double>(i % 7) - 0.3);
  auto y = random_labels(3, 5);
  CHECK(losses::loss_aux_ssad(q, y, 5, 1, taus) ==
        doctest::Approx(losses::cross_entropy(flat, y, 1.0)).epsilon(1e-12));

  // all-zero logits, L=2, M=4, N=3: (1/M) * M * L * ln(N*M) = 2 ln 12
  TD zeros({2, 4, 2, 12});
  auto y2 = random_labels(2, 3);
  CHECK(losses::loss_aux_ssad(zeros, y2, 3, 4, taus) ==
        doctest::Approx(2.0 * std::log(12.0)).epsilon(1e-12));

  // random instance vs the triple-loop oracle
  const int L = 3, M = 4, B = 2, N = 5;
  TD qq = random_tensor({L, M, B, N * M});
  auto yy = random_labels(B, N);
  double expect = 0;
  for (int j = 0; j < M; ++j) {
    std::vector<int> joint_labels;
    for (int b = 0; b < B; ++b) joint_labels.push_back(yy[static_cast<size_t>(b)] * M + j);
    for (int l = 0; l < L; ++l) expect += oracle::ce(block_rows(qq, l, j), joint_labels, 1.0);
  }
  expect /= M;
  CHECK(losses::loss_aux_ssad(qq, yy, N, M, taus) == doctest::Approx(expect).epsilon(1e-9));

  TD dq;
  losses::loss_aux_ssad(qq, yy, N, M, taus, &dq);
  fd_check(qq, dq, [&] { return losses::loss_aux_ssad(qq, yy, N, M, taus); });

  TD bad({L, M, B, N * M + 1});
  CHECK_THROWS_AS(losses::loss_aux_ssad(bad, yy, N, M, taus), std::invalid_argument);
}

TEST_CASE("loss_aux_scpd: reduction to CE, zeros, oracle") {
  Taus taus;
  TD one({1, 3, 4});
  TD flat({3, 4});
  for (int64_t i = 0; i < flat.numel(); ++i) flat[i] = (one[i] = 0.2 * static_cast<double>(i % 5) - 0.4);
  auto y = random_labels(3, 4);
  CHECK(losses::loss_aux_scpd(one, y, taus) ==
        doctest::Approx(losses::cross_entropy(flat, y, 1.0)).epsilon(1e-12));

  TD zeros({3, 2, 4});
  auto y2 = random_labels(2, 4);
  CHECK(losses::loss_aux_scpd(zeros, y2, taus) ==
        doctest::Approx(3.0 * std::log(4.0)).epsilon(1e-12));

  TD s = random_tensor({2, 3, 6});
  auto y3 = random_labels(3, 6);
  double expect = 0;
  for (int l = 0; l < 2; ++l) {
    std::vector<std::vector<double>> lr(3, std::vector<double>(6));
    for (int b = 0; b < 3; ++b)
      for (int k = 0; k < 6; ++k) lr[static_cast<size_t>(b)][static_cast<size_t>(k)] = s(l, b, k);
    expect += oracle::ce(lr, y3, 1.0);
  }
  CHECK(losses::loss_aux_scpd(s, y3, taus) == doctest::Approx(expect).epsilon(1e-9));
}

TEST_CASE("loss_aux_sscpd: degenerate M=1, zeros, oracle") {
  Taus taus;
  // M=1 reduces to CE with label 0 everywhere
  TD one = random_tensor({2, 1, 3, 1});
  CHECK(losses::loss_aux_sscpd(one, taus) == doctest::Approx(0.0).epsilon(1e-12));

  TD zeros({2, 4, 3, 4});
  CHECK(losses::loss_aux_sscpd(zeros, taus) ==
        doctest::Approx(2.0 * std::log(4.0)).epsilon(1e-12));

  const int L = 2, M = 4, B = 3;
  TD mu = random_tensor({L, M, B, M});
  double expect = 0;
  for (int j = 0; j < M; ++j) {
    std::vector<int> lab(static_cast<size_t>(B), j);
    for (int l = 0; l < L; ++l) expect += oracle::ce(block_rows(mu, l, j), lab, 1.0);
  }
  expect /= M;
  CHECK(losses::loss_aux_sscpd(mu, taus) == doctest::Approx(expect).epsilon(1e-9));

  TD dmu;
  losses::loss_aux_sscpd(mu, taus, &dmu);
  fd_check(mu, dmu, [&] { return losses::loss_aux_sscpd(mu, taus); });

  TD bad({L, M, B, M + 2});
  CHECK_THROWS_AS(losses::loss_aux_sscpd(bad, taus), std::invalid_argument);
}

TEST_CASE("loss_aux_multitask is the exact sum of its parts") {
  Taus taus;
  TD scpd = random_tensor({2, 3, 5});
  TD mu = random_tensor({2, 4, 3, 4});
  auto y = random_labels(3, 5);
  auto mt = losses::loss_aux_multitask(scpd, mu, y, taus);
  CHECK(mt.scpd == doctest::Approx(losses::loss_aux_scpd(scpd, y, taus)).epsilon(1e-12));
  CHECK(mt.sscpd == doctest::Approx(losses::loss_aux_sscpd(mu, taus)).epsilon(1e-12));
  CHECK(mt.total == doctest::Approx(mt.scpd + mt.sscpd).epsilon(1e-12));

  TD zs({2, 3, 5}), zm({2, 4, 3, 4});
  auto z = losses::loss_aux_multitask(zs, zm, y, taus);
  CHECK(z.total ==
        doctest::Approx(2.0 * std::log(5.0) + 2.0 * std::log(4.0)).epsilon(1e-12));
}

TEST_CASE("loss_kl_q_offline: zero at equality, degenerate, oracle, pairing") {
  Taus taus;  // tau_kd 3
  TD q = random_tensor({2, 4, 3, 8});
  CHECK(losses::loss_kl_q_offline(q, q, taus) == doctest::Approx(0.0).epsilon(1e-12));

  TD t1 = random_tensor({1, 1, 3, 6}), s1 = random_tensor({1, 1, 3, 6});
  TD t1f({3, 6}), s1f({3, 6});
  for (int64_t i = 0; i < t1f.numel(); ++i) {
    t1f[i] = t1[i];
    s1f[i] = s1[i];
  }
  CHECK(losses::loss_kl_q_offline(t1, s1, taus) ==
        doctest::Approx(losses::kd_kl(t1f, s1f, taus.tau_kd)).epsilon(1e-12));

  const int L = 2, M = 4, B = 3, K = 8;
  TD qt = random_tensor({L, M, B, K}), qs = random_tensor({L, M, B, K});
  double expect = 0;
  for (int l = 0; l < L; ++l)
    for (int j = 0; j < M; ++j)
      expect += 9.0 * oracle::kl(block_rows(qt, l, j), block_rows(qs, l, j), 3.0);
  expect /= M;
  CHECK(losses::loss_kl_q_offline(qt, qs, taus) == doctest::Approx(expect).epsilon(1e-9));

  TD dqs;
  losses::loss_kl_q_offline(qt, qs, taus, &dqs);
  fd_check(qs, dqs, [&] { return losses::loss_kl_q_offline(qt, qs, taus); });

  TD mismatch = random_tensor({L + 1, M, B, K});
  CHECK_THROWS_AS(losses::loss_kl_q_offline(mismatch, qs, taus), std::invalid_argument);
}

TEST_CASE("loss_kl_p_offline: zero at equality, view-0 restriction is vanilla KD") {
  Taus taus;
  TD p = random_tensor({4, 3, 5});
  CHECK(losses::loss_kl_p_offline(p, p, taus) == doctest::Approx(0.0).epsilon(1e-12));

  // M=1 reduces to the plain logit-distillation KL term
  TD t1 = random_tensor({1, 3, 5}), s1 = random_tensor({1, 3, 5});
  TD tf({3, 5}), sf({3, 5});
  for (int64_t i = 0; i < tf.numel(); ++i) {
    tf[i] = t1[i];
    sf[i] = s1[i];
  }
  CHECK(losses::loss_kl_p_offline(t1, s1, taus) ==
        doctest::Approx(losses::kd_kl(tf, sf, taus.tau_kd)).epsilon(1e-12));

  const int M = 4, B = 3, N = 5;
  TD pt = random_tensor({M, B, N}), ps = random_tensor({M, B, N});
  double expect = 0;
  for (int j = 0; j < M; ++j) expect += 9.0 * oracle::kl(view_rows(pt, j), view_rows(ps, j), 3.0);
  expect /= M;
  CHECK(losses::loss_kl_p_offline(pt, ps, taus) == doctest::Approx(expect).epsilon(1e-9));

  TD dps;
  losses::loss_kl_p_offline(pt, ps, taus, &dps);
  fd_check(ps, dps, [&] { return losses::loss_kl_p_offline(pt, ps, taus); });
}

TEST_CASE("loss_offline_student: assembly, components, gradient") {
  Taus taus;
  const int L = 2, M = 4, B = 3, N = 4;
  auto student = random_bundle(L, M, B, N);
  auto y = random_labels(B, N);

  // identical teacher and student: mimicry vanishes, only the task term stays
  auto same = losses::loss_offline_student(student, student, y, taus);
  TD p0({B, N});
  for (int b = 0; b < B; ++b)
    for (int k = 0; k < N; ++k) p0(b, k) = student.p(0, b, k);
  CHECK(same.components["kl_q"] == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(same.components["kl_p"] == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(same.total == doctest::Approx(losses::cross_entropy(p0, y, 1.0)).epsilon(1e-12));

  auto teacher = random_bundle(L, M, B, N);
  auto res = losses::loss_offline_student(student, teacher, y, taus);
  const double comp_sum =
      res.components["task"] + res.components["kl_q"] + res.components["kl_p"];
  CHECK(res.total == doctest::Approx(comp_sum).epsilon(1e-12));
  const double expect = losses::cross_entropy(p0, y, 1.0) +
                        losses::loss_kl_q_offline(teacher.q, student.q, taus) +
                        losses::loss_kl_p_offline(teacher.p, student.p, taus);
  CHECK(res.total == doctest::Approx(expect).epsilon(1e-12));

  // gradients against central differences (teacher constant)
  fd_check(student.q, res.grad.q, [&] {
    return losses::loss_offline_student(student, teacher, y, taus, false).total;
  });
  fd_check(student.p, res.grad.p, [&] {
    return losses::loss_offline_student(student, teacher, y, taus, false).total;
  });

  auto wrong = random_bundle(L + 1, M, B, N);
  CHECK_THROWS_AS(losses::loss_offline_student(student, wrong, y, taus), std::invalid_argument);
}

TEST_CASE("loss_online: identical peers, counting, stop gradient, gradient") {
  Taus taus;
  const int L = 2, M = 4, B = 2, N = 3;
  auto y = random_labels(B, N);

  // K=2 with identical bundles: mimicry terms vanish
  auto b0 = random_bundle(L, M, B, N);
  std::vector<losses::LogitsBundle<double>> twin{b0, b0};
  auto res_same = losses::loss_online(twin, y, taus);
  TD p0({B, N});
  for (int b = 0; b < B; ++b)
    for (int k = 0; k < N; ++k) p0(b, k) = b0.p(0, b, k);
  const double task = losses::cross_entropy(p0, y, 1.0);
  const double aux = losses::loss_aux_ssad(b0.q, y, N, M, taus);
  CHECK(res_same.total == doctest::Approx(2 * (task + aux)).epsilon(1e-12));
  for (const auto& comp : res_same.per_network) {
    CHECK(comp.at("kl_q") == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(comp.at("kl_p") == doctest::Approx(0.0).epsilon(1e-12));
  }

  // K=3: the total must equal the fully expanded directed-pair sum
  std::vector<losses::LogitsBundle<double>> peers;
  for (int k = 0; k < 3; ++k) peers.push_back(random_bundle(L, M, B, N));
  auto res = losses::loss_online(peers, y, taus);
  double expect = 0;
  int directed_terms = 0;
  for (int k = 0; k < 3; ++k) {
    TD pk({B, N});
    for (int b = 0; b < B; ++b)
      for (int c = 0; c < N; ++c) pk(b, c) = peers[static_cast<size_t>(k)].p(0, b, c);
    expect += losses::cross_entropy(pk, y, 1.0) +
              losses::loss_aux_ssad(peers[static_cast<size_t>(k)].q, y, N, M, taus);
    for (int o = 0; o < 3; ++o) {
      if (o == k) continue;
      expect += losses::loss_kl_q_offline(peers[static_cast<size_t>(o)].q,
                                          peers[static_cast<size_t>(k)].q, taus);
      expect += losses::loss_kl_p_offline(peers[static_cast<size_t>(o)].p,
                                          peers[static_cast<size_t>(k)].p, taus);
      ++directed_terms;
    }
  }
  CHECK(directed_terms == 6);  // 2*C(3,2) directed pairs, each with L*M q-terms
  CHECK(res.total == doctest::Approx(expect).epsilon(1e-10));

  // Per-peer gradient equals the gradient of (own terms + terms where the
  // peer is a learner); target-side terms contribute nothing.
  const auto& gk = res.grads[1];
  auto learner_view = [&](void) {
    double v = 0;
    TD pk({B, N});
    for (int b = 0; b < B; ++b)
      for (int c = 0; c < N; ++c) pk(b, c) = peers[1].p(0, b, c);
    v += losses::cross_entropy(pk, y, 1.0);
    v += losses::loss_aux_ssad(peers[1].q, y, N, M, taus);
    for (int o : {0, 2}) {
      v += losses::loss_kl_q_offline(peers[static_cast<size_t>(o)].q, peers[1].q, taus);
      v += losses::loss_kl_p_offline(peers[static_cast<size_t>(o)].p, peers[1].p, taus);
    }
    return v;
  };
  fd_check(peers[1].q, gk.q, learner_view);
  fd_check(peers[1].p, gk.p, learner_view);

  // perturbing a target's logits changes the value of the directed term but
  // its own gradient from that term is zero: the analytic gradient of peer 1
  // must be independent of whether peer 0 treats it as a target
  std::vector<losses::LogitsBundle<double>> pair01{peers[0], peers[1]};
  auto only_pair = losses::loss_online(pair01, y, taus);
  auto perturbed = pair01;
  perturbed[1].q(0, 0, 0, 0) += 0.5;
  auto res_pert = losses::loss_online(perturbed, y, taus);
  CHECK(res_pert.total != doctest::Approx(only_pair.total).epsilon(1e-12));

  std::vector<losses::LogitsBundle<double>> solo{b0};
  CHECK_THROWS_AS(losses::loss_online(solo, y, taus), std::invalid_argument);
  std::vector<losses::LogitsBundle<double>> bad_n{b0, random_bundle(L, M, B, N + 1)};
  CHECK_THROWS_AS(losses::loss_online(bad_n, y, taus), std::invalid_argument);
  std::vector<losses::LogitsBundle<double>> bad_l{b0, random_bundle(L + 1, M, B, N)};
  CHECK_THROWS_AS(losses::loss_online(bad_l, y, taus), std::invalid_argument);
}

TEST_CASE("losses are finite and non-negative on random inputs") {
  Taus taus;
  for (int trial = 0; trial < 25; ++trial) {
    const int L = 1 + static_cast<int>(g_rng() % 3);
    const int M = 1 + static_cast<int>(g_rng() % 6);
    const int B = 1 + static_cast<int>(g_rng() % 4);
    const int N = 2 + static_cast<int>(g_rng() % 4);
    TD q = random_tensor({L, M, B, N * M}, -5, 5);
    auto y = random_labels(B, N);
    const double v = losses::loss_aux_ssad(q, y, N, M, taus);
    CHECK(std::isfinite(v));
    CHECK(v >= 0.0);
    TD qt = random_tensor({L, M, B, N * M}, -5, 5);
    const double kl = losses::loss_kl_q_offline(qt, q, taus);
    CHECK(std::isfinite(kl));
    CHECK(kl >= 0.0);
  }
}
