#include <random>

#include "augkd/losses.hpp"
#include "augkd/nn.hpp"
#include "doctest.h"

using namespace augkd;

namespace {

using TD = Tensor<double>;

TD random_tensor(std::vector<int> shape, uint64_t seed) {
  TD t(std::move(shape));
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  for (int64_t i = 0; i < t.numel(); ++i) t[i] = dist(rng);
  return t;
}

// loss surrogate: weighted sum of outputs, so dL/dy is a fixed tensor
struct WeightedSum {
  TD w;
  explicit WeightedSum(const std::vector<int>& shape) : w(shape) {
    std::mt19937_64 rng(99);
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    for (int64_t i = 0; i < w.numel(); ++i) w[i] = dist(rng);
  }
  double value(const TD& y) const {
    double s = 0;
    for (int64_t i = 0; i < y.numel(); ++i) s += w[i] * y[i];
    return s;
  }
};

// FD over all parameters of a layer plus its input
template <typename Forward>
void fd_params(std::vector<nn::ParamRef<double>>& ps, Forward fwd, const TD& analytic_missing,
               double step = 1e-5, double tol = 2e-5) {
  (void)analytic_missing;
  for (auto& pr : ps) {
    for (int64_t i = 0; i < pr.param->value.numel(); ++i) {
      const double orig = pr.param->value[i];
      pr.param->value[i] = orig + step;
      const double up = fwd();
      pr.param->value[i] = orig - step;
      const double down = fwd();
      pr.param->value[i] = orig;
      const double fd = (up - down) / (2 * step);
      const double got = pr.param->grad[i];
      const double scale = std::max({1.0, std::abs(fd), std::abs(got)});
      CHECK(std::abs(fd - got) <= tol * scale);
    }
  }
}

}  // namespace

TEST_CASE("conv2d: forward matches direct convolution, gradients match FD") {
  nn::Rng rng(5);
  nn::Conv2d<double> conv(2, 3, 3, 1, 1, rng);
  TD x = random_tensor({2, 2, 5, 5}, 7);

  auto y = conv.forward(x, true);
  REQUIRE(y.shape() == std::vector<int>{2, 3, 5, 5});

  // direct convolution oracle on one output element
  std::vector<nn::ParamRef<double>> ps;
  std::vector<nn::BufferRef<double>> bs;
  conv.collect("conv", ps, bs);
  const auto& w = ps[0].param->value;  // [out, in*3*3]
  for (int b = 0; b < 2; ++b)
    for (int o = 0; o < 3; ++o)
      for (int r = 0; r < 5; ++r)
        for (int c = 0; c < 5; ++c) {
          double acc = 0;
          for (int ic = 0; ic < 2; ++ic)
            for (int kr = 0; kr < 3; ++kr)
              for (int kc = 0; kc < 3; ++kc) {
                const int ir = r + kr - 1, icol = c + kc - 1;
                if (ir < 0 || ir >= 5 || icol < 0 || icol >= 5) continue;
                acc += w(o, (ic * 3 + kr) * 3 + kc) * x(b, ic, ir, icol);
              }
          CHECK(y(b, o, r, c) == doctest::Approx(acc).epsilon(1e-10));
        }

  WeightedSum loss(y.shape());
  auto run = [&] { return loss.value(conv.forward(x, false)); };
  ps[0].param->zero_grad();
  conv.forward(x, true);
  TD dx = conv.backward(loss.w);
  fd_params(ps, run, dx);
  // input gradient
  for (int64_t i = 0; i < x.numel(); ++i) {
    const double orig = x[i];
    const double step = 1e-5;
    x[i] = orig + step;
    const double up = run();
    x[i] = orig - step;
    const double down = run();
    x[i] = orig;
    CHECK(dx[i] == doctest::Approx((up - down) / (2 * step)).epsilon(1e-4));
  }
}

TEST_CASE("conv2d stride-2 shape and gradient") {
  nn::Rng rng(6);
  nn::Conv2d<double> conv(3, 4, 3, 2, 1, rng);
  TD x = random_tensor({2, 3, 8, 8}, 11);
  auto y = conv.forward(x, true);
  REQUIRE(y.shape() == std::vector<int>{2, 4, 4, 4});
  WeightedSum loss(y.shape());
  std::vector<nn::ParamRef<double>> ps;
  std::vector<nn::BufferRef<double>> bs;
  conv.collect("conv", ps, bs);
  ps[0].param->zero_grad();
  conv.backward(loss.w);
  auto run = [&] { return loss.value(conv.forward(x, false)); };
  fd_params(ps, run, x);
}

TEST_CASE("batchnorm: train-mode normalization and gradients") {
  nn::BatchNorm2d<double> bn(3);
  TD x = random_tensor({4, 3, 3, 3}, 13);
  auto y = bn.forward(x, true, true, false);
  // per-channel output mean ~0, var ~1 (gamma=1, beta=0 at init)
  for (int c = 0; c < 3; ++c) {
    double mean = 0, var = 0;
    for (int b = 0; b < 4; ++b)
      for (int r = 0; r < 3; ++r)
        for (int col = 0; col < 3; ++col) mean += y(b, c, r, col);
    mean /= 36;
    for (int b = 0; b < 4; ++b)
      for (int r = 0; r < 3; ++r)
        for (int col = 0; col < 3; ++col) {
          const double d = y(b, c, r, col) - mean;
          var += d * d;
        }
    var /= 36;
    CHECK(mean == doctest::Approx(0.0).epsilon(1e-9));
    CHECK(var == doctest::Approx(1.0).epsilon(1e-3));  // eps shifts it slightly
  }

  std::vector<nn::ParamRef<double>> ps;
  std::vector<nn::BufferRef<double>> bs;
  bn.collect("bn", ps, bs);
  // make gamma/beta non-trivial
  ps[0].param->value(1) = 1.7;
  ps[1].param->value(2) = -0.4;

  WeightedSum loss(y.shape());
  auto run = [&] { return loss.value(bn.forward(x, true, false, false)); };
  for (auto& p : ps) p.param->zero_grad();
  bn.forward(x, true, true, false);
  TD dx = bn.backward(loss.w);
  fd_params(ps, run, dx, 1e-5, 5e-5);
  for (int64_t i = 0; i < x.numel(); ++i) {
    const double orig = x[i];
    const double step = 1e-5;
    x[i] = orig + step;
    const double up = run();
    x[i] = orig - step;
    const double down = run();
    x[i] = orig;
    const double fd = (up - down) / (2 * step);
    CHECK(dx[i] == doctest::Approx(fd).epsilon(2e-4));
  }
}

TEST_CASE("batchnorm: eval mode uses running statistics and update flag works") {
  nn::BatchNorm2d<double> bn(2);
  TD x = random_tensor({3, 2, 4, 4}, 21);
  std::vector<nn::ParamRef<double>> ps;
  std::vector<nn::BufferRef<double>> bs;
  bn.collect("bn", ps, bs);
  const TD rm_before = *bs[0].value;
  bn.forward(x, true, false, false);  // update_running off
  for (int64_t i = 0; i < rm_before.numel(); ++i) CHECK((*bs[0].value)[i] == rm_before[i]);
  bn.forward(x, true, false, true);  // now update
  CHECK((*bs[0].value)[0] != rm_before[0]);

  // eval forward is a per-sample affine map independent of batch composition
  auto y_all = bn.forward(x, false, false, false);
  TD x0({1, 2, 4, 4});
  std::copy(x.data(), x.data() + x0.numel(), x0.data());
  auto y0 = bn.forward(x0, false, false, false);
  for (int64_t i = 0; i < y0.numel(); ++i) CHECK(y0[i] == doctest::Approx(y_all[i]).epsilon(1e-12));
}

TEST_CASE("linear and global average pooling gradients") {
  nn::Rng rng(31);
  nn::Linear<double> fc(6, 4, rng);
  TD x = random_tensor({3, 6}, 33);
  auto y = fc.forward(x, true);
  REQUIRE(y.shape() == std::vector<int>{3, 4});
  WeightedSum loss(y.shape());
  std::vector<nn::ParamRef<double>> ps;
  std::vector<nn::BufferRef<double>> bs;
  fc.collect("fc", ps, bs);
  for (auto& p : ps) p.param->zero_grad();
  TD dx = fc.backward(loss.w);
  auto run = [&] { return loss.value(fc.forward(x, false)); };
  fd_params(ps, run, dx);

  nn::GlobalAvgPool<double> gap;
  TD g = random_tensor({2, 3, 4, 4}, 41);
  auto pooled = gap.forward(g, true);
  REQUIRE(pooled.shape() == std::vector<int>{2, 3});
  CHECK(pooled(0, 0) ==
        doctest::Approx(kernels::scalar::reduce_sum(g.data(), 16) / 16.0).epsilon(1e-12));
  TD dpool({2, 3});
  dpool.fill(1.0);
  auto dg = gap.backward(dpool);
  for (int64_t i = 0; i < dg.numel(); ++i) CHECK(dg[i] == doctest::Approx(1.0 / 16).epsilon(1e-12));
}

TEST_CASE("residual blocks: gradient check through both styles") {
  for (auto style : {nn::BlockStyle::postact, nn::BlockStyle::preact}) {
    nn::Rng rng(55);
    auto block = nn::make_block<double>(style, 3, 5, 2, rng);
    TD x = random_tensor({2, 3, 6, 6}, 57);
    nn::FwdFlags<double> fl{true, true, false};
    auto y = block->forward(x, fl);
    REQUIRE(y.dim(1) == 5);
    REQUIRE(y.dim(2) == 3);
    WeightedSum loss(y.shape());
    std::vector<nn::ParamRef<double>> ps;
    std::vector<nn::BufferRef<double>> bs;
    block->collect("blk", ps, bs);
    for (auto& p : ps) p.param->zero_grad();
    TD dx = block->backward(loss.w);
    nn::FwdFlags<double> eval_fl{true, false, false};
    auto run = [&] { return loss.value(block->forward(x, eval_fl)); };
    fd_params(ps, run, dx, 1e-5, 1e-4);
    for (int64_t i = 0; i < x.numel(); i += 7) {  // sample input coords
      const double orig = x[i];
      const double step = 1e-5;
      x[i] = orig + step;
      const double up = run();
      x[i] = orig - step;
      const double down = run();
      x[i] = orig;
      const double fd = (up - down) / (2 * step);
      const double scale = std::max({1.0, std::abs(fd), std::abs(dx[i])});
      CHECK(std::abs(dx[i] - fd) <= 1e-4 * scale);
    }
  }
}
