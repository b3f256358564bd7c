#include "augkd/eval.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include "augkd/losses.hpp"

namespace augkd::eval {

namespace {

std::vector<int> range_batches(int n, int batch) {
  std::vector<int> idx(static_cast<size_t>(n));
  std::iota(idx.begin(), idx.end(), 0);
  (void)batch;
  return idx;
}

}  // namespace

Accuracy accuracy_of(models::StudentNetwork<float>& net, const data::Dataset& ds,
                     int batch_size) {
  ds.validate();
  if (ds.num_classes != net.spec().num_classes)
    throw std::invalid_argument("evaluate_accuracy: dataset has " +
                                std::to_string(ds.num_classes) + " classes, network expects " +
                                std::to_string(net.spec().num_classes));
  const int n = ds.size();
  const int N = ds.num_classes;
  const bool want_top5 = N >= 5;
  int64_t hit1 = 0, hit5 = 0;
  auto order = range_batches(n, batch_size);
  for (int start = 0; start < n; start += batch_size) {
    const int end = std::min(n, start + batch_size);
    std::vector<int> idx(order.begin() + start, order.begin() + end);
    auto [batch, labels] = data::gather_batch(ds, idx);
    Tensor<float> logits = net.forward_deploy(batch);
    for (int b = 0; b < end - start; ++b) {
      const float* row = logits.data() + static_cast<int64_t>(b) * N;
      const int y = labels[static_cast<size_t>(b)];
      int arg = 0;
      for (int k = 1; k < N; ++k)
        if (row[k] > row[arg]) arg = k;
      hit1 += arg == y;
      if (want_top5) {
        int above = 0;  // strictly-greater count; ties resolve in favour of y
        for (int k = 0; k < N; ++k) above += row[k] > row[y];
        hit5 += above < 5;
      }
    }
  }
  Accuracy acc;
  acc.top1 = static_cast<double>(hit1) / n;
  if (want_top5) acc.top5 = static_cast<double>(hit5) / n;
  return acc;
}

Accuracy evaluate_accuracy(models::StudentNetwork<float>& net, const data::Dataset& ds,
                           int batch_size) {
  if (!net.deploy_mode())
    throw std::logic_error("evaluate_accuracy: network must be in deploy mode");
  return accuracy_of(net, ds, batch_size);
}

Tensor<float> extract_features(models::StudentNetwork<float>& net, const data::Dataset& ds,
                               int batch_size) {
  const int n = ds.size();
  const int d = net.spec().embed_dim();
  Tensor<float> feats({n, d});
  for (int start = 0; start < n; start += batch_size) {
    const int end = std::min(n, start + batch_size);
    std::vector<int> idx(static_cast<size_t>(end - start));
    std::iota(idx.begin(), idx.end(), start);
    auto [batch, labels] = data::gather_batch(ds, idx);
    (void)labels;
    Tensor<float> pooled = net.pooled_features(batch);
    std::copy(pooled.data(), pooled.data() + pooled.numel(),
              feats.data() + static_cast<int64_t>(start) * d);
  }
  return feats;
}

double linear_probe_features(const Tensor<float>& train_x, const std::vector<int>& train_y,
                             const Tensor<float>& test_x, const std::vector<int>& test_y,
                             int num_classes, const ProbeConfig& cfg) {
  if (train_x.ndim() != 2 || test_x.ndim() != 2 || train_x.dim(1) != test_x.dim(1))
    throw std::invalid_argument("linear_probe: feature width mismatch between splits");
  const int n = train_x.dim(0), d = train_x.dim(1);
  nn::Rng rng(cfg.seed);
  nn::Linear<float> clf(d, num_classes, rng);
  Tensor<float> vel_w({num_classes, d}), vel_b({num_classes});
  std::vector<nn::ParamRef<float>> ps;
  std::vector<nn::BufferRef<float>> bs;
  clf.collect("probe", ps, bs);

  std::vector<int> order(static_cast<size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  double lr = cfg.lr;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    for (int m : cfg.milestones)
      if (epoch == m) lr *= cfg.gamma;
    std::shuffle(order.begin(), order.end(), rng);
    for (int start = 0; start < n; start += cfg.batch_size) {
      const int end = std::min(n, start + cfg.batch_size);
      const int b = end - start;
      Tensor<float> x({b, d});
      std::vector<int> y(static_cast<size_t>(b));
      for (int i = 0; i < b; ++i) {
        const int src = order[static_cast<size_t>(start + i)];
        std::copy(train_x.data() + static_cast<int64_t>(src) * d,
                  train_x.data() + static_cast<int64_t>(src + 1) * d,
                  x.data() + static_cast<int64_t>(i) * d);
        y[static_cast<size_t>(i)] = train_y[static_cast<size_t>(src)];
      }
      for (auto& p : ps) p.param->zero_grad();
      Tensor<float> logits = clf.forward(x, true);
      Tensor<float> dlogits;
      losses::cross_entropy(logits, y, 1.0, &dlogits);
      clf.backward(dlogits);
      for (auto& p : ps) {
        Tensor<float>& vel = p.name.ends_with("weight") ? vel_w : vel_b;
        kernels::sgd_momentum(p.param->value.data(), vel.data(), p.param->grad.data(),
                              p.param->value.numel(), static_cast<float>(lr),
                              static_cast<float>(cfg.momentum),
                              static_cast<float>(cfg.weight_decay));
      }
    }
  }

  // test accuracy
  const int nt = test_x.dim(0);
  Tensor<float> logits = clf.forward(const_cast<Tensor<float>&>(test_x), false);
  int64_t hits = 0;
  for (int i = 0; i < nt; ++i) {
    const float* row = logits.data() + static_cast<int64_t>(i) * num_classes;
    int arg = 0;
    for (int k = 1; k < num_classes; ++k)
      if (row[k] > row[arg]) arg = k;
    hits += arg == test_y[static_cast<size_t>(i)];
  }
  return static_cast<double>(hits) / nt;
}

double linear_probe(models::StudentNetwork<float>& frozen_net, const data::Dataset& train_set,
                    const data::Dataset& test_set, const ProbeConfig& cfg) {
  train_set.validate();
  test_set.validate();
  if (train_set.num_classes != test_set.num_classes)
    throw std::invalid_argument("linear_probe: class count differs between splits");
  Tensor<float> ftr = extract_features(frozen_net, train_set);
  Tensor<float> fte = extract_features(frozen_net, test_set);
  return linear_probe_features(ftr, train_set.labels, fte, test_set.labels,
                               train_set.num_classes, cfg);
}

double recall_at_k(const Tensor<float>& features, const std::vector<int>& labels, int k) {
  if (features.ndim() != 2 || features.dim(0) != static_cast<int>(labels.size()))
    throw std::invalid_argument("recall_at_k: features/labels mismatch");
  if (k < 1) throw std::invalid_argument("recall_at_k: k < 1");
  const int n = features.dim(0), d = features.dim(1);
  if (n < 2) return 0.0;
  int64_t hits = 0;
  std::vector<std::pair<double, int>> dist(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) {
    const float* fi = features.data() + static_cast<int64_t>(i) * d;
    for (int j = 0; j < n; ++j) {
      double s = 0;
      const float* fj = features.data() + static_cast<int64_t>(j) * d;
      for (int t = 0; t < d; ++t) {
        const double diff = static_cast<double>(fi[t]) - fj[t];
        s += diff * diff;
      }
      dist[static_cast<size_t>(j)] = {s, j};
    }
    dist[static_cast<size_t>(i)].first = std::numeric_limits<double>::infinity();  // exclude self
    const int kk = std::min(k, n - 1);
    std::partial_sort(dist.begin(), dist.begin() + kk, dist.end());
    for (int t = 0; t < kk; ++t)
      if (labels[static_cast<size_t>(dist[static_cast<size_t>(t)].second)] ==
          labels[static_cast<size_t>(i)]) {
        ++hits;
        break;
      }
  }
  return static_cast<double>(hits) / n;
}

double export_embeddings(models::StudentNetwork<float>& net, const data::Dataset& ds,
                         const std::string& path, int batch_size) {
  ds.validate();
  Tensor<float> feats = extract_features(net, ds, batch_size);
  std::ofstream out(path);
  if (!out) throw std::runtime_error("export_embeddings: cannot open " + path);
  const int n = feats.dim(0), d = feats.dim(1);
  for (int i = 0; i < n; ++i) {
    const float* row = feats.data() + static_cast<int64_t>(i) * d;
    for (int t = 0; t < d; ++t) out << row[t] << ",";
    out << ds.labels[static_cast<size_t>(i)] << "\n";
  }
  if (!out) throw std::runtime_error("export_embeddings: write failed for " + path);
  return recall_at_k(feats, ds.labels, 1);
}

}  // namespace augkd::eval
