#pragma once

#include <optional>
#include <string>

#include "augkd/data.hpp"
#include "augkd/models.hpp"

namespace augkd::eval {

struct Accuracy {
  double top1 = 0;
  std::optional<double> top5;  // present when the class count is at least 5
};

/// Deployed-network accuracy; requires deploy mode.
Accuracy evaluate_accuracy(models::StudentNetwork<float>& net, const data::Dataset& ds,
                           int batch_size = 128);

/// Same computation without the deploy-mode requirement; used inside the
/// training loops.
Accuracy accuracy_of(models::StudentNetwork<float>& net, const data::Dataset& ds,
                     int batch_size = 128);

struct ProbeConfig {
  int epochs = 30;
  int batch_size = 64;
  double lr = 0.1;
  double momentum = 0.9;
  double weight_decay = 0.0;
  std::vector<int> milestones = {15, 22, 27};
  double gamma = 0.1;
  uint64_t seed = 1;
};

/// Trains a fresh linear classifier on frozen pooled features and reports
/// test accuracy. The network is never mutated.
double linear_probe(models::StudentNetwork<float>& frozen_net, const data::Dataset& train_set,
                    const data::Dataset& test_set, const ProbeConfig& cfg);

/// Linear-classifier training on an explicit feature matrix [n,d]; the probe
/// above extracts features and defers to this.
double linear_probe_features(const Tensor<float>& train_x, const std::vector<int>& train_y,
                             const Tensor<float>& test_x, const std::vector<int>& test_y,
                             int num_classes, const ProbeConfig& cfg);

/// Pooled embeddings of the whole dataset, [n,d].
Tensor<float> extract_features(models::StudentNetwork<float>& net, const data::Dataset& ds,
                               int batch_size = 128);

/// Fraction of samples whose k nearest neighbours (Euclidean, self excluded)
/// contain at least one same-class sample.
double recall_at_k(const Tensor<float>& features, const std::vector<int>& labels, int k = 1);

/// Writes features + label per row as comma-separated values (d+1 columns,
/// no header) and returns Recall@1 of the exported embedding.
double export_embeddings(models::StudentNetwork<float>& net, const data::Dataset& ds,
                         const std::string& path, int batch_size = 128);

}  // namespace augkd::eval
