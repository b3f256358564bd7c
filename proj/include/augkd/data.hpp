#pragma once

#include <random>
#include <string>
#include <vector>

#include "augkd/tensor.hpp"

namespace augkd::data {

struct Dataset {
  Tensor<float> images;  // [n,C,H,W]
  std::vector<int> labels;
  int num_classes = 0;
  std::string split;

  int size() const { return images.empty() ? 0 : images.dim(0); }
  int channels() const { return images.dim(1); }
  int height() const { return images.dim(2); }
  int width() const { return images.dim(3); }

  void validate() const;
  std::vector<int> per_class_counts() const;
};

/// Deterministic synthetic classification set: each class is an oriented bar
/// with a bright head plus a fixed corner marker, so classes are separable
/// and quarter-turn rotations are distinguishable from the identity.
Dataset synth_dataset(uint64_t seed, int N, int per_class, int size, float noise = 0.3f,
                      const std::string& split = "train");

struct CifarOptions {
  std::string split = "train";           // "train" or "test"
  std::vector<double> mean;              // optional per-channel normalization
  std::vector<double> stddev;
};

/// Reads the standard CIFAR binary batch layout (label byte(s) followed by a
/// 3072-byte RGB row). CIFAR-10 (1 label byte) and CIFAR-100 (2 label bytes,
/// fine label used) are detected from the record size.
Dataset ingest_cifar(const std::string& dir, const CifarOptions& opts = {});

/// Parses one CIFAR-format file; exposed for fixture tests.
Dataset parse_cifar_file(const std::string& path, const CifarOptions& opts = {});

/// Stratified subsample keeping roughly `fraction` of each class
/// (at least one sample), deterministic in `seed`. Original sample order is
/// preserved; fraction 1 returns the dataset unchanged.
Dataset fewshot_split(const Dataset& ds, double fraction, uint64_t seed);

/// Gathers `indices` rows into a batch tensor plus labels.
std::pair<Tensor<float>, std::vector<int>> gather_batch(const Dataset& ds,
                                                        const std::vector<int>& indices);

/// Pad-4 random crop plus horizontal flip, applied in place per sample.
void augment_crop_flip(Tensor<float>& batch, std::mt19937_64& rng, int pad = 4);

}  // namespace augkd::data
