#pragma once

#include <array>
#include <string>
#include <vector>

#include "augkd/tensor.hpp"

namespace augkd::transforms {

// Self-supervised view generation. Every family lists the identity transform
// first, so views[0] is always the untransformed batch and the transform
// label of view j is j.

enum class PretextKind { rotation4, jigsaw4, color_perm6 };

PretextKind pretext_from_string(const std::string& s);
std::string to_string(PretextKind kind);

struct TransformFamily {
  PretextKind kind;
  int M;
  std::vector<std::string> names;                    // descriptor names, index 0 = identity
  std::vector<int> angles_ccw;                       // rotation4
  std::vector<std::array<int, 4>> patch_perms;       // jigsaw4
  std::vector<std::array<int, 3>> channel_perms;     // color_perm6
};

TransformFamily family(PretextKind kind);

template <typename T>
struct ViewBatch {
  Tensor<T> views;                 // [M,B,C,H,W]; views[0] == input
  std::vector<int> ss_labels;      // ss_labels[j] == j
  std::vector<int> source_labels;  // [B]
};

// Single-transform primitives (exposed for inverse/property checks).
template <typename T>
Tensor<T> rotate90_ccw(const Tensor<T>& batch, int quarter_turns);
template <typename T>
Tensor<T> apply_patch_perm(const Tensor<T>& batch, const std::array<int, 4>& perm);
template <typename T>
Tensor<T> apply_channel_perm(const Tensor<T>& batch, const std::array<int, 3>& perm);

template <typename T>
ViewBatch<T> rotation_views(const Tensor<T>& batch, std::vector<int> labels = {});
template <typename T>
ViewBatch<T> jigsaw_views(const Tensor<T>& batch, std::vector<int> labels = {});
template <typename T>
ViewBatch<T> color_permutation_views(const Tensor<T>& batch, std::vector<int> labels = {});
template <typename T>
ViewBatch<T> make_views(PretextKind kind, const Tensor<T>& batch, std::vector<int> labels = {});

/// Identity-first set of k n-item permutations chosen for maximal pairwise
/// Hamming distance. Exhaustive for n! <= 24, greedy farthest-point beyond.
std::vector<std::vector<int>> select_max_hamming_permutations(int n_items = 4, int k = 4);

int hamming_distance(const std::vector<int>& a, const std::vector<int>& b);

extern template Tensor<float> rotate90_ccw<float>(const Tensor<float>&, int);
extern template Tensor<double> rotate90_ccw<double>(const Tensor<double>&, int);
extern template ViewBatch<float> rotation_views<float>(const Tensor<float>&, std::vector<int>);
extern template ViewBatch<double> rotation_views<double>(const Tensor<double>&, std::vector<int>);
extern template ViewBatch<float> jigsaw_views<float>(const Tensor<float>&, std::vector<int>);
extern template ViewBatch<double> jigsaw_views<double>(const Tensor<double>&, std::vector<int>);
extern template ViewBatch<float> color_permutation_views<float>(const Tensor<float>&,
                                                                std::vector<int>);
extern template ViewBatch<double> color_permutation_views<double>(const Tensor<double>&,
                                                                  std::vector<int>);
extern template ViewBatch<float> make_views<float>(PretextKind, const Tensor<float>&,
                                                   std::vector<int>);
extern template ViewBatch<double> make_views<double>(PretextKind, const Tensor<double>&,
                                                     std::vector<int>);
extern template Tensor<float> apply_patch_perm<float>(const Tensor<float>&,
                                                      const std::array<int, 4>&);
extern template Tensor<double> apply_patch_perm<double>(const Tensor<double>&,
                                                        const std::array<int, 4>&);
extern template Tensor<float> apply_channel_perm<float>(const Tensor<float>&,
                                                        const std::array<int, 3>&);
extern template Tensor<double> apply_channel_perm<double>(const Tensor<double>&,
                                                          const std::array<int, 3>&);

}  // namespace augkd::transforms
