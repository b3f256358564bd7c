#pragma once

#include <cmath>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace augkd::joint {

// Joint label space over N supervised classes and M transform labels.
// Flat ordering is supervised-major: flat = y*M + j, so the M entries of one
// supervised class are consecutive. Checkpoints record this tag; changing it
// invalidates saved heads.
inline constexpr const char* kOrderTag = "y_major";

int encode(int y, int j, int N, int M);
std::pair<int, int> decode(int flat, int N, int M);

struct JointLabel {
  int y = 0;
  int j = 0;
  int flat = 0;
};

inline JointLabel make_label(int y, int j, int N, int M) {
  return JointLabel{y, j, encode(y, j, N, M)};
}

template <typename T>
struct JointDistribution {
  std::vector<T> probs;  // length N*M
  int N = 0;
  int M = 0;

  void validate() const {
    if (N <= 0 || M <= 0 || static_cast<int>(probs.size()) != N * M)
      throw std::invalid_argument("JointDistribution: size != N*M");
    T sum = 0;
    for (T p : probs) {
      if (p < T(0)) throw std::invalid_argument("JointDistribution: negative entry");
      sum += p;
    }
    if (std::abs(static_cast<double>(sum) - 1.0) > 1e-6)
      throw std::invalid_argument("JointDistribution: entries sum to " +
                                  std::to_string(static_cast<double>(sum)));
  }
};

template <typename T>
std::vector<T> marginal_supervised(const JointDistribution<T>& q) {
  q.validate();
  std::vector<T> out(static_cast<size_t>(q.N), T(0));
  for (int y = 0; y < q.N; ++y)
    for (int j = 0; j < q.M; ++j) out[static_cast<size_t>(y)] += q.probs[static_cast<size_t>(y * q.M + j)];
  return out;
}

template <typename T>
std::vector<T> marginal_selfsup(const JointDistribution<T>& q) {
  q.validate();
  std::vector<T> out(static_cast<size_t>(q.M), T(0));
  for (int y = 0; y < q.N; ++y)
    for (int j = 0; j < q.M; ++j) out[static_cast<size_t>(j)] += q.probs[static_cast<size_t>(y * q.M + j)];
  return out;
}

}  // namespace augkd::joint
