#include "augkd/joint_label.hpp"

namespace augkd::joint {

int encode(int y, int j, int N, int M) {
  if (N <= 0 || M <= 0) throw std::invalid_argument("encode: N and M must be positive");
  if (y < 0 || y >= N)
    throw std::invalid_argument("encode: supervised label " + std::to_string(y) +
                                " out of [0," + std::to_string(N) + ")");
  if (j < 0 || j >= M)
    throw std::invalid_argument("encode: transform label " + std::to_string(j) +
                                " out of [0," + std::to_string(M) + ")");
  return y * M + j;
}

std::pair<int, int> decode(int flat, int N, int M) {
  if (N <= 0 || M <= 0) throw std::invalid_argument("decode: N and M must be positive");
  if (flat < 0 || flat >= N * M)
    throw std::invalid_argument("decode: flat index " + std::to_string(flat) + " out of [0," +
                                std::to_string(N * M) + ")");
  return {flat / M, flat % M};
}

}  // namespace augkd::joint
