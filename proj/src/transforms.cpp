#include "augkd/transforms.hpp"

#include <algorithm>
#include <cstring>
#include <numeric>
#include <stdexcept>

namespace augkd::transforms {

PretextKind pretext_from_string(const std::string& s) {
  if (s == "rotation4") return PretextKind::rotation4;
  if (s == "jigsaw4") return PretextKind::jigsaw4;
  if (s == "color_perm6") return PretextKind::color_perm6;
  throw std::invalid_argument("unknown pretext family: " + s);
}

std::string to_string(PretextKind kind) {
  switch (kind) {
    case PretextKind::rotation4: return "rotation4";
    case PretextKind::jigsaw4: return "jigsaw4";
    case PretextKind::color_perm6: return "color_perm6";
  }
  return "?";
}

int hamming_distance(const std::vector<int>& a, const std::vector<int>& b) {
  if (a.size() != b.size())
    throw std::invalid_argument("hamming_distance: length mismatch");
  int d = 0;
  for (size_t i = 0; i < a.size(); ++i) d += a[i] != b[i];
  return d;
}

namespace {

int64_t factorial(int n) {
  int64_t f = 1;
  for (int i = 2; i <= n; ++i) f *= i;
  return f;
}

std::vector<std::vector<int>> all_permutations(int n) {
  std::vector<int> p(static_cast<size_t>(n));
  std::iota(p.begin(), p.end(), 0);
  std::vector<std::vector<int>> out;
  do {
    out.push_back(p);
  } while (std::next_permutation(p.begin(), p.end()));
  return out;  // lexicographic; out[0] is the identity
}

struct SetScore {
  int min_pair = 0;
  int sum_pair = 0;
  bool better_than(const SetScore& o) const {
    if (min_pair != o.min_pair) return min_pair > o.min_pair;
    return sum_pair > o.sum_pair;
  }
};

}  // namespace

std::vector<std::vector<int>> select_max_hamming_permutations(int n_items, int k) {
  if (n_items < 1) throw std::invalid_argument("select_max_hamming_permutations: n_items < 1");
  if (n_items > 8)
    throw std::invalid_argument(
        "select_max_hamming_permutations: n_items > 8 (permutation enumeration too large)");
  if (k < 1) throw std::invalid_argument("select_max_hamming_permutations: k < 1");
  const int64_t total = factorial(n_items);
  if (k > total)
    throw std::invalid_argument("select_max_hamming_permutations: k exceeds n_items!");

  const auto perms = all_permutations(n_items);
  const int P = static_cast<int>(perms.size());
  if (k == 1) return {perms[0]};

  if (total <= 24) {
    // Exact: score every k-subset containing the identity. Ties resolve to
    // the first (lexicographically smallest) combination seen.
    std::vector<std::vector<int>> dist(static_cast<size_t>(P),
                                       std::vector<int>(static_cast<size_t>(P), 0));
    for (int i = 0; i < P; ++i)
      for (int j = i + 1; j < P; ++j)
        dist[static_cast<size_t>(i)][static_cast<size_t>(j)] =
            dist[static_cast<size_t>(j)][static_cast<size_t>(i)] =
                hamming_distance(perms[static_cast<size_t>(i)], perms[static_cast<size_t>(j)]);

    std::vector<int> comb(static_cast<size_t>(k));
    comb[0] = 0;  // identity always in
    std::vector<int> best;
    SetScore best_score{-1, -1};
    // Iterate combinations of {1..P-1} of size k-1 in lexicographic order.
    std::vector<int> idx(static_cast<size_t>(k - 1));
    std::iota(idx.begin(), idx.end(), 1);
    while (true) {
      SetScore s{INT32_MAX, 0};
      for (int a = 0; a < k - 1; ++a) {
        int da = dist[0][static_cast<size_t>(idx[static_cast<size_t>(a)])];
        s.min_pair = std::min(s.min_pair, da);
        s.sum_pair += da;
        for (int b = a + 1; b < k - 1; ++b) {
          int d = dist[static_cast<size_t>(idx[static_cast<size_t>(a)])]
                      [static_cast<size_t>(idx[static_cast<size_t>(b)])];
          s.min_pair = std::min(s.min_pair, d);
          s.sum_pair += d;
        }
      }
      if (s.better_than(best_score)) {
        best_score = s;
        best.assign(idx.begin(), idx.end());
      }
      // advance combination
      int pos = k - 2;
      while (pos >= 0 && idx[static_cast<size_t>(pos)] == P - (k - 1 - pos)) --pos;
      if (pos < 0) break;
      ++idx[static_cast<size_t>(pos)];
      for (int q = pos + 1; q < k - 1; ++q)
        idx[static_cast<size_t>(q)] = idx[static_cast<size_t>(q - 1)] + 1;
    }
    std::vector<std::vector<int>> out{perms[0]};
    for (int i : best) out.push_back(perms[static_cast<size_t>(i)]);
    return out;
  }

  // Greedy farthest-point, seeded at the identity. Ties resolve to the
  // lexicographically smallest candidate (enumeration order).
  std::vector<int> chosen{0};
  std::vector<char> used(static_cast<size_t>(P), 0);
  used[0] = 1;
  while (static_cast<int>(chosen.size()) < k) {
    int best = -1;
    SetScore best_score{-1, -1};
    for (int c = 0; c < P; ++c) {
      if (used[static_cast<size_t>(c)]) continue;
      SetScore s{INT32_MAX, 0};
      for (int sel : chosen) {
        int d = hamming_distance(perms[static_cast<size_t>(c)], perms[static_cast<size_t>(sel)]);
        s.min_pair = std::min(s.min_pair, d);
        s.sum_pair += d;
      }
      if (s.better_than(best_score)) {
        best_score = s;
        best = c;
      }
    }
    used[static_cast<size_t>(best)] = 1;
    chosen.push_back(best);
  }
  std::vector<std::vector<int>> out;
  for (int i : chosen) out.push_back(perms[static_cast<size_t>(i)]);
  return out;
}

TransformFamily family(PretextKind kind) {
  TransformFamily f;
  f.kind = kind;
  switch (kind) {
    case PretextKind::rotation4:
      f.M = 4;
      f.angles_ccw = {0, 90, 180, 270};
      f.names = {"rot0", "rot90", "rot180", "rot270"};
      break;
    case PretextKind::jigsaw4: {
      f.M = 4;
      auto perms = select_max_hamming_permutations(4, 4);
      for (const auto& p : perms) {
        std::array<int, 4> a{p[0], p[1], p[2], p[3]};
        f.patch_perms.push_back(a);
        std::string name = "jigsaw";
        for (int v : p) name += std::to_string(v);
        f.names.push_back(name);
      }
      break;
    }
    case PretextKind::color_perm6:
      f.M = 6;
      f.channel_perms = {{0, 1, 2}, {0, 2, 1}, {1, 0, 2}, {1, 2, 0}, {2, 0, 1}, {2, 1, 0}};
      f.names = {"RGB", "RBG", "GRB", "GBR", "BRG", "BGR"};
      break;
  }
  return f;
}

namespace {

template <typename T>
void check_batch(const Tensor<T>& batch) {
  if (batch.ndim() != 4)
    throw std::invalid_argument("view transform: batch must be [B,C,H,W], got " +
                                Tensor<T>::shape_str(batch.shape()));
}

template <typename T>
ViewBatch<T> init_views(const Tensor<T>& batch, int M, std::vector<int> labels) {
  const int B = batch.dim(0);
  if (!labels.empty() && static_cast<int>(labels.size()) != B)
    throw std::invalid_argument("view transform: label count does not match batch size");
  ViewBatch<T> vb;
  vb.views = Tensor<T>({M, B, batch.dim(1), batch.dim(2), batch.dim(3)});
  vb.ss_labels.resize(static_cast<size_t>(M));
  for (int j = 0; j < M; ++j) vb.ss_labels[static_cast<size_t>(j)] = j;
  vb.source_labels = std::move(labels);
  return vb;
}

}  // namespace

template <typename T>
Tensor<T> rotate90_ccw(const Tensor<T>& batch, int quarter_turns) {
  check_batch(batch);
  const int B = batch.dim(0), C = batch.dim(1), H = batch.dim(2), W = batch.dim(3);
  if (H != W) throw std::invalid_argument("rotate90_ccw: image must be square, got H=" +
                                          std::to_string(H) + " W=" + std::to_string(W));
  const int t = ((quarter_turns % 4) + 4) % 4;
  Tensor<T> out(batch.shape());
  for (int b = 0; b < B; ++b)
    for (int c = 0; c < C; ++c)
      for (int r = 0; r < H; ++r)
        for (int col = 0; col < W; ++col) {
          int sr = r, sc = col;
          switch (t) {
            case 0: break;
            case 1: sr = col; sc = W - 1 - r; break;
            case 2: sr = H - 1 - r; sc = W - 1 - col; break;
            case 3: sr = W - 1 - col; sc = r; break;
          }
          out(b, c, r, col) = batch(b, c, sr, sc);
        }
  return out;
}

template <typename T>
Tensor<T> apply_patch_perm(const Tensor<T>& batch, const std::array<int, 4>& perm) {
  check_batch(batch);
  const int B = batch.dim(0), C = batch.dim(1), H = batch.dim(2), W = batch.dim(3);
  if (H % 2 != 0 || W % 2 != 0)
    throw std::invalid_argument("apply_patch_perm: H and W must be even");
  const int ph = H / 2, pw = W / 2;
  Tensor<T> out(batch.shape());
  for (int b = 0; b < B; ++b)
    for (int c = 0; c < C; ++c)
      for (int g = 0; g < 4; ++g) {
        // grid position g (row-major over the 2x2 grid) takes input patch perm[g]
        const int src = perm[static_cast<size_t>(g)];
        const int dr = (g / 2) * ph, dc = (g % 2) * pw;
        const int sr = (src / 2) * ph, sc = (src % 2) * pw;
        for (int r = 0; r < ph; ++r)
          for (int col = 0; col < pw; ++col)
            out(b, c, dr + r, dc + col) = batch(b, c, sr + r, sc + col);
      }
  return out;
}

template <typename T>
Tensor<T> apply_channel_perm(const Tensor<T>& batch, const std::array<int, 3>& perm) {
  check_batch(batch);
  const int B = batch.dim(0), C = batch.dim(1), H = batch.dim(2), W = batch.dim(3);
  if (C != 3) throw std::invalid_argument("apply_channel_perm: expected 3 channels");
  Tensor<T> out(batch.shape());
  const int64_t plane = static_cast<int64_t>(H) * W;
  for (int b = 0; b < B; ++b)
    for (int c = 0; c < C; ++c)
      std::memcpy(out.data() + (static_cast<int64_t>(b) * C + c) * plane,
                  batch.data() + (static_cast<int64_t>(b) * C + perm[static_cast<size_t>(c)]) * plane,
                  static_cast<size_t>(plane) * sizeof(T));
  return out;
}

template <typename T>
ViewBatch<T> rotation_views(const Tensor<T>& batch, std::vector<int> labels) {
  check_batch(batch);
  if (batch.dim(2) != batch.dim(3))
    throw std::invalid_argument("rotation_views: images must be square");
  auto vb = init_views(batch, 4, std::move(labels));
  const int64_t per_view = batch.numel();
  for (int j = 0; j < 4; ++j) {
    Tensor<T> v = j == 0 ? batch : rotate90_ccw(batch, j);
    std::memcpy(vb.views.data() + j * per_view, v.data(),
                static_cast<size_t>(per_view) * sizeof(T));
  }
  return vb;
}

template <typename T>
ViewBatch<T> jigsaw_views(const Tensor<T>& batch, std::vector<int> labels) {
  check_batch(batch);
  if (batch.dim(2) % 2 != 0 || batch.dim(3) % 2 != 0)
    throw std::invalid_argument("jigsaw_views: H and W must be even");
  const auto fam = family(PretextKind::jigsaw4);
  auto vb = init_views(batch, fam.M, std::move(labels));
  const int64_t per_view = batch.numel();
  for (int j = 0; j < fam.M; ++j) {
    Tensor<T> v = j == 0 ? batch : apply_patch_perm(batch, fam.patch_perms[static_cast<size_t>(j)]);
    std::memcpy(vb.views.data() + j * per_view, v.data(),
                static_cast<size_t>(per_view) * sizeof(T));
  }
  return vb;
}

template <typename T>
ViewBatch<T> color_permutation_views(const Tensor<T>& batch, std::vector<int> labels) {
  check_batch(batch);
  if (batch.dim(1) != 3)
    throw std::invalid_argument("color_permutation_views: expected 3 channels");
  const auto fam = family(PretextKind::color_perm6);
  auto vb = init_views(batch, fam.M, std::move(labels));
  const int64_t per_view = batch.numel();
  for (int j = 0; j < fam.M; ++j) {
    Tensor<T> v =
        j == 0 ? batch : apply_channel_perm(batch, fam.channel_perms[static_cast<size_t>(j)]);
    std::memcpy(vb.views.data() + j * per_view, v.data(),
                static_cast<size_t>(per_view) * sizeof(T));
  }
  return vb;
}

template <typename T>
ViewBatch<T> make_views(PretextKind kind, const Tensor<T>& batch, std::vector<int> labels) {
  switch (kind) {
    case PretextKind::rotation4: return rotation_views(batch, std::move(labels));
    case PretextKind::jigsaw4: return jigsaw_views(batch, std::move(labels));
    case PretextKind::color_perm6: return color_permutation_views(batch, std::move(labels));
  }
  throw std::invalid_argument("make_views: bad pretext kind");
}

template Tensor<float> rotate90_ccw<float>(const Tensor<float>&, int);
template Tensor<double> rotate90_ccw<double>(const Tensor<double>&, int);
template ViewBatch<float> rotation_views<float>(const Tensor<float>&, std::vector<int>);
template ViewBatch<double> rotation_views<double>(const Tensor<double>&, std::vector<int>);
template ViewBatch<float> jigsaw_views<float>(const Tensor<float>&, std::vector<int>);
template ViewBatch<double> jigsaw_views<double>(const Tensor<double>&, std::vector<int>);
template ViewBatch<float> color_permutation_views<float>(const Tensor<float>&, std::vector<int>);
template ViewBatch<double> color_permutation_views<double>(const Tensor<double>&,
                                                           std::vector<int>);
template ViewBatch<float> make_views<float>(PretextKind, const Tensor<float>&, std::vector<int>);
template ViewBatch<double> make_views<double>(PretextKind, const Tensor<double>&,
                                              std::vector<int>);
template Tensor<float> apply_patch_perm<float>(const Tensor<float>&, const std::array<int, 4>&);
template Tensor<double> apply_patch_perm<double>(const Tensor<double>&, const std::array<int, 4>&);
template Tensor<float> apply_channel_perm<float>(const Tensor<float>&, const std::array<int, 3>&);
template Tensor<double> apply_channel_perm<double>(const Tensor<double>&,
                                                   const std::array<int, 3>&);

}  // namespace augkd::transforms
