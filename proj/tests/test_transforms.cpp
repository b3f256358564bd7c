#include <algorithm>
#include <numeric>
#include <random>
#include <set>

#include "augkd/transforms.hpp"
#include "doctest.h"

using namespace augkd;
using namespace augkd::transforms;

namespace {

Tensor<float> random_batch(int b, int c, int h, int w, uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<float> dist(0.f, 1.f);
  Tensor<float> t({b, c, h, w});
  for (int64_t i = 0; i < t.numel(); ++i) t[i] = dist(rng);
  return t;
}

bool tensors_equal(const Tensor<float>& a, const Tensor<float>& b) {
  if (a.shape() != b.shape()) return false;
  for (int64_t i = 0; i < a.numel(); ++i)
    if (a[i] != b[i]) return false;
  return true;
}

std::multiset<float> value_multiset(const Tensor<float>& t) {
  return {t.storage().begin(), t.storage().end()};
}

// independent exhaustive search over all 4-element permutations for the best
// attainable minimum pairwise Hamming distance of a k-subset containing the
// identity
int brute_force_best_min_distance(int k) {
  std::vector<std::vector<int>> perms;
  std::vector<int> p{0, 1, 2, 3};
  do {
    perms.push_back(p);
  } while (std::next_permutation(p.begin(), p.end()));
  const int P = static_cast<int>(perms.size());
  int best = -1;
  std::vector<int> pick;
  std::function<void(int, int)> rec = [&](int start, int left) {
    if (left == 0) {
      int mn = 4;
      for (size_t a = 0; a < pick.size(); ++a)
        for (size_t b = a + 1; b < pick.size(); ++b)
          mn = std::min(mn, hamming_distance(perms[static_cast<size_t>(pick[a])],
                                             perms[static_cast<size_t>(pick[b])]));
      best = std::max(best, mn);
      return;
    }
    for (int i = start; i < P; ++i) {
      pick.push_back(i);
      rec(i + 1, left - 1);
      pick.pop_back();
    }
  };
  pick.push_back(0);  // identity
  rec(1, k - 1);
  return best;
}

}  // namespace

TEST_CASE("rotation views: identity first, 90-degree index map, composition") {
  // 1x1x2x2 image [[a,b],[c,d]]; one quarter turn must give [[b,d],[a,c]]
  Tensor<float> img({1, 1, 2, 2});
  img(0, 0, 0, 0) = 1.f;  // a
  img(0, 0, 0, 1) = 2.f;  // b
  img(0, 0, 1, 0) = 3.f;  // c
  img(0, 0, 1, 1) = 4.f;  // d
  auto vb = rotation_views(img);
  REQUIRE(vb.views.shape() == std::vector<int>{4, 1, 1, 2, 2});
  CHECK(vb.views(0, 0, 0, 0, 0) == 1.f);
  CHECK(vb.views(0, 0, 0, 0, 1) == 2.f);
  CHECK(vb.views(0, 0, 0, 1, 0) == 3.f);
  CHECK(vb.views(0, 0, 0, 1, 1) == 4.f);
  CHECK(vb.views(1, 0, 0, 0, 0) == 2.f);  // b
  CHECK(vb.views(1, 0, 0, 0, 1) == 4.f);  // d
  CHECK(vb.views(1, 0, 0, 1, 0) == 1.f);  // a
  CHECK(vb.views(1, 0, 0, 1, 1) == 3.f);  // c
  for (int j = 0; j < 4; ++j) CHECK(vb.ss_labels[static_cast<size_t>(j)] == j);

  auto batch = random_batch(2, 3, 8, 8, 5);
  auto views = rotation_views(batch);
  Tensor<float> v0({2, 3, 8, 8});
  std::copy(views.views.data(), views.views.data() + v0.numel(), v0.data());
  CHECK(tensors_equal(v0, batch));

  // 90 then 270 more returns the original
  auto r1 = rotate90_ccw(batch, 1);
  CHECK(tensors_equal(rotate90_ccw(r1, 3), batch));
  // composing all four rotations cyclically is the identity
  CHECK(tensors_equal(rotate90_ccw(rotate90_ccw(rotate90_ccw(rotate90_ccw(batch, 1), 1), 1), 1),
                      batch));
  // pixel-permutation only: multiset of values preserved
  CHECK(value_multiset(rotate90_ccw(batch, 1)) == value_multiset(batch));

  Tensor<float> nonsquare({1, 1, 4, 6});
  CHECK_THROWS_AS(rotation_views(nonsquare), std::invalid_argument);
}

TEST_CASE("max-Hamming permutation selection") {
  auto sel = select_max_hamming_permutations(4, 4);
  REQUIRE(sel.size() == 4);
  CHECK(sel[0] == std::vector<int>{0, 1, 2, 3});
  // brute force says a 4-set with all pairwise distances 4 exists; ours must
  // attain it
  for (size_t a = 0; a < sel.size(); ++a)
    for (size_t b = a + 1; b < sel.size(); ++b) CHECK(hamming_distance(sel[a], sel[b]) == 4);
  CHECK(brute_force_best_min_distance(4) == 4);

  // determinism
  CHECK(select_max_hamming_permutations(4, 4) == sel);

  auto two = select_max_hamming_permutations(2, 2);
  CHECK(two == std::vector<std::vector<int>>{{0, 1}, {1, 0}});

  auto one = select_max_hamming_permutations(4, 1);
  CHECK(one == std::vector<std::vector<int>>{{0, 1, 2, 3}});

  CHECK_THROWS_AS(select_max_hamming_permutations(2, 3), std::invalid_argument);
  CHECK_THROWS_AS(select_max_hamming_permutations(3, 7), std::invalid_argument);

  // greedy path (n! > 24) still returns identity first and distinct perms
  auto big = select_max_hamming_permutations(5, 6);
  CHECK(big[0] == std::vector<int>{0, 1, 2, 3, 4});
  std::set<std::vector<int>> uniq(big.begin(), big.end());
  CHECK(uniq.size() == big.size());
}

TEST_CASE("jigsaw views: patch bookkeeping on a 2x2 image") {
  // four distinct quadrant values on a 2x2 image; each quadrant is one pixel
  Tensor<float> img({1, 1, 2, 2});
  img(0, 0, 0, 0) = 10.f;
  img(0, 0, 0, 1) = 20.f;
  img(0, 0, 1, 0) = 30.f;
  img(0, 0, 1, 1) = 40.f;
  const std::array<int, 4> swap_all{3, 2, 1, 0};  // full reversal
  auto out = apply_patch_perm(img, swap_all);
  CHECK(out(0, 0, 0, 0) == 40.f);
  CHECK(out(0, 0, 0, 1) == 30.f);
  CHECK(out(0, 0, 1, 0) == 20.f);
  CHECK(out(0, 0, 1, 1) == 10.f);

  auto batch = random_batch(2, 3, 8, 10, 6);
  auto vb = jigsaw_views(batch);
  REQUIRE(vb.views.dim(0) == 4);
  Tensor<float> v0({2, 3, 8, 10});
  std::copy(vb.views.data(), vb.views.data() + v0.numel(), v0.data());
  CHECK(tensors_equal(v0, batch));

  const auto fam = family(PretextKind::jigsaw4);
  for (int j = 0; j < fam.M; ++j) {
    Tensor<float> vj({2, 3, 8, 10});
    std::copy(vb.views.data() + j * vj.numel(), vb.views.data() + (j + 1) * vj.numel(),
              vj.data());
    // reassembled view keeps the pixel multiset
    CHECK(value_multiset(vj) == value_multiset(batch));
    // applying the inverse permutation restores the input exactly
    std::array<int, 4> inv{};
    for (int g = 0; g < 4; ++g) inv[static_cast<size_t>(fam.patch_perms[static_cast<size_t>(j)][static_cast<size_t>(g)])] = g;
    CHECK(tensors_equal(apply_patch_perm(vj, inv), batch));
  }

  Tensor<float> odd({1, 1, 3, 4});
  CHECK_THROWS_AS(jigsaw_views(odd), std::invalid_argument);
}

TEST_CASE("color permutation views") {
  auto batch = random_batch(2, 3, 4, 4, 9);
  auto vb = color_permutation_views(batch);
  REQUIRE(vb.views.dim(0) == 6);
  Tensor<float> v0({2, 3, 4, 4});
  std::copy(vb.views.data(), vb.views.data() + v0.numel(), v0.data());
  CHECK(tensors_equal(v0, batch));

  // BGR view of a pixel (r,g,b) is (b,g,r); BGR is the last listed
  Tensor<float> v5({2, 3, 4, 4});
  std::copy(vb.views.data() + 5 * v5.numel(), vb.views.data() + 6 * v5.numel(), v5.data());
  CHECK(v5(0, 0, 1, 1) == batch(0, 2, 1, 1));
  CHECK(v5(0, 1, 1, 1) == batch(0, 1, 1, 1));
  CHECK(v5(0, 2, 1, 1) == batch(0, 0, 1, 1));

  // exactly 3! = 6 distinct views
  const auto fam = family(PretextKind::color_perm6);
  std::set<std::array<int, 3>> uniq(fam.channel_perms.begin(), fam.channel_perms.end());
  CHECK(uniq.size() == 6);
  for (int j = 0; j < 6; ++j) {
    Tensor<float> vj({2, 3, 4, 4});
    std::copy(vb.views.data() + j * vj.numel(), vb.views.data() + (j + 1) * vj.numel(),
              vj.data());
    std::array<int, 3> inv{};
    for (int c = 0; c < 3; ++c) inv[static_cast<size_t>(fam.channel_perms[static_cast<size_t>(j)][static_cast<size_t>(c)])] = c;
    CHECK(tensors_equal(apply_channel_perm(vj, inv), batch));
  }

  Tensor<float> gray({1, 1, 4, 4});
  CHECK_THROWS_AS(color_permutation_views(gray), std::invalid_argument);
}

TEST_CASE("family descriptors expose identity first with the right M") {
  for (auto kind : {PretextKind::rotation4, PretextKind::jigsaw4, PretextKind::color_perm6}) {
    const auto fam = family(kind);
    CHECK(fam.M == (kind == PretextKind::color_perm6 ? 6 : 4));
    CHECK(static_cast<int>(fam.names.size()) == fam.M);
  }
  CHECK(family(PretextKind::rotation4).angles_ccw[0] == 0);
  CHECK(family(PretextKind::jigsaw4).patch_perms[0] == std::array<int, 4>{0, 1, 2, 3});
  CHECK(family(PretextKind::color_perm6).channel_perms[0] == std::array<int, 3>{0, 1, 2});
  CHECK(pretext_from_string("rotation4") == PretextKind::rotation4);
  CHECK_THROWS(pretext_from_string("nope"));
}
