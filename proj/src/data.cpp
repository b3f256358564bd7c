#include "augkd/data.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <stdexcept>

namespace augkd::data {

namespace fs = std::filesystem;

void Dataset::validate() const {
  if (images.ndim() != 4) throw std::invalid_argument("Dataset: images must be [n,C,H,W]");
  if (static_cast<int>(labels.size()) != images.dim(0))
    throw std::invalid_argument("Dataset: label count != image count");
  if (num_classes < 1) throw std::invalid_argument("Dataset: num_classes < 1");
  for (int y : labels)
    if (y < 0 || y >= num_classes)
      throw std::invalid_argument("Dataset: label " + std::to_string(y) + " out of range");
}

std::vector<int> Dataset::per_class_counts() const {
  std::vector<int> counts(static_cast<size_t>(num_classes), 0);
  for (int y : labels) ++counts[static_cast<size_t>(y)];
  return counts;
}

Dataset synth_dataset(uint64_t seed, int N, int per_class, int size, float noise,
                      const std::string& split) {
  if (N < 2) throw std::invalid_argument("synth_dataset: need at least 2 classes");
  if (per_class < 1) throw std::invalid_argument("synth_dataset: per_class < 1");
  if (size < 8 || size % 2 != 0)
    throw std::invalid_argument("synth_dataset: size must be even and >= 8");
  if (noise < 0) throw std::invalid_argument("synth_dataset: negative noise");

  const int n = N * per_class;
  Dataset ds;
  ds.images = Tensor<float>({n, 3, size, size});
  ds.labels.resize(static_cast<size_t>(n));
  ds.num_classes = N;
  ds.split = split;

  std::mt19937_64 rng(seed);
  std::normal_distribution<float> gauss(0.f, 1.f);
  std::uniform_real_distribution<float> uni(-1.f, 1.f);

  const float spacing = 180.0f / static_cast<float>(N);
  const float half = size / 2.0f;
  // channel weights make the three planes distinguishable (color pretext)
  const float chan_w[3] = {0.9f, 0.6f, 0.3f};
  const float marker_r2 = (0.14f * size) * (0.14f * size);

  int i = 0;
  for (int y = 0; y < N; ++y) {
    for (int k = 0; k < per_class; ++k, ++i) {
      ds.labels[static_cast<size_t>(i)] = y;
      const float jitter = uni(rng) * spacing * 0.22f;
      const float theta = (static_cast<float>(y) * spacing + jitter) * 3.14159265f / 180.f;
      const float cth = std::cos(theta), sth = std::sin(theta);
      const float cx = half - 0.5f + uni(rng) * 1.5f;
      const float cy = half - 0.5f + uni(rng) * 1.5f;
      const float len = size * (0.34f + 0.04f * uni(rng));
      const float thick = size * (0.085f + 0.015f * uni(rng));
      const float amp = 0.8f + 0.15f * uni(rng);
      const float mx = 0.22f * size, my = 0.22f * size;  // marker breaks rotation symmetry
      for (int r = 0; r < size; ++r)
        for (int c = 0; c < size; ++c) {
          const float u = static_cast<float>(c) - cx;
          const float v = static_cast<float>(r) - cy;
          const float s = u * cth + v * sth;
          const float t = -u * sth + v * cth;
          float bar = 0.f;
          if (std::abs(t) <= thick && std::abs(s) <= len)
            bar = amp * (0.55f + 0.45f * (s + len) / (2.f * len));  // bright head
          const float du = static_cast<float>(c) - mx, dv = static_cast<float>(r) - my;
          const float marker = (du * du + dv * dv <= marker_r2) ? 0.9f : 0.f;
          for (int ch = 0; ch < 3; ++ch)
            ds.images(i, ch, r, c) = 0.1f + bar * chan_w[ch] + marker * (0.5f + 0.2f * ch) +
                                     noise * gauss(rng);
        }
    }
  }
  return ds;
}

namespace {

constexpr int kCifarImageBytes = 3072;  // 32*32*3

Dataset parse_cifar_bytes(const std::vector<unsigned char>& bytes, const std::string& path,
                          const CifarOptions& opts) {
  const size_t sz = bytes.size();
  int label_bytes;
  if (sz % (kCifarImageBytes + 1) == 0)
    label_bytes = 1;  // CIFAR-10 layout
  else if (sz % (kCifarImageBytes + 2) == 0)
    label_bytes = 2;  // CIFAR-100 layout: coarse byte then fine byte
  else {
    const size_t rem1 = sz % (kCifarImageBytes + 1);
    throw std::runtime_error(
        path + ": size " + std::to_string(sz) + " is not a multiple of " +
        std::to_string(kCifarImageBytes + 1) + " or " + std::to_string(kCifarImageBytes + 2) +
        " bytes per record (first stray byte at offset " + std::to_string(sz - rem1) + ")");
  }
  const size_t rec = static_cast<size_t>(kCifarImageBytes + label_bytes);
  const int n = static_cast<int>(sz / rec);

  Dataset ds;
  ds.images = Tensor<float>({n, 3, 32, 32});
  ds.labels.resize(static_cast<size_t>(n));
  int max_label = 0;
  const bool norm = !opts.mean.empty();
  if (norm && (opts.mean.size() != 3 || opts.stddev.size() != 3))
    throw std::invalid_argument("ingest_cifar: normalization needs 3 means and 3 stddevs");
  for (int idx = 0; idx < n; ++idx) {
    const unsigned char* r = bytes.data() + static_cast<size_t>(idx) * rec;
    const int label = r[label_bytes - 1];  // fine label for the 2-byte layout
    ds.labels[static_cast<size_t>(idx)] = label;
    max_label = std::max(max_label, label);
    const unsigned char* px = r + label_bytes;
    float* dst = ds.images.data() + ds.images.offset(idx, 0, 0, 0);
    for (int ch = 0; ch < 3; ++ch)
      for (int p = 0; p < 1024; ++p) {
        float v = static_cast<float>(px[ch * 1024 + p]) / 255.0f;
        if (norm)
          v = (v - static_cast<float>(opts.mean[static_cast<size_t>(ch)])) /
              static_cast<float>(opts.stddev[static_cast<size_t>(ch)]);
        dst[ch * 1024 + p] = v;
      }
  }
  ds.num_classes = max_label + 1;
  ds.split = opts.split;
  return ds;
}

std::vector<unsigned char> read_all(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace

Dataset parse_cifar_file(const std::string& path, const CifarOptions& opts) {
  return parse_cifar_bytes(read_all(path), path, opts);
}

Dataset ingest_cifar(const std::string& dir, const CifarOptions& opts) {
  std::vector<std::string> files;
  const bool test = opts.split == "test";
  for (const char* name : {"data_batch_1.bin", "data_batch_2.bin", "data_batch_3.bin",
                           "data_batch_4.bin", "data_batch_5.bin"})
    if (!test && fs::exists(fs::path(dir) / name)) files.push_back((fs::path(dir) / name).string());
  if (!test && files.empty() && fs::exists(fs::path(dir) / "train.bin"))
    files.push_back((fs::path(dir) / "train.bin").string());
  if (test) {
    for (const char* name : {"test_batch.bin", "test.bin"})
      if (fs::exists(fs::path(dir) / name)) {
        files.push_back((fs::path(dir) / name).string());
        break;
      }
  }
  if (files.empty())
    throw std::runtime_error("ingest_cifar: no CIFAR batch files found under " + dir);

  Dataset out;
  for (const auto& f : files) {
    Dataset part = parse_cifar_bytes(read_all(f), f, opts);
    if (out.size() == 0) {
      out = std::move(part);
    } else {
      const int n0 = out.size(), n1 = part.size();
      Tensor<float> merged({n0 + n1, 3, 32, 32});
      std::memcpy(merged.data(), out.images.data(), sizeof(float) * static_cast<size_t>(out.images.numel()));
      std::memcpy(merged.data() + out.images.numel(), part.images.data(),
                  sizeof(float) * static_cast<size_t>(part.images.numel()));
      out.images = std::move(merged);
      out.labels.insert(out.labels.end(), part.labels.begin(), part.labels.end());
      out.num_classes = std::max(out.num_classes, part.num_classes);
    }
  }
  out.split = opts.split;
  return out;
}

Dataset fewshot_split(const Dataset& ds, double fraction, uint64_t seed) {
  ds.validate();
  if (!(fraction > 0.0) || fraction > 1.0)
    throw std::invalid_argument("fewshot_split: fraction must be in (0,1]");
  if (fraction == 1.0) return ds;

  std::vector<std::vector<int>> by_class(static_cast<size_t>(ds.num_classes));
  for (int i = 0; i < ds.size(); ++i)
    by_class[static_cast<size_t>(ds.labels[static_cast<size_t>(i)])].push_back(i);

  std::mt19937_64 rng(seed);
  std::vector<int> keep;
  for (int y = 0; y < ds.num_classes; ++y) {
    auto& idx = by_class[static_cast<size_t>(y)];
    if (idx.empty())
      throw std::invalid_argument("fewshot_split: class " + std::to_string(y) +
                                  " has no samples");
    const int want = std::max(
        1, static_cast<int>(std::lround(fraction * static_cast<double>(idx.size()))));
    std::shuffle(idx.begin(), idx.end(), rng);
    keep.insert(keep.end(), idx.begin(), idx.begin() + want);
  }
  std::sort(keep.begin(), keep.end());

  Dataset out;
  out.num_classes = ds.num_classes;
  out.split = ds.split + "@" + std::to_string(fraction);
  out.images = Tensor<float>({static_cast<int>(keep.size()), ds.channels(), ds.height(),
                              ds.width()});
  out.labels.resize(keep.size());
  const int64_t stride = ds.images.numel() / ds.size();
  for (size_t i = 0; i < keep.size(); ++i) {
    std::memcpy(out.images.data() + static_cast<int64_t>(i) * stride,
                ds.images.data() + static_cast<int64_t>(keep[i]) * stride,
                sizeof(float) * static_cast<size_t>(stride));
    out.labels[i] = ds.labels[static_cast<size_t>(keep[i])];
  }
  return out;
}

std::pair<Tensor<float>, std::vector<int>> gather_batch(const Dataset& ds,
                                                        const std::vector<int>& indices) {
  const int b = static_cast<int>(indices.size());
  Tensor<float> batch({b, ds.channels(), ds.height(), ds.width()});
  std::vector<int> labels(static_cast<size_t>(b));
  const int64_t stride = ds.images.numel() / ds.size();
  for (int i = 0; i < b; ++i) {
    const int src = indices[static_cast<size_t>(i)];
    std::memcpy(batch.data() + static_cast<int64_t>(i) * stride,
                ds.images.data() + static_cast<int64_t>(src) * stride,
                sizeof(float) * static_cast<size_t>(stride));
    labels[static_cast<size_t>(i)] = ds.labels[static_cast<size_t>(src)];
  }
  return {std::move(batch), std::move(labels)};
}

void augment_crop_flip(Tensor<float>& batch, std::mt19937_64& rng, int pad) {
  const int n = batch.dim(0), c = batch.dim(1), h = batch.dim(2), w = batch.dim(3);
  std::uniform_int_distribution<int> dr(0, 2 * pad), dc(0, 2 * pad), coin(0, 1);
  Tensor<float> scratch({c, h, w});
  for (int b = 0; b < n; ++b) {
    const int or_ = dr(rng) - pad, oc = dc(rng) - pad;
    const bool flip = coin(rng) == 1;
    float* img = batch.data() + batch.offset(b, 0, 0, 0);
    std::memcpy(scratch.data(), img, sizeof(float) * static_cast<size_t>(scratch.numel()));
    for (int ch = 0; ch < c; ++ch)
      for (int r = 0; r < h; ++r)
        for (int col = 0; col < w; ++col) {
          const int sr = r + or_;
          const int sc = (flip ? w - 1 - col : col) + oc;
          const float v = (sr >= 0 && sr < h && sc >= 0 && sc < w) ? scratch(ch, sr, sc) : 0.f;
          img[(static_cast<int64_t>(ch) * h + r) * w + col] = v;
        }
  }
}

}  // namespace augkd::data
