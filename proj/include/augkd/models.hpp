#pragma once

#include <memory>
#include <string>
#include <vector>

#include "augkd/losses.hpp"
#include "augkd/nn.hpp"
#include "augkd/transforms.hpp"

namespace augkd::models {

struct StageSpec {
  int blocks = 0;
  int channels = 0;
  int stride = 1;  // stride of the stage's first block
};

struct NetworkSpec {
  std::string arch;  // descriptive name; checkpoints use it for sanity checks
  nn::BlockStyle style = nn::BlockStyle::postact;
  int in_channels = 3;
  int input_size = 32;
  int stem_channels = 16;
  std::vector<StageSpec> stages;
  int num_classes = 10;

  int num_stages() const { return static_cast<int>(stages.size()); }
  int embed_dim() const { return stages.back().channels; }

  void validate() const {
    if (stages.empty()) throw std::invalid_argument("NetworkSpec: no stages");
    if (num_classes < 2) throw std::invalid_argument("NetworkSpec: num_classes < 2");
    if (input_size < 4) throw std::invalid_argument("NetworkSpec: input too small");
    for (const auto& s : stages)
      if (s.blocks < 1 || s.channels < 1 || (s.stride != 1 && s.stride != 2))
        throw std::invalid_argument("NetworkSpec: bad stage descriptor");
  }
};

enum class AuxTaskKind { none, scpd, sscpd, multitask, ssad };

AuxTaskKind aux_task_from_string(const std::string& s);
std::string to_string(AuxTaskKind k);

/// Reference architectures; N is the supervised class count.
NetworkSpec reference_spec(const std::string& name, int N);

// ---------------------------------------------------------------------------

template <typename T>
class Backbone {
 public:
  Backbone() = default;
  Backbone(const NetworkSpec& spec, nn::Rng& rng) : spec_(spec) {
    spec.validate();
    stem_ = nn::Conv2d<T>(spec.in_channels, spec.stem_channels, 3, 1, 1, rng);
    if (spec.style == nn::BlockStyle::postact) stem_bn_ = nn::BatchNorm2d<T>(spec.stem_channels);
    int in_ch = spec.stem_channels;
    for (const auto& st : spec.stages) {
      stages_.emplace_back(spec.style, in_ch, st.channels, st.blocks, st.stride, rng);
      in_ch = st.channels;
    }
    if (spec.style == nn::BlockStyle::preact) final_bn_ = nn::BatchNorm2d<T>(in_ch);
    fc_ = nn::Linear<T>(in_ch, spec.num_classes, rng);
  }

  /// Full forward; stage outputs (branch tap points) are written to `taps`
  /// when requested, pooled embeddings to `pooled`.
  Tensor<T> forward(const Tensor<T>& x, const nn::FwdFlags<T>& f,
                    std::vector<Tensor<T>>* taps = nullptr, Tensor<T>* pooled = nullptr) {
    Tensor<T> h = stem_.forward(x, f.record);
    if (spec_.style == nn::BlockStyle::postact) {
      h = stem_bn_.forward(h, f.train_stats, f.record, f.update_running);
      h = stem_relu_.forward(h, f.record);
    }
    if (taps) taps->clear();
    for (auto& st : stages_) {
      h = st.forward(h, f);
      if (taps) taps->push_back(h);
    }
    if (spec_.style == nn::BlockStyle::preact) {
      h = final_bn_.forward(h, f.train_stats, f.record, f.update_running);
      h = final_relu_.forward(h, f.record);
    }
    Tensor<T> pool = gap_.forward(h, f.record);
    if (pooled) *pooled = pool;
    return fc_.forward(pool, f.record);
  }

  /// Backward from the classifier gradient; `tap_grads` (when non-empty)
  /// carries extra gradients entering at each stage output.
  void backward(const Tensor<T>& dlogits, const std::vector<Tensor<T>>& tap_grads = {}) {
    Tensor<T> g = gap_.backward(fc_.backward(dlogits));
    if (spec_.style == nn::BlockStyle::preact)
      g = final_bn_.backward(final_relu_.backward(g));
    for (int l = static_cast<int>(stages_.size()) - 1; l >= 0; --l) {
      if (static_cast<size_t>(l) < tap_grads.size() && !tap_grads[static_cast<size_t>(l)].empty())
        kernels::axpy(T(1), tap_grads[static_cast<size_t>(l)].data(), g.data(), g.numel());
      g = stages_[static_cast<size_t>(l)].backward(g);
    }
    if (spec_.style == nn::BlockStyle::postact)
      g = stem_bn_.backward(stem_relu_.backward(g));
    stem_.backward(g);
  }

  void collect(const std::string& prefix, std::vector<nn::ParamRef<T>>& ps,
               std::vector<nn::BufferRef<T>>& bs) {
    stem_.collect(prefix + ".stem", ps, bs);
    if (spec_.style == nn::BlockStyle::postact) stem_bn_.collect(prefix + ".stem_bn", ps, bs);
    for (size_t i = 0; i < stages_.size(); ++i)
      stages_[i].collect(prefix + ".stage" + std::to_string(i), ps, bs);
    if (spec_.style == nn::BlockStyle::preact) final_bn_.collect(prefix + ".final_bn", ps, bs);
    fc_.collect(prefix + ".fc", ps, bs);
  }

  int64_t param_count() const {
    int64_t n = stem_.param_count() + fc_.param_count();
    if (spec_.style == nn::BlockStyle::postact) n += stem_bn_.param_count();
    if (spec_.style == nn::BlockStyle::preact) n += final_bn_.param_count();
    for (const auto& st : stages_) n += st.param_count();
    return n;
  }

  /// Multiply-accumulate count of the conv/linear layers at the spec's
  /// input resolution (batch norm and pooling excluded).
  int64_t macs() const {
    int h = spec_.input_size, w = spec_.input_size;
    int64_t m = stem_.macs(h, w);
    for (const auto& st : stages_) m += st.macs(h, w, &h, &w);
    return m + fc_.macs();
  }

  int downsamples() const {
    int n = stem_.stride() > 1 ? 1 : 0;
    for (const auto& st : stages_) n += st.downsamples();
    return n;
  }

  const NetworkSpec& spec() const { return spec_; }

 private:
  NetworkSpec spec_;
  nn::Conv2d<T> stem_;
  nn::BatchNorm2d<T> stem_bn_;  // postact
  nn::ReLU<T> stem_relu_;       // postact
  std::vector<nn::Stage<T>> stages_;
  nn::BatchNorm2d<T> final_bn_;  // preact
  nn::ReLU<T> final_relu_;       // preact
  nn::GlobalAvgPool<T> gap_;
  nn::Linear<T> fc_;
};

// ---------------------------------------------------------------------------

/// Branch after stage `tap`: copies of the backbone's remaining stage
/// descriptors (one unstrided copy of the final group when tapping the last
/// stage), then pooling and task heads.
template <typename T>
class AuxBranch {
 public:
  AuxBranch() = default;
  AuxBranch(const NetworkSpec& spec, int tap, AuxTaskKind aux, int M, nn::Rng& rng)
      : style_(spec.style) {
    const int L = spec.num_stages();
    int in_ch = spec.stages[static_cast<size_t>(tap)].channels;
    if (tap == L - 1) {
      const auto& last = spec.stages.back();
      stages_.emplace_back(spec.style, in_ch, last.channels, last.blocks, 1, rng);
      in_ch = last.channels;
    } else {
      for (int s = tap + 1; s < L; ++s) {
        const auto& st = spec.stages[static_cast<size_t>(s)];
        stages_.emplace_back(spec.style, in_ch, st.channels, st.blocks, st.stride, rng);
        in_ch = st.channels;
      }
    }
    if (style_ == nn::BlockStyle::preact) final_bn_ = nn::BatchNorm2d<T>(in_ch);
    const int N = spec.num_classes;
    switch (aux) {
      case AuxTaskKind::ssad: head_ = nn::Linear<T>(in_ch, N * M, rng); break;
      case AuxTaskKind::scpd: head_ = nn::Linear<T>(in_ch, N, rng); break;
      case AuxTaskKind::sscpd: head_ = nn::Linear<T>(in_ch, M, rng); break;
      case AuxTaskKind::multitask:
        head_ = nn::Linear<T>(in_ch, M, rng);  // transform-label head
        head2_ = nn::Linear<T>(in_ch, N, rng); // supervised head, view 0 only
        has_head2_ = true;
        break;
      case AuxTaskKind::none:
        throw std::invalid_argument("AuxBranch: aux task 'none' builds no branches");
    }
  }

  /// `secondary_rows` > 0 applies the second head to the leading rows of the
  /// pooled features (the untransformed view in view-major layout).
  std::pair<Tensor<T>, Tensor<T>> forward(const Tensor<T>& x, const nn::FwdFlags<T>& f,
                                          int secondary_rows = 0) {
    Tensor<T> h = x;
    for (auto& st : stages_) h = st.forward(h, f);
    if (style_ == nn::BlockStyle::preact) {
      h = final_bn_.forward(h, f.train_stats, f.record, f.update_running);
      h = final_relu_.forward(h, f.record);
    }
    Tensor<T> pooled = gap_.forward(h, f.record);
    Tensor<T> primary = head_.forward(pooled, f.record);
    Tensor<T> secondary;
    if (has_head2_ && secondary_rows > 0) {
      const int d = pooled.dim(1);
      Tensor<T> p0({secondary_rows, d});
      std::copy(pooled.data(), pooled.data() + static_cast<int64_t>(secondary_rows) * d,
                p0.data());
      secondary = head2_.forward(p0, f.record);
    }
    return {std::move(primary), std::move(secondary)};
  }

  Tensor<T> backward(const Tensor<T>& dprimary, const Tensor<T>* dsecondary = nullptr) {
    Tensor<T> dpooled = head_.backward(dprimary);
    if (has_head2_ && dsecondary && !dsecondary->empty()) {
      Tensor<T> dp0 = head2_.backward(*dsecondary);
      kernels::axpy(T(1), dp0.data(), dpooled.data(), dp0.numel());
    }
    Tensor<T> g = gap_.backward(dpooled);
    if (style_ == nn::BlockStyle::preact)
      g = final_bn_.backward(final_relu_.backward(g));
    for (auto it = stages_.rbegin(); it != stages_.rend(); ++it) g = it->backward(g);
    return g;
  }

  void collect(const std::string& prefix, std::vector<nn::ParamRef<T>>& ps,
               std::vector<nn::BufferRef<T>>& bs) {
    for (size_t i = 0; i < stages_.size(); ++i)
      stages_[i].collect(prefix + ".stage" + std::to_string(i), ps, bs);
    if (style_ == nn::BlockStyle::preact) final_bn_.collect(prefix + ".final_bn", ps, bs);
    head_.collect(prefix + ".head", ps, bs);
    if (has_head2_) head2_.collect(prefix + ".head2", ps, bs);
  }

  int downsamples() const {
    int n = 0;
    for (const auto& st : stages_) n += st.downsamples();
    return n;
  }

  int head_width() const { return head_.out_features(); }

 private:
  nn::BlockStyle style_ = nn::BlockStyle::postact;
  std::vector<nn::Stage<T>> stages_;
  nn::BatchNorm2d<T> final_bn_;  // preact
  nn::ReLU<T> final_relu_;       // preact
  nn::GlobalAvgPool<T> gap_;
  nn::Linear<T> head_;
  nn::Linear<T> head2_;
  bool has_head2_ = false;
};

// ---------------------------------------------------------------------------

/// Backbone plus one auxiliary branch per stage. Branches exist only while
/// training; deploy mode forwards the backbone alone.
template <typename T>
class StudentNetwork {
 public:
  StudentNetwork() = default;

  StudentNetwork(const NetworkSpec& spec, AuxTaskKind aux, int M, uint64_t seed)
      : spec_(spec), aux_(aux), M_(M) {
    nn::Rng rng(seed);
    backbone_ = Backbone<T>(spec, rng);
    if (aux != AuxTaskKind::none)
      for (int l = 0; l < spec.num_stages(); ++l)
        branches_.emplace_back(spec, l, aux, M, rng);
  }

  /// Forward all views as one flattened batch (view-major rows), producing
  /// backbone logits per view and branch head logits per (branch, view).
  /// `branch_flags` lets the branches run in a different mode than the
  /// backbone (frozen-backbone teacher phase); `run_branches=false` skips the
  /// branch heads entirely.
  losses::LogitsBundle<T> forward_views(const transforms::ViewBatch<T>& vb,
                                        const nn::FwdFlags<T>& f,
                                        const nn::FwdFlags<T>* branch_flags = nullptr,
                                        bool run_branches = true) {
    if (deploy_mode_)
      throw std::logic_error("forward_views: network is in deploy mode");
    const auto& vs = vb.views.shape();
    check_shape(vb.views.ndim() == 5, "forward_views: views must be [M,B,C,H,W]");
    const int Mv = vs[0], B = vs[1];
    const int N = spec_.num_classes;
    Tensor<T> flat = vb.views;
    flat.reshape({Mv * B, vs[2], vs[3], vs[4]});

    losses::LogitsBundle<T> bundle;
    bundle.L = run_branches ? static_cast<int>(branches_.size()) : 0;
    bundle.M = Mv;
    bundle.B = B;
    bundle.N = N;

    Tensor<T> p_flat = backbone_.forward(flat, f, &taps_, nullptr);
    p_flat.reshape({Mv, B, N});
    bundle.p = std::move(p_flat);
    B_ = B;
    Mv_ = Mv;

    const int L = bundle.L;
    if (L == 0) return bundle;
    const nn::FwdFlags<T>& bf = branch_flags ? *branch_flags : f;

    if (aux_ == AuxTaskKind::ssad) bundle.q = Tensor<T>({L, Mv, B, N * M_});
    if (aux_ == AuxTaskKind::sscpd || aux_ == AuxTaskKind::multitask)
      bundle.mu = Tensor<T>({L, Mv, B, M_});
    if (aux_ == AuxTaskKind::scpd || aux_ == AuxTaskKind::multitask)
      bundle.scpd = Tensor<T>({L, B, N});

    for (int l = 0; l < L; ++l) {
      auto& br = branches_[static_cast<size_t>(l)];
      if (aux_ == AuxTaskKind::scpd) {
        // supervised-only branch heads see just the untransformed view
        Tensor<T> tap0 = slice_rows(taps_[static_cast<size_t>(l)], B);
        auto [logits, unused] = br.forward(tap0, bf);
        (void)unused;
        std::copy(logits.data(), logits.data() + logits.numel(),
                  bundle.scpd.data() + bundle.scpd.offset(l, 0, 0));
      } else {
        auto [primary, secondary] =
            br.forward(taps_[static_cast<size_t>(l)], bf,
                       aux_ == AuxTaskKind::multitask ? B : 0);
        if (aux_ == AuxTaskKind::ssad)
          std::copy(primary.data(), primary.data() + primary.numel(),
                    bundle.q.data() + bundle.q.offset(l, 0, 0, 0));
        else
          std::copy(primary.data(), primary.data() + primary.numel(),
                    bundle.mu.data() + bundle.mu.offset(l, 0, 0, 0));
        if (aux_ == AuxTaskKind::multitask)
          std::copy(secondary.data(), secondary.data() + secondary.numel(),
                    bundle.scpd.data() + bundle.scpd.offset(l, 0, 0));
      }
    }
    return bundle;
  }

  /// Backward from bundle gradients into parameter gradients. Branches with
  /// no gradient tensors in `g` are skipped; `through_backbone=false` stops
  /// at the tap points (frozen backbone).
  void backward_views(const losses::BundleGrad<T>& g, bool through_backbone = true) {
    const int L = static_cast<int>(branches_.size());
    const int N = spec_.num_classes;
    const bool branch_grads_present =
        !g.q.empty() || !g.mu.empty() || !g.scpd.empty();
    std::vector<Tensor<T>> tap_grads(static_cast<size_t>(L));
    for (int l = 0; l < L && branch_grads_present; ++l) {
      auto& br = branches_[static_cast<size_t>(l)];
      Tensor<T> dtap;
      if (aux_ == AuxTaskKind::scpd) {
        Tensor<T> dp({B_, N});
        std::copy(g.scpd.data() + g.scpd.offset(l, 0, 0),
                  g.scpd.data() + g.scpd.offset(l, 0, 0) + dp.numel(), dp.data());
        Tensor<T> dtap0 = br.backward(dp);
        dtap = Tensor<T>(taps_[static_cast<size_t>(l)].shape());
        std::copy(dtap0.data(), dtap0.data() + dtap0.numel(), dtap.data());
      } else {
        const Tensor<T>& src = aux_ == AuxTaskKind::ssad ? g.q : g.mu;
        const int K = src.dim(3);
        Tensor<T> dprimary({Mv_ * B_, K});
        std::copy(src.data() + src.offset(l, 0, 0, 0),
                  src.data() + src.offset(l, 0, 0, 0) + dprimary.numel(), dprimary.data());
        if (aux_ == AuxTaskKind::multitask && !g.scpd.empty()) {
          Tensor<T> dsec({B_, N});
          std::copy(g.scpd.data() + g.scpd.offset(l, 0, 0),
                    g.scpd.data() + g.scpd.offset(l, 0, 0) + dsec.numel(), dsec.data());
          dtap = br.backward(dprimary, &dsec);
        } else {
          dtap = br.backward(dprimary);
        }
      }
      tap_grads[static_cast<size_t>(l)] = std::move(dtap);
    }
    if (!through_backbone) return;
    Tensor<T> dp_flat = g.p;
    dp_flat.reshape({Mv_ * B_, N});
    backbone_.backward(dp_flat, tap_grads);
  }

  /// Inference on the backbone alone (running statistics, nothing recorded).
  Tensor<T> forward_deploy(const Tensor<T>& batch) {
    nn::FwdFlags<T> f{false, false, false};
    return backbone_.forward(batch, f);
  }

  /// Pooled penultimate-layer embeddings in inference mode.
  Tensor<T> pooled_features(const Tensor<T>& batch) {
    nn::FwdFlags<T> f{false, false, false};
    Tensor<T> pooled;
    backbone_.forward(batch, f, nullptr, &pooled);
    return pooled;
  }

  void zero_grad() {
    for (auto& p : parameters()) p.param->zero_grad();
  }

  std::vector<nn::ParamRef<T>> parameters(bool include_branches = true) {
    std::vector<nn::ParamRef<T>> ps;
    std::vector<nn::BufferRef<T>> bs;
    backbone_.collect("backbone", ps, bs);
    if (include_branches && !deploy_mode_)
      for (size_t l = 0; l < branches_.size(); ++l)
        branches_[l].collect("branch" + std::to_string(l), ps, bs);
    return ps;
  }

  std::vector<nn::ParamRef<T>> backbone_parameters() {
    std::vector<nn::ParamRef<T>> ps;
    std::vector<nn::BufferRef<T>> bs;
    backbone_.collect("backbone", ps, bs);
    return ps;
  }

  std::vector<nn::ParamRef<T>> branch_parameters() {
    std::vector<nn::ParamRef<T>> ps;
    std::vector<nn::BufferRef<T>> bs;
    for (size_t l = 0; l < branches_.size(); ++l)
      branches_[l].collect("branch" + std::to_string(l), ps, bs);
    return ps;
  }

  std::vector<nn::BufferRef<T>> buffers(bool include_branches = true) {
    std::vector<nn::ParamRef<T>> ps;
    std::vector<nn::BufferRef<T>> bs;
    backbone_.collect("backbone", ps, bs);
    if (include_branches && !deploy_mode_)
      for (size_t l = 0; l < branches_.size(); ++l)
        branches_[l].collect("branch" + std::to_string(l), ps, bs);
    return bs;
  }

  int64_t deployed_params() const { return backbone_.param_count(); }
  int64_t deployed_macs() const { return backbone_.macs(); }

  int backbone_downsamples() const { return backbone_.downsamples(); }

  /// Total downsampling along stem -> tap -> branch end, per branch.
  std::vector<int> branch_downsample_trace() const {
    std::vector<int> out;
    int into_tap = 0;
    for (size_t l = 0; l < branches_.size(); ++l) {
      into_tap += spec_.stages[l].stride > 1 ? 1 : 0;
      out.push_back(into_tap + branches_[l].downsamples());
    }
    return out;
  }

  const NetworkSpec& spec() const { return spec_; }
  AuxTaskKind aux_task() const { return aux_; }
  int pretext_views() const { return M_; }
  int num_branches() const { return static_cast<int>(branches_.size()); }
  const AuxBranch<T>& branch(int l) const { return branches_[static_cast<size_t>(l)]; }

  bool deploy_mode() const { return deploy_mode_; }
  void set_deploy_mode(bool on) { deploy_mode_ = on; }

 private:
  static Tensor<T> slice_rows(const Tensor<T>& x, int rows) {
    std::vector<int> shp = x.shape();
    shp[0] = rows;
    Tensor<T> out(shp);
    std::copy(x.data(), x.data() + out.numel(), out.data());
    return out;
  }

  NetworkSpec spec_;
  AuxTaskKind aux_ = AuxTaskKind::none;
  int M_ = 1;
  Backbone<T> backbone_;
  std::vector<AuxBranch<T>> branches_;
  bool deploy_mode_ = false;
  std::vector<Tensor<T>> taps_;
  int B_ = 0, Mv_ = 0;
};

template <typename T>
StudentNetwork<T> build_reference_backbone(const std::string& name, int N, AuxTaskKind aux,
                                           int M, uint64_t seed) {
  return StudentNetwork<T>(reference_spec(name, N), aux, M, seed);
}

}  // namespace augkd::models
