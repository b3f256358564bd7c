#include "augkd/train.hpp"

#include <algorithm>
#include <numeric>
#include <sstream>

#include "augkd/eval.hpp"

namespace augkd::train {

void TrainConfig::validate() const {
  taus.validate();
  if (epochs < 1) throw std::invalid_argument("TrainConfig: epochs < 1");
  if (batch_size < 1) throw std::invalid_argument("TrainConfig: batch_size < 1");
  if (!(optim.lr >= 0)) throw std::invalid_argument("TrainConfig: negative lr");
  if (cohort < 2) throw std::invalid_argument("TrainConfig: online cohort needs K >= 2");
  int prev = -1;
  for (int m : optim.milestones) {
    if (m <= prev) throw std::invalid_argument("TrainConfig: milestones must be increasing");
    if (m >= epochs)
      throw std::invalid_argument("TrainConfig: milestone " + std::to_string(m) +
                                  " not below epochs " + std::to_string(epochs));
    prev = m;
  }
}

TrainConfig TrainConfig::from_config(const config::Config& cfg) {
  TrainConfig tc;
  tc.pretext = transforms::pretext_from_string(cfg.get_str("pretext", "rotation4"));
  tc.aux_task = models::aux_task_from_string(cfg.get_str("aux_task", "ssad"));
  tc.taus.tau_ce = cfg.get_double("tau_ce", 1.0);
  tc.taus.tau_kd = cfg.get_double("tau_kd", 3.0);
  tc.epochs = cfg.get_int("epochs", 30);
  tc.batch_size = cfg.get_int("batch_size", 64);
  tc.seed = static_cast<uint64_t>(cfg.get_int("seed", 1));
  tc.optim.lr = cfg.get_double("lr", 0.05);
  tc.optim.momentum = cfg.get_double("momentum", 0.9);
  tc.optim.weight_decay = cfg.get_double("weight_decay", 5e-4);
  // default decay points mirror the 150/180/210-of-240 shape, rescaled
  std::vector<int> def = {static_cast<int>(tc.epochs * 0.625), static_cast<int>(tc.epochs * 0.75),
                          static_cast<int>(tc.epochs * 0.875)};
  def.erase(std::unique(def.begin(), def.end()), def.end());
  tc.optim.milestones = cfg.get_int_list("milestones", def);
  tc.optim.gamma = cfg.get_double("lr_decay", 0.1);
  const std::string tm = cfg.get_str("teacher_mode", "joint");
  if (tm == "joint")
    tc.teacher_mode = TeacherMode::joint;
  else if (tm == "frozen_backbone")
    tc.teacher_mode = TeacherMode::frozen_backbone;
  else
    throw std::invalid_argument("teacher_mode must be 'joint' or 'frozen_backbone', got " + tm);
  tc.deterministic = cfg.get_bool("deterministic", true);
  tc.log_steps = cfg.get_bool("log_steps", false);
  tc.augment = cfg.get_str("augment", "none") == "crop_flip";
  tc.cohort = cfg.get_int("cohort", 2);
  tc.validate();
  return tc;
}

SGD::SGD(std::vector<nn::ParamRef<float>> params, const OptimConfig& cfg)
    : params_(std::move(params)), cfg_(cfg), lr_(cfg.lr) {
  velocity_.reserve(params_.size());
  for (auto& p : params_) velocity_.emplace_back(p.param->value.shape());
}

void SGD::step() {
  for (size_t i = 0; i < params_.size(); ++i) {
    auto& p = *params_[i].param;
    kernels::sgd_momentum(p.value.data(), velocity_[i].data(), p.grad.data(), p.value.numel(),
                          static_cast<float>(lr_), static_cast<float>(cfg_.momentum),
                          static_cast<float>(cfg_.weight_decay));
  }
}

double lr_at_epoch(const OptimConfig& cfg, int epoch) {
  double lr = cfg.lr;
  for (int m : cfg.milestones)
    if (epoch >= m) lr *= cfg.gamma;
  return lr;
}

namespace {

using transforms::ViewBatch;

std::string rng_state_string(const std::mt19937_64& rng) {
  std::ostringstream ss;
  ss << rng;
  return ss.str();
}

/// Identity-only view batch for runs that never look at transformed views.
ViewBatch<float> single_view(const Tensor<float>& batch, std::vector<int> labels) {
  ViewBatch<float> vb;
  const auto& s = batch.shape();
  vb.views = batch;
  vb.views.reshape({1, s[0], s[1], s[2], s[3]});
  vb.ss_labels = {0};
  vb.source_labels = std::move(labels);
  return vb;
}

ViewBatch<float> views_for(const TrainConfig& cfg, const Tensor<float>& batch,
                           std::vector<int> labels) {
  if (cfg.aux_task == models::AuxTaskKind::none || cfg.aux_task == models::AuxTaskKind::scpd)
    return single_view(batch, std::move(labels));
  return transforms::make_views(cfg.pretext, batch, std::move(labels));
}

Tensor<float> view0_slice(const Tensor<float>& p) {
  const int B = p.dim(1), N = p.dim(2);
  Tensor<float> out({B, N});
  std::copy(p.data(), p.data() + static_cast<int64_t>(B) * N, out.data());
  return out;
}

struct StepLoss {
  double total = 0;
  losses::Components comps;
  losses::BundleGrad<float> grad;
};

/// Task loss plus the configured auxiliary term (the single-network
/// objective); gradient lands in bundle coordinates.
StepLoss single_loss(const losses::LogitsBundle<float>& bundle, const std::vector<int>& labels,
                     const TrainConfig& cfg) {
  StepLoss out;
  out.grad = losses::BundleGrad<float>::like(bundle);
  Tensor<float> dp0;
  const double task = losses::loss_task(view0_slice(bundle.p), labels, cfg.taus, &dp0);
  std::copy(dp0.data(), dp0.data() + dp0.numel(), out.grad.p.data());
  out.comps["task"] = task;
  double aux = 0;
  switch (cfg.aux_task) {
    case models::AuxTaskKind::none:
      break;
    case models::AuxTaskKind::ssad: {
      Tensor<float> dq;
      aux = losses::loss_aux_ssad(bundle.q, labels, bundle.N, cfg.pretext_M(), cfg.taus, &dq);
      out.grad.q = std::move(dq);
      out.comps["aux_ssad"] = aux;
      break;
    }
    case models::AuxTaskKind::scpd: {
      Tensor<float> ds;
      aux = losses::loss_aux_scpd(bundle.scpd, labels, cfg.taus, &ds);
      out.grad.scpd = std::move(ds);
      out.comps["aux_scpd"] = aux;
      break;
    }
    case models::AuxTaskKind::sscpd: {
      Tensor<float> dm;
      aux = losses::loss_aux_sscpd(bundle.mu, cfg.taus, &dm);
      out.grad.mu = std::move(dm);
      out.comps["aux_sscpd"] = aux;
      break;
    }
    case models::AuxTaskKind::multitask: {
      Tensor<float> ds, dm;
      auto mt = losses::loss_aux_multitask(bundle.scpd, bundle.mu, labels, cfg.taus, &ds, &dm);
      aux = mt.total;
      out.grad.scpd = std::move(ds);
      out.grad.mu = std::move(dm);
      out.comps["aux_scpd"] = mt.scpd;
      out.comps["aux_sscpd"] = mt.sscpd;
      break;
    }
  }
  out.total = task + aux;
  out.comps["total"] = out.total;
  return out;
}

struct Averager {
  losses::Components sums;
  int64_t n = 0;
  void add(const losses::Components& c) {
    for (const auto& [k, v] : c) sums[k] += v;
    ++n;
  }
  losses::Components mean() const {
    losses::Components out;
    for (const auto& [k, v] : sums) out[k] = v / static_cast<double>(std::max<int64_t>(1, n));
    return out;
  }
};

void log_epoch(metrics::Writer* writer, const std::string& run_id, int epoch, int64_t step,
               const Averager& avg, const std::map<std::string, double>& extra) {
  if (!writer) return;
  metrics::Record rec;
  rec.run_id = run_id;
  rec.scope = "epoch";
  rec.epoch = epoch;
  rec.step = step;
  rec.values = avg.mean();
  for (const auto& [k, v] : extra) rec.values[k] = v;
  writer->write(rec);
}

void check_dataset(const data::Dataset& ds, const Net& net, const char* what) {
  ds.validate();
  if (ds.num_classes != net.spec().num_classes)
    throw std::invalid_argument(std::string(what) + ": dataset class count " +
                                std::to_string(ds.num_classes) + " != network classes " +
                                std::to_string(net.spec().num_classes));
}

std::vector<int> epoch_order(int n, std::mt19937_64& rng) {
  std::vector<int> order(static_cast<size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);
  return order;
}

}  // namespace

TrainResult train_single(Net& net, const data::Dataset& train_set, const data::Dataset& test_set,
                         const TrainConfig& cfg, metrics::Writer* writer,
                         const std::string& run_id) {
  cfg.validate();
  check_dataset(train_set, net, "train_single");
  check_dataset(test_set, net, "train_single");
  if (cfg.aux_task != net.aux_task())
    throw std::invalid_argument("train_single: network was built for aux task '" +
                                models::to_string(net.aux_task()) + "', config asks for '" +
                                models::to_string(cfg.aux_task) + "'");

  std::mt19937_64 rng(cfg.seed);
  SGD opt(net.parameters(), cfg.optim);
  nn::FwdFlags<float> fl{true, true, true};
  TrainResult result;
  int64_t step = 0;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    opt.set_lr(lr_at_epoch(cfg.optim, epoch));
    Averager avg;
    auto order = epoch_order(train_set.size(), rng);
    for (int start = 0; start < train_set.size(); start += cfg.batch_size) {
      const int end = std::min<int>(train_set.size(), start + cfg.batch_size);
      std::vector<int> idx(order.begin() + start, order.begin() + end);
      auto [batch, labels] = data::gather_batch(train_set, idx);
      if (cfg.augment) data::augment_crop_flip(batch, rng);
      auto vb = views_for(cfg, batch, labels);
      auto bundle = net.forward_views(vb, fl);
      StepLoss sl = single_loss(bundle, labels, cfg);
      net.zero_grad();
      net.backward_views(sl.grad);
      opt.step();
      avg.add(sl.comps);
      ++step;
      if (cfg.log_steps && writer) {
        metrics::Record rec{run_id, "step", step, epoch, {}};
        rec.values = sl.comps;
        writer->write(rec);
      }
    }
    const auto acc = eval::accuracy_of(net, test_set);
    result.test_acc.push_back(acc.top1);
    std::map<std::string, double> extra{{"acc_test_top1", acc.top1}, {"lr", opt.lr()}};
    if (acc.top5) extra["acc_test_top5"] = *acc.top5;
    log_epoch(writer, run_id, epoch, step, avg, extra);
  }
  result.final_test_acc = result.test_acc.empty() ? 0 : result.test_acc.back();
  result.steps = step;
  result.rng_state = rng_state_string(rng);
  if (writer) writer->flush();
  return result;
}

TrainResult train_teacher(Net& net, const data::Dataset& train_set,
                          const data::Dataset& test_set, const TrainConfig& cfg,
                          metrics::Writer* writer, const std::string& run_id) {
  cfg.validate();
  if (cfg.aux_task != models::AuxTaskKind::ssad)
    throw std::invalid_argument("train_teacher: auxiliary task must be 'ssad'");
  if (net.aux_task() != models::AuxTaskKind::ssad)
    throw std::invalid_argument("train_teacher: network lacks joint-space branches");
  check_dataset(train_set, net, "train_teacher");
  check_dataset(test_set, net, "train_teacher");

  if (cfg.teacher_mode == TeacherMode::joint) {
    return train_single(net, train_set, test_set, cfg, writer, run_id);
  }

  // Phase 1: backbone alone on the primary task.
  std::mt19937_64 rng(cfg.seed);
  const int M = cfg.pretext_M();
  nn::FwdFlags<float> train_fl{true, true, true};
  nn::FwdFlags<float> frozen_fl{false, false, false};
  TrainResult result;
  int64_t step = 0;

  {
    SGD opt(net.backbone_parameters(), cfg.optim);
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
      opt.set_lr(lr_at_epoch(cfg.optim, epoch));
      Averager avg;
      auto order = epoch_order(train_set.size(), rng);
      for (int start = 0; start < train_set.size(); start += cfg.batch_size) {
        const int end = std::min<int>(train_set.size(), start + cfg.batch_size);
        std::vector<int> idx(order.begin() + start, order.begin() + end);
        auto [batch, labels] = data::gather_batch(train_set, idx);
        if (cfg.augment) data::augment_crop_flip(batch, rng);
        auto vb = single_view(batch, labels);
        auto bundle = net.forward_views(vb, train_fl, /*branch_flags=*/&frozen_fl,
                                        /*run_branches=*/false);
        losses::BundleGrad<float> grad = losses::BundleGrad<float>::like(bundle);
        Tensor<float> dp0;
        const double task = losses::loss_task(view0_slice(bundle.p), labels, cfg.taus, &dp0);
        std::copy(dp0.data(), dp0.data() + dp0.numel(), grad.p.data());
        net.zero_grad();
        net.backward_views(grad, /*through_backbone=*/true);
        opt.step();
        losses::Components c{{"task", task}, {"total", task}};
        avg.add(c);
        ++step;
      }
      const auto acc = eval::accuracy_of(net, test_set);
      result.test_acc.push_back(acc.top1);
      log_epoch(writer, run_id, epoch, step, avg,
                {{"acc_test_top1", acc.top1}, {"lr", opt.lr()}, {"phase", 1}});
    }
  }

  // Phase 2: branches on the joint-space task; backbone frozen in inference
  // mode, its parameters and statistics untouched.
  {
    SGD opt(net.branch_parameters(), cfg.optim);
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
      opt.set_lr(lr_at_epoch(cfg.optim, epoch));
      Averager avg;
      auto order = epoch_order(train_set.size(), rng);
      for (int start = 0; start < train_set.size(); start += cfg.batch_size) {
        const int end = std::min<int>(train_set.size(), start + cfg.batch_size);
        std::vector<int> idx(order.begin() + start, order.begin() + end);
        auto [batch, labels] = data::gather_batch(train_set, idx);
        if (cfg.augment) data::augment_crop_flip(batch, rng);
        auto vb = transforms::make_views(cfg.pretext, batch, labels);
        auto bundle = net.forward_views(vb, frozen_fl, &train_fl);
        losses::BundleGrad<float> grad = losses::BundleGrad<float>::like(bundle);
        Tensor<float> dq;
        const double aux =
            losses::loss_aux_ssad(bundle.q, labels, bundle.N, M, cfg.taus, &dq);
        grad.q = std::move(dq);
        net.zero_grad();
        net.backward_views(grad, /*through_backbone=*/false);
        opt.step();
        losses::Components c{{"aux_ssad", aux}, {"total", aux}};
        avg.add(c);
        ++step;
      }
      const auto acc = eval::accuracy_of(net, test_set);
      result.test_acc.push_back(acc.top1);
      log_epoch(writer, run_id, cfg.epochs + epoch, step, avg,
                {{"acc_test_top1", acc.top1}, {"lr", opt.lr()}, {"phase", 2}});
    }
  }

  result.final_test_acc = result.test_acc.empty() ? 0 : result.test_acc.back();
  result.steps = step;
  result.rng_state = rng_state_string(rng);
  if (writer) writer->flush();
  return result;
}

TrainResult train_student_offline(Net& student, Net& teacher, const data::Dataset& train_set,
                                  const data::Dataset& test_set, const TrainConfig& cfg,
                                  metrics::Writer* writer, const std::string& run_id) {
  cfg.validate();
  check_dataset(train_set, student, "train_student_offline");
  check_dataset(test_set, student, "train_student_offline");
  if (teacher.spec().num_classes != student.spec().num_classes)
    throw std::invalid_argument("train_student_offline: class count mismatch");
  if (teacher.num_branches() != student.num_branches())
    throw std::invalid_argument("train_student_offline: teacher has " +
                                std::to_string(teacher.num_branches()) + " branches, student " +
                                std::to_string(student.num_branches()) +
                                " (one-to-one pairing impossible)");
  if (teacher.pretext_views() != student.pretext_views() ||
      student.pretext_views() != cfg.pretext_M())
    throw std::invalid_argument("train_student_offline: view count M mismatch");
  if (student.aux_task() != models::AuxTaskKind::ssad ||
      teacher.aux_task() != models::AuxTaskKind::ssad)
    throw std::invalid_argument("train_student_offline: both networks need joint-space heads");

  std::mt19937_64 rng(cfg.seed);
  SGD opt(student.parameters(), cfg.optim);
  nn::FwdFlags<float> train_fl{true, true, true};
  nn::FwdFlags<float> eval_fl{false, false, false};
  TrainResult result;
  int64_t step = 0;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    opt.set_lr(lr_at_epoch(cfg.optim, epoch));
    Averager avg;
    auto order = epoch_order(train_set.size(), rng);
    for (int start = 0; start < train_set.size(); start += cfg.batch_size) {
      const int end = std::min<int>(train_set.size(), start + cfg.batch_size);
      std::vector<int> idx(order.begin() + start, order.begin() + end);
      auto [batch, labels] = data::gather_batch(train_set, idx);
      if (cfg.augment) data::augment_crop_flip(batch, rng);
      auto vb = transforms::make_views(cfg.pretext, batch, labels);
      auto bundle_t = teacher.forward_views(vb, eval_fl);  // frozen teacher
      auto bundle_s = student.forward_views(vb, train_fl);
      auto res = losses::loss_offline_student(bundle_s, bundle_t, labels, cfg.taus);
      student.zero_grad();
      student.backward_views(res.grad);
      opt.step();
      res.components["total"] = res.total;
      avg.add(res.components);
      ++step;
      if (cfg.log_steps && writer) {
        metrics::Record rec{run_id, "step", step, epoch, res.components};
        writer->write(rec);
      }
    }
    const auto acc = eval::accuracy_of(student, test_set);
    result.test_acc.push_back(acc.top1);
    log_epoch(writer, run_id, epoch, step, avg,
              {{"acc_test_top1", acc.top1}, {"lr", opt.lr()}});
  }
  result.final_test_acc = result.test_acc.empty() ? 0 : result.test_acc.back();
  result.steps = step;
  result.rng_state = rng_state_string(rng);
  if (writer) writer->flush();
  return result;
}

std::vector<TrainResult> train_online(std::vector<Net*> nets, const data::Dataset& train_set,
                                      const data::Dataset& test_set, const TrainConfig& cfg,
                                      metrics::Writer* writer, const std::string& run_id) {
  cfg.validate();
  const int K = static_cast<int>(nets.size());
  if (K < 2) throw std::invalid_argument("train_online: need K >= 2 peer networks");
  for (Net* n : nets) {
    check_dataset(train_set, *n, "train_online");
    if (n->aux_task() != models::AuxTaskKind::ssad)
      throw std::invalid_argument("train_online: every peer needs joint-space heads");
    if (n->spec().num_classes != nets[0]->spec().num_classes ||
        n->pretext_views() != nets[0]->pretext_views())
      throw std::invalid_argument("train_online: peers disagree on N or M");
    if (n->num_branches() != nets[0]->num_branches())
      throw std::invalid_argument("train_online: peers disagree on branch count L");
  }
  check_dataset(test_set, *nets[0], "train_online");

  std::mt19937_64 rng(cfg.seed);
  std::vector<SGD> opts;
  opts.reserve(static_cast<size_t>(K));
  for (Net* n : nets) opts.emplace_back(n->parameters(), cfg.optim);
  nn::FwdFlags<float> fl{true, true, true};
  std::vector<TrainResult> results(static_cast<size_t>(K));
  int64_t step = 0;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    const double lr = lr_at_epoch(cfg.optim, epoch);
    for (auto& o : opts) o.set_lr(lr);
    std::vector<Averager> avgs(static_cast<size_t>(K));
    auto order = epoch_order(train_set.size(), rng);
    for (int start = 0; start < train_set.size(); start += cfg.batch_size) {
      const int end = std::min<int>(train_set.size(), start + cfg.batch_size);
      std::vector<int> idx(order.begin() + start, order.begin() + end);
      auto [batch, labels] = data::gather_batch(train_set, idx);
      if (cfg.augment) data::augment_crop_flip(batch, rng);
      auto vb = transforms::make_views(cfg.pretext, batch, labels);
      std::vector<losses::LogitsBundle<float>> bundles;
      bundles.reserve(static_cast<size_t>(K));
      for (Net* n : nets) bundles.push_back(n->forward_views(vb, fl));
      auto res = losses::loss_online(bundles, labels, cfg.taus);
      for (int k = 0; k < K; ++k) {
        nets[static_cast<size_t>(k)]->zero_grad();
        nets[static_cast<size_t>(k)]->backward_views(res.grads[static_cast<size_t>(k)]);
        opts[static_cast<size_t>(k)].step();
        auto& comp = res.per_network[static_cast<size_t>(k)];
        comp["total"] = comp["task"] + comp["aux_ssad"] + comp["kl_q"] + comp["kl_p"];
        avgs[static_cast<size_t>(k)].add(comp);
      }
      ++step;
    }
    for (int k = 0; k < K; ++k) {
      const auto acc = eval::accuracy_of(*nets[static_cast<size_t>(k)], test_set);
      results[static_cast<size_t>(k)].test_acc.push_back(acc.top1);
      log_epoch(writer, run_id + ".net" + std::to_string(k), epoch, step,
                avgs[static_cast<size_t>(k)], {{"acc_test_top1", acc.top1}, {"lr", lr}});
    }
  }
  for (auto& r : results) {
    r.final_test_acc = r.test_acc.empty() ? 0 : r.test_acc.back();
    r.steps = step;
    r.rng_state = rng_state_string(rng);
  }
  if (writer) writer->flush();
  return results;
}

}  // namespace augkd::train
