#pragma once

#include <string>
#include <vector>

#include "augkd/config.hpp"
#include "augkd/data.hpp"
#include "augkd/losses.hpp"
#include "augkd/metrics.hpp"
#include "augkd/models.hpp"
#include "augkd/transforms.hpp"

namespace augkd::train {

struct OptimConfig {
  double lr = 0.05;
  double momentum = 0.9;
  double weight_decay = 5e-4;
  std::vector<int> milestones;  // epochs at which lr is multiplied by gamma
  double gamma = 0.1;
};

enum class TeacherMode { frozen_backbone, joint };

struct TrainConfig {
  transforms::PretextKind pretext = transforms::PretextKind::rotation4;
  models::AuxTaskKind aux_task = models::AuxTaskKind::ssad;
  losses::Taus taus;
  OptimConfig optim;
  int epochs = 30;
  int batch_size = 64;
  uint64_t seed = 1;
  TeacherMode teacher_mode = TeacherMode::joint;
  bool deterministic = true;
  bool log_steps = false;
  bool augment = false;
  int cohort = 2;  // K, online only

  void validate() const;
  int pretext_M() const { return transforms::family(pretext).M; }

  /// Training-relevant keys from a flat config (dataset keys are read by the
  /// caller).
  static TrainConfig from_config(const config::Config& cfg);
};

/// Plain SGD with momentum and coupled weight decay over a parameter set.
class SGD {
 public:
  SGD(std::vector<nn::ParamRef<float>> params, const OptimConfig& cfg);
  void step();
  void set_lr(double lr) { lr_ = lr; }
  double lr() const { return lr_; }

 private:
  std::vector<nn::ParamRef<float>> params_;
  std::vector<Tensor<float>> velocity_;
  OptimConfig cfg_;
  double lr_;
};

double lr_at_epoch(const OptimConfig& cfg, int epoch);

struct TrainResult {
  std::vector<double> test_acc;  // per epoch, deployed backbone
  double final_test_acc = 0;
  int64_t steps = 0;
  std::string rng_state;  // master RNG state at the end of the run
};

using Net = models::StudentNetwork<float>;

/// Single network, primary task plus the configured auxiliary loss.
TrainResult train_single(Net& net, const data::Dataset& train_set, const data::Dataset& test_set,
                         const TrainConfig& cfg, metrics::Writer* writer = nullptr,
                         const std::string& run_id = "single");

/// Teacher training; `joint` optimizes task+auxiliary end-to-end,
/// `frozen_backbone` first fits the backbone alone, then the branches with
/// the backbone frozen in inference mode.
TrainResult train_teacher(Net& net, const data::Dataset& train_set,
                          const data::Dataset& test_set, const TrainConfig& cfg,
                          metrics::Writer* writer = nullptr,
                          const std::string& run_id = "teacher");

/// Offline distillation under a frozen teacher.
TrainResult train_student_offline(Net& student, Net& teacher, const data::Dataset& train_set,
                                  const data::Dataset& test_set, const TrainConfig& cfg,
                                  metrics::Writer* writer = nullptr,
                                  const std::string& run_id = "student");

/// K-peer mutual distillation; one synchronized update per step.
std::vector<TrainResult> train_online(std::vector<Net*> nets, const data::Dataset& train_set,
                                      const data::Dataset& test_set, const TrainConfig& cfg,
                                      metrics::Writer* writer = nullptr,
                                      const std::string& run_id = "online");

}  // namespace augkd::train
