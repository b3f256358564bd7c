#pragma once

#include <map>
#include <string>

#include "augkd/models.hpp"

namespace augkd::ckpt {

/// Self-describing checkpoint header. The architecture block lets a loader
/// rebuild the network before filling parameters; the joint-label ordering
/// tag travels with every checkpoint because head layouts depend on it.
struct Manifest {
  models::NetworkSpec spec;
  models::AuxTaskKind aux = models::AuxTaskKind::none;
  int M = 1;
  std::string pretext = "rotation4";
  std::string joint_order;  // filled from joint::kOrderTag on save
  int epoch = 0;
  std::string run_id;
  std::string config_digest;
  std::map<std::string, double> metrics;
  std::string rng_state;
  bool deployed = false;  // saved without branch tensors
};

void save_checkpoint(const std::string& path, models::StudentNetwork<float>& net,
                     Manifest manifest);

struct Loaded {
  Manifest manifest;
  models::StudentNetwork<float> net;
};

/// Rebuilds the network described by the manifest and restores every tensor
/// bit-exactly.
Loaded load_checkpoint(const std::string& path);

/// Restores into an existing network; the manifest's architecture must match
/// the network's spec exactly.
Manifest load_checkpoint_into(const std::string& path, models::StudentNetwork<float>& net);

}  // namespace augkd::ckpt
