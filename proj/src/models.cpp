#include "augkd/models.hpp"

namespace augkd::models {

AuxTaskKind aux_task_from_string(const std::string& s) {
  if (s == "none") return AuxTaskKind::none;
  if (s == "scpd") return AuxTaskKind::scpd;
  if (s == "sscpd") return AuxTaskKind::sscpd;
  if (s == "multitask") return AuxTaskKind::multitask;
  if (s == "ssad") return AuxTaskKind::ssad;
  throw std::invalid_argument("unknown aux task: " + s);
}

std::string to_string(AuxTaskKind k) {
  switch (k) {
    case AuxTaskKind::none: return "none";
    case AuxTaskKind::scpd: return "scpd";
    case AuxTaskKind::sscpd: return "sscpd";
    case AuxTaskKind::multitask: return "multitask";
    case AuxTaskKind::ssad: return "ssad";
  }
  return "?";
}

NetworkSpec reference_spec(const std::string& name, int N) {
  NetworkSpec spec;
  spec.arch = name;
  spec.num_classes = N;
  if (name == "resnet56_cifar") {
    spec.style = nn::BlockStyle::postact;
    spec.input_size = 32;
    spec.stem_channels = 16;
    spec.stages = {{9, 16, 1}, {9, 32, 2}, {9, 64, 2}};
  } else if (name == "wrn40_2_cifar") {
    // depth 40 => (40-4)/6 = 6 blocks per stage, widen factor 2
    spec.style = nn::BlockStyle::preact;
    spec.input_size = 32;
    spec.stem_channels = 16;
    spec.stages = {{6, 32, 1}, {6, 64, 2}, {6, 128, 2}};
  } else if (name == "tiny_resnet") {
    spec.style = nn::BlockStyle::postact;
    spec.input_size = 16;
    spec.stem_channels = 8;
    spec.stages = {{2, 8, 1}, {2, 16, 2}, {2, 32, 2}};
  } else {
    throw std::invalid_argument("unknown backbone name: " + name);
  }
  spec.validate();
  return spec;
}

}  // namespace augkd::models
