// Command-line front end: training pipelines, evaluation, linear probing and
// cost reporting over flat key=value config files.

#include <cstdio>
#include <filesystem>
#include <string>

#include "CLI11.hpp"
#include "augkd/checkpoint.hpp"
#include "augkd/config.hpp"
#include "augkd/data.hpp"
#include "augkd/eval.hpp"
#include "augkd/joint_label.hpp"
#include "augkd/kernels.hpp"
#include "augkd/metrics.hpp"
#include "augkd/models.hpp"
#include "augkd/train.hpp"

namespace fs = std::filesystem;
using namespace augkd;

namespace {

struct CommonArgs {
  std::string config_path;
  std::string out_dir = "runs/out";
  std::string teacher_ckpt;
  std::string ckpt;
  int seed = -1;
  bool deterministic = false;
};

config::Config load_config(const CommonArgs& args) {
  config::Config cfg = args.config_path.empty() ? config::Config::from_string("")
                                                : config::Config::from_file(args.config_path);
  if (args.seed >= 0) cfg.set("seed", std::to_string(args.seed));
  if (args.deterministic) cfg.set("deterministic", "true");
  return cfg;
}

data::Dataset load_dataset(const config::Config& cfg, const std::string& split) {
  const std::string kind = cfg.get_str("dataset", "synth");
  const uint64_t data_seed = static_cast<uint64_t>(cfg.get_int("data_seed", 42));
  data::Dataset ds;
  if (kind == "synth") {
    const int classes = cfg.get_int("synth_classes", 10);
    const int per_class = split == "train" ? cfg.get_int("synth_per_class", 64)
                                           : cfg.get_int("synth_test_per_class", 128);
    const int size = cfg.get_int("synth_size", 16);
    const float noise = static_cast<float>(cfg.get_double("synth_noise", 0.3));
    ds = data::synth_dataset(split == "train" ? data_seed : data_seed + 1, classes, per_class,
                             size, noise, split);
  } else if (kind == "cifar10" || kind == "cifar100" || kind == "cifar") {
    data::CifarOptions opts;
    opts.split = split;
    opts.mean = cfg.get_double_list("data_mean", {});
    opts.stddev = cfg.get_double_list("data_std", {});
    ds = data::ingest_cifar(cfg.get_str_required("data_dir"), opts);
    const int nc = cfg.get_int("num_classes", 0);
    if (nc > 0) ds.num_classes = nc;
  } else {
    throw std::runtime_error("dataset must be synth|cifar10|cifar100, got " + kind);
  }
  if (split == "train") {
    const double frac = cfg.get_double("fewshot_fraction", 1.0);
    if (frac < 1.0)
      ds = data::fewshot_split(ds, frac,
                               static_cast<uint64_t>(cfg.get_int("fewshot_seed", 7)));
  }
  return ds;
}

train::Net build_net(const config::Config& cfg, const train::TrainConfig& tc, int num_classes,
                     int input_size, models::AuxTaskKind aux, uint64_t seed,
                     const std::string& arch_key = "arch") {
  const std::string arch = cfg.get_str(arch_key, "tiny_resnet");
  models::NetworkSpec spec = models::reference_spec(arch, num_classes);
  spec.input_size = input_size;
  return train::Net(spec, aux, tc.pretext_M(), seed);
}

ckpt::Manifest make_manifest(const config::Config& cfg, const train::TrainConfig& tc,
                             const train::Net& net, const train::TrainResult& result,
                             const std::string& run_id) {
  ckpt::Manifest m;
  m.spec = net.spec();
  m.aux = net.aux_task();
  m.M = net.pretext_views();
  m.pretext = transforms::to_string(tc.pretext);
  m.epoch = tc.epochs;
  m.run_id = run_id;
  m.config_digest = cfg.digest();
  m.metrics["acc_test_top1"] = result.final_test_acc;
  m.rng_state = result.rng_state;
  return m;
}

std::string run_id_for(const config::Config& cfg, const std::string& role) {
  return role + "-" + config::fnv1a_hex(cfg.canonical() + role).substr(0, 12);
}

metrics::Writer make_writer(const std::string& out_dir) {
  fs::create_directories(out_dir);
  return metrics::Writer(out_dir + "/metrics.jsonl");
}

void print_result(const std::string& role, const train::TrainResult& r) {
  std::printf("%s: final test top-1 %.4f after %lld steps\n", role.c_str(), r.final_test_acc,
              static_cast<long long>(r.steps));
}

int cmd_train_single(const CommonArgs& args) {
  auto cfg = load_config(args);
  auto tc = train::TrainConfig::from_config(cfg);
  auto train_set = load_dataset(cfg, "train");
  auto test_set = load_dataset(cfg, "test");
  auto net = build_net(cfg, tc, train_set.num_classes, train_set.height(), tc.aux_task, tc.seed);
  cfg.require_all_consumed();
  auto writer = make_writer(args.out_dir);
  const std::string run_id = run_id_for(cfg, "single");
  auto result = train::train_single(net, train_set, test_set, tc, &writer, run_id);
  ckpt::save_checkpoint(args.out_dir + "/model.ckpt", net,
                        make_manifest(cfg, tc, net, result, run_id));
  print_result("train-single", result);
  return 0;
}

int cmd_train_teacher(const CommonArgs& args) {
  auto cfg = load_config(args);
  cfg.set("aux_task", "ssad");
  auto tc = train::TrainConfig::from_config(cfg);
  auto train_set = load_dataset(cfg, "train");
  auto test_set = load_dataset(cfg, "test");
  auto net = build_net(cfg, tc, train_set.num_classes, train_set.height(),
                       models::AuxTaskKind::ssad, tc.seed);
  cfg.require_all_consumed();
  auto writer = make_writer(args.out_dir);
  const std::string run_id = run_id_for(cfg, "teacher");
  auto result = train::train_teacher(net, train_set, test_set, tc, &writer, run_id);
  ckpt::save_checkpoint(args.out_dir + "/teacher.ckpt", net,
                        make_manifest(cfg, tc, net, result, run_id));
  print_result("train-teacher", result);
  return 0;
}

int cmd_train_student(const CommonArgs& args) {
  if (args.teacher_ckpt.empty())
    throw std::runtime_error("train-student requires --teacher-ckpt");
  auto cfg = load_config(args);
  cfg.set("aux_task", "ssad");
  auto tc = train::TrainConfig::from_config(cfg);
  auto train_set = load_dataset(cfg, "train");
  auto test_set = load_dataset(cfg, "test");
  auto loaded = ckpt::load_checkpoint(args.teacher_ckpt);
  if (loaded.manifest.deployed)
    throw std::runtime_error("train-student: teacher checkpoint was saved deployed "
                             "(branch heads are required for distillation)");
  auto student = build_net(cfg, tc, train_set.num_classes, train_set.height(),
                           models::AuxTaskKind::ssad, tc.seed);
  cfg.require_all_consumed();
  auto writer = make_writer(args.out_dir);
  const std::string run_id = run_id_for(cfg, "student");
  auto result = train::train_student_offline(student, loaded.net, train_set, test_set, tc,
                                             &writer, run_id);
  ckpt::save_checkpoint(args.out_dir + "/student.ckpt", student,
                        make_manifest(cfg, tc, student, result, run_id));
  print_result("train-student", result);
  return 0;
}

int cmd_train_online(const CommonArgs& args) {
  auto cfg = load_config(args);
  cfg.set("aux_task", "ssad");
  auto tc = train::TrainConfig::from_config(cfg);
  auto train_set = load_dataset(cfg, "train");
  auto test_set = load_dataset(cfg, "test");
  std::vector<train::Net> nets;
  nets.reserve(static_cast<size_t>(tc.cohort));
  for (int k = 0; k < tc.cohort; ++k)
    nets.push_back(build_net(cfg, tc, train_set.num_classes, train_set.height(),
                             models::AuxTaskKind::ssad, tc.seed + static_cast<uint64_t>(k) + 1));
  cfg.require_all_consumed();
  auto writer = make_writer(args.out_dir);
  const std::string run_id = run_id_for(cfg, "online");
  std::vector<train::Net*> ptrs;
  for (auto& n : nets) ptrs.push_back(&n);
  auto results = train::train_online(ptrs, train_set, test_set, tc, &writer, run_id);
  for (int k = 0; k < tc.cohort; ++k) {
    ckpt::save_checkpoint(args.out_dir + "/net" + std::to_string(k) + ".ckpt",
                          nets[static_cast<size_t>(k)],
                          make_manifest(cfg, tc, nets[static_cast<size_t>(k)],
                                        results[static_cast<size_t>(k)],
                                        run_id + ".net" + std::to_string(k)));
    print_result("train-online net" + std::to_string(k), results[static_cast<size_t>(k)]);
  }
  return 0;
}

int cmd_eval(const CommonArgs& args) {
  if (args.ckpt.empty()) throw std::runtime_error("eval requires --ckpt");
  auto cfg = load_config(args);
  auto test_set = load_dataset(cfg, cfg.get_str("eval_split", "test"));
  auto loaded = ckpt::load_checkpoint(args.ckpt);
  loaded.net.set_deploy_mode(true);
  auto acc = eval::evaluate_accuracy(loaded.net, test_set);
  std::printf("top1 %.4f", acc.top1);
  if (acc.top5) std::printf("  top5 %.4f", *acc.top5);
  std::printf("\n");
  return 0;
}

int cmd_probe(const CommonArgs& args) {
  if (args.ckpt.empty()) throw std::runtime_error("probe requires --ckpt");
  auto cfg = load_config(args);
  auto train_set = load_dataset(cfg, "train");
  auto test_set = load_dataset(cfg, "test");
  auto loaded = ckpt::load_checkpoint(args.ckpt);
  eval::ProbeConfig pc;
  pc.epochs = cfg.get_int("probe_epochs", 30);
  pc.lr = cfg.get_double("probe_lr", 0.1);
  pc.batch_size = cfg.get_int("probe_batch_size", 64);
  pc.seed = static_cast<uint64_t>(cfg.get_int("probe_seed", 1));
  const double acc = eval::linear_probe(loaded.net, train_set, test_set, pc);
  std::printf("linear probe accuracy %.4f\n", acc);
  const std::string emb = cfg.get_str("embeddings_out", "");
  if (!emb.empty()) {
    const double r1 = eval::export_embeddings(loaded.net, test_set, emb);
    std::printf("embeddings written to %s (recall@1 %.4f)\n", emb.c_str(), r1);
  }
  return 0;
}

int cmd_cost(const CommonArgs& args, const std::string& arch, int classes, int input_size) {
  models::NetworkSpec spec = models::reference_spec(arch, classes);
  if (input_size > 0) spec.input_size = input_size;
  train::Net net(spec, models::AuxTaskKind::ssad, 4, 0);
  (void)args;
  std::printf("%s (N=%d, %dx%d): deployed params %lld, deployed MACs %lld\n", arch.c_str(),
              classes, spec.input_size, spec.input_size,
              static_cast<long long>(net.deployed_params()),
              static_cast<long long>(net.deployed_macs()));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"self-supervision augmented knowledge distillation workbench"};
  app.require_subcommand(1);
  CommonArgs args;

  auto add_common = [&](CLI::App* sub, bool with_teacher = false) {
    sub->add_option("--config", args.config_path, "flat key=value config file");
    sub->add_option("--seed", args.seed, "overrides the config seed");
    sub->add_option("--out-dir", args.out_dir, "output directory");
    sub->add_flag("--deterministic", args.deterministic, "force deterministic mode");
    if (with_teacher)
      sub->add_option("--teacher-ckpt", args.teacher_ckpt, "teacher checkpoint path");
  };

  auto* s1 = app.add_subcommand("train-single", "train one network with auxiliary branches");
  add_common(s1);
  auto* s2 = app.add_subcommand("train-teacher", "train a teacher (joint or frozen-backbone)");
  add_common(s2);
  auto* s3 = app.add_subcommand("train-student", "distill a student from a frozen teacher");
  add_common(s3, true);
  auto* s4 = app.add_subcommand("train-online", "train a cohort of peers with mutual mimicry");
  add_common(s4);
  auto* s5 = app.add_subcommand("eval", "deployed accuracy of a checkpoint");
  add_common(s5);
  s5->add_option("--ckpt", args.ckpt, "checkpoint to evaluate")->required();
  auto* s6 = app.add_subcommand("probe", "linear probe on frozen pooled features");
  add_common(s6);
  s6->add_option("--ckpt", args.ckpt, "checkpoint to probe")->required();
  auto* s7 = app.add_subcommand("cost", "deployed parameter and MAC counts");
  std::string arch = "tiny_resnet";
  int classes = 100, input_size = 0;
  s7->add_option("--arch", arch, "backbone name");
  s7->add_option("--classes", classes, "supervised class count");
  s7->add_option("--input-size", input_size, "override input resolution");

  CLI11_PARSE(app, argc, argv);

  try {
    if (s1->parsed()) return cmd_train_single(args);
    if (s2->parsed()) return cmd_train_teacher(args);
    if (s3->parsed()) return cmd_train_student(args);
    if (s4->parsed()) return cmd_train_online(args);
    if (s5->parsed()) return cmd_eval(args);
    if (s6->parsed()) return cmd_probe(args);
    if (s7->parsed()) return cmd_cost(args, arch, classes, input_size);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
