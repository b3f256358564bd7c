#include "augkd/checkpoint.hpp"

#include <cstring>
#include <fstream>

#include "augkd/joint_label.hpp"
#include "json.hpp"

namespace augkd::ckpt {

namespace {

using nlohmann::json;

constexpr char kMagic[8] = {'A', 'U', 'G', 'K', 'D', 'C', 'K', '1'};

json spec_to_json(const models::NetworkSpec& s) {
  json j;
  j["arch"] = s.arch;
  j["style"] = s.style == nn::BlockStyle::postact ? "postact" : "preact";
  j["in_channels"] = s.in_channels;
  j["input_size"] = s.input_size;
  j["stem_channels"] = s.stem_channels;
  j["num_classes"] = s.num_classes;
  json stages = json::array();
  for (const auto& st : s.stages) stages.push_back({st.blocks, st.channels, st.stride});
  j["stages"] = stages;
  return j;
}

models::NetworkSpec spec_from_json(const json& j) {
  models::NetworkSpec s;
  s.arch = j.at("arch").get<std::string>();
  const std::string style = j.at("style").get<std::string>();
  if (style == "postact")
    s.style = nn::BlockStyle::postact;
  else if (style == "preact")
    s.style = nn::BlockStyle::preact;
  else
    throw std::runtime_error("checkpoint: unknown block style " + style);
  s.in_channels = j.at("in_channels").get<int>();
  s.input_size = j.at("input_size").get<int>();
  s.stem_channels = j.at("stem_channels").get<int>();
  s.num_classes = j.at("num_classes").get<int>();
  for (const auto& st : j.at("stages"))
    s.stages.push_back({st.at(0).get<int>(), st.at(1).get<int>(), st.at(2).get<int>()});
  s.validate();
  return s;
}

bool specs_equal(const models::NetworkSpec& a, const models::NetworkSpec& b) {
  if (a.style != b.style || a.in_channels != b.in_channels || a.input_size != b.input_size ||
      a.stem_channels != b.stem_channels || a.num_classes != b.num_classes ||
      a.stages.size() != b.stages.size())
    return false;
  for (size_t i = 0; i < a.stages.size(); ++i)
    if (a.stages[i].blocks != b.stages[i].blocks || a.stages[i].channels != b.stages[i].channels ||
        a.stages[i].stride != b.stages[i].stride)
      return false;
  return true;
}

template <typename T>
void write_pod(std::ostream& out, const T& v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_pod(std::istream& in, const char* what) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!in) throw std::runtime_error(std::string("checkpoint: truncated while reading ") + what);
  return v;
}

void write_tensor(std::ostream& out, const std::string& name, const Tensor<float>& t) {
  write_pod<uint32_t>(out, static_cast<uint32_t>(name.size()));
  out.write(name.data(), static_cast<std::streamsize>(name.size()));
  write_pod<uint32_t>(out, static_cast<uint32_t>(t.shape().size()));
  for (int d : t.shape()) write_pod<int32_t>(out, d);
  write_pod<uint64_t>(out, static_cast<uint64_t>(t.numel()) * sizeof(float));
  out.write(reinterpret_cast<const char*>(t.data()),
            static_cast<std::streamsize>(t.numel() * sizeof(float)));
}

struct NamedTensor {
  std::string name;
  Tensor<float> value;
};

NamedTensor read_tensor(std::istream& in) {
  const uint32_t name_len = read_pod<uint32_t>(in, "tensor name length");
  std::string name(name_len, '\0');
  in.read(name.data(), name_len);
  const uint32_t ndim = read_pod<uint32_t>(in, "tensor rank");
  std::vector<int> shape(ndim);
  for (auto& d : shape) d = read_pod<int32_t>(in, "tensor dim");
  const uint64_t bytes = read_pod<uint64_t>(in, "tensor byte count");
  Tensor<float> t(shape);
  if (bytes != static_cast<uint64_t>(t.numel()) * sizeof(float))
    throw std::runtime_error("checkpoint: tensor '" + name + "' byte count mismatch");
  in.read(reinterpret_cast<char*>(t.data()), static_cast<std::streamsize>(bytes));
  if (!in) throw std::runtime_error("checkpoint: truncated tensor data for '" + name + "'");
  return {std::move(name), std::move(t)};
}

json manifest_to_json(const Manifest& m) {
  json j;
  j["format"] = "augkd-checkpoint-v1";
  j["spec"] = spec_to_json(m.spec);
  j["aux_task"] = models::to_string(m.aux);
  j["pretext_views"] = m.M;
  j["pretext"] = m.pretext;
  j["joint_label_order"] = m.joint_order;
  j["epoch"] = m.epoch;
  j["run_id"] = m.run_id;
  j["config_digest"] = m.config_digest;
  j["metrics"] = m.metrics;
  j["rng_state"] = m.rng_state;
  j["deployed"] = m.deployed;
  return j;
}

Manifest manifest_from_json(const json& j) {
  Manifest m;
  m.spec = spec_from_json(j.at("spec"));
  m.aux = models::aux_task_from_string(j.at("aux_task").get<std::string>());
  m.M = j.at("pretext_views").get<int>();
  m.pretext = j.at("pretext").get<std::string>();
  m.joint_order = j.at("joint_label_order").get<std::string>();
  m.epoch = j.at("epoch").get<int>();
  m.run_id = j.at("run_id").get<std::string>();
  m.config_digest = j.at("config_digest").get<std::string>();
  if (j.contains("metrics"))
    m.metrics = j.at("metrics").get<std::map<std::string, double>>();
  m.rng_state = j.at("rng_state").get<std::string>();
  m.deployed = j.at("deployed").get<bool>();
  return m;
}

void fill_tensors(models::StudentNetwork<float>& net, const std::vector<NamedTensor>& tensors,
                  bool deployed) {
  std::map<std::string, const Tensor<float>*> by_name;
  for (const auto& t : tensors) by_name[t.name] = &t.value;
  auto apply = [&](const std::string& name, Tensor<float>* dst) {
    auto it = by_name.find(name);
    if (it == by_name.end())
      throw std::runtime_error("checkpoint: missing tensor '" + name + "'");
    if (it->second->shape() != dst->shape())
      throw std::runtime_error("checkpoint: tensor '" + name + "' has shape " +
                               Tensor<float>::shape_str(it->second->shape()) +
                               ", network expects " + Tensor<float>::shape_str(dst->shape()));
    *dst = *it->second;
    by_name.erase(it);
  };
  for (auto& p : net.parameters(!deployed)) apply(p.name, &p.param->value);
  for (auto& b : net.buffers(!deployed)) apply(b.name, b.value);
  if (!by_name.empty())
    throw std::runtime_error("checkpoint: unexpected extra tensor '" +
                             by_name.begin()->first + "'");
}

}  // namespace

void save_checkpoint(const std::string& path, models::StudentNetwork<float>& net,
                     Manifest manifest) {
  manifest.joint_order = joint::kOrderTag;
  manifest.deployed = net.deploy_mode();
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("checkpoint: cannot open " + path + " for writing");
  out.write(kMagic, sizeof(kMagic));
  const std::string mjson = manifest_to_json(manifest).dump();
  write_pod<uint64_t>(out, mjson.size());
  out.write(mjson.data(), static_cast<std::streamsize>(mjson.size()));

  const bool with_branches = !net.deploy_mode();
  auto params = net.parameters(with_branches);
  auto buffers = net.buffers(with_branches);
  write_pod<uint32_t>(out, static_cast<uint32_t>(params.size() + buffers.size()));
  for (auto& p : params) write_tensor(out, p.name, p.param->value);
  for (auto& b : buffers) write_tensor(out, b.name, *b.value);
  if (!out) throw std::runtime_error("checkpoint: write failed for " + path);
}

namespace {

std::pair<Manifest, std::vector<NamedTensor>> read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("checkpoint: cannot open " + path);
  char magic[8];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
    throw std::runtime_error("checkpoint: " + path + " is not an augkd checkpoint");
  const uint64_t mlen = read_pod<uint64_t>(in, "manifest length");
  std::string mjson(mlen, '\0');
  in.read(mjson.data(), static_cast<std::streamsize>(mlen));
  if (!in) throw std::runtime_error("checkpoint: truncated manifest in " + path);
  Manifest manifest = manifest_from_json(json::parse(mjson));
  const uint32_t count = read_pod<uint32_t>(in, "tensor count");
  std::vector<NamedTensor> tensors;
  tensors.reserve(count);
  for (uint32_t i = 0; i < count; ++i) tensors.push_back(read_tensor(in));
  return {std::move(manifest), std::move(tensors)};
}

}  // namespace

Loaded load_checkpoint(const std::string& path) {
  auto [manifest, tensors] = read_file(path);
  Loaded out{manifest,
             models::StudentNetwork<float>(manifest.spec,
                                           manifest.deployed ? models::AuxTaskKind::none
                                                             : manifest.aux,
                                           manifest.M, 0)};
  out.net.set_deploy_mode(manifest.deployed);
  fill_tensors(out.net, tensors, manifest.deployed);
  return out;
}

Manifest load_checkpoint_into(const std::string& path, models::StudentNetwork<float>& net) {
  auto [manifest, tensors] = read_file(path);
  if (!specs_equal(manifest.spec, net.spec()))
    throw std::runtime_error("checkpoint: architecture in " + path +
                             " does not match the target network spec");
  if (!manifest.deployed && manifest.aux != net.aux_task())
    throw std::runtime_error("checkpoint: auxiliary head type mismatch");
  fill_tensors(net, tensors, manifest.deployed || net.deploy_mode());
  return manifest;
}

}  // namespace augkd::ckpt
