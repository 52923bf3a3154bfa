#include "skelfuse/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <json.hpp>

namespace skelfuse {

static_assert(std::endian::native == std::endian::little, "checkpoint blob is little-endian");

using ordered_json = nlohmann::ordered_json;
using json = nlohmann::json;

namespace {

constexpr char kMagic[4] = {'S', 'F', 'C', 'K'};
constexpr std::uint32_t kVersion = 1;

template <class S>
std::vector<Param<S>*> all_params(JointModel<S>& m) {
  std::vector<Param<S>*> out;
  m.backbone.collect(out);
  m.loc.collect(out);
  m.fusion.collect(out);
  return out;
}

}  // namespace

template <class S>
void save_checkpoint(JointModel<S>& model, const std::string& path) {
  auto params = all_params(model);
  ordered_json tensors = ordered_json::array();
  std::int64_t offset = 0;
  for (auto* p : params) {
    tensors.push_back({{"key", p->key}, {"shape", p->value.shape}, {"offset", offset}});
    offset += p->value.size();
  }
  ordered_json manifest = {
      {"config",
       {{"joint_count", model.cfg.joint_count},
        {"candidate_count", model.cfg.candidate_count},
        {"category_count", model.cfg.category_count},
        {"class_count", model.cfg.class_count},
        {"frame_count", model.cfg.frame_count},
        {"seed", model.cfg.seed}}},
      {"flags", {{"skeleton_only", model.skeleton_only}, {"zero_action", model.zero_action}}},
      {"tensors", std::move(tensors)}};
  const std::string mtxt = manifest.dump();

  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open '" + path + "' for writing");
  f.write(kMagic, 4);
  const std::uint32_t version = kVersion;
  f.write(reinterpret_cast<const char*>(&version), sizeof version);
  const std::uint64_t mlen = mtxt.size();
  f.write(reinterpret_cast<const char*>(&mlen), sizeof mlen);
  f.write(mtxt.data(), static_cast<std::streamsize>(mtxt.size()));
  std::vector<float> blob;
  blob.reserve(static_cast<std::size_t>(offset));
  for (auto* p : params)
    for (const auto& v : p->value.data) blob.push_back(static_cast<float>(v));
  f.write(reinterpret_cast<const char*>(blob.data()),
          static_cast<std::streamsize>(blob.size() * sizeof(float)));
  if (!f) throw IoError("failed writing checkpoint '" + path + "'");
}

template <class S>
JointModel<S> load_checkpoint(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open checkpoint '" + path + "'");
  char magic[4];
  f.read(magic, 4);
  if (!f || std::memcmp(magic, kMagic, 4) != 0) throw SchemaError(path + ": not a checkpoint file");
  std::uint32_t version = 0;
  f.read(reinterpret_cast<char*>(&version), sizeof version);
  if (version != kVersion) throw SchemaError(path + ": unsupported checkpoint version");
  std::uint64_t mlen = 0;
  f.read(reinterpret_cast<char*>(&mlen), sizeof mlen);
  std::string mtxt(mlen, '\0');
  f.read(mtxt.data(), static_cast<std::streamsize>(mlen));
  if (!f) throw SchemaError(path + ": truncated manifest");
  json manifest;
  try {
    manifest = json::parse(mtxt);
  } catch (const json::exception& e) {
    throw SchemaError(path + ": bad manifest: " + e.what());
  }

  JointModel<S> model;
  try {
    const auto& c = manifest.at("config");
    model.cfg.joint_count = c.at("joint_count").get<int>();
    model.cfg.candidate_count = c.at("candidate_count").get<int>();
    model.cfg.category_count = c.at("category_count").get<int>();
    model.cfg.class_count = c.at("class_count").get<int>();
    model.cfg.frame_count = c.at("frame_count").get<int>();
    model.cfg.seed = c.at("seed").get<std::uint64_t>();
    model.skeleton_only = manifest.at("flags").at("skeleton_only").get<bool>();
    model.zero_action = manifest.at("flags").at("zero_action").get<bool>();
  } catch (const json::exception& e) {
    throw SchemaError(path + ": bad manifest: " + e.what());
  }
  model.init(model.cfg);

  auto params = all_params(model);
  std::vector<float> blob;
  {
    std::int64_t total = 0;
    for (auto* p : params) total += p->value.size();
    blob.resize(static_cast<std::size_t>(total));
    f.read(reinterpret_cast<char*>(blob.data()), static_cast<std::streamsize>(blob.size() * sizeof(float)));
    if (!f) throw SchemaError(path + ": truncated tensor blob");
  }
  std::size_t loaded = 0;
  for (const auto& tj : manifest.at("tensors")) {
    const std::string key = tj.at("key").get<std::string>();
    const auto shape = tj.at("shape").get<std::vector<int>>();
    const std::int64_t offset = tj.at("offset").get<std::int64_t>();
    Param<S>* target = nullptr;
    for (auto* p : params)
      if (p->key == key) {
        target = p;
        break;
      }
    if (!target) throw MismatchError(path + ": unknown tensor key '" + key + "'");
    if (target->value.shape != shape) throw MismatchError(path + ": shape mismatch for '" + key + "'");
    for (std::int64_t i = 0; i < target->value.size(); ++i)
      target->value.data[i] = static_cast<S>(blob[static_cast<std::size_t>(offset + i)]);
    ++loaded;
  }
  if (loaded != params.size()) throw MismatchError(path + ": checkpoint is missing tensors");
  return model;
}

void check_compatible(const ModelConfig& model, const DatasetConfig& data) {
  auto fail = [](const std::string& what, int a, int b) {
    throw MismatchError("checkpoint/config mismatch: " + what + " (" + std::to_string(a) + " vs " +
                        std::to_string(b) + ")");
  };
  if (model.joint_count != data.joint_count) fail("joint_count", model.joint_count, data.joint_count);
  if (model.candidate_count != data.candidate_count)
    fail("candidate_count", model.candidate_count, data.candidate_count);
  if (model.category_count != data.category_count)
    fail("category_count", model.category_count, data.category_count);
  if (model.class_count != data.class_count) fail("class_count", model.class_count, data.class_count);
}

template void save_checkpoint<float>(JointModel<float>&, const std::string&);
template void save_checkpoint<double>(JointModel<double>&, const std::string&);
template JointModel<float> load_checkpoint<float>(const std::string&);
template JointModel<double> load_checkpoint<double>(const std::string&);

}  // namespace skelfuse
