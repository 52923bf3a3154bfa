#include "skelfuse/jsonio.hpp"

#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <sstream>

namespace skelfuse {

using ordered_json = nlohmann::ordered_json;
using json = nlohmann::json;
namespace fs = std::filesystem;

namespace {

std::ifstream open_in(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw IoError("cannot open '" + path + "' for reading");
  return f;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream f(path);
  if (!f) throw IoError("cannot open '" + path + "' for writing");
  return f;
}

[[noreturn]] void schema_fail(const std::string& file, const std::string& what) {
  throw SchemaError(file + ": " + what);
}

}  // namespace

void write_skeleton_file(const std::string& path, const std::vector<RawRecord>& records) {
  auto f = open_out(path);
  for (const auto& rec : records) {
    ordered_json persons = ordered_json::array();
    for (const auto& p : rec.persons) {
      ordered_json joints = ordered_json::array();
      for (int t = 0; t < p.frame_count(); ++t) {
        ordered_json frame = ordered_json::array();
        for (int i = 0; i < p.joint_count(); ++i)
          frame.push_back({p.joints.at(t, i, 0), p.joints.at(t, i, 1), p.joints.at(t, i, 2)});
        joints.push_back(std::move(frame));
      }
      persons.push_back({{"person_id", p.person_id}, {"joints", std::move(joints)}});
    }
    ordered_json line = {{"video_id", rec.video_id},
                         {"image_size", {rec.image_w, rec.image_h}},
                         {"persons", std::move(persons)},
                         {"action_label", rec.action_label}};
    f << line.dump() << "\n";
  }
}

void write_detections_file(const std::string& path, const std::vector<RawRecord>& records) {
  ordered_json root = ordered_json::object();
  for (const auto& rec : records) {
    ordered_json frames = ordered_json::array();
    for (const auto& frame : rec.frames) {
      ordered_json dets = ordered_json::array();
      for (const auto& d : frame)
        dets.push_back({{"bbox", {d.x1, d.y1, d.x2, d.y2}}, {"score", d.score}, {"category_id", d.category_id}});
      frames.push_back(std::move(dets));
    }
    root[rec.video_id] = {{"frames", std::move(frames)}};
  }
  open_out(path) << root.dump(1) << "\n";
}

void write_gt_file(const std::string& path, const std::vector<RawRecord>& records) {
  ordered_json root = ordered_json::object();
  for (const auto& rec : records) root[rec.video_id] = rec.gt_raw;
  open_out(path) << root.dump(1) << "\n";
}

std::vector<RawRecord> read_raw_records(const std::string& skeleton_path, const std::string& detections_path,
                                        const std::optional<std::string>& gt_path) {
  json dets_root;
  try {
    open_in(detections_path) >> dets_root;
  } catch (const json::exception& e) {
    schema_fail(detections_path, e.what());
  }
  json gt_root;
  if (gt_path) {
    try {
      open_in(*gt_path) >> gt_root;
    } catch (const json::exception& e) {
      schema_fail(*gt_path, e.what());
    }
  }

  std::vector<RawRecord> out;
  auto f = open_in(skeleton_path);
  std::string line;
  int lineno = 0;
  while (std::getline(f, line)) {
    ++lineno;
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      schema_fail(skeleton_path + ":" + std::to_string(lineno), e.what());
    }
    RawRecord rec;
    try {
      rec.video_id = j.at("video_id").get<std::string>();
      rec.image_w = j.at("image_size").at(0).get<double>();
      rec.image_h = j.at("image_size").at(1).get<double>();
      rec.action_label = j.at("action_label").get<int>();
      for (const auto& pj : j.at("persons")) {
        SkeletonSequence seq;
        seq.person_id = pj.at("person_id").get<int>();
        const auto& joints = pj.at("joints");
        const int T = static_cast<int>(joints.size());
        if (T == 0) schema_fail(skeleton_path + ":" + std::to_string(lineno), "empty joints array");
        const int nv = static_cast<int>(joints.at(0).size());
        seq.joints = Tensor<double>({T, nv, 3});
        for (int t = 0; t < T; ++t) {
          const auto& frame = joints.at(static_cast<std::size_t>(t));
          if (static_cast<int>(frame.size()) != nv)
            schema_fail(skeleton_path + ":" + std::to_string(lineno), "ragged joint array");
          for (int i = 0; i < nv; ++i)
            for (int d = 0; d < 3; ++d) {
              const double v = frame.at(static_cast<std::size_t>(i)).at(static_cast<std::size_t>(d)).get<double>();
              if (!std::isfinite(v))
                schema_fail(skeleton_path + ":" + std::to_string(lineno), "non-finite joint coordinate");
              seq.joints.at(t, i, d) = v;
            }
        }
        rec.persons.push_back(std::move(seq));
      }
    } catch (const json::exception& e) {
      schema_fail(skeleton_path + ":" + std::to_string(lineno), e.what());
    }

    if (!dets_root.contains(rec.video_id))
      throw AlignmentError(detections_path + ": no detections for video '" + rec.video_id + "'");
    try {
      const auto& frames = dets_root.at(rec.video_id).at("frames");
      for (const auto& fj : frames) {
        std::vector<Detection> frame;
        for (const auto& dj : fj) {
          Detection d;
          d.x1 = dj.at("bbox").at(0).get<double>();
          d.y1 = dj.at("bbox").at(1).get<double>();
          d.x2 = dj.at("bbox").at(2).get<double>();
          d.y2 = dj.at("bbox").at(3).get<double>();
          d.score = dj.at("score").get<double>();
          d.category_id = dj.at("category_id").get<int>();
          if (!(d.x1 < d.x2) || !(d.y1 < d.y2))
            schema_fail(detections_path, "degenerate bbox in video '" + rec.video_id + "'");
          if (d.score < 0 || d.score > 1)
            schema_fail(detections_path, "score outside [0,1] in video '" + rec.video_id + "'");
          frame.push_back(d);
        }
        rec.frames.push_back(std::move(frame));
      }
    } catch (const json::exception& e) {
      schema_fail(detections_path, std::string(e.what()) + " in video '" + rec.video_id + "'");
    }

    if (gt_path && gt_root.contains(rec.video_id))
      rec.gt_raw = gt_root.at(rec.video_id).get<std::vector<int>>();
    out.push_back(std::move(rec));
  }
  return out;
}

std::vector<Sample> load_samples(const std::string& skeleton_path, const std::string& detections_path,
                                 const DatasetConfig& cfg) {
  std::vector<Sample> out;
  for (const auto& rec : read_raw_records(skeleton_path, detections_path)) {
    for (auto& s : split_multi_person(rec, cfg)) {
      s.skeleton = center_skeleton(s.skeleton, cfg.reference_joint);
      out.push_back(std::move(s));
    }
  }
  return out;
}

namespace {

ordered_json dataset_cfg_json(const DatasetConfig& d) {
  return {{"joint_count", d.joint_count},
          {"candidate_count", d.candidate_count},
          {"category_count", d.category_count},
          {"class_count", d.class_count},
          {"frame_sample_count", d.frame_sample_count},
          {"score_threshold", d.score_threshold},
          {"prior_union", d.prior_union},
          {"rotation_max_degrees", d.rotation_max_degrees},
          {"reference_joint", d.reference_joint},
          {"seed", d.seed}};
}

DatasetConfig dataset_cfg_from(const json& j, const std::string& file) {
  DatasetConfig d;
  try {
    d.joint_count = j.at("joint_count").get<int>();
    d.candidate_count = j.at("candidate_count").get<int>();
    d.category_count = j.at("category_count").get<int>();
    d.class_count = j.at("class_count").get<int>();
    d.frame_sample_count = j.at("frame_sample_count").get<int>();
    d.score_threshold = j.at("score_threshold").get<double>();
    d.prior_union = j.at("prior_union").get<std::vector<int>>();
    d.rotation_max_degrees = j.at("rotation_max_degrees").get<double>();
    d.reference_joint = j.at("reference_joint").get<int>();
    d.seed = j.at("seed").get<std::uint64_t>();
  } catch (const json::exception& e) {
    schema_fail(file, e.what());
  }
  return d;
}

}  // namespace

void write_synth_dataset(const SynthConfig& cfg, const std::string& dir) {
  validate(cfg);
  fs::create_directories(dir);
  for (Split split : {Split::kTrain, Split::kTest}) {
    const std::string tag = split == Split::kTrain ? "train" : "test";
    auto records = synth_raw_records(cfg, split);
    write_skeleton_file(dir + "/" + tag + "_skeletons.jsonl", records);
    write_detections_file(dir + "/" + tag + "_detections.json", records);
    write_gt_file(dir + "/" + tag + "_gt.json", records);
  }
  ordered_json meta = {{"dataset", dataset_cfg_json(synth_dataset_config(cfg))}};
  open_out(dir + "/meta.json") << meta.dump(1) << "\n";
}

DatasetConfig read_meta(const std::string& dir) {
  const std::string path = dir + "/meta.json";
  json j;
  try {
    open_in(path) >> j;
  } catch (const json::exception& e) {
    schema_fail(path, e.what());
  }
  return dataset_cfg_from(j.at("dataset"), path);
}

std::vector<Sample> load_dataset_dir(const std::string& dir, const std::string& split,
                                     DatasetConfig* out_cfg) {
  if (split != "train" && split != "test") throw ConfigError("split must be 'train' or 'test'");
  DatasetConfig cfg = read_meta(dir);
  if (out_cfg) *out_cfg = cfg;
  const std::string skel = dir + "/" + split + "_skeletons.jsonl";
  const std::string dets = dir + "/" + split + "_detections.json";
  const std::string gt = dir + "/" + split + "_gt.json";
  std::optional<std::string> gt_path;
  if (fs::exists(gt)) gt_path = gt;
  std::vector<Sample> out;
  for (const auto& rec : read_raw_records(skel, dets, gt_path)) {
    for (auto& s : split_multi_person(rec, cfg)) {
      s.skeleton = center_skeleton(s.skeleton, cfg.reference_joint);
      out.push_back(std::move(s));
    }
  }
  return out;
}

TrainConfig read_train_config(const std::string& path) {
  json j;
  try {
    open_in(path) >> j;
  } catch (const json::exception& e) {
    schema_fail(path, e.what());
  }
  static const std::vector<std::string> known = {"lambda1", "lambda2",      "smoothing", "lr0",
                                                 "decay_epochs", "epochs", "batch_size", "seed"};
  for (const auto& [key, _] : j.items())
    if (std::find(known.begin(), known.end(), key) == known.end())
      schema_fail(path, "unknown train config key '" + key + "'");
  TrainConfig c;
  try {
    if (j.contains("lambda1")) c.lambda1 = j["lambda1"].get<double>();
    if (j.contains("lambda2")) c.lambda2 = j["lambda2"].get<double>();
    if (j.contains("smoothing")) c.smoothing = j["smoothing"].get<double>();
    if (j.contains("lr0")) c.lr0 = j["lr0"].get<double>();
    if (j.contains("decay_epochs")) c.decay_epochs = j["decay_epochs"].get<std::vector<int>>();
    if (j.contains("epochs")) c.epochs = j["epochs"].get<int>();
    if (j.contains("batch_size")) c.batch_size = j["batch_size"].get<int>();
    if (j.contains("seed")) c.seed = j["seed"].get<std::uint64_t>();
  } catch (const json::exception& e) {
    schema_fail(path, e.what());
  }
  if (c.lambda1 < 0 || c.lambda2 < 0) throw ConfigError(path + ": lambda weights must be >= 0");
  if (c.smoothing < 0 || c.smoothing >= 1) throw ConfigError(path + ": smoothing must be in [0,1)");
  if (c.epochs < 1 || c.batch_size < 1) throw ConfigError(path + ": epochs and batch_size must be >= 1");
  return c;
}

SynthConfig read_synth_config(const std::string& path) {
  json j;
  try {
    open_in(path) >> j;
  } catch (const json::exception& e) {
    schema_fail(path, e.what());
  }
  static const std::vector<std::string> known = {
      "class_count", "joint_count", "candidate_count", "category_count", "t_min", "t_max",
      "frame_sample_count", "train_count", "test_count", "epsilon_reach", "jitter", "dropout",
      "rotation_max_degrees", "image_w", "image_h", "score_threshold", "seed"};
  for (const auto& [key, _] : j.items())
    if (std::find(known.begin(), known.end(), key) == known.end())
      schema_fail(path, "unknown synth config key '" + key + "'");
  SynthConfig c;
  try {
    if (j.contains("class_count")) c.class_count = j["class_count"].get<int>();
    if (j.contains("joint_count")) c.joint_count = j["joint_count"].get<int>();
    if (j.contains("candidate_count")) c.candidate_count = j["candidate_count"].get<int>();
    if (j.contains("category_count")) c.category_count = j["category_count"].get<int>();
    if (j.contains("t_min")) c.t_min = j["t_min"].get<int>();
    if (j.contains("t_max")) c.t_max = j["t_max"].get<int>();
    if (j.contains("frame_sample_count")) c.frame_sample_count = j["frame_sample_count"].get<int>();
    if (j.contains("train_count")) c.train_count = j["train_count"].get<int>();
    if (j.contains("test_count")) c.test_count = j["test_count"].get<int>();
    if (j.contains("epsilon_reach")) c.epsilon_reach = j["epsilon_reach"].get<double>();
    if (j.contains("jitter")) c.jitter = j["jitter"].get<double>();
    if (j.contains("dropout")) c.dropout = j["dropout"].get<double>();
    if (j.contains("rotation_max_degrees")) c.rotation_max_degrees = j["rotation_max_degrees"].get<double>();
    if (j.contains("image_w")) c.image_w = j["image_w"].get<double>();
    if (j.contains("image_h")) c.image_h = j["image_h"].get<double>();
    if (j.contains("score_threshold")) c.score_threshold = j["score_threshold"].get<double>();
    if (j.contains("seed")) c.seed = j["seed"].get<std::uint64_t>();
  } catch (const json::exception& e) {
    schema_fail(path, e.what());
  }
  validate(c);
  return c;
}

void write_synth_config(const SynthConfig& c, const std::string& path) {
  ordered_json j = {{"class_count", c.class_count},
                    {"joint_count", c.joint_count},
                    {"candidate_count", c.candidate_count},
                    {"category_count", c.category_count},
                    {"t_min", c.t_min},
                    {"t_max", c.t_max},
                    {"frame_sample_count", c.frame_sample_count},
                    {"train_count", c.train_count},
                    {"test_count", c.test_count},
                    {"epsilon_reach", c.epsilon_reach},
                    {"jitter", c.jitter},
                    {"dropout", c.dropout},
                    {"rotation_max_degrees", c.rotation_max_degrees},
                    {"image_w", c.image_w},
                    {"image_h", c.image_h},
                    {"score_threshold", c.score_threshold},
                    {"seed", c.seed}};
  open_out(path) << j.dump(1) << "\n";
}

void write_metrics_csv(const std::string& path, const std::vector<EpochRow>& rows) {
  auto f = open_out(path);
  f << "epoch,lr,loss_a1,loss_a2,loss_con,loss_total,train_acc,val_acc\n";
  f.precision(10);
  for (const auto& r : rows)
    f << r.epoch << ',' << r.lr << ',' << r.loss_a1 << ',' << r.loss_a2 << ',' << r.loss_con << ','
      << r.loss_total << ',' << r.train_acc << ',' << r.val_acc << "\n";
}

std::vector<EpochRow> read_metrics_csv(const std::string& path) {
  auto f = open_in(path);
  std::string line;
  if (!std::getline(f, line)) schema_fail(path, "empty metrics file");
  if (line != "epoch,lr,loss_a1,loss_a2,loss_con,loss_total,train_acc,val_acc")
    schema_fail(path, "unexpected metrics header");
  std::vector<EpochRow> rows;
  int lineno = 1;
  while (std::getline(f, line)) {
    ++lineno;
    if (line.empty()) continue;
    EpochRow r;
    char comma;
    std::istringstream ss(line);
    if (!(ss >> r.epoch >> comma >> r.lr >> comma >> r.loss_a1 >> comma >> r.loss_a2 >> comma >>
          r.loss_con >> comma >> r.loss_total >> comma >> r.train_acc >> comma >> r.val_acc))
      schema_fail(path + ":" + std::to_string(lineno), "bad metrics row");
    rows.push_back(r);
  }
  return rows;
}

std::string metrics_to_json(const Metrics& m) {
  ordered_json j = {{"top1_accuracy", m.top1_accuracy}, {"sample_count", m.sample_count}};
  if (m.localization_frame_accuracy >= 0) j["localization_frame_accuracy"] = m.localization_frame_accuracy;
  if (m.mean_consistency >= 0) j["mean_consistency"] = m.mean_consistency;
  return j.dump();
}

void write_localize_jsonl(const std::string& path, const std::vector<LocalizeRecord>& records) {
  auto f = open_out(path);
  for (const auto& r : records) {
    ordered_json j = {{"video_id", r.video_id},
                      {"person_id", r.person_id},
                      {"frame", r.frame},
                      {"slot", r.slot},
                      {"bbox", {r.bbox[0], r.bbox[1], r.bbox[2], r.bbox[3]}},
                      {"category_id", r.category_id},
                      {"attention", r.attention},
                      {"interaction", r.interaction},
                      {"attention_all", r.attention_all}};
    f << j.dump() << "\n";
  }
}

std::vector<LocalizeRecord> read_localize_jsonl(const std::string& path) {
  auto f = open_in(path);
  std::vector<LocalizeRecord> out;
  std::string line;
  int lineno = 0;
  while (std::getline(f, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      json j = json::parse(line);
      LocalizeRecord r;
      r.video_id = j.at("video_id").get<std::string>();
      r.person_id = j.at("person_id").get<int>();
      r.frame = j.at("frame").get<int>();
      r.slot = j.at("slot").get<int>();
      for (int d = 0; d < 4; ++d) r.bbox[d] = j.at("bbox").at(static_cast<std::size_t>(d)).get<double>();
      r.category_id = j.at("category_id").get<int>();
      r.attention = j.at("attention").get<double>();
      r.interaction = j.at("interaction").get<bool>();
      r.attention_all = j.at("attention_all").get<std::vector<double>>();
      out.push_back(std::move(r));
    } catch (const json::exception& e) {
      schema_fail(path + ":" + std::to_string(lineno), e.what());
    }
  }
  return out;
}

}  // namespace skelfuse
