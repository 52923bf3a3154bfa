#pragma once

#include <optional>
#include <string>
#include <vector>

#include "skelfuse/dataset.hpp"
#include "skelfuse/synthetic.hpp"
#include "skelfuse/training.hpp"

namespace skelfuse {

// ---- raw files ----
// Skeleton file: JSON lines, one record per video:
//   {"video_id", "image_size":[W,H], "persons":[{"person_id", "joints":[[[x,y,z]xN_v]xT]}], "action_label"}
// Detections file: one JSON object: {"<video_id>": {"frames": [[{"bbox":[x1,y1,x2,y2],"score","category_id"},...]xT]}}
// Ground-truth sidecar (synthetic): {"<video_id>": [raw detection index per frame, -1 when absent]}

void write_skeleton_file(const std::string& path, const std::vector<RawRecord>& records);
void write_detections_file(const std::string& path, const std::vector<RawRecord>& records);
void write_gt_file(const std::string& path, const std::vector<RawRecord>& records);

std::vector<RawRecord> read_raw_records(const std::string& skeleton_path, const std::string& detections_path,
                                        const std::optional<std::string>& gt_path = std::nullopt);

// ---- dataset directories ----
/// Writes train/test skeleton+detections+gt files plus meta.json into `dir`.
void write_synth_dataset(const SynthConfig& cfg, const std::string& dir);

DatasetConfig read_meta(const std::string& dir);

/// Loads one split ("train" or "test") of a dataset directory; samples come
/// back centered and with gt slots resolved when a sidecar exists.
std::vector<Sample> load_dataset_dir(const std::string& dir, const std::string& split,
                                     DatasetConfig* out_cfg = nullptr);

// ---- configs ----
TrainConfig read_train_config(const std::string& path);
SynthConfig read_synth_config(const std::string& path);
void write_synth_config(const SynthConfig& cfg, const std::string& path);

// ---- metrics ----
void write_metrics_csv(const std::string& path, const std::vector<EpochRow>& rows);
std::vector<EpochRow> read_metrics_csv(const std::string& path);
std::string metrics_to_json(const Metrics& m);

// ---- localization export ----
struct LocalizeRecord {
  std::string video_id;
  int person_id = 0;
  int frame = 0;
  int slot = 0;
  double bbox[4] = {0, 0, 0, 0};  // cx, cy, w, h normalized
  int category_id = 0;
  double attention = 0;
  bool interaction = true;  // false when the background slot was selected
  std::vector<double> attention_all;
};

void write_localize_jsonl(const std::string& path, const std::vector<LocalizeRecord>& records);
std::vector<LocalizeRecord> read_localize_jsonl(const std::string& path);

}  // namespace skelfuse
