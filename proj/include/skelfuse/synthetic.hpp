#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "skelfuse/dataset.hpp"

namespace skelfuse {

/// Synthetic desk-scale benchmark with known interacted objects. Classes come
/// in pairs that share one motion family and differ only in the interacted
/// object category, so the skeleton alone cannot separate them. Every scene
/// also contains a far-away confuser whose category is drawn from the pair
/// independently of the label: only the object the effector reaches predicts
/// the class.
struct SynthConfig {
  int class_count = 6;   // even; pairs cycle through the motion families
  int joint_count = 9;
  int candidate_count = 10;
  int category_count = 16;  // interacted cats [0,C), furniture, clutter, 2 filtered
  int t_min = 12, t_max = 24;
  int frame_sample_count = 6;  // k echoed into the dataset config
  int train_count = 600, test_count = 200;
  double epsilon_reach = 0.05;  // normalized image units
  double jitter = 0.0;          // bbox center jitter stddev (normalized)
  double dropout = 0.0;         // per-frame probability of losing the gt detection
  double rotation_max_degrees = 8.0;
  double image_w = 640, image_h = 480;
  double score_threshold = 0.1;
  std::uint64_t seed = 7;
};

enum class Split { kTrain, kTest };

/// Right-wrist effector of the built-in armature.
inline constexpr int kEffectorJoint = 6;

void validate(const SynthConfig& cfg);

/// Dataset config implied by a synthetic config (prior union excludes the two
/// highest category ids so the selection filter is exercised).
DatasetConfig synth_dataset_config(const SynthConfig& cfg);

/// One raw record; split into a Sample via split_multi_person. `sample_seed`
/// fully determines the record. Twin property: two calls with the same seed
/// and paired classes 2p / 2p+1 yield identical skeletons.
RawRecord synth_record(const SynthConfig& cfg, int action_class, std::uint64_t sample_seed,
                       const std::string& video_id);

std::vector<RawRecord> synth_raw_records(const SynthConfig& cfg, Split split);

/// Fully assembled samples with gt_object slots resolved.
std::vector<Sample> generate_synthetic(const SynthConfig& cfg, Split split);

}  // namespace skelfuse
