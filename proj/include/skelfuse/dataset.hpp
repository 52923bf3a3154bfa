#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "skelfuse/errors.hpp"
#include "skelfuse/rng.hpp"
#include "skelfuse/tensor.hpp"

namespace skelfuse {

struct SkeletonSequence {
  Tensor<double> joints;  // [T, N_v, 3]
  int person_id = 0;

  int frame_count() const { return joints.dim(0); }
  int joint_count() const { return joints.dim(1); }
};

/// One raw detector output box in pixel coordinates.
struct Detection {
  double x1 = 0, y1 = 0, x2 = 0, y2 = 0;
  double score = 0;
  int category_id = 0;
};

/// One candidate slot: normalized center/size box plus score and category.
struct CandidateSlot {
  double cx = 0, cy = 0, w = 0, h = 0;
  double score = 0;
  int category_id = 0;

  bool operator==(const CandidateSlot&) const = default;
};

/// Exactly N_o slots per frame; slot 0 is the canonical background candidate.
struct CandidateSet {
  int candidate_count = 0;
  std::vector<CandidateSlot> slots;  // frame-major, size T * N_o

  int frame_count() const {
    return candidate_count == 0 ? 0 : static_cast<int>(slots.size()) / candidate_count;
  }
  CandidateSlot& at(int t, int j) { return slots[static_cast<std::size_t>(t) * candidate_count + j]; }
  const CandidateSlot& at(int t, int j) const {
    return slots[static_cast<std::size_t>(t) * candidate_count + j];
  }
};

struct Sample {
  std::string video_id;
  int person_id = 0;
  SkeletonSequence skeleton;
  CandidateSet candidates;
  int action_label = 0;
  std::vector<int> gt_object;  // per-frame candidate slot, -1 when absent; empty for real data
};

struct DatasetConfig {
  int joint_count = 0;        // N_v
  int candidate_count = 10;   // N_o
  int category_count = 0;     // N; background id == N
  int class_count = 0;        // C
  int frame_sample_count = 0; // k
  double score_threshold = 0.1;
  std::vector<int> prior_union;  // interactable category ids
  double rotation_max_degrees = 17.0;
  int reference_joint = 0;
  std::uint64_t seed = 0;
};

/// One parsed record of the skeleton file, prior to per-person splitting.
struct RawRecord {
  std::string video_id;
  double image_w = 0, image_h = 0;
  int action_label = 0;
  std::vector<SkeletonSequence> persons;
  std::vector<std::vector<Detection>> frames;  // raw detections per frame
  std::vector<int> gt_raw;  // per-frame raw detection index, -1 none; empty for real data
};

inline CandidateSlot background_slot(const DatasetConfig& cfg) {
  return CandidateSlot{0.0, 0.0, 0.0, 0.0, 1.0, cfg.category_count};
}

/// Translate all frames so the reference joint of frame 0 sits at the origin.
SkeletonSequence center_skeleton(const SkeletonSequence& seq, int reference_joint);

/// Segment-wise frame sampling: the (cyclically extended) index list is split
/// into k segments, the leading (len mod k) segments one longer, and one index
/// is drawn uniformly per segment. Output is sorted; strictly increasing when
/// T >= k.
std::vector<int> sample_frame_indices(int frame_count, int k, Rng& rng);

/// Rotation by per-axis angles composed X*Y*Z, row-vector convention v' = R v.
std::array<double, 9> rotation_matrix(double ax_rad, double ay_rad, double az_rad);

/// Rigid rotation of every joint by angles drawn uniformly per axis.
SkeletonSequence rotate_augment(const SkeletonSequence& seq, Rng& rng, double max_degrees);

/// Filter by prior union and score threshold, sort by score (ties: category id,
/// then x1), keep the top N_o-1, pad cyclically, background at slot 0, boxes
/// normalized to center/size in [0,1].
std::vector<CandidateSlot> select_candidates(const std::vector<Detection>& dets,
                                             const DatasetConfig& cfg, double image_w,
                                             double image_h);

/// As select_candidates, also mapping each raw detection index to its slot
/// (first occurrence) or -1 when dropped.
std::pair<std::vector<CandidateSlot>, std::vector<int>> select_candidates_with_map(
    const std::vector<Detection>& dets, const DatasetConfig& cfg, double image_w, double image_h);

/// Split a raw record into one Sample per person; all share the candidate set.
std::vector<Sample> split_multi_person(const RawRecord& record, const DatasetConfig& cfg);

/// Load and join the skeleton JSONL and detections JSON files.
std::vector<Sample> load_samples(const std::string& skeleton_path, const std::string& detections_path,
                                 const DatasetConfig& cfg);

/// Extract the sampled frames of a sample as a (skeleton, candidates, gt) triple.
struct SampledClip {
  Tensor<double> joints;             // [k, N_v, 3]
  std::vector<CandidateSlot> cands;  // k * N_o
  std::vector<int> gt_object;        // per sampled frame, -1 none
  std::vector<int> frame_indices;
};

SampledClip take_frames(const Sample& sample, const std::vector<int>& indices);

}  // namespace skelfuse
