#include "skelfuse/dataset.hpp"

#include <algorithm>
#include <cmath>

namespace skelfuse {

SkeletonSequence center_skeleton(const SkeletonSequence& seq, int reference_joint) {
  SkeletonSequence out = seq;
  const int T = seq.frame_count(), nv = seq.joint_count();
  const double ox = seq.joints.at(0, reference_joint, 0);
  const double oy = seq.joints.at(0, reference_joint, 1);
  const double oz = seq.joints.at(0, reference_joint, 2);
  for (int t = 0; t < T; ++t)
    for (int i = 0; i < nv; ++i) {
      out.joints.at(t, i, 0) -= ox;
      out.joints.at(t, i, 1) -= oy;
      out.joints.at(t, i, 2) -= oz;
    }
  return out;
}

std::vector<int> sample_frame_indices(int frame_count, int k, Rng& rng) {
  const int reps = (k + frame_count - 1) / frame_count;  // 1 when T >= k
  const int len = frame_count * reps;
  const int base = len / k, rem = len % k;
  std::vector<int> out(static_cast<std::size_t>(k));
  int pos = 0;
  for (int s = 0; s < k; ++s) {
    const int size = base + (s < rem ? 1 : 0);
    const int p = pos + static_cast<int>(rng.uniform_int(0, size));
    out[static_cast<std::size_t>(s)] = p / reps;
    pos += size;
  }
  return out;
}

std::array<double, 9> rotation_matrix(double ax, double ay, double az) {
  const double cx = std::cos(ax), sx = std::sin(ax);
  const double cy = std::cos(ay), sy = std::sin(ay);
  const double cz = std::cos(az), sz = std::sin(az);
  // Rx * Ry * Rz
  const std::array<double, 9> rx{1, 0, 0, 0, cx, -sx, 0, sx, cx};
  const std::array<double, 9> ry{cy, 0, sy, 0, 1, 0, -sy, 0, cy};
  const std::array<double, 9> rz{cz, -sz, 0, sz, cz, 0, 0, 0, 1};
  auto matmul = [](const std::array<double, 9>& a, const std::array<double, 9>& b) {
    std::array<double, 9> c{};
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j)
        for (int l = 0; l < 3; ++l) c[3 * i + j] += a[3 * i + l] * b[3 * l + j];
    return c;
  };
  return matmul(matmul(rx, ry), rz);
}

SkeletonSequence rotate_augment(const SkeletonSequence& seq, Rng& rng, double max_degrees) {
  const double to_rad = 3.14159265358979323846 / 180.0;
  const double ax = rng.uniform(-max_degrees, max_degrees) * to_rad;
  const double ay = rng.uniform(-max_degrees, max_degrees) * to_rad;
  const double az = rng.uniform(-max_degrees, max_degrees) * to_rad;
  const auto r = rotation_matrix(ax, ay, az);
  SkeletonSequence out = seq;
  const int T = seq.frame_count(), nv = seq.joint_count();
  for (int t = 0; t < T; ++t)
    for (int i = 0; i < nv; ++i) {
      const double x = seq.joints.at(t, i, 0), y = seq.joints.at(t, i, 1), z = seq.joints.at(t, i, 2);
      out.joints.at(t, i, 0) = r[0] * x + r[1] * y + r[2] * z;
      out.joints.at(t, i, 1) = r[3] * x + r[4] * y + r[5] * z;
      out.joints.at(t, i, 2) = r[6] * x + r[7] * y + r[8] * z;
    }
  return out;
}

std::pair<std::vector<CandidateSlot>, std::vector<int>> select_candidates_with_map(
    const std::vector<Detection>& dets, const DatasetConfig& cfg, double image_w, double image_h) {
  std::vector<int> order;
  for (int i = 0; i < static_cast<int>(dets.size()); ++i) {
    const Detection& d = dets[static_cast<std::size_t>(i)];
    const bool in_union =
        std::find(cfg.prior_union.begin(), cfg.prior_union.end(), d.category_id) != cfg.prior_union.end();
    if (in_union && d.score > cfg.score_threshold) order.push_back(i);
  }
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    const Detection &da = dets[static_cast<std::size_t>(a)], &db = dets[static_cast<std::size_t>(b)];
    if (da.score != db.score) return da.score > db.score;
    if (da.category_id != db.category_id) return da.category_id < db.category_id;
    return da.x1 < db.x1;
  });

  std::vector<CandidateSlot> slots(static_cast<std::size_t>(cfg.candidate_count), background_slot(cfg));
  std::vector<int> raw_to_slot(dets.size(), -1);
  const int payload = cfg.candidate_count - 1;
  const int nsurv = static_cast<int>(order.size());
  for (int j = 0; j < payload && nsurv > 0; ++j) {
    const int raw = order[static_cast<std::size_t>(j % nsurv)];
    const Detection& d = dets[static_cast<std::size_t>(raw)];
    CandidateSlot s;
    s.cx = 0.5 * (d.x1 + d.x2) / image_w;
    s.cy = 0.5 * (d.y1 + d.y2) / image_h;
    s.w = (d.x2 - d.x1) / image_w;
    s.h = (d.y2 - d.y1) / image_h;
    s.score = d.score;
    s.category_id = d.category_id;
    slots[static_cast<std::size_t>(j + 1)] = s;
    if (raw_to_slot[static_cast<std::size_t>(raw)] < 0) raw_to_slot[static_cast<std::size_t>(raw)] = j + 1;
  }
  return {std::move(slots), std::move(raw_to_slot)};
}

std::vector<CandidateSlot> select_candidates(const std::vector<Detection>& dets, const DatasetConfig& cfg,
                                             double image_w, double image_h) {
  return select_candidates_with_map(dets, cfg, image_w, image_h).first;
}

std::vector<Sample> split_multi_person(const RawRecord& record, const DatasetConfig& cfg) {
  if (record.persons.empty())
    throw SchemaError("record '" + record.video_id + "' contains no skeletons");
  const int T = record.persons.front().frame_count();
  for (const auto& p : record.persons)
    if (p.frame_count() != T)
      throw AlignmentError("record '" + record.video_id + "': persons disagree on frame count");
  if (static_cast<int>(record.frames.size()) != T)
    throw AlignmentError("record '" + record.video_id + "': " + std::to_string(record.frames.size()) +
                         " detection frames vs " + std::to_string(T) + " skeleton frames");

  CandidateSet cands;
  cands.candidate_count = cfg.candidate_count;
  cands.slots.reserve(static_cast<std::size_t>(T) * cfg.candidate_count);
  std::vector<int> gt_slots;
  for (int t = 0; t < T; ++t) {
    auto [slots, raw_map] = select_candidates_with_map(record.frames[static_cast<std::size_t>(t)], cfg,
                                                       record.image_w, record.image_h);
    cands.slots.insert(cands.slots.end(), slots.begin(), slots.end());
    if (!record.gt_raw.empty()) {
      const int raw = record.gt_raw[static_cast<std::size_t>(t)];
      gt_slots.push_back(raw >= 0 ? raw_map[static_cast<std::size_t>(raw)] : -1);
    }
  }

  std::vector<Sample> out;
  out.reserve(record.persons.size());
  for (const auto& person : record.persons) {
    Sample s;
    s.video_id = record.video_id;
    s.person_id = person.person_id;
    s.skeleton = person;
    s.candidates = cands;
    s.action_label = record.action_label;
    s.gt_object = gt_slots;
    out.push_back(std::move(s));
  }
  return out;
}

SampledClip take_frames(const Sample& sample, const std::vector<int>& indices) {
  const int k = static_cast<int>(indices.size());
  const int nv = sample.skeleton.joint_count();
  const int no = sample.candidates.candidate_count;
  SampledClip clip;
  clip.frame_indices = indices;
  clip.joints = Tensor<double>({k, nv, 3});
  clip.cands.resize(static_cast<std::size_t>(k) * no);
  for (int s = 0; s < k; ++s) {
    const int t = indices[static_cast<std::size_t>(s)];
    for (int i = 0; i < nv; ++i)
      for (int d = 0; d < 3; ++d) clip.joints.at(s, i, d) = sample.skeleton.joints.at(t, i, d);
    for (int j = 0; j < no; ++j) clip.cands[static_cast<std::size_t>(s) * no + j] = sample.candidates.at(t, j);
    if (!sample.gt_object.empty())
      clip.gt_object.push_back(sample.gt_object[static_cast<std::size_t>(t)]);
  }
  return clip;
}

}  // namespace skelfuse
