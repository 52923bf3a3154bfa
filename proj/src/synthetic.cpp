#include "skelfuse/synthetic.hpp"

#include <algorithm>
#include <cmath>

namespace skelfuse {

namespace {

constexpr double kPi = 3.14159265358979323846;

constexpr double kRest[9][3] = {
    {0.00, 0.00, 0.00},    // pelvis
    {0.00, 0.25, 0.02},    // spine
    {0.00, 0.50, 0.00},    // neck
    {0.00, 0.65, 0.00},    // head
    {0.18, 0.45, 0.00},    // r shoulder
    {0.24, 0.22, 0.04},    // r elbow
    {0.28, 0.02, 0.06},    // r wrist (effector)
    {-0.18, 0.45, 0.00},   // l shoulder
    {-0.26, 0.04, 0.05},   // l wrist
};

struct Vec2 {
  double x = 0, y = 0;
};

Vec2 project(double x, double y) { return {0.5 + 0.35 * x, 0.5 - 0.35 * y}; }

double dist(Vec2 a, Vec2 b) { return std::hypot(a.x - b.x, a.y - b.y); }

double smoothstep(double a) { return a * a * (3.0 - 2.0 * a); }

struct Placed {
  Vec2 c;
  double w = 0, h = 0;
  double score = 0;
  int cat = 0;
};

Detection to_pixels(const Placed& p, double W, double H) {
  Detection d;
  const double w = std::max(p.w, 0.01), h = std::max(p.h, 0.01);
  d.x1 = std::clamp((p.c.x - 0.5 * w) * W, 0.0, W - 2.0);
  d.y1 = std::clamp((p.c.y - 0.5 * h) * H, 0.0, H - 2.0);
  d.x2 = std::clamp((p.c.x + 0.5 * w) * W, d.x1 + 1.0, W);
  d.y2 = std::clamp((p.c.y + 0.5 * h) * H, d.y1 + 1.0, H);
  d.score = p.score;
  d.category_id = p.cat;
  return d;
}

}  // namespace

void validate(const SynthConfig& cfg) {
  if (cfg.class_count < 4 || cfg.class_count % 2 != 0)
    throw ConfigError("synth: class_count must be even and >= 4");
  if (cfg.joint_count < 9) throw ConfigError("synth: joint_count must be >= 9");
  if (cfg.category_count < cfg.class_count + 6)
    throw ConfigError("synth: category_count must be >= class_count + 6");
  if (cfg.t_min < 2 || cfg.t_max < cfg.t_min) throw ConfigError("synth: bad frame range");
  if (cfg.candidate_count < 2) throw ConfigError("synth: candidate_count must be >= 2");
  if (cfg.epsilon_reach <= 0) throw ConfigError("synth: epsilon_reach must be positive");
}

DatasetConfig synth_dataset_config(const SynthConfig& cfg) {
  DatasetConfig d;
  d.joint_count = cfg.joint_count;
  d.candidate_count = cfg.candidate_count;
  d.category_count = cfg.category_count;
  d.class_count = cfg.class_count;
  d.frame_sample_count = cfg.frame_sample_count;
  d.score_threshold = cfg.score_threshold;
  for (int c = 0; c < cfg.category_count - 2; ++c) d.prior_union.push_back(c);
  d.rotation_max_degrees = cfg.rotation_max_degrees;
  d.reference_joint = 0;
  d.seed = cfg.seed;
  return d;
}

RawRecord synth_record(const SynthConfig& cfg, int action_class, std::uint64_t sample_seed,
                       const std::string& video_id) {
  validate(cfg);
  Rng motion = Rng::fork(sample_seed, 1);
  Rng jitter_rng = Rng::fork(sample_seed, 2);
  Rng dropout_rng = Rng::fork(sample_seed, 3);

  const int pair = action_class / 2;
  const int family = pair % 3;
  const int nv = cfg.joint_count;
  const int T = static_cast<int>(motion.uniform_int(cfg.t_min, cfg.t_max + 1));

  // target point, family-dependent height band
  const double az = motion.uniform(-0.9, 0.9);
  double ty;
  if (family == 0)
    ty = motion.uniform(0.55, 0.85);
  else if (family == 1)
    ty = motion.uniform(-0.75, -0.45);
  else
    ty = motion.uniform(0.0, 0.35);
  const double rad = motion.uniform(0.80, 1.05);
  const double tgt[3] = {rad * std::sin(az), ty, 0.15 + 0.1 * motion.uniform(-1, 1)};

  SkeletonSequence skel;
  skel.person_id = 0;
  skel.joints = Tensor<double>({T, nv, 3});
  std::vector<double> drift(static_cast<std::size_t>(nv) * 3);
  for (auto& v : drift) v = 0.004 * motion.normal();
  const double goff[3] = {motion.uniform(-0.08, 0.08), motion.uniform(-0.06, 0.06),
                          motion.uniform(-0.3, 0.3)};
  const double reach = motion.uniform(0.2, 0.35);

  for (int t = 0; t < T; ++t) {
    const double a = static_cast<double>(t) / std::max(1, T - 1);
    double pose[9][3];
    for (int i = 0; i < 9; ++i)
      for (int d = 0; d < 3; ++d) pose[i][d] = kRest[i][d];
    const double s = smoothstep(std::min(1.0, a / reach));
    double wr[3];
    for (int d = 0; d < 3; ++d) wr[d] = kRest[kEffectorJoint][d] * (1.0 - s) + tgt[d] * s;
    if (family == 2) {
      const double damp = std::max(0.0, 1.0 - a / (reach * 1.6));
      wr[0] += damp * 0.3 * std::sin(2.0 * kPi * 2.0 * a);
    }
    if (s >= 1.0 && t < T - 1)
      for (int d = 0; d < 3; ++d) wr[d] += 0.004 * motion.normal();  // hover; final frame exact
    for (int d = 0; d < 3; ++d) pose[kEffectorJoint][d] = wr[d];
    const double elbow_off[3] = {0.03, 0.02, 0.10};
    for (int d = 0; d < 3; ++d)
      pose[5][d] = 0.5 * (pose[4][d] + pose[kEffectorJoint][d]) + elbow_off[d];
    const double sway = 0.01 * std::sin(2.0 * kPi * a + az);
    for (int i = 0; i < 9; ++i) pose[i][0] += sway;

    for (int i = 0; i < nv; ++i) {
      double base[3];
      if (i < 9) {
        for (int d = 0; d < 3; ++d) base[d] = pose[i][d];
      } else {
        // extra joints interpolate the spine, deterministically offset
        const double f = static_cast<double>(i - 8) / static_cast<double>(nv - 8);
        for (int d = 0; d < 3; ++d) base[d] = pose[0][d] + f * (pose[2][d] - pose[0][d]);
        base[0] += 0.01 * (i - 8);
      }
      for (int d = 0; d < 3; ++d)
        skel.joints.at(t, i, d) = base[d] + drift[static_cast<std::size_t>(i) * 3 + d] * a + goff[d];
    }
  }

  // image-space anchors
  std::vector<Vec2> traj(static_cast<std::size_t>(T));
  for (int t = 0; t < T; ++t)
    traj[static_cast<std::size_t>(t)] =
        project(skel.joints.at(t, kEffectorJoint, 0), skel.joints.at(t, kEffectorJoint, 1));
  const Vec2 gt_center = traj[static_cast<std::size_t>(T - 1)];
  const Vec2 body = project(skel.joints.at(0, 0, 0), skel.joints.at(0, 0, 1));

  const int gt_cat = action_class;
  const int confuser_cat = 2 * pair + static_cast<int>(motion.uniform_int(0, 2));
  const double gt_score = motion.uniform(0.6, 0.95);
  const double confuser_score = motion.uniform(0.6, 0.95);

  // persistent confuser: comparable radius from the body, rotated away
  Vec2 confuser{};
  bool placed = false;
  for (int attempt = 0; attempt < 100 && !placed; ++attempt) {
    const double delta = motion.uniform(kPi / 3.0, 5.0 * kPi / 3.0);
    const double scalef = motion.uniform(0.8, 1.2);
    const double rx = gt_center.x - body.x, ry = gt_center.y - body.y;
    Vec2 c{body.x + (std::cos(delta) * rx - std::sin(delta) * ry) * scalef,
           body.y + (std::sin(delta) * rx + std::cos(delta) * ry) * scalef};
    c.x = std::clamp(c.x, 0.05, 0.95);
    c.y = std::clamp(c.y, 0.05, 0.95);
    double mind = 1e9;
    for (const auto& p : traj) mind = std::min(mind, dist(p, c));
    if (mind > 0.13 && dist(gt_center, c) > 0.2) {
      confuser = c;
      placed = true;
    }
  }
  if (!placed) throw GenerationError("synth: could not place confuser for " + video_id);

  const Vec2 feet = project(skel.joints.at(0, 0, 0) + 0.05, skel.joints.at(0, 0, 1) - 0.8);
  const Vec2 furn0{feet.x + 0.02, feet.y + 0.03};
  const Vec2 furn1{feet.x - 0.18, feet.y + 0.01};
  const int furn_cat0 = cfg.class_count, furn_cat1 = cfg.class_count + 1;
  const int clutter_lo = cfg.class_count + 2;

  RawRecord rec;
  rec.video_id = video_id;
  rec.image_w = cfg.image_w;
  rec.image_h = cfg.image_h;
  rec.action_label = action_class;
  rec.frames.resize(static_cast<std::size_t>(T));
  rec.gt_raw.assign(static_cast<std::size_t>(T), -1);

  for (int t = 0; t < T; ++t) {
    std::vector<Placed> objs;
    const bool drop_gt = dropout_rng.uniform() < cfg.dropout;
    if (!drop_gt) {
      objs.push_back({gt_center, 0.08, 0.07,
                      std::min(0.99, gt_score + 0.02 * motion.uniform(-1, 1)), gt_cat});
      rec.gt_raw[static_cast<std::size_t>(t)] = 0;
    }
    objs.push_back({confuser, 0.08, 0.07,
                    std::min(0.99, confuser_score + 0.02 * motion.uniform(-1, 1)), confuser_cat});
    objs.push_back({furn0, 0.16, 0.12, motion.uniform(0.45, 0.9), furn_cat0});
    objs.push_back({furn1, 0.16, 0.12, motion.uniform(0.45, 0.9), furn_cat1});

    const int nclut = static_cast<int>(motion.uniform_int(1, 4));
    for (int ci = 0; ci < nclut; ++ci) {
      Vec2 c{};
      bool ok = false;
      for (int attempt = 0; attempt < 80 && !ok; ++attempt) {
        c = {motion.uniform(0.05, 0.95), motion.uniform(0.05, 0.95)};
        double mind = 1e9;
        for (const auto& p : traj) mind = std::min(mind, dist(p, c));
        ok = mind > 0.16 && dist(gt_center, c) > 0.16 && dist(body, c) < 0.36;
      }
      if (!ok) throw GenerationError("synth: could not place clutter for " + video_id);
      int cat;
      if (motion.uniform() < 0.5) {
        // an interacted-capable category from a different pair
        const int npairs = cfg.class_count / 2;
        int op = static_cast<int>(motion.uniform_int(0, npairs - 1));
        if (op >= pair) ++op;
        cat = 2 * op + static_cast<int>(motion.uniform_int(0, 2));
      } else {
        cat = clutter_lo + static_cast<int>(motion.uniform_int(0, cfg.category_count - clutter_lo));
      }
      objs.push_back({c, motion.uniform(0.05, 0.15), motion.uniform(0.05, 0.15),
                      motion.uniform(0.12, 0.9), cat});
    }
    // occasionally a sub-threshold detection, dropped by selection
    if (motion.uniform() < 0.3)
      objs.push_back({{motion.uniform(0.1, 0.9), motion.uniform(0.1, 0.9)}, 0.05, 0.05,
                      motion.uniform(0.01, cfg.score_threshold * 0.95), clutter_lo});

    if (cfg.jitter > 0) {
      for (auto& o : objs) {
        o.c.x += cfg.jitter * jitter_rng.normal();
        o.c.y += cfg.jitter * jitter_rng.normal();
      }
    }
    auto& frame = rec.frames[static_cast<std::size_t>(t)];
    frame.reserve(objs.size());
    for (const auto& o : objs) frame.push_back(to_pixels(o, cfg.image_w, cfg.image_h));
  }
  return rec;
}

std::vector<RawRecord> synth_raw_records(const SynthConfig& cfg, Split split) {
  validate(cfg);
  const int count = split == Split::kTrain ? cfg.train_count : cfg.test_count;
  const std::uint64_t base = split == Split::kTrain ? cfg.seed : (cfg.seed ^ 0x7e57da7aULL);
  const char* tag = split == Split::kTrain ? "train" : "test";
  std::vector<RawRecord> out;
  out.reserve(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) {
    char id[64];
    std::snprintf(id, sizeof(id), "synth_%s_%06d", tag, i);
    out.push_back(synth_record(cfg, i % cfg.class_count, Rng::fork(base, static_cast<std::uint64_t>(i)).next_u64(), id));
  }
  return out;
}

std::vector<Sample> generate_synthetic(const SynthConfig& cfg, Split split) {
  const DatasetConfig dcfg = synth_dataset_config(cfg);
  std::vector<Sample> out;
  for (const auto& rec : synth_raw_records(cfg, split)) {
    auto samples = split_multi_person(rec, dcfg);
    for (auto& s : samples) out.push_back(std::move(s));
  }
  return out;
}

}  // namespace skelfuse
