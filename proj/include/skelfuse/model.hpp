#pragma once

#include "skelfuse/dataset.hpp"
#include "skelfuse/fusion.hpp"
#include "skelfuse/localizer.hpp"
#include "skelfuse/sgn.hpp"

namespace skelfuse {

/// Numeric inputs for one sampled clip.
template <class S>
struct ModelInput {
  Tensor<S> pos;          // [k, N_v, 3]
  Tensor<S> vel;          // [k, N_v, 3], zero at t=0
  Tensor<S> box;          // [k, N_o, 5] (cx, cy, w, h, score)
  std::vector<int> cats;  // k * N_o, background == N
};

template <class S>
ModelInput<S> make_model_input(const Tensor<double>& joints, const std::vector<CandidateSlot>& cands,
                               int candidate_count) {
  const int k = joints.dim(0), nv = joints.dim(1);
  ModelInput<S> in;
  in.pos = joints.template cast<S>();
  in.vel = Tensor<S>({k, nv, 3});
  for (int t = 1; t < k; ++t)
    for (int i = 0; i < nv; ++i)
      for (int d = 0; d < 3; ++d)
        in.vel.at(t, i, d) = static_cast<S>(joints.at(t, i, d) - joints.at(t - 1, i, d));
  in.box = Tensor<S>({k, candidate_count, 5});
  in.cats.resize(static_cast<std::size_t>(k) * candidate_count);
  for (int t = 0; t < k; ++t)
    for (int j = 0; j < candidate_count; ++j) {
      const CandidateSlot& c = cands[static_cast<std::size_t>(t) * candidate_count + j];
      in.box.at(t, j, 0) = static_cast<S>(c.cx);
      in.box.at(t, j, 1) = static_cast<S>(c.cy);
      in.box.at(t, j, 2) = static_cast<S>(c.w);
      in.box.at(t, j, 3) = static_cast<S>(c.h);
      in.box.at(t, j, 4) = static_cast<S>(c.score);
      in.cats[static_cast<std::size_t>(t) * candidate_count + j] = c.category_id;
    }
  return in;
}

/// Node ids of the stages of one serialized forward pass. Ids are -1 for
/// stages skipped by the skeleton-only variant.
template <class S>
struct ForwardOut {
  typename Tape<S>::Id logits0 = -1;
  typename Tape<S>::Id probs0 = -1;  // detached preliminary distribution
  typename Tape<S>::Id attention = -1;
  typename Tape<S>::Id object_embed = -1;
  typename Tape<S>::Id timeline = -1;
  typename Tape<S>::Id consistency = -1;
  typename Tape<S>::Id logits1 = -1;
};

/// The serialized pipeline: skeleton-only scores assist localization, the
/// localized object feature assists the final recognizer.
template <class S>
struct JointModel {
  ModelConfig cfg;
  SgnParams<S> backbone;
  LocalizerParams<S> loc;
  FusionParams<S> fusion;
  bool skeleton_only = false;  // second head disabled
  bool zero_action = false;    // localize without the action cue

  void init(const ModelConfig& c) {
    cfg = c;
    Rng rng(c.seed);
    backbone.init("sgn", c, rng);
    loc.init(c, rng);
    fusion.init(c, rng);
  }

  std::vector<Param<S>*> params() {
    std::vector<Param<S>*> out;
    backbone.collect(out);
    if (!skeleton_only) {
      loc.collect(out);
      fusion.collect(out);
    }
    return out;
  }

  /// When `fixed_probs` is given it replaces the detached softmax of the
  /// preliminary logits; used to hold the localizer's action input constant.
  ForwardOut<S> forward(Tape<S>& t, const ModelInput<S>& in, const Tensor<S>* fixed_probs = nullptr) {
    ForwardOut<S> out;
    auto pos = t.input(in.pos);
    auto vel = t.input(in.vel);
    out.logits0 = forward_s_ar(t, backbone, pos, vel);
    if (skeleton_only) return out;
    out.probs0 = fixed_probs ? t.input(*fixed_probs) : t.detach(t.softmax_last(out.logits0));
    auto f_sa = fuse_action_context(t, loc, pos, out.probs0, zero_action);
    out.object_embed = embed_candidates(t, loc, t.input(in.box), in.cats);
    auto aff = joint_object_affinity(t, f_sa, out.object_embed);
    out.attention = pool_attention(t, aff);
    out.timeline = t.category_timeline(out.attention, in.cats, cfg.category_count + 1,
                                       static_cast<S>(kEpsNorm));
    out.consistency = consistency_loss(t, out.timeline);
    out.logits1 = forward_so_ar(t, fusion, pos, vel, out.attention, out.object_embed);
    return out;
  }
};

}  // namespace skelfuse
