#pragma once

#include <cmath>

#include "skelfuse/nn_common.hpp"

namespace skelfuse {

/// Action-type-assisted interacted object localization: fuses joint coordinates
/// with the preliminary action distribution, scores joint-candidate affinity,
/// pools it into per-candidate attention and derives the category timeline.
template <class S>
struct LocalizerParams {
  Affine<S> phi_j;    // 3 -> 128
  Affine<S> phi_a;    // C -> 128
  Param<S> cat_emb;   // [(N+1), 192], row N is the background category
  Affine<S> box;      // (cx,cy,w,h,score) -> 64
  Affine<S> mixer;    // 256 -> 256

  void init(const ModelConfig& cfg, Rng& rng) {
    phi_j.init("loc.phi_j", 3, dims::kLocJoint, rng);
    phi_a.init("loc.phi_a", cfg.class_count, dims::kLocAction, rng);
    cat_emb = make_param<S>("loc.catemb", {cfg.category_count + 1, dims::kCatEmb}, rng);
    box.init("loc.box", 5, dims::kBoxEmb, rng);
    mixer.init("loc.mixer", dims::kCatEmb + dims::kBoxEmb, dims::kObj, rng);
  }

  void collect(std::vector<Param<S>*>& out) {
    phi_j.collect(out);
    phi_a.collect(out);
    out.push_back(&cat_emb);
    box.collect(out);
    mixer.collect(out);
  }
};

/// f_sa[t,i] = Phi_j(v_{t,i}) (+)) Phi_a(action_probs), the action half broadcast
/// to every joint of every frame. action_probs must lie on the simplex.
template <class S>
typename Tape<S>::Id fuse_action_context(Tape<S>& t, LocalizerParams<S>& p, typename Tape<S>::Id pos,
                                         typename Tape<S>::Id action_probs, bool zero_action = false) {
  const Tensor<S>& probs = t.val(action_probs);
  S sum = S(0);
  for (const auto& v : probs.data) sum += v;
  if (std::abs(static_cast<double>(sum) - 1.0) > 1e-4)
    throw ContractError("fuse_action_context: action probabilities must sum to 1");
  const int k = t.val(pos).dim(0), nv = t.val(pos).dim(1);
  auto a = p.phi_a.apply(t, action_probs);
  if (zero_action) a = t.scale(a, S(0));
  return t.concat_last(p.phi_j.apply(t, pos), t.broadcast0(t.broadcast0(a, nv), k));
}

/// e_o[t,j] = mixer( categoryEmbed(cat) (+) affine(bbox||score) ).
/// box_feats: input [k, N_o, 5]; cats: flattened categories, background == N.
template <class S>
typename Tape<S>::Id embed_candidates(Tape<S>& t, LocalizerParams<S>& p, typename Tape<S>::Id box_feats,
                                      const std::vector<int>& cats) {
  const int k = t.val(box_feats).dim(0), no = t.val(box_feats).dim(1);
  auto ce = t.gather_rows(t.param(p.cat_emb), cats, {k, no, dims::kCatEmb});
  return p.mixer.apply(t, t.concat_last(ce, p.box.apply(t, box_feats)));
}

/// A[t,i,j] = <f_sa[t,i], e_o[t,j]>.
template <class S>
typename Tape<S>::Id joint_object_affinity(Tape<S>& t, typename Tape<S>::Id f_sa, typename Tape<S>::Id e_o) {
  return t.bmm(f_sa, e_o, true);
}

/// att[t,j] = sigmoid(max_i A[t,i,j]).
template <class S>
typename Tape<S>::Id pool_attention(Tape<S>& t, typename Tape<S>::Id affinity) {
  return t.sigmoid(t.max_axis1(affinity));
}

/// Temporal consistency loss: mean over the N+1 categories of the population
/// variance along frames of the category timeline.
template <class S>
typename Tape<S>::Id consistency_loss(Tape<S>& t, typename Tape<S>::Id timeline) {
  auto mu = t.reduce_mean0(timeline);
  auto d = t.sub_broadcast0(timeline, mu);
  return t.reduce_mean_all(t.reduce_mean0(t.mul(d, d)));
}

/// Per-frame hard selection from the attention row; ties go to the lowest slot.
struct LocalizedFrame {
  int slot = 0;
  double attention = 0.0;
  bool background = false;
};

template <class S>
std::vector<LocalizedFrame> localize(const Tensor<S>& attention, const std::vector<int>& cats,
                                     int background_id) {
  const int k = attention.dim(0), no = attention.dim(1);
  std::vector<LocalizedFrame> out(static_cast<std::size_t>(k));
  for (int t = 0; t < k; ++t) {
    int best = 0;
    for (int j = 1; j < no; ++j)
      if (attention.at(t, j) > attention.at(t, best)) best = j;
    out[static_cast<std::size_t>(t)].slot = best;
    out[static_cast<std::size_t>(t)].attention = static_cast<double>(attention.at(t, best));
    out[static_cast<std::size_t>(t)].background = cats[static_cast<std::size_t>(t) * no + best] == background_id;
  }
  return out;
}

}  // namespace skelfuse
