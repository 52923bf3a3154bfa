#pragma once

#include "skelfuse/nn_common.hpp"

namespace skelfuse {

/// Interacted-object-assisted recognizer: attention-weighted candidate fusion,
/// node-feature extension, and an independent second graph/frame stack.
template <class S>
struct FusionParams {
  StackedFc<S> pos_embed, vel_embed;
  Param<S> joint_sem;
  Affine<S> lift;        // 128 -> 256 skeleton-side embedding
  Affine<S> ext_proj;    // 512 -> 256 node extension projection
  Affine<S> adj_theta, adj_phi;  // 256 -> 256
  Affine<S> gcn0, gcn1, gcn2;    // 256 -> 256 each, identity residuals
  Param<S> frame_sem;
  Param<S> tconv_w, tconv_b;
  Affine<S> pointwise;
  Affine<S> classifier;

  void init(const ModelConfig& cfg, Rng& rng) {
    pos_embed.init("fusion.phi1", 3, dims::kDyn, dims::kDyn, rng);
    vel_embed.init("fusion.phi2", 3, dims::kDyn, dims::kDyn, rng);
    joint_sem = make_param<S>("fusion.jointsem", {cfg.joint_count, dims::kJointSem}, rng);
    lift.init("fusion.lift", dims::kNode, dims::kFusionNode, rng);
    ext_proj.init("fusion.extproj", dims::kFusionNode + dims::kObj, dims::kFusionNode, rng);
    adj_theta.init("fusion.adj.theta", dims::kFusionNode, dims::kAdj, rng);
    adj_phi.init("fusion.adj.phi", dims::kFusionNode, dims::kAdj, rng);
    gcn0.init("fusion.gcn0", dims::kFusionNode, dims::kFusionNode, rng);
    gcn1.init("fusion.gcn1", dims::kFusionNode, dims::kFusionNode, rng);
    gcn2.init("fusion.gcn2", dims::kFusionNode, dims::kFusionNode, rng);
    frame_sem = make_param<S>("fusion.frame.sem", {cfg.frame_count, dims::kFrame}, rng);
    tconv_w = make_param<S>("fusion.frame.tconv.w", {3 * dims::kFrame, dims::kFrame}, rng);
    tconv_b = make_zero_param<S>("fusion.frame.tconv.b", {dims::kFrame});
    pointwise.init("fusion.frame.pw", dims::kFrame, dims::kPointwise, rng);
    classifier.init("fusion.cls", dims::kPointwise, cfg.class_count, rng);
  }

  void collect(std::vector<Param<S>*>& out) {
    pos_embed.collect(out);
    vel_embed.collect(out);
    out.push_back(&joint_sem);
    lift.collect(out);
    ext_proj.collect(out);
    adj_theta.collect(out);
    adj_phi.collect(out);
    gcn0.collect(out);
    gcn1.collect(out);
    gcn2.collect(out);
    out.push_back(&frame_sem);
    out.push_back(&tconv_w);
    out.push_back(&tconv_b);
    pointwise.collect(out);
    classifier.collect(out);
  }
};

/// r[t] = sum_j att[t,j] e_o[t,j] / (sum_j att[t,j] + eps).
template <class S>
typename Tape<S>::Id fuse_object_feature(Tape<S>& t, typename Tape<S>::Id att, typename Tape<S>::Id e_o) {
  return t.fuse_weighted(att, e_o, static_cast<S>(kEpsNorm));
}

/// Concatenate the per-frame object feature onto every joint and project back
/// to the node width. Purely affine; the following graph layers rectify.
template <class S>
typename Tape<S>::Id extend_node_features(Tape<S>& t, FusionParams<S>& p, typename Tape<S>::Id joint_embed,
                                          typename Tape<S>::Id r) {
  const int nv = t.val(joint_embed).dim(1);
  return p.ext_proj.apply(t, t.concat_last(joint_embed, t.broadcast_mid(r, nv)));
}

/// Full object-assisted forward pass to class logits.
template <class S>
typename Tape<S>::Id forward_so_ar(Tape<S>& t, FusionParams<S>& p, typename Tape<S>::Id pos,
                                   typename Tape<S>::Id vel, typename Tape<S>::Id att,
                                   typename Tape<S>::Id e_o) {
  const int k = t.val(pos).dim(0);
  auto z = t.add(p.pos_embed.apply(t, pos), p.vel_embed.apply(t, vel));
  z = t.concat_last(z, t.broadcast0(t.param(p.joint_sem), k));
  z = t.relu(p.lift.apply(t, z));
  auto r = fuse_object_feature(t, att, e_o);
  z = extend_node_features(t, p, z, r);
  auto adj = t.softmax_last(t.bmm(p.adj_theta.apply(t, z), p.adj_phi.apply(t, z), true));
  z = t.relu(t.add(p.gcn0.apply(t, t.bmm(adj, z)), z));
  z = t.relu(t.add(p.gcn1.apply(t, t.bmm(adj, z)), z));
  z = t.relu(t.add(p.gcn2.apply(t, t.bmm(adj, z)), z));
  auto x = t.add(t.max_axis1(z), t.param(p.frame_sem));
  x = t.relu(t.conv1d_k3(x, t.param(p.tconv_w), t.param(p.tconv_b)));
  x = t.relu(p.pointwise.apply(t, x));
  return p.classifier.apply(t, t.max_axis0(x));
}

}  // namespace skelfuse
