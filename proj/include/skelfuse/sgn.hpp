#pragma once

#include "skelfuse/nn_common.hpp"

namespace skelfuse {

/// Skeleton-only action recognition backbone: joint-dynamics embedding with
/// joint-type semantics, adaptive graph convolutions with a data-dependent
/// adjacency, frame-level temporal module and classifier.
template <class S>
struct SgnParams {
  StackedFc<S> pos_embed, vel_embed;  // Phi_1, Phi_2
  Param<S> joint_sem;                 // [N_v, 64]
  Affine<S> adj_theta, adj_phi;       // 128 -> 256
  Affine<S> gcn0, gcn1, gcn2;         // 128->128, 128->256, 256->256
  Param<S> gcn1_res;                  // learned residual projection 128->256
  Param<S> frame_sem;                 // [k, 256]
  Param<S> tconv_w, tconv_b;          // temporal conv, width 3
  Affine<S> pointwise;                // 256 -> 512
  Affine<S> classifier;               // 512 -> C

  void init(const std::string& prefix, const ModelConfig& cfg, Rng& rng) {
    pos_embed.init(prefix + ".phi1", 3, dims::kDyn, dims::kDyn, rng);
    vel_embed.init(prefix + ".phi2", 3, dims::kDyn, dims::kDyn, rng);
    joint_sem = make_param<S>(prefix + ".jointsem", {cfg.joint_count, dims::kJointSem}, rng);
    adj_theta.init(prefix + ".adj.theta", dims::kNode, dims::kAdj, rng);
    adj_phi.init(prefix + ".adj.phi", dims::kNode, dims::kAdj, rng);
    gcn0.init(prefix + ".gcn0", dims::kNode, dims::kGcn0, rng);
    gcn1.init(prefix + ".gcn1", dims::kGcn0, dims::kGcn1, rng);
    gcn1_res = make_param<S>(prefix + ".gcn1.res", {dims::kGcn0, dims::kGcn1}, rng);
    gcn2.init(prefix + ".gcn2", dims::kGcn1, dims::kGcn2, rng);
    frame_sem = make_param<S>(prefix + ".frame.sem", {cfg.frame_count, dims::kFrame}, rng);
    tconv_w = make_param<S>(prefix + ".frame.tconv.w", {3 * dims::kFrame, dims::kFrame}, rng);
    tconv_b = make_zero_param<S>(prefix + ".frame.tconv.b", {dims::kFrame});
    pointwise.init(prefix + ".frame.pw", dims::kFrame, dims::kPointwise, rng);
    classifier.init(prefix + ".cls", dims::kPointwise, cfg.class_count, rng);
  }

  void collect(std::vector<Param<S>*>& out) {
    pos_embed.collect(out);
    vel_embed.collect(out);
    out.push_back(&joint_sem);
    adj_theta.collect(out);
    adj_phi.collect(out);
    gcn0.collect(out);
    gcn1.collect(out);
    out.push_back(&gcn1_res);
    gcn2.collect(out);
    out.push_back(&frame_sem);
    out.push_back(&tconv_w);
    out.push_back(&tconv_b);
    pointwise.collect(out);
    classifier.collect(out);
  }
};

/// z_{t,i} = Phi_1(v_{t,i}) + Phi_2(v_{t,i} - v_{t-1,i}); velocity at t=0 is zero.
/// pos and vel are tape inputs of shape [k, N_v, 3].
template <class S>
typename Tape<S>::Id joint_dynamics(Tape<S>& t, SgnParams<S>& p, typename Tape<S>::Id pos,
                                    typename Tape<S>::Id vel) {
  return t.add(p.pos_embed.apply(t, pos), p.vel_embed.apply(t, vel));
}

/// Concatenate the joint-type semantics table onto every frame: [k,N_v,64] -> [k,N_v,128].
template <class S>
typename Tape<S>::Id attach_joint_semantics(Tape<S>& t, SgnParams<S>& p, typename Tape<S>::Id z) {
  const int k = t.val(z).dim(0);
  return t.concat_last(z, t.broadcast0(t.param(p.joint_sem), k));
}

/// Per-frame adjacency S_t(i,j) = theta(z_i)^T phi(z_j), row-softmaxed.
template <class S>
typename Tape<S>::Id adaptive_adjacency(Tape<S>& t, SgnParams<S>& p, typename Tape<S>::Id z) {
  return t.softmax_last(t.bmm(p.adj_theta.apply(t, z), p.adj_phi.apply(t, z), true));
}

/// Three graph layers z <- relu(S z W + residual(z)); dims 128 -> 128 -> 256 -> 256.
template <class S>
typename Tape<S>::Id gcn_stack(Tape<S>& t, SgnParams<S>& p, typename Tape<S>::Id z,
                               typename Tape<S>::Id adj) {
  z = t.relu(t.add(p.gcn0.apply(t, t.bmm(adj, z)), z));
  z = t.relu(t.add(p.gcn1.apply(t, t.bmm(adj, z)), t.linear(z, t.param(p.gcn1_res))));
  z = t.relu(t.add(p.gcn2.apply(t, t.bmm(adj, z)), z));
  return z;
}

/// Joint max-pool, frame-index semantics, temporal conv, pointwise conv, frame max-pool.
template <class S>
typename Tape<S>::Id frame_module(Tape<S>& t, SgnParams<S>& p, typename Tape<S>::Id z) {
  auto x = t.add(t.max_axis1(z), t.param(p.frame_sem));
  x = t.relu(t.conv1d_k3(x, t.param(p.tconv_w), t.param(p.tconv_b)));
  x = t.relu(p.pointwise.apply(t, x));
  return t.max_axis0(x);
}

/// Full skeleton-only forward pass to class logits.
template <class S>
typename Tape<S>::Id forward_s_ar(Tape<S>& t, SgnParams<S>& p, typename Tape<S>::Id pos,
                                  typename Tape<S>::Id vel) {
  auto z = attach_joint_semantics(t, p, joint_dynamics(t, p, pos, vel));
  auto adj = adaptive_adjacency(t, p, z);
  z = gcn_stack(t, p, z, adj);
  return p.classifier.apply(t, frame_module(t, p, z));
}

}  // namespace skelfuse
