#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "skelfuse/tape.hpp"
#include "skelfuse/tensor.hpp"

namespace skelfuse {

template <class S>
Param<S> make_param(std::string key, std::vector<int> shape, Rng& rng) {
  Param<S> p;
  p.key = std::move(key);
  p.value = Tensor<S>(std::move(shape));
  const double bound = 1.0 / std::sqrt(static_cast<double>(p.value.dim(0)));
  p.init_uniform(rng, bound);
  return p;
}

template <class S>
Param<S> make_zero_param(std::string key, std::vector<int> shape) {
  Param<S> p;
  p.key = std::move(key);
  p.value = Tensor<S>(std::move(shape));
  p.init_zero();
  return p;
}

/// Affine map with fan-in-scaled uniform weights and zero bias.
template <class S>
struct Affine {
  Param<S> w, b;
  bool has_bias = true;

  void init(const std::string& key, int in, int out, Rng& rng, bool bias = true) {
    has_bias = bias;
    w = make_param<S>(key + ".w", {in, out}, rng);
    if (bias) b = make_zero_param<S>(key + ".b", {out});
  }
  typename Tape<S>::Id apply(Tape<S>& t, typename Tape<S>::Id x) {
    return has_bias ? t.linear(x, t.param(w), t.param(b)) : t.linear(x, t.param(w));
  }
  void collect(std::vector<Param<S>*>& out) {
    out.push_back(&w);
    if (has_bias) out.push_back(&b);
  }
};

/// Two stacked affine+rectifier layers.
template <class S>
struct StackedFc {
  Affine<S> l0, l1;

  void init(const std::string& key, int in, int mid, int out, Rng& rng) {
    l0.init(key + ".fc0", in, mid, rng);
    l1.init(key + ".fc1", mid, out, rng);
  }
  typename Tape<S>::Id apply(Tape<S>& t, typename Tape<S>::Id x) {
    return t.relu(l1.apply(t, t.relu(l0.apply(t, x))));
  }
  void collect(std::vector<Param<S>*>& out) {
    l0.collect(out);
    l1.collect(out);
  }
};

namespace dims {
inline constexpr int kDyn = 64;        // position/velocity embedding
inline constexpr int kJointSem = 64;   // joint-type semantics
inline constexpr int kNode = 128;      // dynamics + semantics
inline constexpr int kAdj = 256;       // adjacency embedding
inline constexpr int kGcn0 = 128;
inline constexpr int kGcn1 = 256;
inline constexpr int kGcn2 = 256;
inline constexpr int kFrame = 256;     // frame-level channels
inline constexpr int kPointwise = 512;
inline constexpr int kLocJoint = 128;  // localizer joint embedding
inline constexpr int kLocAction = 128;
inline constexpr int kCatEmb = 192;
inline constexpr int kBoxEmb = 64;
inline constexpr int kObj = 256;       // candidate embedding
inline constexpr int kFusionNode = 256;
}  // namespace dims

inline constexpr double kEpsNorm = 1e-8;

/// Shared architecture hyperparameters; serialized into checkpoints.
struct ModelConfig {
  int joint_count = 0;      // N_v
  int candidate_count = 0;  // N_o
  int category_count = 0;   // N; background category id == N
  int class_count = 0;      // C
  int frame_count = 0;      // k frames fed to the model
  std::uint64_t seed = 0;   // parameter init seed

  bool operator==(const ModelConfig&) const = default;
};

}  // namespace skelfuse
