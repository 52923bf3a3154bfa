#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <thread>
#include <unordered_map>

#include "skelfuse/model.hpp"

namespace skelfuse {

struct TrainConfig {
  double lambda1 = 2.0;
  double lambda2 = 1.0;
  double smoothing = 0.1;
  double lr0 = 0.001;
  std::vector<int> decay_epochs = {60, 90, 110};
  int epochs = 120;
  int batch_size = 16;
  std::uint64_t seed = 1;
};

struct TrainOptions {
  TrainConfig cfg;
  bool skeleton_only = false;  // lambda1 = lambda2 = 0 and the second head disabled
  bool zero_action = false;    // localizer runs without the action cue
  int threads = 2;
  double val_fraction = 0.1;
};

struct LossBreakdown {
  double l_a1 = 0, l_a2 = 0, l_con = 0, total = 0;
};

inline double loss_total(double a1, double a2, double con, double lambda1, double lambda2) {
  return a1 + lambda1 * a2 + lambda2 * con;
}

/// lr(e) = lr0 * 0.1^{|{d in decay : e > d}|}, epochs 1-based.
inline double lr_at_epoch(const TrainConfig& cfg, int epoch) {
  int hits = 0;
  for (int d : cfg.decay_epochs)
    if (epoch > d) ++hits;
  return cfg.lr0 * std::pow(0.1, hits);
}

/// Cross entropy against the uniformly smoothed target.
inline double label_smooth_ce(const std::vector<double>& logits, int label, double eps) {
  const int C = static_cast<int>(logits.size());
  double mx = logits[0];
  for (double v : logits) mx = std::max(mx, v);
  double sum = 0;
  for (double v : logits) sum += std::exp(v - mx);
  const double lse = std::log(sum) + mx;
  const double off = eps / C;
  double dot = 0;
  for (int j = 0; j < C; ++j) dot += (j == label ? 1.0 - eps + off : off) * logits[static_cast<std::size_t>(j)];
  return lse - dot;
}

struct EpochRow {
  int epoch = 0;
  double lr = 0, loss_a1 = 0, loss_a2 = 0, loss_con = 0, loss_total = 0;
  double train_acc = 0, val_acc = 0;
};

struct Metrics {
  double top1_accuracy = 0;
  double localization_frame_accuracy = -1;  // -1 when no gt annotations exist
  double mean_consistency = -1;
  int sample_count = 0;
};

template <class S>
struct Adam {
  double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
  std::vector<Tensor<S>> m, v;
  long step_count = 0;

  void init(const std::vector<Param<S>*>& params) {
    m.clear();
    v.clear();
    for (auto* p : params) {
      m.emplace_back(p->value.shape);
      v.emplace_back(p->value.shape);
    }
    step_count = 0;
  }

  void step(const std::vector<Param<S>*>& params, double lr) {
    ++step_count;
    const double bc1 = 1.0 - std::pow(beta1, step_count);
    const double bc2 = 1.0 - std::pow(beta2, step_count);
    for (std::size_t i = 0; i < params.size(); ++i) {
      Param<S>& p = *params[i];
      for (std::int64_t j = 0; j < p.value.size(); ++j) {
        const double g = static_cast<double>(p.grad.data[j]);
        m[i].data[j] = static_cast<S>(beta1 * static_cast<double>(m[i].data[j]) + (1 - beta1) * g);
        v[i].data[j] = static_cast<S>(beta2 * static_cast<double>(v[i].data[j]) + (1 - beta2) * g * g);
        const double mhat = static_cast<double>(m[i].data[j]) / bc1;
        const double vhat = static_cast<double>(v[i].data[j]) / bc2;
        p.value.data[j] -= static_cast<S>(lr * mhat / (std::sqrt(vhat) + eps));
      }
    }
  }
};

/// Sampled-clip preprocessing shared by training and inference.
template <class S>
ModelInput<S> prepare_input(const Sample& sample, const std::vector<int>& indices, Rng* augment_rng,
                            double rotation_max_degrees) {
  SampledClip clip = take_frames(sample, indices);
  if (augment_rng && rotation_max_degrees > 0) {
    SkeletonSequence seq;
    seq.joints = clip.joints;
    clip.joints = rotate_augment(seq, *augment_rng, rotation_max_degrees).joints;
  }
  return make_model_input<S>(clip.joints, clip.cands, sample.candidates.candidate_count);
}

/// Mean of the two head distributions, averaged over `repeats` down-samplings.
template <class S>
std::vector<double> predict(JointModel<S>& model, const Sample& sample, int repeats, Rng& rng) {
  const int C = model.cfg.class_count;
  std::vector<double> acc(static_cast<std::size_t>(C), 0.0);
  for (int rep = 0; rep < repeats; ++rep) {
    auto indices = sample_frame_indices(sample.skeleton.frame_count(), model.cfg.frame_count, rng);
    auto in = prepare_input<S>(sample, indices, nullptr, 0.0);
    Tape<S> t;
    auto out = model.forward(t, in);
    auto p0 = t.softmax_last(out.logits0);
    if (model.skeleton_only) {
      for (int c = 0; c < C; ++c) acc[static_cast<std::size_t>(c)] += static_cast<double>(t.val(p0).at(c));
    } else {
      auto p1 = t.softmax_last(out.logits1);
      for (int c = 0; c < C; ++c)
        acc[static_cast<std::size_t>(c)] +=
            0.5 * (static_cast<double>(t.val(p0).at(c)) + static_cast<double>(t.val(p1).at(c)));
    }
  }
  for (auto& v : acc) v /= repeats;
  return acc;
}

inline int argmax(const std::vector<double>& v) {
  return static_cast<int>(std::max_element(v.begin(), v.end()) - v.begin());
}

/// Aggregates top-1 accuracy over an injected per-sample predictor.
inline Metrics evaluate_with(const std::vector<Sample>& data,
                             const std::function<std::vector<double>(const Sample&, int)>& predictor) {
  if (data.empty()) throw ContractError("evaluate: empty dataset");
  Metrics m;
  m.sample_count = static_cast<int>(data.size());
  int correct = 0;
  for (int i = 0; i < static_cast<int>(data.size()); ++i) {
    const Sample& s = data[static_cast<std::size_t>(i)];
    if (argmax(predictor(s, i)) == s.action_label) ++correct;
  }
  m.top1_accuracy = static_cast<double>(correct) / static_cast<double>(data.size());
  return m;
}

/// Full evaluation: test-time averaging for accuracy, one deterministic
/// down-sampling for localization and timeline consistency.
template <class S>
Metrics evaluate(JointModel<S>& model, const std::vector<Sample>& data, int repeats, std::uint64_t seed,
                 int threads = 2) {
  if (data.empty()) throw ContractError("evaluate: empty dataset");
  const int n = static_cast<int>(data.size());
  struct Acc {
    int correct = 0, loc_hits = 0, loc_frames = 0;
    double consistency = 0;
  };
  const int groups = 4;
  std::vector<Acc> accs(static_cast<std::size_t>(groups));
  auto work = [&](int g) {
    Acc& a = accs[static_cast<std::size_t>(g)];
    for (int i = g * n / groups; i < (g + 1) * n / groups; ++i) {
      const Sample& s = data[static_cast<std::size_t>(i)];
      Rng rng = Rng::fork(seed, static_cast<std::uint64_t>(i));
      std::vector<double> probs(static_cast<std::size_t>(model.cfg.class_count), 0.0);
      for (int rep = 0; rep < repeats; ++rep) {
        auto indices = sample_frame_indices(s.skeleton.frame_count(), model.cfg.frame_count, rng);
        auto in = prepare_input<S>(s, indices, nullptr, 0.0);
        Tape<S> t;
        auto out = model.forward(t, in);
        auto p0 = t.softmax_last(out.logits0);
        if (model.skeleton_only) {
          for (int c = 0; c < model.cfg.class_count; ++c)
            probs[static_cast<std::size_t>(c)] += static_cast<double>(t.val(p0).at(c));
        } else {
          auto p1 = t.softmax_last(out.logits1);
          for (int c = 0; c < model.cfg.class_count; ++c)
            probs[static_cast<std::size_t>(c)] +=
                0.5 * (static_cast<double>(t.val(p0).at(c)) + static_cast<double>(t.val(p1).at(c)));
        }
        if (rep == 0 && !model.skeleton_only) {
          a.consistency += static_cast<double>(t.scalar(out.consistency));
          if (!s.gt_object.empty()) {
            SampledClip clip = take_frames(s, indices);
            auto sel = localize(t.val(out.attention), in.cats, model.cfg.category_count);
            const int no = model.cfg.candidate_count;
            for (int f = 0; f < model.cfg.frame_count; ++f) {
              const int gt = clip.gt_object[static_cast<std::size_t>(f)];
              if (gt < 0) continue;
              ++a.loc_frames;
              const CandidateSlot& chosen =
                  clip.cands[static_cast<std::size_t>(f) * no + sel[static_cast<std::size_t>(f)].slot];
              const CandidateSlot& truth = clip.cands[static_cast<std::size_t>(f) * no + gt];
              if (chosen == truth) ++a.loc_hits;
            }
          }
        }
      }
      if (argmax(probs) == s.action_label) ++a.correct;
    }
  };
  std::vector<std::thread> pool;
  for (int g = 1; g < groups; ++g) pool.emplace_back(work, g);
  work(0);
  for (auto& th : pool) th.join();

  Metrics m;
  m.sample_count = n;
  int correct = 0, hits = 0, frames = 0;
  double cons = 0;
  for (const auto& a : accs) {
    correct += a.correct;
    hits += a.loc_hits;
    frames += a.loc_frames;
    cons += a.consistency;
  }
  m.top1_accuracy = static_cast<double>(correct) / n;
  if (frames > 0) m.localization_frame_accuracy = static_cast<double>(hits) / frames;
  if (!model.skeleton_only) m.mean_consistency = cons / n;
  return m;
}

/// Trains the serialized pipeline with the configured schedule. One row per
/// epoch is appended to `rows` when non-null. Deterministic given the seed.
template <class S>
JointModel<S> train(const std::vector<Sample>& data, const DatasetConfig& dcfg, const TrainOptions& opt,
                    std::vector<EpochRow>* rows);

}  // namespace skelfuse
