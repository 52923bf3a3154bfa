#include "skelfuse/training.hpp"

#include <numeric>

namespace skelfuse {

namespace {

template <class S>
struct SampleLoss {
  double l_a1 = 0, l_a2 = 0, l_con = 0;
  bool correct = false;
};

/// Forward + backward of one training sample; gradients land in `redirect`.
template <class S>
SampleLoss<S> train_step(JointModel<S>& model, const Sample& sample, const DatasetConfig& dcfg,
                         const TrainOptions& opt, Rng rng,
                         const std::unordered_map<Param<S>*, Tensor<S>*>& redirect, S inv_batch) {
  auto indices = sample_frame_indices(sample.skeleton.frame_count(), model.cfg.frame_count, rng);
  auto in = prepare_input<S>(sample, indices, &rng, dcfg.rotation_max_degrees);

  Tape<S> t;
  t.set_grad_redirect(&redirect);
  auto out = model.forward(t, in);
  const S eps = static_cast<S>(opt.cfg.smoothing);
  auto l_a1 = t.cross_entropy_smooth(out.logits0, sample.action_label, eps);

  SampleLoss<S> res;
  res.l_a1 = static_cast<double>(t.scalar(l_a1));
  typename Tape<S>::Id total;
  std::vector<double> probs(static_cast<std::size_t>(model.cfg.class_count));
  if (model.skeleton_only) {
    total = l_a1;
    auto p0 = t.softmax_last(out.logits0);
    for (int c = 0; c < model.cfg.class_count; ++c)
      probs[static_cast<std::size_t>(c)] = static_cast<double>(t.val(p0).at(c));
  } else {
    auto l_a2 = t.cross_entropy_smooth(out.logits1, sample.action_label, eps);
    res.l_a2 = static_cast<double>(t.scalar(l_a2));
    res.l_con = static_cast<double>(t.scalar(out.consistency));
    total = t.add(t.add(l_a1, t.scale(l_a2, static_cast<S>(opt.cfg.lambda1))),
                  t.scale(out.consistency, static_cast<S>(opt.cfg.lambda2)));
    auto p0 = t.softmax_last(out.logits0);
    auto p1 = t.softmax_last(out.logits1);
    for (int c = 0; c < model.cfg.class_count; ++c)
      probs[static_cast<std::size_t>(c)] =
          0.5 * (static_cast<double>(t.val(p0).at(c)) + static_cast<double>(t.val(p1).at(c)));
  }
  if (!std::isfinite(res.l_a1)) throw DivergenceError("training diverged: loss_a1 is not finite");
  if (!std::isfinite(res.l_a2)) throw DivergenceError("training diverged: loss_a2 is not finite");
  if (!std::isfinite(res.l_con)) throw DivergenceError("training diverged: loss_con is not finite");
  res.correct = argmax(probs) == sample.action_label;
  t.backward(total, inv_batch);
  return res;
}

}  // namespace

template <class S>
JointModel<S> train(const std::vector<Sample>& data, const DatasetConfig& dcfg, const TrainOptions& opt,
                    std::vector<EpochRow>* rows) {
  if (data.empty()) throw ContractError("train: empty dataset");

  ModelConfig mcfg;
  mcfg.joint_count = dcfg.joint_count;
  mcfg.candidate_count = dcfg.candidate_count;
  mcfg.category_count = dcfg.category_count;
  mcfg.class_count = dcfg.class_count;
  mcfg.frame_count = dcfg.frame_sample_count;
  mcfg.seed = opt.cfg.seed;

  JointModel<S> model;
  model.skeleton_only = opt.skeleton_only;
  model.zero_action = opt.zero_action;
  model.init(mcfg);
  auto params = model.params();

  // held-out validation split
  std::vector<int> order(data.size());
  std::iota(order.begin(), order.end(), 0);
  Rng split_rng(opt.cfg.seed ^ 0x5eedf00dULL);
  for (int i = static_cast<int>(order.size()) - 1; i > 0; --i)
    std::swap(order[static_cast<std::size_t>(i)],
              order[static_cast<std::size_t>(split_rng.uniform_int(0, i + 1))]);
  const int val_n = static_cast<int>(std::lround(opt.val_fraction * static_cast<double>(data.size())));
  std::vector<int> val_idx(order.begin(), order.begin() + val_n);
  std::vector<int> train_idx(order.begin() + val_n, order.end());
  if (train_idx.empty()) throw ContractError("train: no training samples left after validation split");
  std::vector<Sample> val_set;
  for (int i : val_idx) val_set.push_back(data[static_cast<std::size_t>(i)]);

  Adam<S> adam;
  adam.init(params);

  constexpr int kGroups = 4;
  std::vector<std::vector<Tensor<S>>> bufs(kGroups);
  std::vector<std::unordered_map<Param<S>*, Tensor<S>*>> redirects(kGroups);
  for (int g = 0; g < kGroups; ++g) {
    bufs[static_cast<std::size_t>(g)].reserve(params.size());
    for (auto* p : params) bufs[static_cast<std::size_t>(g)].emplace_back(p->value.shape);
    for (std::size_t i = 0; i < params.size(); ++i)
      redirects[static_cast<std::size_t>(g)][params[i]] = &bufs[static_cast<std::size_t>(g)][i];
  }

  for (int epoch = 1; epoch <= opt.cfg.epochs; ++epoch) {
    const double lr = lr_at_epoch(opt.cfg, epoch);
    Rng shuffle_rng(opt.cfg.seed ^ (0xa5a5a5a5ULL + static_cast<std::uint64_t>(epoch)));
    std::vector<int> perm = train_idx;
    for (int i = static_cast<int>(perm.size()) - 1; i > 0; --i)
      std::swap(perm[static_cast<std::size_t>(i)],
                perm[static_cast<std::size_t>(shuffle_rng.uniform_int(0, i + 1))]);

    double sum_a1 = 0, sum_a2 = 0, sum_con = 0;
    int correct = 0;

    for (std::size_t b0 = 0; b0 < perm.size(); b0 += static_cast<std::size_t>(opt.cfg.batch_size)) {
      const int bsz = static_cast<int>(
          std::min<std::size_t>(static_cast<std::size_t>(opt.cfg.batch_size), perm.size() - b0));
      const S inv_batch = S(1) / static_cast<S>(bsz);
      for (auto& gb : bufs)
        for (auto& tns : gb) tns.fill(S(0));

      std::vector<SampleLoss<S>> losses(static_cast<std::size_t>(bsz));
      auto work = [&](int g) {
        for (int i = g * bsz / kGroups; i < (g + 1) * bsz / kGroups; ++i) {
          const int idx = perm[b0 + static_cast<std::size_t>(i)];
          Rng rng = Rng::fork(opt.cfg.seed ^ (static_cast<std::uint64_t>(epoch) << 24),
                              static_cast<std::uint64_t>(idx));
          losses[static_cast<std::size_t>(i)] =
              train_step(model, data[static_cast<std::size_t>(idx)], dcfg, opt, rng,
                         redirects[static_cast<std::size_t>(g)], inv_batch);
        }
      };
      if (opt.threads > 1) {
        std::vector<std::thread> pool;
        for (int g = 1; g < kGroups; ++g) pool.emplace_back(work, g);
        work(0);
        for (auto& th : pool) th.join();
      } else {
        for (int g = 0; g < kGroups; ++g) work(g);
      }

      for (auto* p : params) p->zero_grad();
      for (int g = 0; g < kGroups; ++g)
        for (std::size_t i = 0; i < params.size(); ++i) {
          Tensor<S>& dst = params[i]->grad;
          const Tensor<S>& src = bufs[static_cast<std::size_t>(g)][i];
          for (std::int64_t j = 0; j < dst.size(); ++j) dst.data[j] += src.data[j];
        }
      adam.step(params, lr);

      for (const auto& l : losses) {
        sum_a1 += l.l_a1;
        sum_a2 += l.l_a2;
        sum_con += l.l_con;
        if (l.correct) ++correct;
      }
    }

    if (rows) {
      EpochRow row;
      row.epoch = epoch;
      row.lr = lr;
      const double n = static_cast<double>(perm.size());
      row.loss_a1 = sum_a1 / n;
      row.loss_a2 = sum_a2 / n;
      row.loss_con = sum_con / n;
      row.loss_total = loss_total(row.loss_a1, row.loss_a2, row.loss_con, opt.cfg.lambda1, opt.cfg.lambda2);
      row.train_acc = static_cast<double>(correct) / n;
      if (!val_set.empty()) {
        Metrics vm = evaluate(model, val_set, 1,
                              opt.cfg.seed ^ (0xa11dULL + static_cast<std::uint64_t>(epoch)), opt.threads);
        row.val_acc = vm.top1_accuracy;
      }
      rows->push_back(row);
    }
  }
  return model;
}

template JointModel<float> train<float>(const std::vector<Sample>&, const DatasetConfig&,
                                        const TrainOptions&, std::vector<EpochRow>*);
template JointModel<double> train<double>(const std::vector<Sample>&, const DatasetConfig&,
                                          const TrainOptions&, std::vector<EpochRow>*);

}  // namespace skelfuse
