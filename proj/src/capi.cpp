#include "skelfuse/capi.h"

#include <cstring>

#include "skelfuse/checkpoint.hpp"
#include "skelfuse/jsonio.hpp"
#include "skelfuse/plot.hpp"
#include "skelfuse/training.hpp"

using namespace skelfuse;

namespace {

thread_local std::string g_last_error;

int fail(int code, const std::string& msg) {
  g_last_error = msg;
  return code;
}

template <class Fn>
int guarded(Fn&& fn) {
  try {
    fn();
    return SF_OK;
  } catch (const IoError& e) {
    return fail(SF_ERR_IO, e.what());
  } catch (const SchemaError& e) {
    return fail(SF_ERR_SCHEMA, e.what());
  } catch (const AlignmentError& e) {
    return fail(SF_ERR_ALIGNMENT, e.what());
  } catch (const ConfigError& e) {
    return fail(SF_ERR_CONFIG, e.what());
  } catch (const ContractError& e) {
    return fail(SF_ERR_CONTRACT, e.what());
  } catch (const GenerationError& e) {
    return fail(SF_ERR_GENERATION, e.what());
  } catch (const DivergenceError& e) {
    return fail(SF_ERR_DIVERGENCE, e.what());
  } catch (const MismatchError& e) {
    return fail(SF_ERR_MISMATCH, e.what());
  } catch (const std::exception& e) {
    return fail(SF_ERR_UNKNOWN, e.what());
  }
}

}  // namespace

struct sf_dataset {
  std::vector<Sample> samples;
  DatasetConfig cfg;
};

struct sf_model {
  JointModel<float> model;
};

extern "C" {

const char* sf_last_error(void) { return g_last_error.c_str(); }

void sf_free_string(char* s) { std::free(s); }

int sf_synth(const char* synth_config_path, const char* out_dir, long long seed_override) {
  return guarded([&] {
    SynthConfig cfg = read_synth_config(synth_config_path);
    if (seed_override >= 0) cfg.seed = static_cast<std::uint64_t>(seed_override);
    write_synth_dataset(cfg, out_dir);
  });
}

int sf_train(const char* data_dir, const char* train_config_path, const char* ckpt_out,
             const char* metrics_csv_out, int skeleton_only, int zero_action, int threads,
             long long seed_override) {
  return guarded([&] {
    TrainOptions opt;
    opt.cfg = read_train_config(train_config_path);
    if (seed_override >= 0) opt.cfg.seed = static_cast<std::uint64_t>(seed_override);
    opt.skeleton_only = skeleton_only != 0;
    opt.zero_action = zero_action != 0;
    opt.threads = threads > 0 ? threads : 2;
    DatasetConfig dcfg;
    auto samples = load_dataset_dir(data_dir, "train", &dcfg);
    std::vector<EpochRow> rows;
    JointModel<float> model = train<float>(samples, dcfg, opt, &rows);
    save_checkpoint(model, ckpt_out);
    if (metrics_csv_out && std::strlen(metrics_csv_out) > 0) write_metrics_csv(metrics_csv_out, rows);
  });
}

int sf_eval(const char* data_dir, const char* split, const char* ckpt_path, int repeats,
            unsigned long long seed, char** metrics_json_out) {
  return guarded([&] {
    DatasetConfig dcfg;
    auto samples = load_dataset_dir(data_dir, split, &dcfg);
    JointModel<float> model = load_checkpoint<float>(ckpt_path);
    check_compatible(model.cfg, dcfg);
    Metrics m = evaluate(model, samples, repeats, seed);
    const std::string js = metrics_to_json(m);
    if (metrics_json_out) {
      *metrics_json_out = static_cast<char*>(std::malloc(js.size() + 1));
      std::memcpy(*metrics_json_out, js.c_str(), js.size() + 1);
    }
  });
}

int sf_localize(const char* data_dir, const char* split, const char* ckpt_path,
                unsigned long long seed, const char* out_jsonl) {
  return guarded([&] {
    DatasetConfig dcfg;
    auto samples = load_dataset_dir(data_dir, split, &dcfg);
    JointModel<float> model = load_checkpoint<float>(ckpt_path);
    check_compatible(model.cfg, dcfg);
    if (model.skeleton_only)
      throw ContractError("localize: checkpoint was trained skeleton-only and has no localizer");
    std::vector<LocalizeRecord> records;
    for (int i = 0; i < static_cast<int>(samples.size()); ++i) {
      const Sample& s = samples[static_cast<std::size_t>(i)];
      Rng rng = Rng::fork(seed, static_cast<std::uint64_t>(i));
      auto indices = sample_frame_indices(s.skeleton.frame_count(), model.cfg.frame_count, rng);
      auto in = prepare_input<float>(s, indices, nullptr, 0.0);
      Tape<float> t;
      auto out = model.forward(t, in);
      auto sel = localize(t.val(out.attention), in.cats, model.cfg.category_count);
      const int no = model.cfg.candidate_count;
      for (int f = 0; f < model.cfg.frame_count; ++f) {
        LocalizeRecord r;
        r.video_id = s.video_id;
        r.person_id = s.person_id;
        r.frame = indices[static_cast<std::size_t>(f)];
        r.slot = sel[static_cast<std::size_t>(f)].slot;
        const CandidateSlot& c = s.candidates.at(r.frame, r.slot);
        r.bbox[0] = c.cx;
        r.bbox[1] = c.cy;
        r.bbox[2] = c.w;
        r.bbox[3] = c.h;
        r.category_id = c.category_id;
        r.attention = sel[static_cast<std::size_t>(f)].attention;
        r.interaction = !sel[static_cast<std::size_t>(f)].background;
        for (int j = 0; j < no; ++j)
          r.attention_all.push_back(static_cast<double>(t.val(out.attention).at(f, j)));
        records.push_back(std::move(r));
      }
    }
    write_localize_jsonl(out_jsonl, records);
  });
}

int sf_plot(const char* metrics_csv, const char* localize_jsonl, const char* out_dir) {
  return guarded([&] {
    plot_metrics(read_metrics_csv(metrics_csv), out_dir);
    if (localize_jsonl && std::strlen(localize_jsonl) > 0)
      plot_attention_heatmap(read_localize_jsonl(localize_jsonl), out_dir);
  });
}

int sf_dataset_open(const char* data_dir, const char* split, sf_dataset** out) {
  return guarded([&] {
    auto ds = std::make_unique<sf_dataset>();
    ds->samples = load_dataset_dir(data_dir, split, &ds->cfg);
    *out = ds.release();
  });
}

long long sf_dataset_size(const sf_dataset* ds) {
  return ds ? static_cast<long long>(ds->samples.size()) : 0;
}

int sf_dataset_label(const sf_dataset* ds, long long index) {
  if (!ds || index < 0 || index >= static_cast<long long>(ds->samples.size())) return -1;
  return ds->samples[static_cast<std::size_t>(index)].action_label;
}

void sf_dataset_close(sf_dataset* ds) { delete ds; }

int sf_model_open(const char* ckpt_path, sf_model** out) {
  return guarded([&] {
    auto m = std::make_unique<sf_model>();
    m->model = load_checkpoint<float>(ckpt_path);
    *out = m.release();
  });
}

int sf_model_class_count(const sf_model* m) { return m ? m->model.cfg.class_count : 0; }

int sf_predict(sf_model* m, const sf_dataset* ds, long long index, int repeats,
               unsigned long long seed, double* probs_out) {
  return guarded([&] {
    if (!m || !ds) throw ContractError("sf_predict: null handle");
    if (index < 0 || index >= static_cast<long long>(ds->samples.size()))
      throw ContractError("sf_predict: index out of range");
    check_compatible(m->model.cfg, ds->cfg);
    Rng rng = Rng::fork(seed, static_cast<std::uint64_t>(index));
    auto probs = predict(m->model, ds->samples[static_cast<std::size_t>(index)],
                         repeats > 0 ? repeats : 5, rng);
    std::copy(probs.begin(), probs.end(), probs_out);
  });
}

void sf_model_close(sf_model* m) { delete m; }

}  // extern "C"
