// Command-line front end for the skelfuse shared library. Talks to the core
// exclusively through the C API in skelfuse/capi.h.

#include <CLI11.hpp>
#include <cstdio>
#include <cstdlib>
#include <string>

#include "skelfuse/capi.h"

namespace {

int report(int status) {
  if (status != SF_OK) std::fprintf(stderr, "error: %s\n", sf_last_error());
  return status;
}

// --seed flag wins, then SKELFUSE_SEED, then the config/default seed.
long long resolve_seed(bool seed_set, long long seed_flag) {
  if (seed_set) return seed_flag;
  if (const char* env = std::getenv("SKELFUSE_SEED")) return std::atoll(env);
  return -1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"serialized skeleton action recognition with unsupervised interacted-object localization"};
  app.require_subcommand(1);

  long long seed_flag = -1;
  bool seed_set = false;
  app.add_option("--seed", seed_flag, "seed override (also: SKELFUSE_SEED)")
      ->each([&](const std::string&) { seed_set = true; });

  // synth
  auto* synth = app.add_subcommand("synth", "generate a synthetic dataset with known interacted objects");
  std::string synth_config, synth_out;
  synth->add_option("--config", synth_config, "synth config JSON")->required();
  synth->add_option("--out", synth_out, "output dataset directory")->required();

  // train
  auto* train = app.add_subcommand("train", "train the joint model");
  std::string train_data, train_config, train_ckpt, train_metrics;
  bool baseline = false, zero_action = false;
  int threads = 2;
  train->add_option("--data", train_data, "dataset directory")->required();
  train->add_option("--config", train_config, "train config JSON")->required();
  train->add_option("--out", train_ckpt, "checkpoint output path")->required();
  train->add_option("--metrics", train_metrics, "metrics CSV path (default: <out>.metrics.csv)");
  train->add_flag("--baseline", baseline, "skeleton-only baseline (second head disabled)");
  train->add_flag("--zero-action", zero_action, "train the localizer without the action cue");
  train->add_option("--threads", threads, "worker threads");

  // eval
  auto* eval = app.add_subcommand("eval", "evaluate a checkpoint, print metrics JSON");
  std::string eval_data, eval_ckpt, eval_split = "test";
  int repeats = 5;
  eval->add_option("--data", eval_data, "dataset directory")->required();
  eval->add_option("--ckpt", eval_ckpt, "checkpoint path")->required();
  eval->add_option("--repeats", repeats, "test-time down-samplings")->capture_default_str();
  eval->add_option("--split", eval_split, "train|test")->capture_default_str();

  // localize
  auto* loc = app.add_subcommand("localize", "export per-frame interacted-object selections");
  std::string loc_data, loc_ckpt, loc_out, loc_split = "test";
  loc->add_option("--data", loc_data, "dataset directory")->required();
  loc->add_option("--ckpt", loc_ckpt, "checkpoint path")->required();
  loc->add_option("--out", loc_out, "output JSONL path")->required();
  loc->add_option("--split", loc_split, "train|test")->capture_default_str();

  // plot
  auto* plot = app.add_subcommand("plot", "render metric curves and an attention heatmap");
  std::string plot_metrics_path, plot_localize, plot_out;
  plot->add_option("--metrics", plot_metrics_path, "metrics CSV")->required();
  plot->add_option("--out", plot_out, "output image directory")->required();
  plot->add_option("--localize", plot_localize, "localization JSONL for the heatmap");

  CLI11_PARSE(app, argc, argv);
  const long long seed = resolve_seed(seed_set, seed_flag);

  if (*synth) return report(sf_synth(synth_config.c_str(), synth_out.c_str(), seed));

  if (*train) {
    if (train_metrics.empty()) train_metrics = train_ckpt + ".metrics.csv";
    return report(sf_train(train_data.c_str(), train_config.c_str(), train_ckpt.c_str(),
                           train_metrics.c_str(), baseline ? 1 : 0, zero_action ? 1 : 0, threads, seed));
  }

  if (*eval) {
    char* json = nullptr;
    const int rc = sf_eval(eval_data.c_str(), eval_split.c_str(), eval_ckpt.c_str(), repeats,
                           seed >= 0 ? static_cast<unsigned long long>(seed) : 17ULL, &json);
    if (rc == SF_OK && json) {
      std::printf("%s\n", json);
      sf_free_string(json);
    }
    return report(rc);
  }

  if (*loc)
    return report(sf_localize(loc_data.c_str(), loc_split.c_str(), loc_ckpt.c_str(),
                              seed >= 0 ? static_cast<unsigned long long>(seed) : 17ULL,
                              loc_out.c_str()));

  if (*plot)
    return report(sf_plot(plot_metrics_path.c_str(),
                          plot_localize.empty() ? nullptr : plot_localize.c_str(), plot_out.c_str()));

  return SF_ERR_UNKNOWN;
}
