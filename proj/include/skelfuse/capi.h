#ifndef SKELFUSE_CAPI_H
#define SKELFUSE_CAPI_H

/* C interface to the skelfuse shared library. All functions return a status
 * code (sf_status); on failure sf_last_error() carries a message for the
 * calling thread. Handles are opaque and freed with their close function. */

#ifdef __cplusplus
extern "C" {
#endif

typedef enum sf_status {
  SF_OK = 0,
  SF_ERR_UNKNOWN = 1,
  SF_ERR_IO = 3,
  SF_ERR_SCHEMA = 4,
  SF_ERR_ALIGNMENT = 5,
  SF_ERR_CONFIG = 6,
  SF_ERR_CONTRACT = 7,
  SF_ERR_GENERATION = 8,
  SF_ERR_DIVERGENCE = 9,
  SF_ERR_MISMATCH = 10
} sf_status;

/* Message describing the most recent failure on this thread. */
const char* sf_last_error(void);

/* Generates a synthetic dataset (train/test splits, detections, ground-truth
 * sidecars, meta.json) into out_dir. seed_override < 0 keeps the config seed. */
int sf_synth(const char* synth_config_path, const char* out_dir, long long seed_override);

/* Trains on the train split of data_dir and writes a checkpoint plus a
 * metrics CSV. skeleton_only trains and evaluates the first head alone;
 * zero_action disables the localizer's action cue. */
int sf_train(const char* data_dir, const char* train_config_path, const char* ckpt_out,
             const char* metrics_csv_out, int skeleton_only, int zero_action, int threads,
             long long seed_override);

/* Evaluates a checkpoint; *metrics_json_out receives a malloc'd JSON string
 * owned by the caller (release with sf_free_string). */
int sf_eval(const char* data_dir, const char* split, const char* ckpt_path, int repeats,
            unsigned long long seed, char** metrics_json_out);

/* Writes per-frame localization records as JSON lines. */
int sf_localize(const char* data_dir, const char* split, const char* ckpt_path,
                unsigned long long seed, const char* out_jsonl);

/* Renders loss/accuracy curves from a metrics CSV, plus an attention heatmap
 * when a localization export is given (may be NULL). */
int sf_plot(const char* metrics_csv, const char* localize_jsonl, const char* out_dir);

void sf_free_string(char* s);

/* ---- dataset handle ---- */
typedef struct sf_dataset sf_dataset;
int sf_dataset_open(const char* data_dir, const char* split, sf_dataset** out);
long long sf_dataset_size(const sf_dataset* ds);
int sf_dataset_label(const sf_dataset* ds, long long index);
void sf_dataset_close(sf_dataset* ds);

/* ---- model handle ---- */
typedef struct sf_model sf_model;
int sf_model_open(const char* ckpt_path, sf_model** out);
int sf_model_class_count(const sf_model* m);
/* probs_out must hold class_count doubles; output lies on the simplex. */
int sf_predict(sf_model* m, const sf_dataset* ds, long long index, int repeats,
               unsigned long long seed, double* probs_out);
void sf_model_close(sf_model* m);

#ifdef __cplusplus
}
#endif

#endif /* SKELFUSE_CAPI_H */
