/* patchwatch: saliency-based detector for localized physical attacks on
 * convolutional classifiers, plus the attack generators used to evaluate it.
 *
 * C API over the shared library. All objects are opaque handles owned by the
 * caller and released with the matching *_free. Functions return PW_OK or an
 * error code; pw_last_error() describes the most recent failure on the
 * calling thread.
 */

#ifndef PATCHWATCH_H
#define PATCHWATCH_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum pw_status {
  PW_OK = 0,
  PW_ERR_INVALID_ARG = 1,
  PW_ERR_IO = 2,
  PW_ERR_FORMAT = 3,
  PW_ERR_SHAPE = 4,
  PW_ERR_NO_CONVERGE = 5,
  PW_ERR_DEGENERATE = 6,
  PW_ERR_RUNTIME = 7
} pw_status;

const char* pw_last_error(void);
const char* pw_version(void);

typedef struct pw_image pw_image;
typedef struct pw_dataset pw_dataset;
typedef struct pw_model pw_model;
typedef struct pw_boundary pw_boundary;

/* ---- images (PPM P6 / PGM P5, pixels in [0,1]) ---- */

pw_status pw_image_load(const char* path, pw_image** out);
pw_status pw_image_save(const pw_image* img, const char* path);
pw_status pw_image_create(int height, int width, int channels, const float* pixels, pw_image** out);
int pw_image_height(const pw_image* img);
int pw_image_width(const pw_image* img);
int pw_image_channels(const pw_image* img);
/* copies height*width*channels floats */
pw_status pw_image_pixels(const pw_image* img, float* out, size_t capacity);
void pw_image_free(pw_image* img);

/* ---- datasets ---- */

pw_status pw_dataset_synth(int num_classes, int per_class, uint64_t seed, pw_dataset** out);
/* path: manifest file or a directory containing manifest.txt */
pw_status pw_dataset_load(const char* path, pw_dataset** out);
pw_status pw_dataset_save(const pw_dataset* ds, const char* dir);
pw_status pw_dataset_split(const pw_dataset* ds, double fraction, uint64_t seed, pw_dataset** first,
                           pw_dataset** rest);
pw_status pw_dataset_subsample(const pw_dataset* ds, int n, uint64_t seed, pw_dataset** out);
int pw_dataset_size(const pw_dataset* ds);
int pw_dataset_num_classes(const pw_dataset* ds);
pw_status pw_dataset_item(const pw_dataset* ds, int index, pw_image** img, int* label);
void pw_dataset_free(pw_dataset* ds);

/* ---- models ---- */

typedef struct pw_train_config {
  int max_epochs;
  double learning_rate;
  int batch_size;
  double holdout_fraction;
  double target_accuracy; /* 0 disables the convergence gate */
} pw_train_config;

void pw_train_config_default(pw_train_config* cfg);

pw_status pw_model_train(const pw_train_config* cfg, const pw_dataset* ds, uint64_t seed,
                         pw_model** out);
pw_status pw_model_load(const char* path, pw_model** out);
pw_status pw_model_save(const pw_model* m, const char* path);
pw_status pw_model_predict(const pw_model* m, const pw_image* img, int* class_index,
                           double* confidence);
pw_status pw_model_accuracy(const pw_model* m, const pw_dataset* ds, int jobs, double* accuracy);
int pw_model_num_classes(const pw_model* m);
void pw_model_free(pw_model* m);

/* ---- detector configuration ---- */

enum { PW_PATTERN_RANDOM = 0, PW_PATTERN_CHECKER = 1, PW_PATTERN_OPTIMIZED = 2 };
enum { PW_DENOM_OUTSIDE_POINTS = 0, PW_DENOM_ALL_POINTS = 1 };
enum { PW_PROPOSALS_SELECTIVE_SEARCH = 0, PW_PROPOSALS_SLIDING_WINDOWS = 1 };

typedef struct pw_detector_config {
  int num_proposals;       /* k */
  int test_set_cap;        /* |X| cap applied by the caller when loading */
  int pattern_kind;        /* PW_PATTERN_* */
  uint64_t pattern_seed;
  int intervals;           /* outlier bins over the avgConf axis */
  int denominator;         /* PW_DENOM_* */
  int max_iterations;      /* iterative detection */
  int proposal_mode;       /* PW_PROPOSALS_* */
  int mask_subtraction;    /* 0 disables mask refinement (ablation) */
  int jobs;
} pw_detector_config;

void pw_detector_config_default(pw_detector_config* cfg);

/* ---- calibration / detection ---- */

pw_status pw_calibrate(const pw_model* m, const pw_dataset* benign, const pw_dataset* test_set,
                       const pw_detector_config* cfg, pw_boundary** out,
                       const char* points_csv_path /* nullable */);
pw_status pw_boundary_save(const pw_boundary* b, const char* path);
pw_status pw_boundary_load(const char* path, pw_boundary** out);
pw_status pw_boundary_params(const pw_boundary* b, double* a, double* bq, double* c, double* t);
void pw_boundary_free(pw_boundary* b);

typedef struct pw_verdict {
  int is_attack;
  double distance;
  double avg_conf;
  double fooled;
  int raw_fooled;
  int predicted_class;
  double confidence;
  int candidate_index;
} pw_verdict;

pw_status pw_detect(const pw_model* m, const pw_boundary* b, const pw_dataset* test_set,
                    const pw_detector_config* cfg, const pw_image* img, pw_verdict* out,
                    const char* debug_dir /* nullable */);
/* runs up to cfg->max_iterations detections, inpainting each attack region */
pw_status pw_detect_iterative(const pw_model* m, const pw_boundary* b, const pw_dataset* test_set,
                              const pw_detector_config* cfg, const pw_image* img,
                              pw_verdict* out, int capacity, int* count);

/* ---- attacks ---- */

pw_status pw_make_trigger(int size, uint64_t seed, pw_image** out);
/* row/col < 0 places the trigger at a random position per item */
pw_status pw_poison_dataset(const pw_dataset* ds, const pw_image* trigger, int target_class,
                            int row, int col, double alpha, double rate, uint64_t seed,
                            pw_dataset** out);
pw_status pw_stamp(const pw_image* img, const pw_image* patch, int row, int col, double alpha,
                   pw_image** out);

typedef struct pw_patch_spec {
  double side_fraction;
  int target_class;
  int steps;
  double learning_rate;
  uint64_t seed;
} pw_patch_spec;

void pw_patch_spec_default(pw_patch_spec* spec);

pw_status pw_gen_adversarial_patch(const pw_model* m, const pw_dataset* train,
                                   const pw_patch_spec* spec, int jobs, pw_image** out);
/* stamped misclassification rate toward target_class over the probe set */
pw_status pw_attack_success(const pw_model* m, const pw_dataset* probe, const pw_image* patch,
                            int target_class, double alpha, uint64_t seed, int jobs, double* rate);

/* ---- experiment runners ---- */

/* rates[4] = tp, tn, fp, fn. adversarial/benign are manifest paths or dirs. */
pw_status pw_run_eval(const pw_model* m, const pw_boundary* b, const pw_dataset* test_set,
                      const char* adversarial_path, const char* benign_path,
                      const pw_detector_config* cfg, double rates[4],
                      const char* csv_path /* nullable */);

/* writes gradcam_perturb.csv, heatmap_minimize.csv, joint_sweep.csv */
pw_status pw_run_redteam(const pw_model* m, const pw_dataset* data, int target_class,
                         double side_fraction, int patch_steps, int perturb_steps,
                         int minimize_steps, int joint_patches, int joint_steps,
                         const double* alphas, int n_alphas, uint64_t seed, int jobs,
                         const char* out_dir);

pw_status pw_run_sweep(const pw_model* m, const pw_boundary* b, const pw_dataset* test_set,
                       const pw_dataset* probe, const pw_image* patch, int target_class,
                       const double* sizes, int n_sizes, const double* alphas, int n_alphas,
                       const pw_detector_config* cfg, uint64_t seed, int trials,
                       const char* csv_path);

#ifdef __cplusplus
}
#endif

#endif /* PATCHWATCH_H */
