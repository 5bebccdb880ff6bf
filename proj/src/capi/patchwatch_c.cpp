#include "patchwatch.h"

#include <cstring>
#include <string>

#include "core/attacks.hpp"
#include "core/detector.hpp"
#include "core/experiment.hpp"

using namespace pw;

struct pw_image {
  Image img;
};
struct pw_dataset {
  Dataset ds;
};
struct pw_model {
  nn::Model model;
};
struct pw_boundary {
  boundary::DecisionBoundary b;
};

namespace {

thread_local std::string g_lastError;

pw_status status_for(const Error& e) {
  switch (e.code()) {
    case Err::InvalidArg:
    case Err::InvalidClass:
    case Err::UnsupportedLoss:
    case Err::EmptyTestSet:
    case Err::OutOfBounds:
      return PW_ERR_INVALID_ARG;
    case Err::Io:
      return PW_ERR_IO;
    case Err::UnsupportedFormat:
    case Err::CorruptHeader:
      return PW_ERR_FORMAT;
    case Err::ShapeMismatch:
      return PW_ERR_SHAPE;
    case Err::DidNotConverge:
      return PW_ERR_NO_CONVERGE;
    case Err::DegenerateFit:
      return PW_ERR_DEGENERATE;
    case Err::NoProposals:
      return PW_ERR_RUNTIME;
  }
  return PW_ERR_RUNTIME;
}

template <typename Fn>
pw_status guarded(Fn&& fn) {
  try {
    fn();
    return PW_OK;
  } catch (const Error& e) {
    g_lastError = e.what();
    return status_for(e);
  } catch (const std::exception& e) {
    g_lastError = e.what();
    return PW_ERR_RUNTIME;
  } catch (...) {
    g_lastError = "unknown error";
    return PW_ERR_RUNTIME;
  }
}

pw_status invalid(const char* what) {
  g_lastError = what;
  return PW_ERR_INVALID_ARG;
}

pipeline::DetectorConfig to_config(const pw_detector_config* cfg) {
  pipeline::DetectorConfig c;
  if (!cfg) return c;
  c.k = cfg->num_proposals;
  c.testSetCap = cfg->test_set_cap;
  c.patternKind = static_cast<fuzz::PatternKind>(cfg->pattern_kind);
  c.patternSeed = cfg->pattern_seed;
  c.nIntervals = cfg->intervals;
  c.denominator = cfg->denominator == PW_DENOM_ALL_POINTS
                      ? boundary::ThresholdDenominator::AllPoints
                      : boundary::ThresholdDenominator::OutsidePoints;
  c.maxIterations = cfg->max_iterations;
  c.segmentation.slidingWindows = cfg->proposal_mode == PW_PROPOSALS_SLIDING_WINDOWS;
  c.maskSubtraction = cfg->mask_subtraction != 0;
  c.jobs = cfg->jobs;
  return c;
}

void fill_verdict(pw_verdict* out, const detector::DetectionReport& rep) {
  const auto& pt = rep.points[static_cast<size_t>(rep.verdict.candidateIndex)];
  out->is_attack = rep.verdict.isAttack ? 1 : 0;
  out->distance = rep.verdict.distance;
  out->avg_conf = pt.avgConf;
  out->fooled = pt.fooled;
  out->raw_fooled = pt.rawFooledCount;
  out->predicted_class = rep.prediction.classIndex;
  out->confidence = rep.prediction.confidence;
  out->candidate_index = rep.verdict.candidateIndex;
}

}  // namespace

extern "C" {

const char* pw_last_error(void) { return g_lastError.c_str(); }

const char* pw_version(void) { return "patchwatch 1.0.0"; }

/* ---- images ---- */

pw_status pw_image_load(const char* path, pw_image** out) {
  if (!path || !out) return invalid("null argument");
  return guarded([&] { *out = new pw_image{load_image(path)}; });
}

pw_status pw_image_save(const pw_image* img, const char* path) {
  if (!img || !path) return invalid("null argument");
  return guarded([&] { save_image(img->img, path); });
}

pw_status pw_image_create(int height, int width, int channels, const float* pixels, pw_image** out) {
  if (!pixels || !out) return invalid("null argument");
  if (height <= 0 || width <= 0 || (channels != 1 && channels != 3))
    return invalid("bad image dims");
  return guarded([&] {
    Image img(height, width, channels);
    std::memcpy(img.pixels.data(), pixels, img.pixels.size() * sizeof(float));
    *out = new pw_image{std::move(img)};
  });
}

int pw_image_height(const pw_image* img) { return img ? img->img.height : 0; }
int pw_image_width(const pw_image* img) { return img ? img->img.width : 0; }
int pw_image_channels(const pw_image* img) { return img ? img->img.channels : 0; }

pw_status pw_image_pixels(const pw_image* img, float* out, size_t capacity) {
  if (!img || !out) return invalid("null argument");
  if (capacity < img->img.pixels.size()) return invalid("buffer too small");
  std::memcpy(out, img->img.pixels.data(), img->img.pixels.size() * sizeof(float));
  return PW_OK;
}

void pw_image_free(pw_image* img) { delete img; }

/* ---- datasets ---- */

pw_status pw_dataset_synth(int num_classes, int per_class, uint64_t seed, pw_dataset** out) {
  if (!out) return invalid("null argument");
  return guarded([&] { *out = new pw_dataset{synth_shapes(num_classes, per_class, seed)}; });
}

pw_status pw_dataset_load(const char* path, pw_dataset** out) {
  if (!path || !out) return invalid("null argument");
  return guarded([&] { *out = new pw_dataset{load_dataset(path)}; });
}

pw_status pw_dataset_save(const pw_dataset* ds, const char* dir) {
  if (!ds || !dir) return invalid("null argument");
  return guarded([&] { save_dataset(ds->ds, dir); });
}

pw_status pw_dataset_split(const pw_dataset* ds, double fraction, uint64_t seed, pw_dataset** first,
                           pw_dataset** rest) {
  if (!ds || !first || !rest) return invalid("null argument");
  return guarded([&] {
    auto [a, b] = split_dataset(ds->ds, fraction, seed);
    *first = new pw_dataset{std::move(a)};
    *rest = new pw_dataset{std::move(b)};
  });
}

pw_status pw_dataset_subsample(const pw_dataset* ds, int n, uint64_t seed, pw_dataset** out) {
  if (!ds || !out) return invalid("null argument");
  return guarded([&] { *out = new pw_dataset{subsample_dataset(ds->ds, n, seed)}; });
}

int pw_dataset_size(const pw_dataset* ds) { return ds ? static_cast<int>(ds->ds.items.size()) : 0; }
int pw_dataset_num_classes(const pw_dataset* ds) { return ds ? ds->ds.numClasses : 0; }

pw_status pw_dataset_item(const pw_dataset* ds, int index, pw_image** img, int* label) {
  if (!ds || !img || !label) return invalid("null argument");
  if (index < 0 || static_cast<size_t>(index) >= ds->ds.items.size())
    return invalid("index out of range");
  return guarded([&] {
    *img = new pw_image{ds->ds.items[static_cast<size_t>(index)].first};
    *label = ds->ds.items[static_cast<size_t>(index)].second;
  });
}

void pw_dataset_free(pw_dataset* ds) { delete ds; }

/* ---- models ---- */

void pw_train_config_default(pw_train_config* cfg) {
  if (!cfg) return;
  nn::TrainConfig c = nn::reference_train_config();
  cfg->max_epochs = c.maxEpochs;
  cfg->learning_rate = c.learningRate;
  cfg->batch_size = c.batchSize;
  cfg->holdout_fraction = c.holdoutFraction;
  cfg->target_accuracy = c.targetAccuracy;
}

pw_status pw_model_train(const pw_train_config* cfg, const pw_dataset* ds, uint64_t seed,
                         pw_model** out) {
  if (!cfg || !ds || !out) return invalid("null argument");
  return guarded([&] {
    nn::TrainConfig c;
    c.maxEpochs = cfg->max_epochs;
    c.learningRate = cfg->learning_rate;
    c.batchSize = cfg->batch_size;
    c.holdoutFraction = cfg->holdout_fraction;
    c.targetAccuracy = cfg->target_accuracy;
    *out = new pw_model{nn::train(c, ds->ds, seed)};
  });
}

pw_status pw_model_load(const char* path, pw_model** out) {
  if (!path || !out) return invalid("null argument");
  return guarded([&] { *out = new pw_model{nn::load_model(path)}; });
}

pw_status pw_model_save(const pw_model* m, const char* path) {
  if (!m || !path) return invalid("null argument");
  return guarded([&] { nn::save_model(m->model, path); });
}

pw_status pw_model_predict(const pw_model* m, const pw_image* img, int* class_index,
                           double* confidence) {
  if (!m || !img || !class_index || !confidence) return invalid("null argument");
  return guarded([&] {
    nn::Prediction p = nn::predict(m->model, img->img);
    *class_index = p.classIndex;
    *confidence = p.confidence;
  });
}

pw_status pw_model_accuracy(const pw_model* m, const pw_dataset* ds, int jobs, double* accuracy) {
  if (!m || !ds || !accuracy) return invalid("null argument");
  return guarded([&] { *accuracy = nn::model_accuracy(m->model, ds->ds, jobs); });
}

int pw_model_num_classes(const pw_model* m) { return m ? m->model.numClasses : 0; }

void pw_model_free(pw_model* m) { delete m; }

/* ---- detector ---- */

void pw_detector_config_default(pw_detector_config* cfg) {
  if (!cfg) return;
  pipeline::DetectorConfig c;
  cfg->num_proposals = c.k;
  cfg->test_set_cap = c.testSetCap;
  cfg->pattern_kind = static_cast<int>(c.patternKind);
  cfg->pattern_seed = c.patternSeed;
  cfg->intervals = c.nIntervals;
  cfg->denominator = PW_DENOM_OUTSIDE_POINTS;
  cfg->max_iterations = c.maxIterations;
  cfg->proposal_mode = PW_PROPOSALS_SELECTIVE_SEARCH;
  cfg->mask_subtraction = 1;
  cfg->jobs = c.jobs;
}

pw_status pw_calibrate(const pw_model* m, const pw_dataset* benign, const pw_dataset* test_set,
                       const pw_detector_config* cfg, pw_boundary** out,
                       const char* points_csv_path) {
  if (!m || !benign || !test_set || !cfg || !out) return invalid("null argument");
  return guarded([&] {
    std::vector<fuzz::BehaviorPoint> points;
    boundary::DecisionBoundary b =
        pipeline::calibrate(m->model, benign->ds, test_set->ds, to_config(cfg), &points);
    if (points_csv_path) {
      std::vector<fuzz::LabeledPoint> labeled;
      labeled.reserve(points.size());
      for (const auto& p : points) labeled.push_back({p, "benign"});
      fuzz::save_points_csv(labeled, points_csv_path);
    }
    *out = new pw_boundary{b};
  });
}

pw_status pw_boundary_save(const pw_boundary* b, const char* path) {
  if (!b || !path) return invalid("null argument");
  return guarded([&] { boundary::save_boundary(b->b, path); });
}

pw_status pw_boundary_load(const char* path, pw_boundary** out) {
  if (!path || !out) return invalid("null argument");
  return guarded([&] { *out = new pw_boundary{boundary::load_boundary(path)}; });
}

pw_status pw_boundary_params(const pw_boundary* b, double* a, double* bq, double* c, double* t) {
  if (!b) return invalid("null argument");
  if (a) *a = b->b.a;
  if (bq) *bq = b->b.b;
  if (c) *c = b->b.c;
  if (t) *t = b->b.threshold;
  return PW_OK;
}

void pw_boundary_free(pw_boundary* b) { delete b; }

pw_status pw_detect(const pw_model* m, const pw_boundary* b, const pw_dataset* test_set,
                    const pw_detector_config* cfg, const pw_image* img, pw_verdict* out,
                    const char* debug_dir) {
  if (!m || !b || !test_set || !cfg || !img || !out) return invalid("null argument");
  return guarded([&] {
    detector::DetectionReport rep =
        detector::detect(m->model, img->img, b->b, test_set->ds, to_config(cfg));
    fill_verdict(out, rep);
    if (debug_dir) detector::dump_debug(m->model, img->img, rep, debug_dir);
  });
}

pw_status pw_detect_iterative(const pw_model* m, const pw_boundary* b, const pw_dataset* test_set,
                              const pw_detector_config* cfg, const pw_image* img, pw_verdict* out,
                              int capacity, int* count) {
  if (!m || !b || !test_set || !cfg || !img || !out || !count) return invalid("null argument");
  return guarded([&] {
    std::vector<detector::DetectionReport> reps =
        detector::detect_iterative(m->model, img->img, b->b, test_set->ds, to_config(cfg));
    *count = static_cast<int>(reps.size());
    for (int i = 0; i < *count && i < capacity; ++i) fill_verdict(&out[i], reps[static_cast<size_t>(i)]);
  });
}

/* ---- attacks ---- */

pw_status pw_make_trigger(int size, uint64_t seed, pw_image** out) {
  if (!out) return invalid("null argument");
  return guarded([&] { *out = new pw_image{attacks::make_trigger_patch(size, seed)}; });
}

pw_status pw_poison_dataset(const pw_dataset* ds, const pw_image* trigger, int target_class,
                            int row, int col, double alpha, double rate, uint64_t seed,
                            pw_dataset** out) {
  if (!ds || !trigger || !out) return invalid("null argument");
  return guarded([&] {
    attacks::Trigger t;
    t.patch = trigger->img;
    t.targetClass = target_class;
    t.row = row;
    t.col = col;
    t.alpha = alpha;
    *out = new pw_dataset{attacks::poison_dataset(ds->ds, t, rate, seed)};
  });
}

pw_status pw_stamp(const pw_image* img, const pw_image* patch, int row, int col, double alpha,
                   pw_image** out) {
  if (!img || !patch || !out) return invalid("null argument");
  return guarded([&] { *out = new pw_image{attacks::stamp(img->img, patch->img, row, col, alpha)}; });
}

void pw_patch_spec_default(pw_patch_spec* spec) {
  if (!spec) return;
  attacks::PatchSpec s;
  spec->side_fraction = s.sideFraction;
  spec->target_class = s.targetClass;
  spec->steps = s.steps;
  spec->learning_rate = s.learningRate;
  spec->seed = s.seed;
}

pw_status pw_gen_adversarial_patch(const pw_model* m, const pw_dataset* train,
                                   const pw_patch_spec* spec, int jobs, pw_image** out) {
  if (!m || !train || !spec || !out) return invalid("null argument");
  return guarded([&] {
    attacks::PatchSpec s;
    s.sideFraction = spec->side_fraction;
    s.targetClass = spec->target_class;
    s.steps = spec->steps;
    s.learningRate = spec->learning_rate;
    s.seed = spec->seed;
    *out = new pw_image{attacks::gen_adversarial_patch(m->model, train->ds, s, jobs)};
  });
}

pw_status pw_attack_success(const pw_model* m, const pw_dataset* probe, const pw_image* patch,
                            int target_class, double alpha, uint64_t seed, int jobs, double* rate) {
  if (!m || !probe || !patch || !rate) return invalid("null argument");
  return guarded([&] {
    *rate = attacks::attack_success(m->model, probe->ds, patch->img, target_class, alpha, seed, jobs);
  });
}

/* ---- experiment runners ---- */

pw_status pw_run_eval(const pw_model* m, const pw_boundary* b, const pw_dataset* test_set,
                      const char* adversarial_path, const char* benign_path,
                      const pw_detector_config* cfg, double rates[4], const char* csv_path) {
  if (!m || !b || !test_set || !adversarial_path || !benign_path || !cfg || !rates)
    return invalid("null argument");
  return guarded([&] {
    Dataset adv = load_dataset(adversarial_path);
    Dataset ben = load_dataset(benign_path);
    experiment::EvalResult r = experiment::run_eval(m->model, b->b, test_set->ds, adv, ben,
                                                    to_config(cfg), csv_path ? csv_path : "");
    rates[0] = r.tp;
    rates[1] = r.tn;
    rates[2] = r.fp;
    rates[3] = r.fn;
  });
}

pw_status pw_run_redteam(const pw_model* m, const pw_dataset* data, int target_class,
                         double side_fraction, int patch_steps, int perturb_steps,
                         int minimize_steps, int joint_patches, int joint_steps,
                         const double* alphas, int n_alphas, uint64_t seed, int jobs,
                         const char* out_dir) {
  if (!m || !data || !out_dir) return invalid("null argument");
  return guarded([&] {
    experiment::RedteamConfig rc;
    rc.targetClass = target_class;
    rc.sideFraction = side_fraction;
    rc.patchSteps = patch_steps;
    rc.perturbSteps = perturb_steps;
    rc.minimizeSteps = minimize_steps;
    if (alphas && n_alphas > 0)
      rc.joint.alphas.assign(alphas, alphas + n_alphas);
    else
      rc.joint = attacks::default_joint_config();
    rc.joint.nPatches = joint_patches;
    rc.joint.steps = joint_steps;
    rc.seed = seed;
    rc.jobs = jobs;
    experiment::run_redteam(m->model, data->ds, rc, out_dir);
  });
}

pw_status pw_run_sweep(const pw_model* m, const pw_boundary* b, const pw_dataset* test_set,
                       const pw_dataset* probe, const pw_image* patch, int target_class,
                       const double* sizes, int n_sizes, const double* alphas, int n_alphas,
                       const pw_detector_config* cfg, uint64_t seed, int trials,
                       const char* csv_path) {
  if (!m || !b || !test_set || !probe || !patch || !sizes || !alphas || !cfg || !csv_path)
    return invalid("null argument");
  if (n_sizes <= 0 || n_alphas <= 0 || trials <= 0) return invalid("empty sweep");
  return guarded([&] {
    std::vector<double> sz(sizes, sizes + n_sizes);
    std::vector<double> al(alphas, alphas + n_alphas);
    std::vector<attacks::SweepCell> cells =
        attacks::size_transparency_sweep(m->model, b->b, patch->img, target_class, sz, al,
                                         test_set->ds, probe->ds, to_config(cfg), seed, trials);
    experiment::write_sweep_csv(cells, csv_path);
  });
}

}  // extern "C"
