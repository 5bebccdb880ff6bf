#ifndef PW_ATTACKS_HPP
#define PW_ATTACKS_HPP

#include <vector>

#include "boundary.hpp"
#include "pipeline.hpp"

namespace pw::attacks {

struct Trigger {
  Image patch;             // small, default 4x4
  int targetClass = 0;
  int row = -1, col = -1;  // -1 means random placement per item
  double alpha = 1.0;      // opacity
};

// High-contrast seeded binary color pattern.
Image make_trigger_patch(int size, uint64_t seed);

// out = (1-alpha)*image + alpha*patch over the footprint, clipped to [0,1].
Image stamp(const Image& img, const Image& patch, int row, int col, double alpha);
Image stamp(const Image& img, const Trigger& trig, Rng& rng);

// A seeded rate-fraction of items gets the trigger stamped and the label
// rewritten to targetClass; order preserved.
Dataset poison_dataset(const Dataset& ds, const Trigger& trig, double rate, uint64_t seed);

struct PatchSpec {
  double sideFraction = 0.25;
  int targetClass = 0;
  int steps = 500;
  double learningRate = 0.05;  // sign-of-gradient step size
  uint64_t seed = 0;
  int batchSize = 8;
  int probeSize = 50;
  int evalEvery = 25;
  double successTarget = 0.8;  // returns early once the probe success reaches this
};

// Projected gradient ascent on the mean target logit over random placements;
// returns the best patch seen.
Image gen_adversarial_patch(const nn::Model& m, const Dataset& train, const PatchSpec& spec,
                            int jobs = 1);

// Fraction of probe images predicted as targetClass after stamping the patch
// at a seeded random position.
double attack_success(const nn::Model& m, const Dataset& probe, const Image& patch, int targetClass,
                      double alpha, uint64_t seed, int jobs = 1);

// Attack #5/#6: drive the class heatmap toward `target` (feature-map
// resolution) by perturbing only regionMask pixels. Returns the final image;
// the loss trajectory (index 0 = initial loss) goes to `trajectory`.
Image perturb_gradcam(const nn::Model& m, const Image& base, const saliency::Heatmap& target,
                      const saliency::BinaryMask& regionMask, int classIndex, int steps,
                      std::vector<double>* trajectory = nullptr);

struct MinimizeTrace {
  Image image;
  std::vector<int> steps;
  std::vector<double> heatmapSums;
  std::vector<double> successRates;
};

// Attack #7 first stage: minimize the target-class heatmap over the patch
// footprint while tracking attack success of the extracted patch on a probe set.
MinimizeTrace minimize_heatmap(const nn::Model& m, const Image& stamped,
                               const saliency::BinaryMask& patchMask, int targetClass, int steps,
                               const Dataset& probe, uint64_t seed, int sampleEvery = 20,
                               int jobs = 1);

struct JointAttackConfig {
  std::vector<double> alphas;  // defaults to 0..1 in 0.025 steps
  int nPatches = 8;
  int steps = 300;
  double successThreshold = 0.8;  // per-patch probe success counts as "successful"
  double overlapThreshold = 0.5;  // heatmap/patch overlap below this counts as "hidden"
};

JointAttackConfig default_joint_config();

struct JointSweepRow {
  double alpha = 0.0;
  double successRate = 0.0;  // mean probe success over patches
  double hiddenRate = 0.0;   // fraction of patches with overlap < threshold
  double bothRate = 0.0;     // fraction fulfilling both criteria
};

// Attack #7 second stage: alternate heatmap-minimization (rate alpha) and
// misclassification (rate 1-alpha) steps, swept over alpha.
std::vector<JointSweepRow> joint_optimize(const nn::Model& m, const Dataset& data,
                                          const PatchSpec& spec, const JointAttackConfig& config,
                                          int jobs = 1);

struct SweepCell {
  double size = 0.0;   // patch side as fraction of input side
  double alpha = 0.0;  // stamp opacity
  double attackSuccess = 0.0;
  double detectedRate = 0.0;
  bool detected = false;  // detectedRate >= 0.5
  double avgConf = 0.0;   // mean chosen BehaviorPoint over detect trials
  double fooled = 0.0;
};

// Attack #10: size/transparency grid of attack success vs detector verdict.
std::vector<SweepCell> size_transparency_sweep(const nn::Model& m,
                                               const boundary::DecisionBoundary& b,
                                               const Image& patch, int targetClass,
                                               const std::vector<double>& sizes,
                                               const std::vector<double>& alphas,
                                               const Dataset& testSet, const Dataset& probe,
                                               const pipeline::DetectorConfig& config,
                                               uint64_t seed, int trials = 3);

}  // namespace pw::attacks

#endif
