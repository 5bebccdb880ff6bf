#ifndef PW_EXPERIMENT_HPP
#define PW_EXPERIMENT_HPP

#include <string>

#include "attacks.hpp"
#include "detector.hpp"

namespace pw::experiment {

struct EvalResult {
  double tp = 0.0, tn = 0.0, fp = 0.0, fn = 0.0;
  int adversarialCount = 0;
  int benignCount = 0;
};

// Runs the detector over labeled adversarial (positive) and benign (negative)
// sets; optionally writes a one-row CSV with header `tp,tn,fp,fn`.
EvalResult run_eval(const nn::Model& m, const boundary::DecisionBoundary& b, const Dataset& testSet,
                    const Dataset& adversarial, const Dataset& benign,
                    const pipeline::DetectorConfig& config, const std::string& csvPath = "");

void write_eval_csv(const EvalResult& r, const std::string& path);

// `alpha,size,success,detected,avg_conf,fooled`
void write_sweep_csv(const std::vector<attacks::SweepCell>& cells, const std::string& path);

struct RedteamConfig {
  int targetClass = 0;
  double sideFraction = 0.25;
  int patchSteps = 300;
  int perturbSteps = 150;
  int minimizeSteps = 200;
  attacks::JointAttackConfig joint;
  uint64_t seed = 1;
  int jobs = 1;
};

// Adaptive attacks: heatmap forgery with full and disjoint noise regions,
// heatmap minimization, and the joint objective sweep. Writes
// gradcam_perturb.csv, heatmap_minimize.csv and joint_sweep.csv into outDir.
void run_redteam(const nn::Model& m, const Dataset& data, const RedteamConfig& config,
                 const std::string& outDir);

}  // namespace pw::experiment

#endif
