#include "experiment.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>

namespace pw::experiment {

namespace fs = std::filesystem;

EvalResult run_eval(const nn::Model& m, const boundary::DecisionBoundary& b, const Dataset& testSet,
                    const Dataset& adversarial, const Dataset& benign,
                    const pipeline::DetectorConfig& config, const std::string& csvPath) {
  EvalResult r;
  r.adversarialCount = static_cast<int>(adversarial.items.size());
  r.benignCount = static_cast<int>(benign.items.size());
  int tp = 0, tn = 0;
  for (const auto& [img, label] : adversarial.items) {
    (void)label;
    if (detector::detect(m, img, b, testSet, config).verdict.isAttack) ++tp;
  }
  for (const auto& [img, label] : benign.items) {
    (void)label;
    if (!detector::detect(m, img, b, testSet, config).verdict.isAttack) ++tn;
  }
  if (r.adversarialCount > 0) r.tp = static_cast<double>(tp) / r.adversarialCount;
  if (r.benignCount > 0) r.tn = static_cast<double>(tn) / r.benignCount;
  r.fp = r.benignCount > 0 ? 1.0 - r.tn : 0.0;
  r.fn = r.adversarialCount > 0 ? 1.0 - r.tp : 0.0;
  if (!csvPath.empty()) write_eval_csv(r, csvPath);
  return r;
}

void write_eval_csv(const EvalResult& r, const std::string& path) {
  std::ofstream out(path);
  if (!out) fail(Err::Io, "cannot write " + path);
  char buf[128];
  out << "tp,tn,fp,fn\n";
  std::snprintf(buf, sizeof(buf), "%.10g,%.10g,%.10g,%.10g\n", r.tp, r.tn, r.fp, r.fn);
  out << buf;
}

void write_sweep_csv(const std::vector<attacks::SweepCell>& cells, const std::string& path) {
  std::ofstream out(path);
  if (!out) fail(Err::Io, "cannot write " + path);
  out << "alpha,size,success,detected,avg_conf,fooled\n";
  char buf[160];
  for (const auto& c : cells) {
    std::snprintf(buf, sizeof(buf), "%.10g,%.10g,%.10g,%d,%.10g,%.10g\n", c.alpha, c.size,
                  c.attackSuccess, c.detected ? 1 : 0, c.avgConf, c.fooled);
    out << buf;
  }
}

void run_redteam(const nn::Model& m, const Dataset& data, const RedteamConfig& config,
                 const std::string& outDir) {
  if (data.items.empty()) fail(Err::InvalidArg, "run_redteam: empty dataset");
  fs::create_directories(outDir);

  attacks::PatchSpec spec;
  spec.targetClass = config.targetClass;
  spec.sideFraction = config.sideFraction;
  spec.steps = config.patchSteps;
  spec.seed = config.seed;
  Image patch = attacks::gen_adversarial_patch(m, data, spec, config.jobs);
  save_image(patch, (fs::path(outDir) / "patch.ppm").string());

  const int side = patch.height;
  Rng rng(config.seed ^ 0x7EA3ULL);
  const Image& base = data.items[static_cast<size_t>(rng.below(static_cast<int>(data.items.size())))].first;

  // target heatmap: the patch stamped in the top-left corner
  Image stamped = attacks::stamp(base, patch, 0, 0, 1.0);
  saliency::Heatmap target = saliency::grad_cam(m, stamped, config.targetClass);

  Image noiseInit(m.inputH, m.inputW, m.inputC);
  for (float& p : noiseInit.pixels) p = static_cast<float>(rng.uniform());

  saliency::BinaryMask fullMask(m.inputH, m.inputW);
  for (auto& bit : fullMask.bits) bit = 1;
  saliency::BinaryMask disjointMask(m.inputH, m.inputW);
  for (int r = 2 * m.inputH / 3; r < m.inputH; ++r)
    for (int c = 2 * m.inputW / 3; c < m.inputW; ++c) disjointMask.set(r, c, true);

  std::vector<double> fullLoss, disjointLoss;
  attacks::perturb_gradcam(m, noiseInit, target, fullMask, config.targetClass, config.perturbSteps,
                           &fullLoss);
  attacks::perturb_gradcam(m, noiseInit, target, disjointMask, config.targetClass,
                           config.perturbSteps, &disjointLoss);
  {
    std::ofstream out(fs::path(outDir) / "gradcam_perturb.csv");
    if (!out) fail(Err::Io, "cannot write gradcam_perturb.csv");
    out << "mask,step,loss\n";
    char buf[96];
    for (size_t i = 0; i < fullLoss.size(); ++i) {
      std::snprintf(buf, sizeof(buf), "full,%zu,%.10g\n", i, fullLoss[i]);
      out << buf;
    }
    for (size_t i = 0; i < disjointLoss.size(); ++i) {
      std::snprintf(buf, sizeof(buf), "disjoint,%zu,%.10g\n", i, disjointLoss[i]);
      out << buf;
    }
  }

  // heatmap minimization on a stamped input
  int row = (m.inputH - side) / 2, col = (m.inputW - side) / 2;
  Image stampedCenter = attacks::stamp(base, patch, row, col, 1.0);
  saliency::BinaryMask footprint(m.inputH, m.inputW);
  for (int r = row; r < row + side; ++r)
    for (int c = col; c < col + side; ++c) footprint.set(r, c, true);
  Dataset probe = subsample_dataset(data, spec.probeSize, config.seed ^ 0xBEEFULL);
  attacks::MinimizeTrace trace =
      attacks::minimize_heatmap(m, stampedCenter, footprint, config.targetClass,
                                config.minimizeSteps, probe, config.seed, 20, config.jobs);
  {
    std::ofstream out(fs::path(outDir) / "heatmap_minimize.csv");
    if (!out) fail(Err::Io, "cannot write heatmap_minimize.csv");
    out << "step,heatmap_sum,attack_success\n";
    char buf[96];
    for (size_t i = 0; i < trace.steps.size(); ++i) {
      std::snprintf(buf, sizeof(buf), "%d,%.10g,%.10g\n", trace.steps[i], trace.heatmapSums[i],
                    trace.successRates[i]);
      out << buf;
    }
  }

  std::vector<attacks::JointSweepRow> rows = attacks::joint_optimize(m, data, spec, config.joint,
                                                                     config.jobs);
  {
    std::ofstream out(fs::path(outDir) / "joint_sweep.csv");
    if (!out) fail(Err::Io, "cannot write joint_sweep.csv");
    out << "alpha,success,hidden,both\n";
    char buf[96];
    for (const auto& r : rows) {
      std::snprintf(buf, sizeof(buf), "%.10g,%.10g,%.10g,%.10g\n", r.alpha, r.successRate,
                    r.hiddenRate, r.bothRate);
      out << buf;
    }
  }
}

}  // namespace pw::experiment
