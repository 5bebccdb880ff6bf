#ifndef PW_DETECTOR_HPP
#define PW_DETECTOR_HPP

#include <string>

#include "pipeline.hpp"

namespace pw::detector {

using pipeline::DetectorConfig;

struct DetectionReport {
  boundary::Verdict verdict;
  nn::Prediction prediction;
  std::vector<proposal::MaskCandidate> candidates;
  std::vector<fuzz::BehaviorPoint> points;
  saliency::BinaryMask chosenMask;
  double msProposal = 0.0;
  double msMasks = 0.0;
  double msFuzzing = 0.0;
  double msClassify = 0.0;
};

// Full pipeline: prediction, class proposal, mask generation, per-candidate
// fuzzing, verdict on the max-fooled candidate.
DetectionReport detect(const nn::Model& m, const Image& img, const boundary::DecisionBoundary& b,
                       const Dataset& testSet, const DetectorConfig& config);

// Re-runs detection after inpainting each attack mask with the inert pattern,
// until the verdict is benign or maxIterations is reached.
std::vector<DetectionReport> detect_iterative(const nn::Model& m, const Image& img,
                                              const boundary::DecisionBoundary& b,
                                              const Dataset& testSet, const DetectorConfig& config);

// Prediction with the suspected region suppressed by the inert pattern.
nn::Prediction suppress_and_repredict(const nn::Model& m, const Image& img,
                                      const saliency::BinaryMask& mask,
                                      const fuzz::InertPattern& pattern);

// One-line-per-field report text plus optional heatmap/mask PGM dumps.
void export_report(const DetectionReport& report, const std::string& path);
void dump_debug(const nn::Model& m, const Image& img, const DetectionReport& report,
                const std::string& dir);

}  // namespace pw::detector

#endif
