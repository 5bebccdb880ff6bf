#ifndef PW_PIPELINE_HPP
#define PW_PIPELINE_HPP

#include <vector>

#include "boundary.hpp"
#include "fuzzing.hpp"
#include "proposal.hpp"

namespace pw::pipeline {

struct DetectorConfig {
  int k = 2;                     // class proposals
  int testSetCap = 100;          // |X| subsample cap; 0 keeps the whole set
  fuzz::PatternKind patternKind = fuzz::PatternKind::RandomNoise;
  uint64_t patternSeed = 1;
  int nIntervals = 10;
  boundary::ThresholdDenominator denominator = boundary::ThresholdDenominator::OutsidePoints;
  int maxIterations = 5;         // iterative multi-patch detection
  bool maskSubtraction = true;   // off reproduces the "w/o mask reduction" ablation
  seg::SelectiveSearchConfig segmentation;
  saliency::UpsampleMode upsampleMode = saliency::UpsampleMode::Bilinear;
  int jobs = 1;
};

struct CandidateEvaluation {
  nn::Prediction prediction;
  std::vector<proposal::MaskCandidate> candidates;
  std::vector<fuzz::BehaviorPoint> points;  // one per candidate
  int chosenIndex = 0;                      // max fooled; ties: larger avgConf, then lower index
  double msProposal = 0.0;
  double msMasks = 0.0;
  double msFuzzing = 0.0;
};

// Localization + per-candidate fuzzing; shared by detection and calibration.
CandidateEvaluation evaluate_candidates(const nn::Model& m, const Image& img, const Dataset& testSet,
                                        const fuzz::InertPattern& pattern, const DetectorConfig& config);

fuzz::InertPattern pattern_for(const nn::Model& m, const DetectorConfig& config);

// One BehaviorPoint per benign image (the chosen candidate's point).
std::vector<fuzz::BehaviorPoint> collect_benign_behavior(const nn::Model& m, const Dataset& benignSet,
                                                         const Dataset& testSet,
                                                         const DetectorConfig& config);

// collect_benign_behavior + fit_boundary
boundary::DecisionBoundary calibrate(const nn::Model& m, const Dataset& benignSet,
                                     const Dataset& testSet, const DetectorConfig& config,
                                     std::vector<fuzz::BehaviorPoint>* pointsOut = nullptr);

}  // namespace pw::pipeline

#endif
