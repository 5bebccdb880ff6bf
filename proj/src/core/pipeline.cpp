#include "pipeline.hpp"

#include <chrono>

namespace pw::pipeline {

namespace {

double ms_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace

fuzz::InertPattern pattern_for(const nn::Model& m, const DetectorConfig& config) {
  return fuzz::make_inert_pattern(config.patternKind, config.patternSeed, m.inputH, m.inputW,
                                  m.inputC, &m);
}

CandidateEvaluation evaluate_candidates(const nn::Model& m, const Image& img, const Dataset& testSet,
                                        const fuzz::InertPattern& pattern,
                                        const DetectorConfig& config) {
  CandidateEvaluation ev;
  auto t0 = std::chrono::steady_clock::now();
  ev.prediction = nn::predict(m, img);
  std::vector<proposal::ClassScore> proposals =
      proposal::class_proposal(m, img, config.k, config.segmentation, config.jobs);
  ev.msProposal = ms_since(t0);

  t0 = std::chrono::steady_clock::now();
  ev.candidates = proposal::mask_generation(m, img, ev.prediction.classIndex, proposals,
                                            config.maskSubtraction, config.upsampleMode);
  ev.msMasks = ms_since(t0);

  t0 = std::chrono::steady_clock::now();
  ev.points.resize(ev.candidates.size());
  for (size_t i = 0; i < ev.candidates.size(); ++i)
    ev.points[i] = fuzz::test_region(m, img, ev.candidates[i].mask, ev.prediction.classIndex,
                                     testSet, pattern, config.jobs);
  ev.msFuzzing = ms_since(t0);

  ev.chosenIndex = 0;
  for (size_t i = 1; i < ev.points.size(); ++i) {
    const auto& cur = ev.points[i];
    const auto& best = ev.points[static_cast<size_t>(ev.chosenIndex)];
    if (cur.fooled > best.fooled || (cur.fooled == best.fooled && cur.avgConf > best.avgConf))
      ev.chosenIndex = static_cast<int>(i);
  }
  return ev;
}

std::vector<fuzz::BehaviorPoint> collect_benign_behavior(const nn::Model& m, const Dataset& benignSet,
                                                         const Dataset& testSet,
                                                         const DetectorConfig& config) {
  std::vector<fuzz::BehaviorPoint> out(benignSet.items.size());
  if (benignSet.items.empty()) return out;
  fuzz::InertPattern pattern = pattern_for(m, config);
  // parallelism lives inside each evaluation; images stay in order
  for (size_t i = 0; i < benignSet.items.size(); ++i) {
    CandidateEvaluation ev =
        evaluate_candidates(m, benignSet.items[i].first, testSet, pattern, config);
    out[i] = ev.points[static_cast<size_t>(ev.chosenIndex)];
  }
  return out;
}

boundary::DecisionBoundary calibrate(const nn::Model& m, const Dataset& benignSet,
                                     const Dataset& testSet, const DetectorConfig& config,
                                     std::vector<fuzz::BehaviorPoint>* pointsOut) {
  std::vector<fuzz::BehaviorPoint> points = collect_benign_behavior(m, benignSet, testSet, config);
  boundary::FitConfig fc;
  fc.nIntervals = config.nIntervals;
  fc.denominator = config.denominator;
  boundary::DecisionBoundary b = boundary::fit_boundary(points, fc);
  b.seed = config.patternSeed;
  if (pointsOut) *pointsOut = std::move(points);
  return b;
}

}  // namespace pw::pipeline
