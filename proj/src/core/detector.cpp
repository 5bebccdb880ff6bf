#include "detector.hpp"

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>

namespace pw::detector {

DetectionReport detect(const nn::Model& m, const Image& img, const boundary::DecisionBoundary& b,
                       const Dataset& testSet, const DetectorConfig& config) {
  fuzz::InertPattern pattern = pipeline::pattern_for(m, config);
  pipeline::CandidateEvaluation ev = pipeline::evaluate_candidates(m, img, testSet, pattern, config);

  DetectionReport report;
  report.prediction = std::move(ev.prediction);
  report.candidates = std::move(ev.candidates);
  report.points = std::move(ev.points);
  report.msProposal = ev.msProposal;
  report.msMasks = ev.msMasks;
  report.msFuzzing = ev.msFuzzing;

  auto t0 = std::chrono::steady_clock::now();
  report.verdict = boundary::classify(report.points[static_cast<size_t>(ev.chosenIndex)], b);
  report.verdict.candidateIndex = ev.chosenIndex;
  report.chosenMask = report.candidates[static_cast<size_t>(ev.chosenIndex)].mask;
  report.msClassify =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
  return report;
}

std::vector<DetectionReport> detect_iterative(const nn::Model& m, const Image& img,
                                              const boundary::DecisionBoundary& b,
                                              const Dataset& testSet, const DetectorConfig& config) {
  if (config.maxIterations < 1) fail(Err::InvalidArg, "detect_iterative: maxIterations must be >= 1");
  fuzz::InertPattern pattern = pipeline::pattern_for(m, config);
  std::vector<DetectionReport> reports;
  Image current = img;
  for (int it = 0; it < config.maxIterations; ++it) {
    DetectionReport report = detect(m, current, b, testSet, config);
    bool attack = report.verdict.isAttack;
    const saliency::BinaryMask mask = report.chosenMask;
    reports.push_back(std::move(report));
    if (!attack) break;
    current = fuzz::overlay(current, pattern.pixels, mask);  // inpaint and retry
  }
  return reports;
}

nn::Prediction suppress_and_repredict(const nn::Model& m, const Image& img,
                                      const saliency::BinaryMask& mask,
                                      const fuzz::InertPattern& pattern) {
  return nn::predict(m, fuzz::overlay(img, pattern.pixels, mask));
}

void export_report(const DetectionReport& report, const std::string& path) {
  std::ofstream out(path);
  if (!out) fail(Err::Io, "cannot write " + path);
  char buf[256];
  out << "verdict=" << (report.verdict.isAttack ? "ATTACK" : "BENIGN") << "\n";
  std::snprintf(buf, sizeof(buf), "distance=%.10g\n", report.verdict.distance);
  out << buf;
  out << "candidate_index=" << report.verdict.candidateIndex << "\n";
  out << "predicted_class=" << report.prediction.classIndex << "\n";
  std::snprintf(buf, sizeof(buf), "confidence=%.10g\n", report.prediction.confidence);
  out << buf;
  out << "candidates=" << report.candidates.size() << "\n";
  for (size_t i = 0; i < report.points.size(); ++i) {
    std::snprintf(buf, sizeof(buf), "candidate_%zu=avg_conf:%.10g,fooled:%.10g,source_class:%d\n", i,
                  report.points[i].avgConf, report.points[i].fooled, report.candidates[i].sourceClass);
    out << buf;
  }
  std::snprintf(buf, sizeof(buf), "timing_ms=proposal:%.1f,masks:%.1f,fuzzing:%.1f,classify:%.1f\n",
                report.msProposal, report.msMasks, report.msFuzzing, report.msClassify);
  out << buf;
}

void dump_debug(const nn::Model& m, const Image& img, const DetectionReport& report,
                const std::string& dir) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  export_report(report, (fs::path(dir) / "report.txt").string());
  save_image(img, (fs::path(dir) / "input.ppm").string());
  saliency::Heatmap hm = saliency::grad_cam(m, img, report.prediction.classIndex);
  saliency::save_heatmap_pgm(saliency::upsample(hm, img.height, img.width),
                             (fs::path(dir) / "heatmap_y.pgm").string());
  saliency::save_mask_pgm(report.chosenMask, (fs::path(dir) / "chosen_mask.pgm").string());
  char name[64];
  for (size_t i = 0; i < report.candidates.size(); ++i) {
    std::snprintf(name, sizeof(name), "candidate_%zu.pgm", i);
    saliency::save_mask_pgm(report.candidates[i].mask, (fs::path(dir) / name).string());
  }
}

}  // namespace pw::detector
