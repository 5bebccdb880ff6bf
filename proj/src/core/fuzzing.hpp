#ifndef PW_FUZZING_HPP
#define PW_FUZZING_HPP

#include <string>
#include <vector>

#include "nn.hpp"
#include "saliency.hpp"

namespace pw::fuzz {

enum class PatternKind { RandomNoise, Checker, Optimized };

struct InertPattern {
  Image pixels;
  PatternKind kind = PatternKind::RandomNoise;
};

// (avgConf, fooled): the two axes of the decision plot.
struct BehaviorPoint {
  double avgConf = 0.0;
  double fooled = 0.0;  // rawFooledCount / |X|
  int rawFooledCount = 0;
};

// randomNoise: i.i.d. uniform per pixel. checker: 4x4-pixel 0/1 cells.
// optimized: gradient descent on the input driving all class confidences
// down (needs the model).
InertPattern make_inert_pattern(PatternKind kind, uint64_t seed, int h, int w, int c,
                                const nn::Model* model = nullptr);

// patch pixel where mask, base pixel elsewhere
Image overlay(const Image& base, const Image& patch, const saliency::BinaryMask& mask);

// For each test image: the masked source region is overlaid to count fooled
// predictions (== y), and the inert pattern is overlaid to average the top-1
// confidence.
BehaviorPoint test_region(const nn::Model& m, const Image& image, const saliency::BinaryMask& mask,
                          int y, const Dataset& testSet, const InertPattern& pattern, int jobs = 1);

struct LabeledPoint {
  BehaviorPoint point;
  std::string label;  // benign | adversarial | unknown
};

// header `avg_conf,fooled,raw_fooled,label`
void save_points_csv(const std::vector<LabeledPoint>& points, const std::string& path);

}  // namespace pw::fuzz

#endif
