#ifndef PW_BOUNDARY_HPP
#define PW_BOUNDARY_HPP

#include <string>
#include <vector>

#include "fuzzing.hpp"

namespace pw::boundary {

enum class ThresholdDenominator { OutsidePoints, AllPoints };

struct FitConfig {
  int nIntervals = 10;
  ThresholdDenominator denominator = ThresholdDenominator::OutsidePoints;
};

// fooled = a*avgConf^2 + b*avgConf + c, plus the acceptable distance t.
struct DecisionBoundary {
  double a = 0.0, b = 0.0, c = 0.0;
  double threshold = 0.0;
  int intervals = 10;
  ThresholdDenominator denominator = ThresholdDenominator::OutsidePoints;
  int calibrationCount = 0;
  uint64_t seed = 0;

  double curve(double x) const { return (a * x + b) * x + c; }
};

struct Verdict {
  bool isAttack = false;
  double distance = 0.0;  // 0 when not outside the curve
  int candidateIndex = 0;
};

// Max-fooled point of each nonempty equal-width avgConf bin over [0,1].
std::vector<fuzz::BehaviorPoint> outlier_points(const std::vector<fuzz::BehaviorPoint>& points,
                                                int nIntervals);

// Gauss-Newton least squares on the outlier points, then the distance
// threshold from benign points strictly above the fitted curve.
DecisionBoundary fit_boundary(const std::vector<fuzz::BehaviorPoint>& points, const FitConfig& config);

// Euclidean distance from (avgConf, fooled) to the nearest curve point,
// minimized over x in [0,1] by COBYLA.
double point_curve_distance(double avgConf, double fooled, const DecisionBoundary& boundary);

Verdict classify(const fuzz::BehaviorPoint& point, const DecisionBoundary& boundary);

// `a=..\nb=..\nc=..\nt=..\nintervals=..\ndenominator=..`
void save_boundary(const DecisionBoundary& b, const std::string& path);
DecisionBoundary load_boundary(const std::string& path);

}  // namespace pw::boundary

#endif
