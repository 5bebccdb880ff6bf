#include "boundary.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>

#include "cobyla.hpp"

namespace pw::boundary {

std::vector<fuzz::BehaviorPoint> outlier_points(const std::vector<fuzz::BehaviorPoint>& points,
                                                int nIntervals) {
  if (nIntervals < 1) fail(Err::InvalidArg, "outlier_points: nIntervals must be >= 1");
  std::vector<int> bestIdx(static_cast<size_t>(nIntervals), -1);
  for (size_t i = 0; i < points.size(); ++i) {
    double x = points[i].avgConf;
    int bin = std::min(nIntervals - 1, std::max(0, static_cast<int>(x * nIntervals)));
    int cur = bestIdx[static_cast<size_t>(bin)];
    if (cur < 0 || points[i].fooled > points[static_cast<size_t>(cur)].fooled)
      bestIdx[static_cast<size_t>(bin)] = static_cast<int>(i);
  }
  std::vector<fuzz::BehaviorPoint> out;
  for (int idx : bestIdx)
    if (idx >= 0) out.push_back(points[static_cast<size_t>(idx)]);
  return out;
}

namespace {

// 3x3 solve by Gaussian elimination with partial pivoting; false when singular.
bool solve3(double A[3][3], double b[3], double x[3]) {
  int idx[3] = {0, 1, 2};
  for (int col = 0; col < 3; ++col) {
    int piv = col;
    for (int r = col + 1; r < 3; ++r)
      if (std::abs(A[idx[r]][col]) > std::abs(A[idx[piv]][col])) piv = r;
    std::swap(idx[col], idx[piv]);
    double p = A[idx[col]][col];
    if (std::abs(p) < 1e-12) return false;
    for (int r = col + 1; r < 3; ++r) {
      double f = A[idx[r]][col] / p;
      for (int c = col; c < 3; ++c) A[idx[r]][c] -= f * A[idx[col]][c];
      b[idx[r]] -= f * b[idx[col]];
    }
  }
  for (int row = 2; row >= 0; --row) {
    double acc = b[idx[row]];
    for (int c = row + 1; c < 3; ++c) acc -= A[idx[row]][c] * x[c];
    x[row] = acc / A[idx[row]][row];
  }
  return true;
}

}  // namespace

namespace {

size_t distinct_x(const std::vector<fuzz::BehaviorPoint>& pts) {
  std::set<double> xs;
  for (const auto& p : pts) xs.insert(p.avgConf);
  return xs.size();
}

// Max-fooled point per bin over the observed avgConf range. Recovers bin
// resolution when the cloud occupies a narrow slice of [0,1].
std::vector<fuzz::BehaviorPoint> outlier_points_ranged(const std::vector<fuzz::BehaviorPoint>& points,
                                                       int nIntervals) {
  double lo = 1e300, hi = -1e300;
  for (const auto& p : points) {
    lo = std::min(lo, p.avgConf);
    hi = std::max(hi, p.avgConf);
  }
  if (points.empty() || hi <= lo) return {};
  std::vector<int> bestIdx(static_cast<size_t>(nIntervals), -1);
  for (size_t i = 0; i < points.size(); ++i) {
    double u = (points[i].avgConf - lo) / (hi - lo);
    int bin = std::min(nIntervals - 1, static_cast<int>(u * nIntervals));
    int cur = bestIdx[static_cast<size_t>(bin)];
    if (cur < 0 || points[i].fooled > points[static_cast<size_t>(cur)].fooled)
      bestIdx[static_cast<size_t>(bin)] = static_cast<int>(i);
  }
  std::vector<fuzz::BehaviorPoint> out;
  for (int idx : bestIdx)
    if (idx >= 0) out.push_back(points[static_cast<size_t>(idx)]);
  return out;
}

}  // namespace

DecisionBoundary fit_boundary(const std::vector<fuzz::BehaviorPoint>& points, const FitConfig& config) {
  std::vector<fuzz::BehaviorPoint> outliers = outlier_points(points, config.nIntervals);
  if (outliers.size() < 3 || distinct_x(outliers) < 3)
    outliers = outlier_points_ranged(points, config.nIntervals);
  if (outliers.size() < 3 || distinct_x(outliers) < 3)
    fail(Err::DegenerateFit, "fit_boundary: need >= 3 outlier points with >= 3 distinct avgConf values");

  double meanY = 0.0;
  for (const auto& p : outliers) meanY += p.fooled;
  meanY /= static_cast<double>(outliers.size());

  // Gauss-Newton on fooled = a x^2 + b x + c from (0, 0, meanY)
  double theta[3] = {0.0, 0.0, meanY};
  for (int iter = 0; iter < 200; ++iter) {
    double JtJ[3][3] = {{0, 0, 0}, {0, 0, 0}, {0, 0, 0}};
    double Jtr[3] = {0, 0, 0};
    for (const auto& p : outliers) {
      double x = p.avgConf;
      double J[3] = {x * x, x, 1.0};
      double r = (theta[0] * x + theta[1]) * x + theta[2] - p.fooled;
      for (int i = 0; i < 3; ++i) {
        Jtr[i] += J[i] * r;
        for (int j = 0; j < 3; ++j) JtJ[i][j] += J[i] * J[j];
      }
    }
    double neg[3] = {-Jtr[0], -Jtr[1], -Jtr[2]};
    double step[3];
    if (!solve3(JtJ, neg, step)) fail(Err::DegenerateFit, "fit_boundary: singular normal equations");
    double inf = 0.0;
    for (int i = 0; i < 3; ++i) {
      theta[i] += step[i];
      inf = std::max(inf, std::abs(step[i]));
    }
    if (inf < 1e-9) break;
  }

  DecisionBoundary b;
  b.a = theta[0];
  b.b = theta[1];
  b.c = theta[2];
  b.intervals = config.nIntervals;
  b.denominator = config.denominator;
  b.calibrationCount = static_cast<int>(points.size());

  double sum = 0.0;
  int outside = 0;
  for (const auto& p : points) {
    if (p.fooled > b.curve(p.avgConf)) {
      sum += point_curve_distance(p.avgConf, p.fooled, b);
      ++outside;
    }
  }
  if (config.denominator == ThresholdDenominator::OutsidePoints)
    b.threshold = outside > 0 ? sum / outside : 0.0;
  else
    b.threshold = points.empty() ? 0.0 : sum / static_cast<double>(points.size());
  return b;
}

double point_curve_distance(double avgConf, double fooled, const DecisionBoundary& boundary) {
  auto objective = [&](double x) {
    double dx = x - avgConf;
    double dy = boundary.curve(x) - fooled;
    return std::sqrt(dx * dx + dy * dy);
  };
  // The squared distance to a quadratic is quartic in x, so a single COBYLA
  // run can settle in the wrong of two basins. A coarse scan seeds one start
  // near the global basin; the point itself and the endpoints cover the rest.
  double scanBest = 0.0;
  for (int i = 1; i <= 32; ++i) {
    double x = i / 32.0;
    if (objective(x) < objective(scanBest)) scanBest = x;
  }
  double best = 1e300;
  for (double x0 : {avgConf, scanBest, 0.0, 1.0}) {
    optim::Cobyla1dResult r = optim::cobyla_minimize_1d(objective, x0, 0.0, 1.0, 0.25, 1e-6);
    best = std::min(best, r.value);
  }
  return best;
}

Verdict classify(const fuzz::BehaviorPoint& point, const DecisionBoundary& boundary) {
  Verdict v;
  if (point.fooled <= boundary.curve(point.avgConf)) return v;  // at/below the curve: benign
  v.distance = point_curve_distance(point.avgConf, point.fooled, boundary);
  v.isAttack = v.distance > boundary.threshold;  // tie goes to benign
  return v;
}

void save_boundary(const DecisionBoundary& b, const std::string& path) {
  std::ofstream out(path);
  if (!out) fail(Err::Io, "cannot write " + path);
  char buf[256];
  std::snprintf(buf, sizeof(buf), "a=%.17g\nb=%.17g\nc=%.17g\nt=%.17g\nintervals=%d\ndenominator=%s\n",
                b.a, b.b, b.c, b.threshold, b.intervals,
                b.denominator == ThresholdDenominator::AllPoints ? "allPoints" : "outsidePoints");
  out << buf;
}

DecisionBoundary load_boundary(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(Err::Io, "cannot open " + path);
  DecisionBoundary b;
  std::string line;
  while (std::getline(in, line)) {
    auto eq = line.find('=');
    if (eq == std::string::npos) continue;
    std::string key = line.substr(0, eq);
    std::string value = line.substr(eq + 1);
    if (key == "a") b.a = std::stod(value);
    else if (key == "b") b.b = std::stod(value);
    else if (key == "c") b.c = std::stod(value);
    else if (key == "t") b.threshold = std::stod(value);
    else if (key == "intervals") b.intervals = std::stoi(value);
    else if (key == "denominator") {
      if (value == "allPoints") b.denominator = ThresholdDenominator::AllPoints;
      else if (value == "outsidePoints") b.denominator = ThresholdDenominator::OutsidePoints;
      else fail(Err::CorruptHeader, "bad denominator in " + path);
    } else {
      fail(Err::CorruptHeader, "unknown key in calibration file: " + key);
    }
  }
  return b;
}

}  // namespace pw::boundary
