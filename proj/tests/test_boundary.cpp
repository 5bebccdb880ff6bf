#include <cmath>

#include "core/boundary.hpp"
#include "core/cobyla.hpp"
#include "doctest.h"
#include "test_util.hpp"

using namespace pw;
using boundary::DecisionBoundary;
using fuzz::BehaviorPoint;

namespace {

BehaviorPoint bp(double x, double y) {
  BehaviorPoint p;
  p.avgConf = x;
  p.fooled = y;
  p.rawFooledCount = static_cast<int>(y * 100);
  return p;
}

double grid_distance(double px, double py, const DecisionBoundary& b) {
  double best = 1e300;
  for (int i = 0; i <= 10000; ++i) {
    double x = i * 1e-4;
    double dx = x - px;
    double dy = b.curve(x) - py;
    best = std::min(best, std::sqrt(dx * dx + dy * dy));
  }
  return best;
}

}  // namespace

TEST_CASE("outlier_points picks the max-fooled point per bin") {
  // all in one bin
  std::vector<BehaviorPoint> one = {bp(0.11, 0.2), bp(0.13, 0.7), bp(0.12, 0.4)};
  auto r1 = boundary::outlier_points(one, 5);
  REQUIRE(r1.size() == 1);
  CHECK(r1[0].fooled == 0.7);

  // two points, two bins
  std::vector<BehaviorPoint> two = {bp(0.1, 0.2), bp(0.9, 0.8)};
  auto r2 = boundary::outlier_points(two, 2);
  REQUIRE(r2.size() == 2);
  CHECK(r2[0].fooled == 0.2);
  CHECK(r2[1].fooled == 0.8);
}

TEST_CASE("outlier_points matches a brute-force bin scan") {
  Rng rng(7);
  std::vector<BehaviorPoint> cloud;
  for (int i = 0; i < 200; ++i) cloud.push_back(bp(rng.uniform(), rng.uniform()));
  const int n = 10;
  auto got = boundary::outlier_points(cloud, n);

  std::vector<double> bestFooled(n, -1.0);
  for (const auto& p : cloud) {
    int bin = std::min(n - 1, static_cast<int>(p.avgConf * n));
    bestFooled[static_cast<size_t>(bin)] = std::max(bestFooled[static_cast<size_t>(bin)], p.fooled);
  }
  std::vector<double> expect;
  for (double f : bestFooled)
    if (f >= 0.0) expect.push_back(f);
  REQUIRE(got.size() == expect.size());
  for (size_t i = 0; i < got.size(); ++i) CHECK(got[i].fooled == expect[i]);
}

TEST_CASE("fit_boundary recovers exact quadratic coefficients") {
  // points generated exactly on fooled = -2 x^2 + 0.5 x + 0.9
  std::vector<BehaviorPoint> pts;
  for (int i = 0; i <= 20; ++i) {
    double x = i / 20.0;
    pts.push_back(bp(x, -2.0 * x * x + 0.5 * x + 0.9));
  }
  boundary::FitConfig cfg;
  DecisionBoundary b = boundary::fit_boundary(pts, cfg);
  CHECK(std::abs(b.a - -2.0) <= 1e-6);
  CHECK(std::abs(b.b - 0.5) <= 1e-6);
  CHECK(std::abs(b.c - 0.9) <= 1e-6);
  // the generator points sit within float dust of the recovered curve
  CHECK(b.threshold <= 1e-9);
}

TEST_CASE("fit_boundary rejects degenerate point sets") {
  std::vector<BehaviorPoint> same(10, bp(0.5, 0.5));
  boundary::FitConfig cfg;
  CHECK_THROWS_AS(boundary::fit_boundary(same, cfg), Error);

  std::vector<BehaviorPoint> twoX = {bp(0.1, 0.2), bp(0.9, 0.4), bp(0.11, 0.3)};
  CHECK_THROWS_AS(boundary::fit_boundary(twoX, cfg), Error);  // only 2 distinct bins/values
}

TEST_CASE("threshold is zero when no benign point is above the curve") {
  std::vector<BehaviorPoint> pts;
  for (int i = 0; i <= 10; ++i) {
    double x = i / 10.0;
    pts.push_back(bp(x, 0.5 * x * x + 0.1));
  }
  boundary::FitConfig cfg;
  DecisionBoundary b = boundary::fit_boundary(pts, cfg);
  CHECK(b.threshold <= 1e-9);
}

TEST_CASE("threshold denominators divide by outside vs all points") {
  // curve will hug the outliers; add interior points below and one clear spike bin
  std::vector<BehaviorPoint> pts;
  for (int i = 0; i <= 10; ++i) {
    double x = i / 10.0;
    pts.push_back(bp(x, 0.2));
    pts.push_back(bp(x, 0.05));
  }
  boundary::FitConfig outCfg;
  outCfg.denominator = boundary::ThresholdDenominator::OutsidePoints;
  DecisionBoundary bOut = boundary::fit_boundary(pts, outCfg);
  boundary::FitConfig allCfg;
  allCfg.denominator = boundary::ThresholdDenominator::AllPoints;
  DecisionBoundary bAll = boundary::fit_boundary(pts, allCfg);
  // same fit, same distance sum; all-points denominator can only shrink t
  CHECK(bAll.threshold <= bOut.threshold + 1e-12);
}

TEST_CASE("point on the curve has distance ~0") {
  DecisionBoundary b;
  b.a = -1.5;
  b.b = 0.3;
  b.c = 0.8;
  for (double x : {0.0, 0.25, 0.5, 0.9}) {
    CHECK(boundary::point_curve_distance(x, b.curve(x), b) <= 1e-6);
  }
}

TEST_CASE("analytic case: curve x^2, point (0,1) -> sqrt(3)/2") {
  DecisionBoundary b;
  b.a = 1.0;
  b.b = 0.0;
  b.c = 0.0;
  double d = boundary::point_curve_distance(0.0, 1.0, b);
  CHECK(std::abs(d - std::sqrt(3.0) / 2.0) <= 1e-4);
}

TEST_CASE("distance never exceeds the vertical gap") {
  Rng rng(23);
  for (int t = 0; t < 200; ++t) {
    DecisionBoundary b;
    b.a = rng.uniform(-4.0, 4.0);
    b.b = rng.uniform(-2.0, 2.0);
    b.c = rng.uniform(-1.0, 2.0);
    double px = rng.uniform();
    double py = rng.uniform();
    double d = boundary::point_curve_distance(px, py, b);
    CHECK(d <= std::abs(py - b.curve(px)) + 1e-9);
  }
}

TEST_CASE("COBYLA distance agrees with a dense grid search on 1000 random cases") {
  Rng rng(31);
  int checked = 0;
  for (int t = 0; t < 1000; ++t) {
    DecisionBoundary b;
    b.a = rng.uniform(-4.0, 4.0);
    b.b = rng.uniform(-2.0, 2.0);
    b.c = rng.uniform(-1.0, 2.0);
    double px = rng.uniform();
    double py = rng.uniform();
    double cobyla = boundary::point_curve_distance(px, py, b);
    double grid = grid_distance(px, py, b);
    CHECK(std::abs(cobyla - grid) <= 1e-3);
    ++checked;
  }
  CHECK(checked == 1000);
}

TEST_CASE("cobyla_minimize_1d respects the box") {
  auto f = [](double x) { return (x + 2.0) * (x + 2.0); };  // min outside [0,1]
  auto res = optim::cobyla_minimize_1d(f, 0.8, 0.0, 1.0, 0.25, 1e-6);
  CHECK(res.x == doctest::Approx(0.0).epsilon(1e-4));
}

TEST_CASE("classify: below curve is benign with zero distance") {
  DecisionBoundary b;
  b.a = -1.0;
  b.b = 0.0;
  b.c = 0.9;
  b.threshold = 0.05;
  auto v = boundary::classify(bp(0.5, 0.3), b);  // curve(0.5) = 0.65
  CHECK_FALSE(v.isAttack);
  CHECK(v.distance == 0.0);
}

TEST_CASE("classify: distance exactly at threshold stays benign") {
  DecisionBoundary b;
  b.a = 0.0;
  b.b = 0.0;
  b.c = 0.5;  // flat line fooled = 0.5
  BehaviorPoint p = bp(0.5, 0.6);
  double d = boundary::point_curve_distance(0.5, 0.6, b);
  b.threshold = d;
  CHECK_FALSE(boundary::classify(p, b).isAttack);
  b.threshold = d - 1e-6;
  CHECK(boundary::classify(p, b).isAttack);
}

TEST_CASE("classify is monotone in fooled") {
  Rng rng(37);
  for (int t = 0; t < 100; ++t) {
    DecisionBoundary b;
    b.a = rng.uniform(-4.0, 4.0);
    b.b = rng.uniform(-2.0, 2.0);
    b.c = rng.uniform(-0.5, 1.0);
    b.threshold = rng.uniform(0.0, 0.3);
    double x = rng.uniform();
    double f1 = rng.uniform();
    double f2 = f1 + rng.uniform(0.0, 1.0 - f1);
    if (boundary::classify(bp(x, f1), b).isAttack) CHECK(boundary::classify(bp(x, f2), b).isAttack);
  }
}

TEST_CASE("fit residuals beat random coefficient perturbations") {
  Rng rng(41);
  std::vector<BehaviorPoint> pts;
  for (int i = 0; i < 60; ++i) {
    double x = rng.uniform();
    pts.push_back(bp(x, std::min(1.0, std::max(0.0, -0.8 * x * x + 0.6 * x + 0.2 + rng.uniform(-0.1, 0.1)))));
  }
  boundary::FitConfig cfg;
  DecisionBoundary b = boundary::fit_boundary(pts, cfg);
  auto outliers = boundary::outlier_points(pts, cfg.nIntervals);
  auto sse = [&](double a, double bb, double c) {
    double acc = 0.0;
    for (const auto& p : outliers) {
      double r = (a * p.avgConf + bb) * p.avgConf + c - p.fooled;
      acc += r * r;
    }
    return acc;
  };
  double best = sse(b.a, b.b, b.c);
  for (int t = 0; t < 1000; ++t) {
    double da = rng.uniform(-0.05, 0.05);
    double db = rng.uniform(-0.05, 0.05);
    double dc = rng.uniform(-0.05, 0.05);
    CHECK(sse(b.a + da, b.b + db, b.c + dc) >= best - 1e-12);
  }
}

TEST_CASE("calibration file round trip") {
  pwtest::TempDir tmp("calib");
  DecisionBoundary b;
  b.a = -1.25;
  b.b = 0.375;
  b.c = 0.825;
  b.threshold = 0.0625;
  b.intervals = 12;
  b.denominator = boundary::ThresholdDenominator::AllPoints;
  boundary::save_boundary(b, tmp.file("c.txt"));
  DecisionBoundary back = boundary::load_boundary(tmp.file("c.txt"));
  CHECK(back.a == b.a);
  CHECK(back.b == b.b);
  CHECK(back.c == b.c);
  CHECK(back.threshold == b.threshold);
  CHECK(back.intervals == 12);
  CHECK(back.denominator == boundary::ThresholdDenominator::AllPoints);
}
