#include "fuzzing.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

namespace pw::fuzz {

InertPattern make_inert_pattern(PatternKind kind, uint64_t seed, int h, int w, int c,
                                const nn::Model* model) {
  InertPattern out;
  out.kind = kind;
  out.pixels = Image(h, w, c);
  switch (kind) {
    case PatternKind::RandomNoise: {
      Rng rng(seed);
      for (float& p : out.pixels.pixels) p = static_cast<float>(rng.uniform());
      break;
    }
    case PatternKind::Checker: {
      for (int r = 0; r < h; ++r)
        for (int col = 0; col < w; ++col) {
          float v = ((r / 4 + col / 4) % 2 == 0) ? 0.0f : 1.0f;
          for (int ch = 0; ch < c; ++ch) out.pixels.at(r, col, ch) = v;
        }
      break;
    }
    case PatternKind::Optimized: {
      if (!model) fail(Err::InvalidArg, "optimized inert pattern needs a model");
      Rng rng(seed);
      for (float& p : out.pixels.pixels) p = static_cast<float>(rng.uniform());
      nn::LossSpec loss;
      loss.kind = nn::LossKind::ConfidenceSum;
      const int steps = 200;
      const float step = 0.01f;
      for (int it = 0; it < steps; ++it) {
        Image g = nn::input_gradient(*model, out.pixels, loss);
        for (size_t i = 0; i < g.size(); ++i) {
          float s = g.pixels[i] > 0.0f ? 1.0f : (g.pixels[i] < 0.0f ? -1.0f : 0.0f);
          out.pixels.pixels[i] = std::clamp(out.pixels.pixels[i] - step * s, 0.0f, 1.0f);
        }
      }
      break;
    }
  }
  return out;
}

Image overlay(const Image& base, const Image& patch, const saliency::BinaryMask& mask) {
  if (base.height != patch.height || base.width != patch.width || base.channels != patch.channels ||
      base.height != mask.height || base.width != mask.width)
    fail(Err::ShapeMismatch, "overlay: dims differ");
  Image out = base;
  for (int r = 0; r < base.height; ++r)
    for (int c = 0; c < base.width; ++c)
      if (mask.at(r, c))
        for (int ch = 0; ch < base.channels; ++ch) out.at(r, c, ch) = patch.at(r, c, ch);
  return out;
}

BehaviorPoint test_region(const nn::Model& m, const Image& image, const saliency::BinaryMask& mask,
                          int y, const Dataset& testSet, const InertPattern& pattern, int jobs) {
  if (testSet.items.empty()) fail(Err::EmptyTestSet, "test_region: empty test set");
  const int n = static_cast<int>(testSet.items.size());
  std::vector<uint8_t> fooled(static_cast<size_t>(n), 0);
  std::vector<double> conf(static_cast<size_t>(n), 0.0);
  parallel_for(n, jobs, [&](int i) {
    const Image& xt = testSet.items[static_cast<size_t>(i)].first;
    Image xR = overlay(xt, image, mask);
    Image xIP = overlay(xt, pattern.pixels, mask);
    fooled[static_cast<size_t>(i)] = nn::predict(m, xR).classIndex == y ? 1 : 0;
    conf[static_cast<size_t>(i)] = nn::predict(m, xIP).confidence;
  });
  BehaviorPoint bp;
  for (int i = 0; i < n; ++i) {
    bp.rawFooledCount += fooled[static_cast<size_t>(i)];
    bp.avgConf += conf[static_cast<size_t>(i)];
  }
  bp.avgConf /= n;
  bp.fooled = static_cast<double>(bp.rawFooledCount) / n;
  return bp;
}

void save_points_csv(const std::vector<LabeledPoint>& points, const std::string& path) {
  std::ofstream out(path);
  if (!out) fail(Err::Io, "cannot write " + path);
  out << "avg_conf,fooled,raw_fooled,label\n";
  char buf[128];
  for (const auto& lp : points) {
    std::snprintf(buf, sizeof(buf), "%.10g,%.10g,%d,%s\n", lp.point.avgConf, lp.point.fooled,
                  lp.point.rawFooledCount, lp.label.c_str());
    out << buf;
  }
}

}  // namespace pw::fuzz
