#include "attacks.hpp"

#include <algorithm>
#include <cmath>

#include "detector.hpp"

namespace pw::attacks {

namespace {

float sign_of(float v) { return v > 0.0f ? 1.0f : (v < 0.0f ? -1.0f : 0.0f); }

struct Placement {
  int row = 0, col = 0;
};

Placement random_placement(Rng& rng, int imgH, int imgW, int patchH, int patchW) {
  Placement p;
  p.row = rng.below(imgH - patchH + 1);
  p.col = rng.below(imgW - patchW + 1);
  return p;
}

saliency::BinaryMask footprint_mask(int imgH, int imgW, int row, int col, int ph, int pwid) {
  saliency::BinaryMask m(imgH, imgW);
  for (int r = row; r < row + ph; ++r)
    for (int c = col; c < col + pwid; ++c) m.set(r, c, true);
  return m;
}

struct Rect {
  int r0 = 0, c0 = 0, r1 = -1, c1 = -1;
};

Rect mask_bounds(const saliency::BinaryMask& mask) {
  Rect rect;
  rect.r0 = mask.height;
  rect.c0 = mask.width;
  for (int r = 0; r < mask.height; ++r)
    for (int c = 0; c < mask.width; ++c)
      if (mask.at(r, c)) {
        rect.r0 = std::min(rect.r0, r);
        rect.c0 = std::min(rect.c0, c);
        rect.r1 = std::max(rect.r1, r);
        rect.c1 = std::max(rect.c1, c);
      }
  return rect;
}

}  // namespace

Image make_trigger_patch(int size, uint64_t seed) {
  if (size < 1) fail(Err::InvalidArg, "trigger size must be >= 1");
  Rng rng(seed);
  Image patch(size, size, 3);
  for (float& p : patch.pixels) p = rng.uniform() < 0.5 ? 0.0f : 1.0f;
  return patch;
}

Image stamp(const Image& img, const Image& patch, int row, int col, double alpha) {
  if (row < 0 || col < 0 || row + patch.height > img.height || col + patch.width > img.width)
    fail(Err::OutOfBounds, "stamp: trigger does not fit at position");
  if (patch.channels != img.channels) fail(Err::ShapeMismatch, "stamp: channel mismatch");
  Image out = img;
  float a = static_cast<float>(alpha);
  for (int r = 0; r < patch.height; ++r)
    for (int c = 0; c < patch.width; ++c)
      for (int ch = 0; ch < img.channels; ++ch) {
        float v = (1.0f - a) * img.at(row + r, col + c, ch) + a * patch.at(r, c, ch);
        out.at(row + r, col + c, ch) = std::clamp(v, 0.0f, 1.0f);
      }
  return out;
}

Image stamp(const Image& img, const Trigger& trig, Rng& rng) {
  int row = trig.row, col = trig.col;
  if (row < 0 || col < 0) {
    Placement p = random_placement(rng, img.height, img.width, trig.patch.height, trig.patch.width);
    row = p.row;
    col = p.col;
  }
  return stamp(img, trig.patch, row, col, trig.alpha);
}

Dataset poison_dataset(const Dataset& ds, const Trigger& trig, double rate, uint64_t seed) {
  if (rate < 0.0 || rate > 1.0) fail(Err::InvalidArg, "poison rate must be in [0,1]");
  std::vector<int> order(ds.items.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
  Rng rng(seed);
  rng.shuffle(order);
  size_t nPoison = static_cast<size_t>(std::lround(rate * static_cast<double>(ds.items.size())));
  std::vector<uint8_t> chosen(ds.items.size(), 0);
  for (size_t i = 0; i < nPoison; ++i) chosen[static_cast<size_t>(order[i])] = 1;

  Dataset out;
  out.numClasses = ds.numClasses;
  out.items.reserve(ds.items.size());
  Rng place(seed ^ 0x9A7C4ULL);
  for (size_t i = 0; i < ds.items.size(); ++i) {
    if (chosen[i])
      out.items.emplace_back(stamp(ds.items[i].first, trig, place), trig.targetClass);
    else
      out.items.push_back(ds.items[i]);
  }
  return out;
}

double attack_success(const nn::Model& m, const Dataset& probe, const Image& patch, int targetClass,
                      double alpha, uint64_t seed, int jobs) {
  if (probe.items.empty()) fail(Err::EmptyTestSet, "attack_success: empty probe set");
  const int n = static_cast<int>(probe.items.size());
  // placements drawn up front so workers stay deterministic
  Rng rng(seed);
  std::vector<Placement> spots(static_cast<size_t>(n));
  for (auto& s : spots)
    s = random_placement(rng, m.inputH, m.inputW, patch.height, patch.width);
  std::vector<uint8_t> hit(static_cast<size_t>(n), 0);
  parallel_for(n, jobs, [&](int i) {
    Image x = stamp(probe.items[static_cast<size_t>(i)].first, patch, spots[static_cast<size_t>(i)].row,
                    spots[static_cast<size_t>(i)].col, alpha);
    hit[static_cast<size_t>(i)] = nn::predict(m, x).classIndex == targetClass ? 1 : 0;
  });
  size_t ok = 0;
  for (uint8_t h : hit) ok += h;
  return static_cast<double>(ok) / n;
}

Image gen_adversarial_patch(const nn::Model& m, const Dataset& train, const PatchSpec& spec,
                            int jobs) {
  if (spec.sideFraction <= 0.0 || spec.sideFraction > 1.0)
    fail(Err::InvalidArg, "patch sideFraction must be in (0,1]");
  if (train.items.empty()) fail(Err::InvalidArg, "gen_adversarial_patch: empty dataset");
  const int side = std::max(1, static_cast<int>(std::lround(spec.sideFraction * m.inputH)));

  Rng rng(spec.seed);
  Image patch(side, side, m.inputC);
  for (float& p : patch.pixels) p = static_cast<float>(rng.uniform());
  if (spec.steps <= 0) return patch;

  Dataset probe = subsample_dataset(train, spec.probeSize, spec.seed ^ 0x9E3779B9ULL);
  nn::LossSpec loss;
  loss.kind = nn::LossKind::TargetCrossEntropy;
  loss.classIndex = spec.targetClass;

  Image best = patch;
  double bestSuccess = -1.0;
  std::vector<float> grad(patch.size());
  std::vector<float> momentum(patch.size(), 0.0f);
  std::vector<std::vector<float>> batchGrads;
  for (int step = 0; step < spec.steps; ++step) {
    std::fill(grad.begin(), grad.end(), 0.0f);
    int bs = std::min<int>(spec.batchSize, static_cast<int>(train.items.size()));
    struct Pick {
      int index;
      Placement at;
    };
    std::vector<Pick> picks(static_cast<size_t>(bs));
    for (auto& pk : picks) {
      pk.index = rng.below(static_cast<int>(train.items.size()));
      pk.at = random_placement(rng, m.inputH, m.inputW, side, side);
    }
    batchGrads.assign(static_cast<size_t>(bs), {});
    parallel_for(bs, jobs, [&](int bi) {
      const Pick& pk = picks[static_cast<size_t>(bi)];
      Image x = stamp(train.items[static_cast<size_t>(pk.index)].first, patch, pk.at.row, pk.at.col, 1.0);
      Image g = nn::input_gradient(m, x, loss);
      std::vector<float> local(patch.size(), 0.0f);
      for (int r = 0; r < side; ++r)
        for (int c = 0; c < side; ++c)
          for (int ch = 0; ch < m.inputC; ++ch)
            local[(static_cast<size_t>(r) * side + c) * m.inputC + ch] =
                g.at(pk.at.row + r, pk.at.col + c, ch);
      batchGrads[static_cast<size_t>(bi)] = std::move(local);
    });
    for (const auto& bg : batchGrads)
      for (size_t i = 0; i < grad.size(); ++i) grad[i] += bg[i];

    // momentum-smoothed signed descent with a linear step decay; the raw
    // per-step gradient is too noisy across random placements
    double l1 = 0.0;
    for (float g : grad) l1 += std::abs(g);
    if (l1 < 1e-12) l1 = 1.0;
    float lr = static_cast<float>(spec.learningRate *
                                  (1.0 - 0.9 * static_cast<double>(step) / spec.steps));
    for (size_t i = 0; i < patch.pixels.size(); ++i) {
      momentum[i] = 0.9f * momentum[i] + static_cast<float>(grad[i] / l1);
      patch.pixels[i] = std::clamp(patch.pixels[i] - lr * sign_of(momentum[i]), 0.0f, 1.0f);
    }

    if ((step + 1) % spec.evalEvery == 0 || step + 1 == spec.steps) {
      double success = attack_success(m, probe, patch, spec.targetClass, 1.0,
                                      spec.seed + 7919ULL * static_cast<uint64_t>(step), jobs);
      if (success > bestSuccess) {
        bestSuccess = success;
        best = patch;
      }
      if (success >= spec.successTarget) return best;
    }
  }
  return best;
}

Image perturb_gradcam(const nn::Model& m, const Image& base, const saliency::Heatmap& target,
                      const saliency::BinaryMask& regionMask, int classIndex, int steps,
                      std::vector<double>* trajectory) {
  if (base.height != regionMask.height || base.width != regionMask.width)
    fail(Err::ShapeMismatch, "perturb_gradcam: mask dims differ from image");
  nn::LossSpec loss;
  loss.kind = nn::LossKind::GradCamTargetDiff;
  loss.classIndex = classIndex;
  loss.target = nn::Tensor({target.height, target.width, 1});
  loss.target.data.assign(target.values.begin(), target.values.end());

  Image x = base;
  if (trajectory) {
    trajectory->clear();
    trajectory->push_back(nn::loss_value(m, x, loss));
  }
  const float step = 0.05f;
  for (int it = 0; it < steps; ++it) {
    double value = 0.0;
    Image g = nn::input_gradient(m, x, loss, &value);
    for (int r = 0; r < x.height; ++r)
      for (int c = 0; c < x.width; ++c) {
        if (!regionMask.at(r, c)) continue;
        for (int ch = 0; ch < x.channels; ++ch)
          x.at(r, c, ch) = std::clamp(x.at(r, c, ch) - step * sign_of(g.at(r, c, ch)), 0.0f, 1.0f);
      }
    if (trajectory) trajectory->push_back(nn::loss_value(m, x, loss));
  }
  return x;
}

MinimizeTrace minimize_heatmap(const nn::Model& m, const Image& stamped,
                               const saliency::BinaryMask& patchMask, int targetClass, int steps,
                               const Dataset& probe, uint64_t seed, int sampleEvery, int jobs) {
  MinimizeTrace trace;
  trace.image = stamped;
  Rect rect = mask_bounds(patchMask);
  if (rect.r1 < rect.r0) fail(Err::InvalidArg, "minimize_heatmap: empty patch mask");

  saliency::Heatmap coarse = saliency::grad_cam(m, stamped, targetClass);
  nn::LossSpec loss;
  loss.kind = nn::LossKind::GradCamSum;
  loss.classIndex = targetClass;
  loss.fmMask = saliency::mask_to_feature_grid(patchMask, coarse.height, coarse.width);

  auto record = [&](int step) {
    double sum = nn::loss_value(m, trace.image, loss);
    Image patch = crop(trace.image, rect.r0, rect.c0, rect.r1, rect.c1);
    double success = attack_success(m, probe, patch, targetClass,
                                    1.0, seed + 131ULL * static_cast<uint64_t>(step), jobs);
    trace.steps.push_back(step);
    trace.heatmapSums.push_back(sum);
    trace.successRates.push_back(success);
  };

  record(0);
  const float step = 0.05f;
  for (int it = 0; it < steps; ++it) {
    Image g = nn::input_gradient(m, trace.image, loss);
    for (int r = rect.r0; r <= rect.r1; ++r)
      for (int c = rect.c0; c <= rect.c1; ++c) {
        if (!patchMask.at(r, c)) continue;
        for (int ch = 0; ch < trace.image.channels; ++ch)
          trace.image.at(r, c, ch) =
              std::clamp(trace.image.at(r, c, ch) - step * sign_of(g.at(r, c, ch)), 0.0f, 1.0f);
      }
    if ((it + 1) % sampleEvery == 0 || it + 1 == steps) record(it + 1);
  }
  return trace;
}

JointAttackConfig default_joint_config() {
  JointAttackConfig c;
  for (int i = 0; i <= 40; ++i) c.alphas.push_back(i * 0.025);
  return c;
}

std::vector<JointSweepRow> joint_optimize(const nn::Model& m, const Dataset& data,
                                          const PatchSpec& spec, const JointAttackConfig& config,
                                          int jobs) {
  for (double a : config.alphas)
    if (a < 0.0 || a > 1.0) fail(Err::InvalidArg, "joint_optimize: alpha must be in [0,1]");
  if (data.items.empty()) fail(Err::InvalidArg, "joint_optimize: empty dataset");

  const int side = std::max(1, static_cast<int>(std::lround(spec.sideFraction * m.inputH)));
  Dataset probe = subsample_dataset(data, spec.probeSize, spec.seed ^ 0x9E3779B9ULL);

  nn::LossSpec misLoss;
  misLoss.kind = nn::LossKind::TargetCrossEntropy;
  misLoss.classIndex = spec.targetClass;

  std::vector<JointSweepRow> rows;
  for (double alpha : config.alphas) {
    JointSweepRow row;
    row.alpha = alpha;
    int both = 0;
    for (int pi = 0; pi < config.nPatches; ++pi) {
      uint64_t patchSeed = spec.seed + 1000003ULL * static_cast<uint64_t>(pi) +
                           static_cast<uint64_t>(alpha * 10007.0);
      Rng rng(patchSeed);
      Image patch(side, side, m.inputC);
      for (float& p : patch.pixels) p = static_cast<float>(rng.uniform());

      // fixed evaluation stamping for the heatmap objective
      int baseIdx = rng.below(static_cast<int>(data.items.size()));
      Placement at = random_placement(rng, m.inputH, m.inputW, side, side);
      saliency::BinaryMask footprint = footprint_mask(m.inputH, m.inputW, at.row, at.col, side, side);
      saliency::Heatmap coarseShape = saliency::grad_cam(m, data.items[static_cast<size_t>(baseIdx)].first,
                                                         spec.targetClass);
      nn::LossSpec camLoss;
      camLoss.kind = nn::LossKind::GradCamSum;
      camLoss.classIndex = spec.targetClass;
      camLoss.fmMask = saliency::mask_to_feature_grid(footprint, coarseShape.height, coarseShape.width);

      for (int step = 0; step < config.steps; ++step) {
        // misclassification step at rate (1 - alpha), random placement
        if (alpha < 1.0) {
          int idx = rng.below(static_cast<int>(data.items.size()));
          Placement rp = random_placement(rng, m.inputH, m.inputW, side, side);
          Image x = stamp(data.items[static_cast<size_t>(idx)].first, patch, rp.row, rp.col, 1.0);
          Image g = nn::input_gradient(m, x, misLoss);
          float lr = static_cast<float>((1.0 - alpha) * spec.learningRate);
          for (int r = 0; r < side; ++r)
            for (int c = 0; c < side; ++c)
              for (int ch = 0; ch < m.inputC; ++ch) {
                float& p = patch.pixels[(static_cast<size_t>(r) * side + c) * m.inputC + ch];
                p = std::clamp(p - lr * sign_of(g.at(rp.row + r, rp.col + c, ch)), 0.0f, 1.0f);
              }
        }
        // heatmap-minimization step at rate alpha, fixed placement
        if (alpha > 0.0) {
          Image x = stamp(data.items[static_cast<size_t>(baseIdx)].first, patch, at.row, at.col, 1.0);
          Image g = nn::input_gradient(m, x, camLoss);
          float lr = static_cast<float>(alpha * spec.learningRate);
          for (int r = 0; r < side; ++r)
            for (int c = 0; c < side; ++c)
              for (int ch = 0; ch < m.inputC; ++ch) {
                float& p = patch.pixels[(static_cast<size_t>(r) * side + c) * m.inputC + ch];
                p = std::clamp(p - lr * sign_of(g.at(at.row + r, at.col + c, ch)), 0.0f, 1.0f);
              }
        }
      }

      double success = attack_success(m, probe, patch, spec.targetClass, 1.0, patchSeed ^ 0xFACEULL, jobs);
      Image stampedEval = stamp(data.items[static_cast<size_t>(baseIdx)].first, patch, at.row, at.col, 1.0);
      saliency::BinaryMask camMask = proposal::gradcam_mask(m, stampedEval, spec.targetClass);
      size_t inter = 0;
      for (size_t i = 0; i < footprint.bits.size(); ++i)
        if (footprint.bits[i] && camMask.bits[i]) ++inter;
      double overlap = static_cast<double>(inter) / static_cast<double>(footprint.count());
      bool hidden = overlap < config.overlapThreshold;
      bool successful = success >= config.successThreshold;
      row.successRate += success;
      if (hidden) row.hiddenRate += 1.0;
      if (hidden && successful) ++both;
    }
    row.successRate /= config.nPatches;
    row.hiddenRate /= config.nPatches;
    row.bothRate = static_cast<double>(both) / config.nPatches;
    rows.push_back(row);
  }
  return rows;
}

std::vector<SweepCell> size_transparency_sweep(const nn::Model& m,
                                               const boundary::DecisionBoundary& b,
                                               const Image& patch, int targetClass,
                                               const std::vector<double>& sizes,
                                               const std::vector<double>& alphas,
                                               const Dataset& testSet, const Dataset& probe,
                                               const pipeline::DetectorConfig& config,
                                               uint64_t seed, int trials) {
  std::vector<SweepCell> out;
  for (double size : sizes) {
    int side = std::max(1, static_cast<int>(std::lround(size * m.inputH)));
    Image resized = resize_bilinear(patch, side, side);
    for (double alpha : alphas) {
      SweepCell cell;
      cell.size = size;
      cell.alpha = alpha;
      cell.attackSuccess = attack_success(m, probe, resized, targetClass, alpha,
                                          seed + static_cast<uint64_t>(size * 1000) * 31ULL +
                                              static_cast<uint64_t>(alpha * 1000),
                                          config.jobs);
      Rng rng(seed ^ (static_cast<uint64_t>(size * 997) << 16) ^ static_cast<uint64_t>(alpha * 991));
      int detectedCount = 0;
      for (int t = 0; t < trials; ++t) {
        int idx = rng.below(static_cast<int>(probe.items.size()));
        Placement at = random_placement(rng, m.inputH, m.inputW, side, side);
        Image x = stamp(probe.items[static_cast<size_t>(idx)].first, resized, at.row, at.col, alpha);
        detector::DetectionReport rep = detector::detect(m, x, b, testSet, config);
        if (rep.verdict.isAttack) ++detectedCount;
        const auto& pt = rep.points[static_cast<size_t>(rep.verdict.candidateIndex)];
        cell.avgConf += pt.avgConf;
        cell.fooled += pt.fooled;
      }
      cell.detectedRate = static_cast<double>(detectedCount) / trials;
      cell.detected = cell.detectedRate >= 0.5;
      cell.avgConf /= trials;
      cell.fooled /= trials;
      out.push_back(cell);
    }
  }
  return out;
}

}  // namespace pw::attacks
