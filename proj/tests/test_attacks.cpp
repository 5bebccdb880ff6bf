#include <cmath>

#include "core/attacks.hpp"
#include "doctest.h"
#include "test_util.hpp"

using namespace pw;
using attacks::Trigger;

namespace {

nn::Model tiny_model(uint64_t seed) {
  std::vector<nn::Layer> layers;
  layers.push_back(nn::make_conv2d(3, 3, 3, 4, 1));
  layers.push_back(nn::make_relu());
  layers.push_back(nn::make_maxpool2());
  layers.push_back(nn::make_dense(4 * 4 * 4, 3));
  nn::Model m = nn::assemble(8, 8, 3, 3, std::move(layers));
  nn::init_glorot(m, seed);
  return m;
}

Dataset tiny_set(int n, uint64_t seed) {
  Rng rng(seed);
  Dataset ds;
  ds.numClasses = 3;
  for (int i = 0; i < n; ++i) {
    Image img(8, 8, 3);
    for (float& p : img.pixels) p = static_cast<float>(rng.uniform());
    ds.items.emplace_back(std::move(img), i % 3);
  }
  return ds;
}

}  // namespace

TEST_CASE("stamp replaces pixels exactly at alpha 1") {
  Image img(8, 8, 3, 0.0f);
  Image patch = attacks::make_trigger_patch(3, 5);
  Image out = attacks::stamp(img, patch, 2, 3, 1.0);
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c)
      for (int ch = 0; ch < 3; ++ch) CHECK(out.at(2 + r, 3 + c, ch) == patch.at(r, c, ch));
  // untouched elsewhere
  CHECK(out.at(0, 0, 0) == 0.0f);
  CHECK(out.at(7, 7, 2) == 0.0f);
}

TEST_CASE("stamp blends at alpha 0.5: white patch on black gives gray") {
  Image img(8, 8, 3, 0.0f);
  Image patch(2, 2, 3, 1.0f);
  Image out = attacks::stamp(img, patch, 0, 0, 0.5);
  CHECK(out.at(0, 0, 0) == doctest::Approx(0.5));
  CHECK(out.at(1, 1, 2) == doctest::Approx(0.5));
}

TEST_CASE("stamp matches a pixel-loop oracle and stays in range") {
  Rng rng(13);
  Image img(8, 8, 3);
  for (float& p : img.pixels) p = static_cast<float>(rng.uniform());
  Image patch(3, 4, 3);
  for (float& p : patch.pixels) p = static_cast<float>(rng.uniform());
  double alpha = 0.7;
  Image out = attacks::stamp(img, patch, 4, 2, alpha);
  for (int r = 0; r < 8; ++r)
    for (int c = 0; c < 8; ++c)
      for (int ch = 0; ch < 3; ++ch) {
        bool inside = r >= 4 && r < 7 && c >= 2 && c < 6;
        float expect = inside ? static_cast<float>((1.0 - alpha) * img.at(r, c, ch) +
                                                   alpha * patch.at(r - 4, c - 2, ch))
                              : img.at(r, c, ch);
        CHECK(out.at(r, c, ch) == doctest::Approx(expect));
      }
}

TEST_CASE("stamp rejects out-of-bounds placements") {
  Image img(8, 8, 3, 0.5f);
  Image patch(4, 4, 3, 1.0f);
  CHECK_THROWS_AS(attacks::stamp(img, patch, 6, 0, 1.0), Error);
  CHECK_THROWS_AS(attacks::stamp(img, patch, 0, -1, 1.0), Error);
}

TEST_CASE("poison rate 0 leaves the dataset untouched") {
  Dataset ds = tiny_set(10, 3);
  Trigger trig;
  trig.patch = attacks::make_trigger_patch(2, 7);
  trig.targetClass = 1;
  Dataset out = attacks::poison_dataset(ds, trig, 0.0, 9);
  REQUIRE(out.items.size() == ds.items.size());
  for (size_t i = 0; i < ds.items.size(); ++i) {
    CHECK(out.items[i].second == ds.items[i].second);
    CHECK(out.items[i].first.pixels == ds.items[i].first.pixels);
  }
}

TEST_CASE("poison rate 1 stamps and relabels everything, order preserved") {
  Dataset ds = tiny_set(10, 5);
  Trigger trig;
  trig.patch = attacks::make_trigger_patch(2, 7);
  trig.targetClass = 2;
  Dataset out = attacks::poison_dataset(ds, trig, 1.0, 9);
  REQUIRE(out.items.size() == ds.items.size());
  int changed = 0;
  for (size_t i = 0; i < out.items.size(); ++i) {
    CHECK(out.items[i].second == 2);
    if (out.items[i].first.pixels != ds.items[i].first.pixels) ++changed;
  }
  CHECK(changed == 10);
}

TEST_CASE("poison fraction is seeded and rounded") {
  Dataset ds = tiny_set(20, 11);
  Trigger trig;
  trig.patch = attacks::make_trigger_patch(2, 1);
  trig.targetClass = 0;
  Dataset a = attacks::poison_dataset(ds, trig, 0.25, 13);
  Dataset b = attacks::poison_dataset(ds, trig, 0.25, 13);
  int stamped = 0;
  for (size_t i = 0; i < a.items.size(); ++i) {
    CHECK(a.items[i].first.pixels == b.items[i].first.pixels);
    if (a.items[i].first.pixels != ds.items[i].first.pixels) ++stamped;
  }
  CHECK(stamped == 5);
}

TEST_CASE("patch generation with zero steps returns the seeded init") {
  nn::Model m = tiny_model(3);
  Dataset ds = tiny_set(6, 17);
  attacks::PatchSpec spec;
  spec.sideFraction = 0.25;
  spec.targetClass = 1;
  spec.steps = 0;
  spec.seed = 99;
  Image a = attacks::gen_adversarial_patch(m, ds, spec);
  Image b = attacks::gen_adversarial_patch(m, ds, spec);
  CHECK(a.pixels == b.pixels);
  CHECK(a.height == 2);  // 0.25 * 8
  for (float p : a.pixels) {
    CHECK(p >= 0.0f);
    CHECK(p <= 1.0f);
  }
}

TEST_CASE("perturb_gradcam with zero steps returns the input unchanged") {
  nn::Model m = tiny_model(5);
  Image img = tiny_set(1, 19).items[0].first;
  saliency::Heatmap target(4, 4);
  target.at(0, 0) = 0.5f;
  saliency::BinaryMask full(8, 8);
  for (auto& b : full.bits) b = 1;
  std::vector<double> traj;
  Image out = attacks::perturb_gradcam(m, img, target, full, 0, 0, &traj);
  CHECK(out.pixels == img.pixels);
  REQUIRE(traj.size() == 1);
  CHECK(traj[0] >= 0.0);
}

TEST_CASE("perturb_gradcam never touches pixels outside the region mask") {
  nn::Model m = tiny_model(7);
  Image img = tiny_set(1, 23).items[0].first;
  saliency::Heatmap target(4, 4);
  target.at(1, 1) = 1.0f;
  saliency::BinaryMask region(8, 8);
  for (int r = 4; r < 8; ++r)
    for (int c = 4; c < 8; ++c) region.set(r, c, true);
  Image out = attacks::perturb_gradcam(m, img, target, region, 0, 5);
  for (int r = 0; r < 8; ++r)
    for (int c = 0; c < 8; ++c)
      for (int ch = 0; ch < 3; ++ch)
        if (!region.at(r, c)) CHECK(out.at(r, c, ch) == img.at(r, c, ch));
  for (float p : out.pixels) {
    CHECK(p >= 0.0f);
    CHECK(p <= 1.0f);
  }
}

TEST_CASE("minimize_heatmap stays inside the patch mask and records a trajectory") {
  nn::Model m = tiny_model(11);
  Dataset probe = tiny_set(8, 29);
  Image img = tiny_set(1, 31).items[0].first;
  saliency::BinaryMask footprint(8, 8);
  for (int r = 2; r < 5; ++r)
    for (int c = 2; c < 5; ++c) footprint.set(r, c, true);

  attacks::MinimizeTrace none = attacks::minimize_heatmap(m, img, footprint, 1, 0, probe, 3);
  CHECK(none.image.pixels == img.pixels);
  CHECK(none.steps == std::vector<int>{0});  // single point at step 0

  attacks::MinimizeTrace t = attacks::minimize_heatmap(m, img, footprint, 1, 10, probe, 3, 5);
  CHECK(t.steps == std::vector<int>{0, 5, 10});
  for (int r = 0; r < 8; ++r)
    for (int c = 0; c < 8; ++c)
      for (int ch = 0; ch < 3; ++ch)
        if (!footprint.at(r, c)) CHECK(t.image.at(r, c, ch) == img.at(r, c, ch));
}

TEST_CASE("joint_optimize validates alphas and reports rates in range") {
  nn::Model m = tiny_model(13);
  Dataset ds = tiny_set(9, 37);
  attacks::PatchSpec spec;
  spec.sideFraction = 0.25;
  spec.targetClass = 0;
  spec.seed = 7;
  attacks::JointAttackConfig cfg;
  cfg.alphas = {0.0, 1.0};
  cfg.nPatches = 2;
  cfg.steps = 3;
  auto rows = attacks::joint_optimize(m, ds, spec, cfg);
  REQUIRE(rows.size() == 2);
  for (const auto& r : rows) {
    CHECK(r.successRate >= 0.0);
    CHECK(r.successRate <= 1.0);
    CHECK(r.hiddenRate >= 0.0);
    CHECK(r.hiddenRate <= 1.0);
    CHECK(r.bothRate <= std::min(1.0, r.hiddenRate + 1e-12));
  }
  cfg.alphas = {1.5};
  CHECK_THROWS_AS(attacks::joint_optimize(m, ds, spec, cfg), Error);
}

TEST_CASE("default joint sweep covers [0,1] in 0.025 steps") {
  auto cfg = attacks::default_joint_config();
  REQUIRE(cfg.alphas.size() == 41);
  CHECK(cfg.alphas.front() == 0.0);
  CHECK(cfg.alphas.back() == doctest::Approx(1.0));
  CHECK(cfg.alphas[1] == doctest::Approx(0.025));
}

TEST_CASE("attack_success is deterministic per seed") {
  nn::Model m = tiny_model(17);
  Dataset probe = tiny_set(10, 41);
  Image patch = attacks::make_trigger_patch(2, 3);
  double a = attacks::attack_success(m, probe, patch, 1, 1.0, 5);
  double b = attacks::attack_success(m, probe, patch, 1, 1.0, 5);
  CHECK(a == b);
  double c = attacks::attack_success(m, probe, patch, 1, 1.0, 5, 2);
  CHECK(c == a);  // job count cannot change the measurement
}
