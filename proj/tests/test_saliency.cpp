#include <cmath>

#include "core/saliency.hpp"
#include "doctest.h"
#include "test_util.hpp"

using namespace pw;
using saliency::BinaryMask;
using saliency::Heatmap;

namespace {

Image random_image(int h, int w, int c, uint64_t seed) {
  Rng rng(seed);
  Image img(h, w, c);
  for (float& p : img.pixels) p = static_cast<float>(rng.uniform());
  return img;
}

// 1x1 conv -> 2x2 pool -> dense head: every quantity is hand-computable
nn::Model hand_model(const std::vector<float>& denseWeights, int numClasses) {
  std::vector<nn::Layer> layers;
  nn::Layer conv = nn::make_conv2d(1, 1, 1, 1, 0);
  conv.weights = {1.0f};
  layers.push_back(conv);
  layers.push_back(nn::make_maxpool2());
  nn::Layer d = nn::make_dense(4, numClasses);
  d.weights = denseWeights;
  layers.push_back(d);
  return nn::assemble(4, 4, 1, numClasses, std::move(layers));
}

}  // namespace

TEST_CASE("grad_cam equals the hand-computed ReLU(alpha * A)") {
  // class 0 weights w over the 2x2 pooled map; alpha_0 = mean(w)
  std::vector<float> w = {0.5f, -0.25f, 1.0f, 0.75f,   // class 0
                          -1.0f, 0.5f, 0.25f, -0.5f};  // class 1
  nn::Model m = hand_model(w, 2);
  Image img(4, 4, 1);
  Rng rng(3);
  for (float& p : img.pixels) p = static_cast<float>(rng.uniform());
  auto [pred, trace] = nn::forward(m, img);
  (void)pred;
  const nn::Tensor& A = trace.featureMaps(m);

  for (int cls = 0; cls < 2; ++cls) {
    double alpha = 0.0;
    for (int i = 0; i < 4; ++i) alpha += w[static_cast<size_t>(cls * 4 + i)];
    alpha /= 4.0;
    Heatmap h = saliency::grad_cam(m, img, cls);
    REQUIRE(h.height == 2);
    REQUIRE(h.width == 2);
    for (int r = 0; r < 2; ++r)
      for (int c = 0; c < 2; ++c) {
        double expected = std::max(alpha * A.at(r, c, 0), 0.0);
        CHECK(std::abs(h.at(r, c) - expected) <= 1e-6);
      }
  }
}

TEST_CASE("grad_cam with zero gradients is all zero") {
  nn::Model m = hand_model(std::vector<float>(8, 0.0f), 2);
  Heatmap h = saliency::grad_cam(m, random_image(4, 4, 1, 9), 0);
  for (float v : h.values) CHECK(v == 0.0f);
}

TEST_CASE("negative alpha on a single feature map is killed by the ReLU") {
  // all-negative class row -> alpha < 0, A >= 0 -> heatmap 0
  std::vector<float> w = {-1.0f, -0.5f, -0.25f, -0.75f, 0.1f, 0.2f, 0.3f, 0.4f};
  nn::Model m = hand_model(w, 2);
  Heatmap h = saliency::grad_cam(m, random_image(4, 4, 1, 11), 0);
  for (float v : h.values) CHECK(v == 0.0f);
}

TEST_CASE("grad_cam is nonnegative and invariant to logit bias shifts") {
  std::vector<float> w(8);
  Rng rng(13);
  for (float& x : w) x = rng.funiform(-1.0f, 1.0f);
  nn::Model m = hand_model(w, 2);
  Image img = random_image(4, 4, 1, 17);
  Heatmap a = saliency::grad_cam(m, img, 0);
  for (float v : a.values) CHECK(v >= 0.0f);

  nn::Model shifted = m;
  for (auto& b : shifted.layers.back().biases) b += 3.25f;
  Heatmap c = saliency::grad_cam(shifted, img, 0);
  CHECK(a.values == c.values);  // bit-equal
}

TEST_CASE("upsample keeps constants, corners at 1x1, and bilinear midpoints") {
  Heatmap flat(3, 3);
  for (float& v : flat.values) v = 0.6f;
  Heatmap up = saliency::upsample(flat, 7, 9);
  for (float v : up.values) CHECK(v == doctest::Approx(0.6));

  Heatmap one(1, 1);
  one.at(0, 0) = 0.42f;
  Heatmap big = saliency::upsample(one, 5, 4);
  for (float v : big.values) CHECK(v == 0.42f);

  Heatmap corners(2, 2);
  corners.at(0, 0) = 1.0f;
  corners.at(1, 1) = 1.0f;
  Heatmap mid = saliency::upsample(corners, 3, 3);
  CHECK(mid.at(1, 1) == doctest::Approx(0.5));  // mean of the corners
  CHECK(mid.at(0, 0) == 1.0f);
  CHECK(mid.at(2, 2) == 1.0f);
  CHECK(mid.at(0, 2) == 0.0f);
}

TEST_CASE("upsample output stays inside the source range") {
  Rng rng(19);
  Heatmap h(4, 5);
  for (float& v : h.values) v = static_cast<float>(rng.uniform());
  float mn = 1e9f, mx = -1e9f;
  for (float v : h.values) {
    mn = std::min(mn, v);
    mx = std::max(mx, v);
  }
  Heatmap up = saliency::upsample(h, 13, 17);
  for (float v : up.values) {
    CHECK(v >= mn - 1e-6f);
    CHECK(v <= mx + 1e-6f);
  }
  CHECK_THROWS_AS(saliency::upsample(h, 2, 2), Error);
}

TEST_CASE("binarize thresholds at exactly 15% of max") {
  Heatmap h(1, 3);
  h.at(0, 0) = 1.0f;
  h.at(0, 1) = 0.15f;
  h.at(0, 2) = 0.1499f;
  BinaryMask m = saliency::binarize(h);
  CHECK(m.at(0, 0));
  CHECK(m.at(0, 1));
  CHECK_FALSE(m.at(0, 2));
}

TEST_CASE("binarize degenerate and uniform cases") {
  Heatmap zero(4, 4);
  CHECK(saliency::binarize(zero).count() == 0);

  Heatmap uniform(4, 4);
  for (float& v : uniform.values) v = 0.3f;
  CHECK(saliency::binarize(uniform).count() == 16);
}

TEST_CASE("binarize is scale invariant") {
  Rng rng(23);
  Heatmap h(6, 6);
  for (float& v : h.values) v = static_cast<float>(rng.uniform());
  BinaryMask base = saliency::binarize(h);
  for (int t = 0; t < 20; ++t) {
    float s = rng.funiform(0.001f, 1000.0f);
    Heatmap scaled = h;
    for (float& v : scaled.values) v *= s;
    CHECK(saliency::binarize(scaled).bits == base.bits);
  }
}

TEST_CASE("mask_subtract edge cases and pixel-loop oracle") {
  Rng rng(29);
  BinaryMask a(8, 8), b(8, 8);
  for (auto& bit : a.bits) bit = rng.uniform() < 0.5 ? 1 : 0;

  CHECK(saliency::mask_subtract(a, a).count() == 0);  // a == b -> empty

  // disjoint b -> result == a
  for (size_t i = 0; i < b.bits.size(); ++i) b.bits[i] = a.bits[i] ? 0 : (rng.uniform() < 0.5 ? 1 : 0);
  CHECK(saliency::mask_subtract(a, b).bits == a.bits);

  // random case against a brute-force loop
  BinaryMask c(8, 8);
  for (auto& bit : c.bits) bit = rng.uniform() < 0.5 ? 1 : 0;
  BinaryMask out = saliency::mask_subtract(a, c);
  for (int r = 0; r < 8; ++r)
    for (int col = 0; col < 8; ++col)
      CHECK(out.at(r, col) == (a.at(r, col) && !c.at(r, col)));
  CHECK(out.count() <= a.count());

  BinaryMask wrong(4, 4);
  CHECK_THROWS_AS(saliency::mask_subtract(a, wrong), Error);
}

TEST_CASE("mask_to_feature_grid marks any covered cell") {
  BinaryMask m(8, 8);
  m.set(0, 0, true);
  m.set(7, 7, true);
  auto grid = saliency::mask_to_feature_grid(m, 2, 2);
  CHECK(grid == std::vector<uint8_t>{1, 0, 0, 1});
}

TEST_CASE("heatmap PGM export scales the max to 255") {
  pwtest::TempDir tmp("hm");
  Heatmap h(2, 2);
  h.at(0, 0) = 2.0f;
  h.at(1, 1) = 1.0f;
  saliency::save_heatmap_pgm(h, tmp.file("h.pgm"));
  Image img = load_image(tmp.file("h.pgm"));
  CHECK(img.channels == 1);
  CHECK(img.at(0, 0, 0) == 1.0f);
  CHECK(img.at(1, 1, 0) == doctest::Approx(128.0 / 255.0).epsilon(0.01));
}
