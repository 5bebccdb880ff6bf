#include <cmath>
#include <fstream>
#include <set>

#include "core/data.hpp"
#include "doctest.h"
#include "test_util.hpp"

using namespace pw;

TEST_CASE("synth_shapes is deterministic per seed") {
  Dataset a = synth_shapes(10, 3, 7);
  Dataset b = synth_shapes(10, 3, 7);
  REQUIRE(a.items.size() == b.items.size());
  for (size_t i = 0; i < a.items.size(); ++i) {
    CHECK(a.items[i].second == b.items[i].second);
    CHECK(a.items[i].first.pixels == b.items[i].first.pixels);
  }
  Dataset c = synth_shapes(10, 3, 8);
  CHECK(a.items[0].first.pixels != c.items[0].first.pixels);
}

TEST_CASE("synth_shapes perClass=0 gives an empty dataset") {
  Dataset ds = synth_shapes(4, 0, 1);
  CHECK(ds.items.empty());
  CHECK(ds.numClasses == 4);
}

TEST_CASE("synth_shapes pixels stay in [0,1] and labels are valid") {
  Dataset ds = synth_shapes(12, 4, 3);
  for (const auto& [img, label] : ds.items) {
    CHECK(label >= 0);
    CHECK(label < 12);
    for (float p : img.pixels) {
      CHECK(p >= 0.0f);
      CHECK(p <= 1.0f);
    }
  }
}

TEST_CASE("synth_shape_raster matches the rendered shape") {
  Dataset ds = synth_shapes(6, 2, 11);
  auto raster = synth_shape_raster(6, 2, 11, 5);
  const Image& img = ds.items[5].first;
  // inside the raster the pixel is a saturated color, outside it is gray-ish
  for (int r = 0; r < img.height; ++r)
    for (int c = 0; c < img.width; ++c) {
      bool shape = raster[static_cast<size_t>(r) * img.width + c] != 0;
      float mx = std::max({img.at(r, c, 0), img.at(r, c, 1), img.at(r, c, 2)});
      float mn = std::min({img.at(r, c, 0), img.at(r, c, 1), img.at(r, c, 2)});
      if (shape)
        CHECK(mx - mn > 0.5f);
      else
        CHECK(mx - mn == 0.0f);
    }
}

TEST_CASE("ppm round trip stays within half a quantum") {
  pwtest::TempDir tmp("ppm");
  Rng rng(5);
  Image img(9, 7, 3);
  for (float& p : img.pixels) p = static_cast<float>(rng.uniform());
  save_image(img, tmp.file("x.ppm"));
  Image back = load_image(tmp.file("x.ppm"));
  REQUIRE(back.height == 9);
  REQUIRE(back.width == 7);
  REQUIRE(back.channels == 3);
  for (size_t i = 0; i < img.pixels.size(); ++i)
    CHECK(std::abs(back.pixels[i] - img.pixels[i]) <= 1.0f / 510.0f);
}

TEST_CASE("1x1 P6 with bytes 255,0,0 loads as pure red") {
  pwtest::TempDir tmp("p6");
  {
    std::ofstream out(tmp.file("r.ppm"), std::ios::binary);
    out << "P6\n1 1\n255\n";
    out.put(static_cast<char>(255));
    out.put(static_cast<char>(0));
    out.put(static_cast<char>(0));
  }
  Image img = load_image(tmp.file("r.ppm"));
  CHECK(img.channels == 3);
  CHECK(img.at(0, 0, 0) == 1.0f);
  CHECK(img.at(0, 0, 1) == 0.0f);
  CHECK(img.at(0, 0, 2) == 0.0f);
}

TEST_CASE("P5 grayscale loads as one channel") {
  pwtest::TempDir tmp("p5");
  {
    std::ofstream out(tmp.file("g.pgm"), std::ios::binary);
    out << "P5\n# a comment\n2 1\n255\n";
    out.put(static_cast<char>(128));
    out.put(static_cast<char>(0));
  }
  Image img = load_image(tmp.file("g.pgm"));
  CHECK(img.channels == 1);
  CHECK(img.width == 2);
  CHECK(img.at(0, 0, 0) == doctest::Approx(128.0 / 255.0));
}

TEST_CASE("unsupported and corrupt files are rejected") {
  pwtest::TempDir tmp("bad");
  {
    std::ofstream out(tmp.file("a.ppm"), std::ios::binary);
    out << "P3\n1 1\n255\n1 2 3\n";
  }
  CHECK_THROWS_AS(load_image(tmp.file("a.ppm")), Error);
  {
    std::ofstream out(tmp.file("b.ppm"), std::ios::binary);
    out << "P6\n4 4\n255\n";
    out.put(static_cast<char>(1));  // truncated payload
  }
  CHECK_THROWS_AS(load_image(tmp.file("b.ppm")), Error);
}

TEST_CASE("dataset manifest round trip") {
  pwtest::TempDir tmp("ds");
  Dataset ds = synth_shapes(4, 2, 9);
  save_dataset(ds, tmp.str());
  Dataset back = load_dataset(tmp.str());
  REQUIRE(back.items.size() == ds.items.size());
  CHECK(back.numClasses == ds.numClasses);
  for (size_t i = 0; i < ds.items.size(); ++i) {
    CHECK(back.items[i].second == ds.items[i].second);
    for (size_t j = 0; j < ds.items[i].first.pixels.size(); ++j)
      CHECK(std::abs(back.items[i].first.pixels[j] - ds.items[i].first.pixels[j]) <= 1.0f / 510.0f);
  }
}

TEST_CASE("split is disjoint, seeded and exhaustive") {
  Dataset ds = synth_shapes(4, 5, 2);
  auto [a, b] = split_dataset(ds, 0.25, 42);
  CHECK(a.items.size() == 5);
  CHECK(a.items.size() + b.items.size() == ds.items.size());
  auto [a2, b2] = split_dataset(ds, 0.25, 42);
  REQUIRE(a2.items.size() == a.items.size());
  for (size_t i = 0; i < a.items.size(); ++i) CHECK(a.items[i].first.pixels == a2.items[i].first.pixels);
  // disjointness via pixel identity
  std::set<std::vector<float>> seen;
  for (const auto& [img, label] : a.items) seen.insert(img.pixels);
  for (const auto& [img, label] : b.items) CHECK(seen.count(img.pixels) == 0);
}

TEST_CASE("bilinear resize endpoints and constants") {
  Image img(2, 2, 1);
  img.at(0, 0, 0) = 1.0f;
  img.at(0, 1, 0) = 0.0f;
  img.at(1, 0, 0) = 0.0f;
  img.at(1, 1, 0) = 1.0f;
  Image up = resize_bilinear(img, 3, 3);
  CHECK(up.at(0, 0, 0) == 1.0f);
  CHECK(up.at(2, 2, 0) == 1.0f);
  CHECK(up.at(1, 1, 0) == doctest::Approx(0.5));

  Image flat(3, 5, 3, 0.25f);
  Image up2 = resize_bilinear(flat, 7, 9);
  for (float p : up2.pixels) CHECK(p == doctest::Approx(0.25));
}
