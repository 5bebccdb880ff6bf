#ifndef PW_DATA_HPP
#define PW_DATA_HPP

#include <string>
#include <utility>
#include <vector>

#include "common.hpp"

namespace pw {

// H x W x C pixel grid, row-major, channel-interleaved, values in [0,1].
struct Image {
  int height = 0;
  int width = 0;
  int channels = 0;
  std::vector<float> pixels;

  Image() = default;
  Image(int h, int w, int c, float fill = 0.0f)
      : height(h), width(w), channels(c),
        pixels(static_cast<size_t>(h) * w * c, fill) {}

  float& at(int r, int c, int ch) {
    return pixels[(static_cast<size_t>(r) * width + c) * channels + ch];
  }
  float at(int r, int c, int ch) const {
    return pixels[(static_cast<size_t>(r) * width + c) * channels + ch];
  }
  size_t size() const { return pixels.size(); }
};

struct Dataset {
  std::vector<std::pair<Image, int>> items;
  int numClasses = 0;

  size_t size() const { return items.size(); }
};

// --- Synthetic shapes ------------------------------------------------------

inline constexpr int kInputSide = 32;
inline constexpr int kShapeKinds = 4;   // circle, square, triangle, cross
inline constexpr int kColorKinds = 3;   // red, green, blue
inline constexpr int kMaxClasses = kShapeKinds * kColorKinds;

// class = shapeIndex * 3 + colorIndex, truncated to numClasses
Dataset synth_shapes(int numClasses, int perClass, uint64_t seed);

// Ground-truth raster of the shape drawn by synth_shapes for item `index`
// (same seeding scheme); true where the shape's pixels are.
std::vector<uint8_t> synth_shape_raster(int numClasses, int perClass, uint64_t seed, int index);

// --- Image I/O (binary PPM P6 / PGM P5, 8-bit) ------------------------------

Image load_image(const std::string& path);
void save_image(const Image& img, const std::string& path);

// --- Dataset I/O ------------------------------------------------------------

// Writes one PPM per item plus `manifest.txt` lines `relative/path.ppm,<label>`.
void save_dataset(const Dataset& ds, const std::string& dir);
// `path` is either a manifest file or a directory containing manifest.txt.
Dataset load_dataset(const std::string& path);

// --- Utilities ---------------------------------------------------------------

// Disjoint seeded split: first gets round(fraction * n) items.
std::pair<Dataset, Dataset> split_dataset(const Dataset& ds, double fraction, uint64_t seed);
Dataset subsample_dataset(const Dataset& ds, int n, uint64_t seed);

// Bilinear resize with corner alignment, per channel.
Image resize_bilinear(const Image& img, int outH, int outW);
Image crop(const Image& img, int r0, int c0, int r1, int c1);  // inclusive bounds

}  // namespace pw

#endif
