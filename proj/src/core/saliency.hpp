#ifndef PW_SALIENCY_HPP
#define PW_SALIENCY_HPP

#include <string>
#include <vector>

#include "nn.hpp"

namespace pw::saliency {

// Nonnegative h x w grid; coarse (feature-map resolution) or upsampled.
struct Heatmap {
  int height = 0;
  int width = 0;
  std::vector<float> values;

  Heatmap() = default;
  Heatmap(int h, int w) : height(h), width(w), values(static_cast<size_t>(h) * w, 0.0f) {}
  float& at(int r, int c) { return values[static_cast<size_t>(r) * width + c]; }
  float at(int r, int c) const { return values[static_cast<size_t>(r) * width + c]; }
};

struct BinaryMask {
  int height = 0;
  int width = 0;
  std::vector<uint8_t> bits;

  BinaryMask() = default;
  BinaryMask(int h, int w) : height(h), width(w), bits(static_cast<size_t>(h) * w, 0) {}
  bool at(int r, int c) const { return bits[static_cast<size_t>(r) * width + c] != 0; }
  void set(int r, int c, bool v) { bits[static_cast<size_t>(r) * width + c] = v ? 1 : 0; }
  size_t count() const {
    size_t n = 0;
    for (uint8_t b : bits) n += b;
    return n;
  }
};

// L^c = ReLU(sum_k alpha_k A^k) with alpha_k the spatial mean of
// d(logit_c)/dA^k; output at feature-map resolution.
Heatmap grad_cam(const nn::Model& m, const Image& img, int classIndex);
Heatmap grad_cam(const nn::Model& m, const nn::ForwardTrace& trace, int classIndex);

enum class UpsampleMode { Bilinear, Nearest };

// Corner-aligned interpolation to (outH, outW) >= source dims.
Heatmap upsample(const Heatmap& h, int outH, int outW, UpsampleMode mode = UpsampleMode::Bilinear);

// true where value >= 0.15 * max; all-false when max == 0.
BinaryMask binarize(const Heatmap& h);

inline constexpr double kBinarizeFraction = 0.15;

// a AND NOT b
BinaryMask mask_subtract(const BinaryMask& a, const BinaryMask& b);
BinaryMask mask_union(const BinaryMask& a, const BinaryMask& b);

// Downsample an input-resolution mask to the feature-map grid: a cell is set
// when any covered pixel is set.
std::vector<uint8_t> mask_to_feature_grid(const BinaryMask& mask, int fmH, int fmW);

// Heatmap/mask debug dumps, scaled so max maps to 255.
void save_heatmap_pgm(const Heatmap& h, const std::string& path);
void save_mask_pgm(const BinaryMask& m, const std::string& path);

}  // namespace pw::saliency

#endif
