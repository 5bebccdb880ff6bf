#include "saliency.hpp"

#include <algorithm>
#include <cmath>

namespace pw::saliency {

Heatmap grad_cam(const nn::Model& m, const nn::ForwardTrace& trace, int classIndex) {
  const nn::Tensor& A = trace.featureMaps(m);
  nn::Tensor G = nn::grad_wrt_feature_maps(m, trace, classIndex);
  const int fh = A.shape[0], fw = A.shape[1], fc = A.shape[2];
  const int Z = fh * fw;
  std::vector<double> alpha(static_cast<size_t>(fc), 0.0);
  for (int r = 0; r < fh; ++r)
    for (int c = 0; c < fw; ++c)
      for (int k = 0; k < fc; ++k) alpha[static_cast<size_t>(k)] += G.at(r, c, k);
  for (double& a : alpha) a /= Z;
  Heatmap out(fh, fw);
  for (int r = 0; r < fh; ++r)
    for (int c = 0; c < fw; ++c) {
      double acc = 0.0;
      for (int k = 0; k < fc; ++k) acc += alpha[static_cast<size_t>(k)] * A.at(r, c, k);
      out.at(r, c) = acc > 0.0 ? static_cast<float>(acc) : 0.0f;
    }
  return out;
}

Heatmap grad_cam(const nn::Model& m, const Image& img, int classIndex) {
  auto [pred, trace] = nn::forward(m, img);
  (void)pred;
  return grad_cam(m, trace, classIndex);
}

Heatmap upsample(const Heatmap& h, int outH, int outW, UpsampleMode mode) {
  if (outH < h.height || outW < h.width)
    fail(Err::InvalidArg, "upsample: target dims must be >= source dims");
  Heatmap out(outH, outW);
  double sr = outH == 1 ? 0.0 : static_cast<double>(h.height - 1) / (outH - 1);
  double sc = outW == 1 ? 0.0 : static_cast<double>(h.width - 1) / (outW - 1);
  for (int r = 0; r < outH; ++r) {
    double fr = r * sr;
    int r0 = static_cast<int>(fr);
    int r1 = std::min(r0 + 1, h.height - 1);
    double wr = fr - r0;
    for (int c = 0; c < outW; ++c) {
      double fc = c * sc;
      int c0 = static_cast<int>(fc);
      int c1 = std::min(c0 + 1, h.width - 1);
      double wc = fc - c0;
      if (mode == UpsampleMode::Nearest) {
        out.at(r, c) = h.at(wr < 0.5 ? r0 : r1, wc < 0.5 ? c0 : c1);
      } else {
        double top = (1.0 - wc) * h.at(r0, c0) + wc * h.at(r0, c1);
        double bot = (1.0 - wc) * h.at(r1, c0) + wc * h.at(r1, c1);
        out.at(r, c) = static_cast<float>((1.0 - wr) * top + wr * bot);
      }
    }
  }
  return out;
}

BinaryMask binarize(const Heatmap& h) {
  BinaryMask mask(h.height, h.width);
  double mx = 0.0;
  for (float v : h.values) mx = std::max(mx, static_cast<double>(v));
  if (mx == 0.0) return mask;  // degenerate all-zero heatmap -> empty mask
  double threshold = kBinarizeFraction * mx;
  for (size_t i = 0; i < h.values.size(); ++i)
    mask.bits[i] = static_cast<double>(h.values[i]) >= threshold ? 1 : 0;
  return mask;
}

BinaryMask mask_subtract(const BinaryMask& a, const BinaryMask& b) {
  if (a.height != b.height || a.width != b.width)
    fail(Err::ShapeMismatch, "mask_subtract: dims differ");
  BinaryMask out(a.height, a.width);
  for (size_t i = 0; i < a.bits.size(); ++i) out.bits[i] = (a.bits[i] && !b.bits[i]) ? 1 : 0;
  return out;
}

BinaryMask mask_union(const BinaryMask& a, const BinaryMask& b) {
  if (a.height != b.height || a.width != b.width)
    fail(Err::ShapeMismatch, "mask_union: dims differ");
  BinaryMask out(a.height, a.width);
  for (size_t i = 0; i < a.bits.size(); ++i) out.bits[i] = (a.bits[i] || b.bits[i]) ? 1 : 0;
  return out;
}

std::vector<uint8_t> mask_to_feature_grid(const BinaryMask& mask, int fmH, int fmW) {
  std::vector<uint8_t> grid(static_cast<size_t>(fmH) * fmW, 0);
  for (int r = 0; r < mask.height; ++r) {
    int fr = std::min(r * fmH / mask.height, fmH - 1);
    for (int c = 0; c < mask.width; ++c) {
      if (!mask.at(r, c)) continue;
      int fcol = std::min(c * fmW / mask.width, fmW - 1);
      grid[static_cast<size_t>(fr) * fmW + fcol] = 1;
    }
  }
  return grid;
}

void save_heatmap_pgm(const Heatmap& h, const std::string& path) {
  float mx = 0.0f;
  for (float v : h.values) mx = std::max(mx, v);
  Image img(h.height, h.width, 1);
  for (size_t i = 0; i < h.values.size(); ++i)
    img.pixels[i] = mx > 0.0f ? h.values[i] / mx : 0.0f;
  save_image(img, path);
}

void save_mask_pgm(const BinaryMask& m, const std::string& path) {
  Image img(m.height, m.width, 1);
  for (size_t i = 0; i < m.bits.size(); ++i) img.pixels[i] = m.bits[i] ? 1.0f : 0.0f;
  save_image(img, path);
}

}  // namespace pw::saliency
