#ifndef PW_TEST_REF_NET_HPP
#define PW_TEST_REF_NET_HPP

// Independent double-precision scalar-loop re-implementation of the forward
// pass and the fuzzed losses. Used as the finite-difference / golden oracle;
// shares nothing with the library's float path beyond the weight values.

#include <algorithm>
#include <cmath>
#include <vector>

#include "core/nn.hpp"

namespace pwtest {

struct RefAct {
  int h = 0, w = 0, c = 0;
  std::vector<double> v;

  double& at(int r, int col, int ch) { return v[(static_cast<size_t>(r) * w + col) * c + ch]; }
  double at(int r, int col, int ch) const { return v[(static_cast<size_t>(r) * w + col) * c + ch]; }
};

inline RefAct ref_layer(const pw::nn::Layer& l, const RefAct& in) {
  using pw::nn::LayerKind;
  RefAct out;
  if (l.kind == LayerKind::Conv2d) {
    out.h = in.h + 2 * l.pad - l.kh + 1;
    out.w = in.w + 2 * l.pad - l.kw + 1;
    out.c = l.cout;
    out.v.assign(static_cast<size_t>(out.h) * out.w * out.c, 0.0);
    for (int k = 0; k < l.cout; ++k)
      for (int r = 0; r < out.h; ++r)
        for (int col = 0; col < out.w; ++col) {
          double acc = l.biases[static_cast<size_t>(k)];
          for (int dy = 0; dy < l.kh; ++dy)
            for (int dx = 0; dx < l.kw; ++dx)
              for (int ch = 0; ch < l.cin; ++ch) {
                int ir = r + dy - l.pad;
                int ic = col + dx - l.pad;
                if (ir < 0 || ir >= in.h || ic < 0 || ic >= in.w) continue;
                double wv = l.weights[((static_cast<size_t>(k) * l.kh + dy) * l.kw + dx) * l.cin + ch];
                acc += wv * in.at(ir, ic, ch);
              }
          out.at(r, col, k) = acc;
        }
  } else if (l.kind == LayerKind::Relu) {
    out = in;
    for (double& x : out.v) x = std::max(x, 0.0);
  } else if (l.kind == LayerKind::MaxPool2) {
    out.h = in.h / 2;
    out.w = in.w / 2;
    out.c = in.c;
    out.v.assign(static_cast<size_t>(out.h) * out.w * out.c, 0.0);
    for (int r = 0; r < out.h; ++r)
      for (int col = 0; col < out.w; ++col)
        for (int ch = 0; ch < in.c; ++ch)
          out.at(r, col, ch) = std::max(std::max(in.at(2 * r, 2 * col, ch), in.at(2 * r, 2 * col + 1, ch)),
                                        std::max(in.at(2 * r + 1, 2 * col, ch), in.at(2 * r + 1, 2 * col + 1, ch)));
  } else {  // Dense
    out.h = 1;
    out.w = 1;
    out.c = l.outSize;
    out.v.assign(static_cast<size_t>(l.outSize), 0.0);
    for (int o = 0; o < l.outSize; ++o) {
      double acc = l.biases[static_cast<size_t>(o)];
      for (int i = 0; i < l.inSize; ++i)
        acc += static_cast<double>(l.weights[static_cast<size_t>(o) * l.inSize + i]) * in.v[static_cast<size_t>(i)];
      out.v[static_cast<size_t>(o)] = acc;
    }
  }
  return out;
}

inline RefAct ref_from_image(const pw::Image& img) {
  RefAct a;
  a.h = img.height;
  a.w = img.width;
  a.c = img.channels;
  a.v.assign(img.pixels.begin(), img.pixels.end());
  return a;
}

// logits from layer `start` onward, starting at activation `act`
inline std::vector<double> ref_forward_from(const pw::nn::Model& m, int start, RefAct act) {
  for (size_t i = static_cast<size_t>(start); i < m.layers.size(); ++i) act = ref_layer(m.layers[i], act);
  return act.v;
}

inline std::vector<double> ref_logits(const pw::nn::Model& m, const pw::Image& img) {
  return ref_forward_from(m, 0, ref_from_image(img));
}

// feature maps (output of finalPoolIndex) in double
inline RefAct ref_feature_maps(const pw::nn::Model& m, const pw::Image& img) {
  RefAct act = ref_from_image(img);
  for (int i = 0; i <= m.finalPoolIndex; ++i) act = ref_layer(m.layers[static_cast<size_t>(i)], act);
  return act;
}

// d(logit_c)/dA by central finite differences over the post-pool layers
inline RefAct ref_grad_feature_maps_fd(const pw::nn::Model& m, const pw::Image& img, int classIndex,
                                       double eps) {
  RefAct A = ref_feature_maps(m, img);
  RefAct g = A;
  std::fill(g.v.begin(), g.v.end(), 0.0);
  for (size_t i = 0; i < A.v.size(); ++i) {
    RefAct plus = A, minus = A;
    plus.v[i] += eps;
    minus.v[i] -= eps;
    double up = ref_forward_from(m, m.finalPoolIndex + 1, plus)[static_cast<size_t>(classIndex)];
    double dn = ref_forward_from(m, m.finalPoolIndex + 1, minus)[static_cast<size_t>(classIndex)];
    g.v[i] = (up - dn) / (2.0 * eps);
  }
  return g;
}

inline std::vector<double> ref_softmax(const std::vector<double>& logits) {
  double mx = *std::max_element(logits.begin(), logits.end());
  std::vector<double> p(logits.size());
  double sum = 0.0;
  for (size_t i = 0; i < p.size(); ++i) {
    p[i] = std::exp(logits[i] - mx);
    sum += p[i];
  }
  for (double& x : p) x /= sum;
  return p;
}

// loss value in double, matching the library's loss definitions
inline double ref_loss(const pw::nn::Model& m, const pw::Image& img, const pw::nn::LossSpec& spec) {
  using pw::nn::LossKind;
  if (spec.kind == LossKind::NegativeLogit)
    return -ref_logits(m, img)[static_cast<size_t>(spec.classIndex)];
  if (spec.kind == LossKind::TargetCrossEntropy) {
    std::vector<double> p = ref_softmax(ref_logits(m, img));
    return -std::log(p[static_cast<size_t>(spec.classIndex)]);
  }
  if (spec.kind == LossKind::ConfidenceSum) {
    std::vector<double> p = ref_softmax(ref_logits(m, img));
    double mean = 1.0 / static_cast<double>(p.size());
    double var = 0.0;
    for (double x : p) var += (x - mean) * (x - mean);
    var /= static_cast<double>(p.size());
    return var + *std::max_element(p.begin(), p.end());
  }
  // grad-cam losses: alpha from the FD gradient of the post-pool layers
  RefAct A = ref_feature_maps(m, img);
  RefAct G = ref_grad_feature_maps_fd(m, img, spec.classIndex, 1e-4);
  std::vector<double> alpha(static_cast<size_t>(A.c), 0.0);
  for (int r = 0; r < A.h; ++r)
    for (int c = 0; c < A.w; ++c)
      for (int k = 0; k < A.c; ++k) alpha[static_cast<size_t>(k)] += G.at(r, c, k);
  for (double& a : alpha) a /= A.h * A.w;
  double loss = 0.0;
  for (int r = 0; r < A.h; ++r)
    for (int c = 0; c < A.w; ++c) {
      double pre = 0.0;
      for (int k = 0; k < A.c; ++k) pre += alpha[static_cast<size_t>(k)] * A.at(r, c, k);
      double L = std::max(pre, 0.0);
      size_t i = static_cast<size_t>(r) * A.w + c;
      if (spec.kind == LossKind::GradCamTargetDiff)
        loss += std::abs(L - static_cast<double>(spec.target.data[i]));
      else
        loss += (spec.fmMask.empty() ? 1.0 : static_cast<double>(spec.fmMask[i])) * L;
    }
  return loss;
}

}  // namespace pwtest

#endif
