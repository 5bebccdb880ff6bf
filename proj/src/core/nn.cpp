#include "nn.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>

namespace pw::nn {

namespace {

Tensor image_to_tensor(const Image& img) {
  Tensor t({img.height, img.width, img.channels});
  t.data.assign(img.pixels.begin(), img.pixels.end());
  return t;
}

std::vector<int> output_shape(const Layer& l, const std::vector<int>& in) {
  switch (l.kind) {
    case LayerKind::Conv2d: {
      if (in.size() != 3 || in[2] != l.cin) fail(Err::ShapeMismatch, "conv2d: bad input shape");
      int oh = in[0] + 2 * l.pad - l.kh + 1;
      int ow = in[1] + 2 * l.pad - l.kw + 1;
      if (oh <= 0 || ow <= 0) fail(Err::ShapeMismatch, "conv2d: kernel larger than input");
      return {oh, ow, l.cout};
    }
    case LayerKind::Relu:
      return in;
    case LayerKind::MaxPool2: {
      if (in.size() != 3 || in[0] % 2 != 0 || in[1] % 2 != 0)
        fail(Err::ShapeMismatch, "maxpool2: spatial dims must be even");
      return {in[0] / 2, in[1] / 2, in[2]};
    }
    case LayerKind::Dense: {
      size_t n = 1;
      for (int d : in) n *= static_cast<size_t>(d);
      if (n != static_cast<size_t>(l.inSize)) fail(Err::ShapeMismatch, "dense: bad input size");
      return {l.outSize};
    }
    default:
      fail(Err::InvalidArg, "output_shape: bad layer kind");
  }
}

void conv2d_forward(const Layer& l, const Tensor& in, Tensor& out) {
  const int H = in.shape[0], W = in.shape[1], C = l.cin;
  const int OH = out.shape[0], OW = out.shape[1];
  const float* wts = l.weights.data();
  const size_t filterSize = static_cast<size_t>(l.kh) * l.kw * C;
  for (int oh = 0; oh < OH; ++oh) {
    for (int ow = 0; ow < OW; ++ow) {
      float* dst = &out.data[(static_cast<size_t>(oh) * OW + ow) * l.cout];
      for (int k = 0; k < l.cout; ++k) {
        const float* wk = wts + static_cast<size_t>(k) * filterSize;
        float acc = l.biases[static_cast<size_t>(k)];
        for (int dy = 0; dy < l.kh; ++dy) {
          int ih = oh + dy - l.pad;
          if (ih < 0 || ih >= H) continue;
          for (int dx = 0; dx < l.kw; ++dx) {
            int iw = ow + dx - l.pad;
            if (iw < 0 || iw >= W) continue;
            const float* src = &in.data[(static_cast<size_t>(ih) * W + iw) * C];
            const float* wp = wk + (static_cast<size_t>(dy) * l.kw + dx) * C;
            for (int c = 0; c < C; ++c) acc += src[c] * wp[c];
          }
        }
        dst[k] = acc;
      }
    }
  }
}

// dIn += backprop of dOut; dW/dB accumulated when given
void conv2d_backward(const Layer& l, const Tensor& in, const Tensor& dOut, Tensor* dIn,
                     std::vector<float>* dW, std::vector<float>* dB) {
  const int H = in.shape[0], W = in.shape[1], C = l.cin;
  const int OH = dOut.shape[0], OW = dOut.shape[1];
  const size_t filterSize = static_cast<size_t>(l.kh) * l.kw * C;
  for (int oh = 0; oh < OH; ++oh) {
    for (int ow = 0; ow < OW; ++ow) {
      const float* g = &dOut.data[(static_cast<size_t>(oh) * OW + ow) * l.cout];
      for (int k = 0; k < l.cout; ++k) {
        float gk = g[k];
        if (gk == 0.0f) continue;
        if (dB) (*dB)[static_cast<size_t>(k)] += gk;
        const float* wk = l.weights.data() + static_cast<size_t>(k) * filterSize;
        float* dwk = dW ? dW->data() + static_cast<size_t>(k) * filterSize : nullptr;
        for (int dy = 0; dy < l.kh; ++dy) {
          int ih = oh + dy - l.pad;
          if (ih < 0 || ih >= H) continue;
          for (int dx = 0; dx < l.kw; ++dx) {
            int iw = ow + dx - l.pad;
            if (iw < 0 || iw >= W) continue;
            const float* src = &in.data[(static_cast<size_t>(ih) * W + iw) * C];
            size_t woff = (static_cast<size_t>(dy) * l.kw + dx) * C;
            if (dIn) {
              float* dst = &dIn->data[(static_cast<size_t>(ih) * W + iw) * C];
              for (int c = 0; c < C; ++c) dst[c] += gk * wk[woff + c];
            }
            if (dwk)
              for (int c = 0; c < C; ++c) dwk[woff + c] += gk * src[c];
          }
        }
      }
    }
  }
}

void maxpool2_forward(const Tensor& in, Tensor& out) {
  const int W = in.shape[1], C = in.shape[2];
  const int OH = out.shape[0], OW = out.shape[1];
  for (int oh = 0; oh < OH; ++oh) {
    for (int ow = 0; ow < OW; ++ow) {
      for (int c = 0; c < C; ++c) {
        float best = in.at(2 * oh, 2 * ow, c);
        best = std::max(best, in.at(2 * oh, 2 * ow + 1, c));
        best = std::max(best, in.at(2 * oh + 1, 2 * ow, c));
        best = std::max(best, in.at(2 * oh + 1, 2 * ow + 1, c));
        out.data[(static_cast<size_t>(oh) * OW + ow) * C + c] = best;
      }
    }
  }
  (void)W;
}

// Ties route to the first maximum in row-then-column scan order.
void maxpool2_backward(const Tensor& in, const Tensor& dOut, Tensor& dIn) {
  const int C = in.shape[2];
  const int OH = dOut.shape[0], OW = dOut.shape[1];
  for (int oh = 0; oh < OH; ++oh) {
    for (int ow = 0; ow < OW; ++ow) {
      for (int c = 0; c < C; ++c) {
        int br = 2 * oh, bc = 2 * ow;
        float best = in.at(br, bc, c);
        for (int dy = 0; dy < 2; ++dy)
          for (int dx = 0; dx < 2; ++dx) {
            float v = in.at(2 * oh + dy, 2 * ow + dx, c);
            if (v > best) {
              best = v;
              br = 2 * oh + dy;
              bc = 2 * ow + dx;
            }
          }
        dIn.at(br, bc, c) += dOut.data[(static_cast<size_t>(oh) * OW + ow) * C + c];
      }
    }
  }
}

void dense_forward(const Layer& l, const Tensor& in, Tensor& out) {
  for (int o = 0; o < l.outSize; ++o) {
    const float* w = &l.weights[static_cast<size_t>(o) * l.inSize];
    float acc = l.biases[static_cast<size_t>(o)];
    for (int i = 0; i < l.inSize; ++i) acc += w[i] * in.data[static_cast<size_t>(i)];
    out.data[static_cast<size_t>(o)] = acc;
  }
}

void dense_backward(const Layer& l, const Tensor& in, const Tensor& dOut, Tensor* dIn,
                    std::vector<float>* dW, std::vector<float>* dB) {
  for (int o = 0; o < l.outSize; ++o) {
    float g = dOut.data[static_cast<size_t>(o)];
    if (g == 0.0f) continue;
    if (dB) (*dB)[static_cast<size_t>(o)] += g;
    const float* w = &l.weights[static_cast<size_t>(o) * l.inSize];
    float* dw = dW ? &(*dW)[static_cast<size_t>(o) * l.inSize] : nullptr;
    for (int i = 0; i < l.inSize; ++i) {
      if (dIn) dIn->data[static_cast<size_t>(i)] += g * w[i];
      if (dw) dw[i] += g * in.data[static_cast<size_t>(i)];
    }
  }
}

struct ParamGrads {
  std::vector<std::vector<float>> weights;
  std::vector<std::vector<float>> biases;

  explicit ParamGrads(const Model& m) {
    weights.resize(m.layers.size());
    biases.resize(m.layers.size());
    for (size_t i = 0; i < m.layers.size(); ++i) {
      weights[i].assign(m.layers[i].weights.size(), 0.0f);
      biases[i].assign(m.layers[i].biases.size(), 0.0f);
    }
  }
};

// grad is w.r.t. the OUTPUT of layer `from`; backprop through layers
// from..to inclusive; returns grad w.r.t. the INPUT of layer `to`.
Tensor backward_range(const Model& m, const ForwardTrace& trace, Tensor grad, int from, int to,
                      ParamGrads* pg) {
  for (int li = from; li >= to; --li) {
    const Layer& l = m.layers[static_cast<size_t>(li)];
    const Tensor& in = trace.acts[static_cast<size_t>(li)];
    Tensor dIn(in.shape);
    switch (l.kind) {
      case LayerKind::Conv2d:
        conv2d_backward(l, in, grad, &dIn,
                        pg ? &pg->weights[static_cast<size_t>(li)] : nullptr,
                        pg ? &pg->biases[static_cast<size_t>(li)] : nullptr);
        break;
      case LayerKind::Relu:
        for (size_t i = 0; i < in.size(); ++i)
          dIn.data[i] = in.data[i] > 0.0f ? grad.data[i] : 0.0f;
        break;
      case LayerKind::MaxPool2:
        maxpool2_backward(in, grad, dIn);
        break;
      case LayerKind::Dense:
        dense_backward(l, in, grad, &dIn,
                       pg ? &pg->weights[static_cast<size_t>(li)] : nullptr,
                       pg ? &pg->biases[static_cast<size_t>(li)] : nullptr);
        break;
      default:
        fail(Err::InvalidArg, "backward: bad layer kind");
    }
    grad = std::move(dIn);
  }
  return grad;
}

Prediction prediction_from_logits(const Tensor& logits) {
  Prediction p;
  p.logits.assign(logits.data.begin(), logits.data.end());
  p.classIndex = 0;
  for (size_t i = 1; i < p.logits.size(); ++i)
    if (p.logits[i] > p.logits[static_cast<size_t>(p.classIndex)]) p.classIndex = static_cast<int>(i);
  p.confidence = softmax(p.logits)[static_cast<size_t>(p.classIndex)];
  return p;
}

void check_finite(const Tensor& t, const char* where) {
  for (float v : t.data)
    if (!std::isfinite(v)) fail(Err::InvalidArg, std::string("non-finite value in ") + where);
}

}  // namespace

std::vector<double> softmax(const std::vector<float>& logits) {
  double mx = -1e300;
  for (float v : logits) mx = std::max(mx, static_cast<double>(v));
  std::vector<double> p(logits.size());
  double sum = 0.0;
  for (size_t i = 0; i < logits.size(); ++i) {
    p[i] = std::exp(static_cast<double>(logits[i]) - mx);
    sum += p[i];
  }
  for (double& v : p) v /= sum;
  return p;
}

Layer make_conv2d(int kh, int kw, int cin, int cout, int pad) {
  Layer l;
  l.kind = LayerKind::Conv2d;
  l.kh = kh;
  l.kw = kw;
  l.cin = cin;
  l.cout = cout;
  l.pad = pad;
  l.weights.assign(static_cast<size_t>(kh) * kw * cin * cout, 0.0f);
  l.biases.assign(static_cast<size_t>(cout), 0.0f);
  return l;
}

Layer make_relu() {
  Layer l;
  l.kind = LayerKind::Relu;
  return l;
}

Layer make_maxpool2() {
  Layer l;
  l.kind = LayerKind::MaxPool2;
  return l;
}

Layer make_dense(int inSize, int outSize) {
  Layer l;
  l.kind = LayerKind::Dense;
  l.inSize = inSize;
  l.outSize = outSize;
  l.weights.assign(static_cast<size_t>(inSize) * outSize, 0.0f);
  l.biases.assign(static_cast<size_t>(outSize), 0.0f);
  return l;
}

Model assemble(int h, int w, int c, int numClasses, std::vector<Layer> layers) {
  Model m;
  m.inputH = h;
  m.inputW = w;
  m.inputC = c;
  m.numClasses = numClasses;
  m.layers = std::move(layers);
  std::vector<int> shape = {h, w, c};
  for (size_t i = 0; i < m.layers.size(); ++i) {
    shape = output_shape(m.layers[i], shape);
    if (m.layers[i].kind == LayerKind::MaxPool2) m.finalPoolIndex = static_cast<int>(i);
  }
  if (shape.size() != 1 || shape[0] != numClasses)
    fail(Err::ShapeMismatch, "assemble: layers do not end in a logits vector of numClasses");
  return m;
}

void init_glorot(Model& m, uint64_t seed) {
  Rng rng(seed);
  for (Layer& l : m.layers) {
    int fanIn = 0, fanOut = 0;
    if (l.kind == LayerKind::Conv2d) {
      fanIn = l.kh * l.kw * l.cin;
      fanOut = l.kh * l.kw * l.cout;
    } else if (l.kind == LayerKind::Dense) {
      fanIn = l.inSize;
      fanOut = l.outSize;
    } else {
      continue;
    }
    float limit = std::sqrt(6.0f / static_cast<float>(fanIn + fanOut));
    for (float& w : l.weights) w = rng.funiform(-limit, limit);
    std::fill(l.biases.begin(), l.biases.end(), 0.0f);
  }
}

Model reference_model(int numClasses, uint64_t seed) {
  std::vector<Layer> layers;
  layers.push_back(make_conv2d(3, 3, 3, 8, 1));
  layers.push_back(make_relu());
  layers.push_back(make_maxpool2());
  layers.push_back(make_conv2d(3, 3, 8, 16, 1));
  layers.push_back(make_relu());
  layers.push_back(make_maxpool2());
  layers.push_back(make_dense(8 * 8 * 16, numClasses));
  Model m = assemble(kInputSide, kInputSide, 3, numClasses, std::move(layers));
  init_glorot(m, seed);
  return m;
}

std::pair<Prediction, ForwardTrace> forward(const Model& m, const Image& img) {
  if (img.height != m.inputH || img.width != m.inputW || img.channels != m.inputC)
    fail(Err::ShapeMismatch, "forward: image dims do not match model input");
  ForwardTrace trace;
  trace.acts.reserve(m.layers.size() + 1);
  trace.acts.push_back(image_to_tensor(img));
  std::vector<int> shape = {m.inputH, m.inputW, m.inputC};
  for (const Layer& l : m.layers) {
    shape = output_shape(l, shape);
    Tensor out(shape);
    const Tensor& in = trace.acts.back();
    switch (l.kind) {
      case LayerKind::Conv2d:
        conv2d_forward(l, in, out);
        break;
      case LayerKind::Relu:
        for (size_t i = 0; i < in.size(); ++i) out.data[i] = in.data[i] > 0.0f ? in.data[i] : 0.0f;
        break;
      case LayerKind::MaxPool2:
        maxpool2_forward(in, out);
        break;
      case LayerKind::Dense:
        dense_forward(l, in, out);
        break;
      default:
        fail(Err::InvalidArg, "forward: bad layer kind");
    }
    trace.acts.push_back(std::move(out));
  }
  check_finite(trace.acts.back(), "logits");
  return {prediction_from_logits(trace.acts.back()), std::move(trace)};
}

Prediction predict(const Model& m, const Image& img) { return forward(m, img).first; }

Tensor grad_wrt_feature_maps(const Model& m, const ForwardTrace& trace, int classIndex) {
  if (classIndex < 0 || classIndex >= m.numClasses) fail(Err::InvalidClass, "bad class index");
  if (m.finalPoolIndex < 0) fail(Err::InvalidArg, "model has no pooling layer");
  Tensor dLogits(trace.acts.back().shape);
  dLogits.data[static_cast<size_t>(classIndex)] = 1.0f;
  return backward_range(m, trace, std::move(dLogits), static_cast<int>(m.layers.size()) - 1,
                        m.finalPoolIndex + 1, nullptr);
}

namespace {

// Shared by input_gradient and loss_value. Computes the loss and, when
// wantGrad, the gradient at the injection point (logits or feature maps).
struct LossEval {
  double value = 0.0;
  bool atFeatureMaps = false;
  Tensor grad;
};

LossEval eval_loss(const Model& m, const ForwardTrace& trace, const LossSpec& loss, bool wantGrad) {
  LossEval ev;
  const Tensor& logits = trace.acts.back();
  switch (loss.kind) {
    case LossKind::NegativeLogit: {
      if (loss.classIndex < 0 || loss.classIndex >= m.numClasses)
        fail(Err::InvalidClass, "loss: bad class index");
      ev.value = -static_cast<double>(logits.data[static_cast<size_t>(loss.classIndex)]);
      if (wantGrad) {
        ev.grad = Tensor(logits.shape);
        ev.grad.data[static_cast<size_t>(loss.classIndex)] = -1.0f;
      }
      return ev;
    }
    case LossKind::TargetCrossEntropy: {
      if (loss.classIndex < 0 || loss.classIndex >= m.numClasses)
        fail(Err::InvalidClass, "loss: bad class index");
      std::vector<float> lf(logits.data.begin(), logits.data.end());
      std::vector<double> p = softmax(lf);
      double pt = std::max(p[static_cast<size_t>(loss.classIndex)], 1e-300);
      ev.value = -std::log(pt);
      if (wantGrad) {
        ev.grad = Tensor(logits.shape);
        for (size_t i = 0; i < p.size(); ++i)
          ev.grad.data[i] =
              static_cast<float>(p[i] - (static_cast<int>(i) == loss.classIndex ? 1.0 : 0.0));
      }
      return ev;
    }
    case LossKind::ConfidenceSum: {
      std::vector<float> lf(logits.data.begin(), logits.data.end());
      std::vector<double> p = softmax(lf);
      size_t n = p.size();
      size_t top = 0;
      for (size_t i = 1; i < n; ++i)
        if (p[i] > p[top]) top = i;
      double var = 0.0;
      double mean = 1.0 / static_cast<double>(n);
      for (double v : p) var += (v - mean) * (v - mean);
      var /= static_cast<double>(n);
      ev.value = var + p[top];
      if (wantGrad) {
        // dLoss/dp, then through the softmax Jacobian
        std::vector<double> dp(n);
        for (size_t i = 0; i < n; ++i) dp[i] = 2.0 * (p[i] - mean) / static_cast<double>(n);
        dp[top] += 1.0;
        double dot = 0.0;
        for (size_t i = 0; i < n; ++i) dot += p[i] * dp[i];
        ev.grad = Tensor(logits.shape);
        for (size_t i = 0; i < n; ++i)
          ev.grad.data[i] = static_cast<float>(p[i] * (dp[i] - dot));
      }
      return ev;
    }
    case LossKind::GradCamTargetDiff:
    case LossKind::GradCamSum: {
      if (m.finalPoolIndex < 0) fail(Err::InvalidArg, "loss: model has no pooling layer");
      const Tensor& A = trace.featureMaps(m);
      Tensor G = grad_wrt_feature_maps(m, trace, loss.classIndex);
      const int fh = A.shape[0], fw = A.shape[1], fc = A.shape[2];
      const int Z = fh * fw;
      std::vector<double> alpha(static_cast<size_t>(fc), 0.0);
      for (int r = 0; r < fh; ++r)
        for (int c = 0; c < fw; ++c)
          for (int k = 0; k < fc; ++k) alpha[static_cast<size_t>(k)] += G.at(r, c, k);
      for (double& a : alpha) a /= Z;
      // pre-ReLU heatmap
      std::vector<double> pre(static_cast<size_t>(Z), 0.0);
      for (int r = 0; r < fh; ++r)
        for (int c = 0; c < fw; ++c) {
          double acc = 0.0;
          for (int k = 0; k < fc; ++k) acc += alpha[static_cast<size_t>(k)] * A.at(r, c, k);
          pre[static_cast<size_t>(r) * fw + c] = acc;
        }
      std::vector<double> dHeat(static_cast<size_t>(Z), 0.0);
      if (loss.kind == LossKind::GradCamTargetDiff) {
        if (static_cast<int>(loss.target.size()) != Z)
          fail(Err::ShapeMismatch, "loss: target heatmap must be at feature-map resolution");
        for (int i = 0; i < Z; ++i) {
          double L = std::max(pre[static_cast<size_t>(i)], 0.0);
          double diff = L - static_cast<double>(loss.target.data[static_cast<size_t>(i)]);
          ev.value += std::abs(diff);
          dHeat[static_cast<size_t>(i)] = diff > 0.0 ? 1.0 : (diff < 0.0 ? -1.0 : 0.0);
        }
      } else {
        if (!loss.fmMask.empty() && static_cast<int>(loss.fmMask.size()) != Z)
          fail(Err::ShapeMismatch, "loss: feature-map mask size mismatch");
        for (int i = 0; i < Z; ++i) {
          double w = loss.fmMask.empty() ? 1.0 : static_cast<double>(loss.fmMask[static_cast<size_t>(i)]);
          ev.value += w * std::max(pre[static_cast<size_t>(i)], 0.0);
          dHeat[static_cast<size_t>(i)] = w;
        }
      }
      if (wantGrad) {
        ev.atFeatureMaps = true;
        ev.grad = Tensor(A.shape);
        for (int r = 0; r < fh; ++r)
          for (int c = 0; c < fw; ++c) {
            size_t i = static_cast<size_t>(r) * fw + c;
            if (pre[i] <= 0.0 || dHeat[i] == 0.0) continue;
            for (int k = 0; k < fc; ++k)
              ev.grad.at(r, c, k) = static_cast<float>(dHeat[i] * alpha[static_cast<size_t>(k)]);
          }
      }
      return ev;
    }
  }
  fail(Err::UnsupportedLoss, "unsupported loss kind");
}

}  // namespace

Image input_gradient(const Model& m, const Image& img, const LossSpec& loss, double* lossValue) {
  auto [pred, trace] = forward(m, img);
  (void)pred;
  LossEval ev = eval_loss(m, trace, loss, true);
  if (lossValue) *lossValue = ev.value;
  int from = ev.atFeatureMaps ? m.finalPoolIndex : static_cast<int>(m.layers.size()) - 1;
  Tensor g = backward_range(m, trace, std::move(ev.grad), from, 0, nullptr);
  check_finite(g, "input gradient");
  Image out(img.height, img.width, img.channels);
  out.pixels.assign(g.data.begin(), g.data.end());
  return out;
}

double loss_value(const Model& m, const Image& img, const LossSpec& loss) {
  auto [pred, trace] = forward(m, img);
  (void)pred;
  return eval_loss(m, trace, loss, false).value;
}

TrainConfig reference_train_config() {
  TrainConfig c;
  c.maxEpochs = 40;
  c.learningRate = 0.05;
  c.batchSize = 32;
  c.holdoutFraction = 0.1;
  c.targetAccuracy = 0.93;
  return c;
}

Model train(const TrainConfig& config, const Dataset& dataset, uint64_t seed) {
  if (dataset.items.empty()) fail(Err::InvalidArg, "train: empty dataset");
  for (const auto& [img, label] : dataset.items)
    if (label < 0 || label >= dataset.numClasses) fail(Err::InvalidArg, "train: label out of range");
  auto [holdout, trainSet] = split_dataset(dataset, config.holdoutFraction, seed ^ 0x5EEDF00DULL);
  if (trainSet.items.empty()) trainSet = dataset;

  Model m = reference_model(dataset.numClasses, seed);
  Rng rng(seed + 1);
  std::vector<int> order(trainSet.items.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);

  ParamGrads grads(m);
  ParamGrads velocity(m);
  const float mu = static_cast<float>(config.momentum);
  for (int epoch = 0; epoch < config.maxEpochs; ++epoch) {
    rng.shuffle(order);
    for (size_t start = 0; start < order.size(); start += static_cast<size_t>(config.batchSize)) {
      size_t end = std::min(order.size(), start + static_cast<size_t>(config.batchSize));
      for (auto& w : grads.weights) std::fill(w.begin(), w.end(), 0.0f);
      for (auto& b : grads.biases) std::fill(b.begin(), b.end(), 0.0f);
      for (size_t ix = start; ix < end; ++ix) {
        const auto& [img, label] = trainSet.items[static_cast<size_t>(order[ix])];
        auto [pred, trace] = forward(m, img);
        std::vector<double> p = softmax(pred.logits);
        Tensor dLogits(trace.acts.back().shape);
        for (size_t i = 0; i < p.size(); ++i)
          dLogits.data[i] = static_cast<float>(p[i] - (static_cast<int>(i) == label ? 1.0 : 0.0));
        backward_range(m, trace, std::move(dLogits), static_cast<int>(m.layers.size()) - 1, 0, &grads);
      }
      float scale = static_cast<float>(config.learningRate / static_cast<double>(end - start));
      for (size_t li = 0; li < m.layers.size(); ++li) {
        Layer& l = m.layers[li];
        for (size_t i = 0; i < l.weights.size(); ++i) {
          float& v = velocity.weights[li][i];
          v = mu * v - scale * grads.weights[li][i];
          l.weights[i] += v;
        }
        for (size_t i = 0; i < l.biases.size(); ++i) {
          float& v = velocity.biases[li][i];
          v = mu * v - scale * grads.biases[li][i];
          l.biases[i] += v;
        }
      }
    }
    if (config.targetAccuracy > 0.0 && !holdout.items.empty()) {
      if (model_accuracy(m, holdout) >= config.targetAccuracy) return m;
    }
  }
  if (config.targetAccuracy > 0.0 && !holdout.items.empty() &&
      model_accuracy(m, holdout) < config.targetAccuracy)
    fail(Err::DidNotConverge, "train: held-out accuracy below target after max epochs");
  return m;
}

double model_accuracy(const Model& m, const Dataset& ds, int jobs) {
  if (ds.items.empty()) return 0.0;
  std::vector<uint8_t> hit(ds.items.size(), 0);
  parallel_for(static_cast<int>(ds.items.size()), jobs, [&](int i) {
    const auto& [img, label] = ds.items[static_cast<size_t>(i)];
    hit[static_cast<size_t>(i)] = predict(m, img).classIndex == label ? 1 : 0;
  });
  size_t correct = 0;
  for (uint8_t h : hit) correct += h;
  return static_cast<double>(correct) / static_cast<double>(ds.items.size());
}

// --- model file ---------------------------------------------------------------

namespace {

void put_u32(std::ostream& out, uint32_t v) {
  unsigned char b[4] = {static_cast<unsigned char>(v & 0xFF),
                        static_cast<unsigned char>((v >> 8) & 0xFF),
                        static_cast<unsigned char>((v >> 16) & 0xFF),
                        static_cast<unsigned char>((v >> 24) & 0xFF)};
  out.write(reinterpret_cast<const char*>(b), 4);
}

uint32_t get_u32(std::istream& in) {
  unsigned char b[4];
  in.read(reinterpret_cast<char*>(b), 4);
  if (!in) fail(Err::CorruptHeader, "model file truncated");
  return static_cast<uint32_t>(b[0]) | (static_cast<uint32_t>(b[1]) << 8) |
         (static_cast<uint32_t>(b[2]) << 16) | (static_cast<uint32_t>(b[3]) << 24);
}

void put_floats(std::ostream& out, const std::vector<float>& v) {
  static_assert(sizeof(float) == 4);
  out.write(reinterpret_cast<const char*>(v.data()), static_cast<std::streamsize>(v.size() * 4));
}

void get_floats(std::istream& in, std::vector<float>& v) {
  in.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(v.size() * 4));
  if (!in) fail(Err::CorruptHeader, "model file truncated");
}

}  // namespace

void save_model(const Model& m, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(Err::Io, "cannot write " + path);
  out.write("PWM1", 4);
  put_u32(out, static_cast<uint32_t>(m.numClasses));
  put_u32(out, static_cast<uint32_t>(m.layers.size() + 1));  // + input record
  out.put(static_cast<char>(LayerKind::Input));
  put_u32(out, static_cast<uint32_t>(m.inputH));
  put_u32(out, static_cast<uint32_t>(m.inputW));
  put_u32(out, static_cast<uint32_t>(m.inputC));
  for (const Layer& l : m.layers) {
    out.put(static_cast<char>(l.kind));
    switch (l.kind) {
      case LayerKind::Conv2d:
        put_u32(out, static_cast<uint32_t>(l.kh));
        put_u32(out, static_cast<uint32_t>(l.kw));
        put_u32(out, static_cast<uint32_t>(l.cin));
        put_u32(out, static_cast<uint32_t>(l.cout));
        put_u32(out, static_cast<uint32_t>(l.pad));
        put_floats(out, l.weights);
        put_floats(out, l.biases);
        break;
      case LayerKind::Relu:
      case LayerKind::MaxPool2:
        break;
      case LayerKind::Dense:
        put_u32(out, static_cast<uint32_t>(l.inSize));
        put_u32(out, static_cast<uint32_t>(l.outSize));
        put_floats(out, l.weights);
        put_floats(out, l.biases);
        break;
      default:
        fail(Err::InvalidArg, "save_model: bad layer kind");
    }
  }
  if (!out) fail(Err::Io, "write failed: " + path);
}

Model load_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(Err::Io, "cannot open " + path);
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, "PWM1", 4) != 0)
    fail(Err::UnsupportedFormat, path + ": not a PWM1 model file");
  uint32_t numClasses = get_u32(in);
  uint32_t records = get_u32(in);
  if (records < 2) fail(Err::CorruptHeader, path + ": no layers");
  int h = 0, w = 0, c = 0;
  std::vector<Layer> layers;
  for (uint32_t r = 0; r < records; ++r) {
    int tag = in.get();
    if (tag == EOF) fail(Err::CorruptHeader, path + ": truncated");
    switch (static_cast<LayerKind>(tag)) {
      case LayerKind::Input:
        h = static_cast<int>(get_u32(in));
        w = static_cast<int>(get_u32(in));
        c = static_cast<int>(get_u32(in));
        break;
      case LayerKind::Conv2d: {
        int kh = static_cast<int>(get_u32(in));
        int kw = static_cast<int>(get_u32(in));
        int cin = static_cast<int>(get_u32(in));
        int cout = static_cast<int>(get_u32(in));
        int pad = static_cast<int>(get_u32(in));
        Layer l = make_conv2d(kh, kw, cin, cout, pad);
        get_floats(in, l.weights);
        get_floats(in, l.biases);
        layers.push_back(std::move(l));
        break;
      }
      case LayerKind::Relu:
        layers.push_back(make_relu());
        break;
      case LayerKind::MaxPool2:
        layers.push_back(make_maxpool2());
        break;
      case LayerKind::Dense: {
        int inSize = static_cast<int>(get_u32(in));
        int outSize = static_cast<int>(get_u32(in));
        Layer l = make_dense(inSize, outSize);
        get_floats(in, l.weights);
        get_floats(in, l.biases);
        layers.push_back(std::move(l));
        break;
      }
      default:
        fail(Err::CorruptHeader, path + ": unknown layer tag");
    }
  }
  if (h <= 0 || w <= 0 || c <= 0) fail(Err::CorruptHeader, path + ": missing input record");
  return assemble(h, w, c, static_cast<int>(numClasses), std::move(layers));
}

}  // namespace pw::nn
