#ifndef PW_NN_HPP
#define PW_NN_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "common.hpp"
#include "data.hpp"

namespace pw::nn {

struct Tensor {
  std::vector<int> shape;
  std::vector<float> data;

  Tensor() = default;
  explicit Tensor(std::vector<int> s) : shape(std::move(s)) {
    size_t n = 1;
    for (int d : shape) n *= static_cast<size_t>(d);
    data.assign(n, 0.0f);
  }
  size_t size() const { return data.size(); }

  // (H, W, C) accessors
  float& at(int r, int c, int ch) {
    return data[(static_cast<size_t>(r) * shape[1] + c) * shape[2] + ch];
  }
  float at(int r, int c, int ch) const {
    return data[(static_cast<size_t>(r) * shape[1] + c) * shape[2] + ch];
  }
};

enum class LayerKind : uint8_t { Input = 0, Conv2d = 1, Relu = 2, MaxPool2 = 3, Dense = 4 };

// Conv2d is stride 1; weights laid out [cout][kh][kw][cin] so each filter dots
// a channel-interleaved input patch contiguously. Dense weights are [out][in]
// over the row-major (H, W, C) flattening.
struct Layer {
  LayerKind kind;
  int kh = 0, kw = 0, cin = 0, cout = 0, pad = 0;  // conv2d
  int inSize = 0, outSize = 0;                     // dense
  std::vector<float> weights;
  std::vector<float> biases;
};

struct Model {
  int inputH = 0, inputW = 0, inputC = 0;
  int numClasses = 0;
  int finalPoolIndex = -1;  // last MaxPool2 layer, the source of the A^k maps
  std::vector<Layer> layers;
};

struct Prediction {
  int classIndex = 0;
  double confidence = 0.0;  // softmax probability of classIndex
  std::vector<float> logits;
};

struct ForwardTrace {
  // acts[0] is the input tensor; acts[i + 1] is the output of layers[i].
  std::vector<Tensor> acts;

  const Tensor& activation(int layerIndex) const { return acts[static_cast<size_t>(layerIndex) + 1]; }
  const Tensor& featureMaps(const Model& m) const { return activation(m.finalPoolIndex); }
};

// --- architecture ------------------------------------------------------------

// conv(8,3x3,pad1)+relu+pool2, conv(16,3x3,pad1)+relu+pool2, dense -> logits.
// Weights Glorot-uniform (seeded), biases zero.
Model reference_model(int numClasses, uint64_t seed);

Layer make_conv2d(int kh, int kw, int cin, int cout, int pad);
Layer make_relu();
Layer make_maxpool2();
Layer make_dense(int inSize, int outSize);
// Chains shapes from (h, w, c), sets finalPoolIndex, validates against numClasses.
Model assemble(int h, int w, int c, int numClasses, std::vector<Layer> layers);
void init_glorot(Model& m, uint64_t seed);

// --- forward / backward -------------------------------------------------------

std::pair<Prediction, ForwardTrace> forward(const Model& m, const Image& img);
Prediction predict(const Model& m, const Image& img);
std::vector<double> softmax(const std::vector<float>& logits);

// d(logit_classIndex)/dA, backpropagated through the layers after
// finalPoolIndex only; shaped like the feature maps.
Tensor grad_wrt_feature_maps(const Model& m, const ForwardTrace& trace, int classIndex);

enum class LossKind {
  NegativeLogit,
  TargetCrossEntropy,  // -log softmax(classIndex)
  GradCamTargetDiff,
  GradCamSum,
  ConfidenceSum,
};

struct LossSpec {
  LossKind kind = LossKind::NegativeLogit;
  int classIndex = 0;
  // GradCamTargetDiff: |L^c - target| summed at feature-map resolution.
  Tensor target;
  // GradCamSum: optional 0/1 weights at feature-map spatial resolution
  // (h * w entries); empty means sum everywhere.
  std::vector<uint8_t> fmMask;
};

// Gradient of the loss w.r.t. input pixels; same dims as the image.
Image input_gradient(const Model& m, const Image& img, const LossSpec& loss, double* lossValue = nullptr);
double loss_value(const Model& m, const Image& img, const LossSpec& loss);

// --- training -------------------------------------------------------------------

struct TrainConfig {
  int maxEpochs = 40;
  double learningRate = 0.05;
  double momentum = 0.9;
  int batchSize = 32;
  double holdoutFraction = 0.1;
  double targetAccuracy = 0.0;  // 0 disables the convergence gate
};

TrainConfig reference_train_config();

// Mini-batch SGD with cross-entropy on the reference architecture. Stops as
// soon as held-out accuracy reaches targetAccuracy; DidNotConverge otherwise.
Model train(const TrainConfig& config, const Dataset& dataset, uint64_t seed);

double model_accuracy(const Model& m, const Dataset& ds, int jobs = 1);

// --- model file ("PWM1") ----------------------------------------------------------

void save_model(const Model& m, const std::string& path);
Model load_model(const std::string& path);

}  // namespace pw::nn

#endif
