#include "proposal.hpp"

#include <algorithm>
#include <map>

namespace pw::proposal {

std::vector<ClassScore> class_proposal(const nn::Model& m, const Image& img, int k,
                                       const seg::SelectiveSearchConfig& ssConfig, int jobs) {
  if (k < 1) fail(Err::InvalidArg, "class_proposal: k must be >= 1");
  int y = nn::predict(m, img).classIndex;
  std::vector<seg::RegionProposal> boxes = seg::selective_search(img, ssConfig);
  if (boxes.empty()) fail(Err::NoProposals, "class_proposal: no region proposals");

  std::vector<ClassScore> scores(boxes.size());
  parallel_for(static_cast<int>(boxes.size()), jobs, [&](int i) {
    const auto& b = boxes[static_cast<size_t>(i)];
    Image patch = resize_bilinear(crop(img, b.y0, b.x0, b.y1, b.x1), m.inputH, m.inputW);
    nn::Prediction p = nn::predict(m, patch);
    scores[static_cast<size_t>(i)] = {p.classIndex, p.confidence};
  });

  // drop the whole-image class, collapse duplicates to max confidence
  std::map<int, double> best;
  for (const auto& s : scores) {
    if (s.classIndex == y) continue;
    auto it = best.find(s.classIndex);
    if (it == best.end() || s.confidence > it->second) best[s.classIndex] = s.confidence;
  }
  std::vector<ClassScore> out;
  out.reserve(best.size());
  for (const auto& [cls, conf] : best) out.push_back({cls, conf});
  std::sort(out.begin(), out.end(), [](const ClassScore& a, const ClassScore& b) {
    if (a.confidence != b.confidence) return a.confidence > b.confidence;
    return a.classIndex < b.classIndex;
  });
  if (static_cast<int>(out.size()) > k) out.resize(static_cast<size_t>(k));
  return out;
}

saliency::BinaryMask gradcam_mask(const nn::Model& m, const Image& img, int classIndex,
                                  saliency::UpsampleMode mode) {
  saliency::Heatmap coarse = saliency::grad_cam(m, img, classIndex);
  return saliency::binarize(saliency::upsample(coarse, img.height, img.width, mode));
}

std::vector<MaskCandidate> mask_generation(const nn::Model& m, const Image& img, int y,
                                           const std::vector<ClassScore>& proposals,
                                           bool maskSubtraction, saliency::UpsampleMode mode) {
  saliency::BinaryMask maskY = gradcam_mask(m, img, y, mode);
  std::vector<MaskCandidate> out;
  if (proposals.empty()) {
    out.push_back({maskY, -1, 0.0});
    return out;
  }
  out.reserve(proposals.size());
  for (const auto& p : proposals) {
    if (maskSubtraction) {
      saliency::BinaryMask sub = gradcam_mask(m, img, p.classIndex, mode);
      out.push_back({saliency::mask_subtract(maskY, sub), p.classIndex, p.confidence});
    } else {
      out.push_back({maskY, p.classIndex, p.confidence});
    }
  }
  return out;
}

}  // namespace pw::proposal
