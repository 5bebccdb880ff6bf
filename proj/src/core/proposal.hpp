#ifndef PW_PROPOSAL_HPP
#define PW_PROPOSAL_HPP

#include <vector>

#include "nn.hpp"
#include "saliency.hpp"
#include "segmentation.hpp"

namespace pw::proposal {

struct ClassScore {
  int classIndex = 0;
  double confidence = 0.0;
};

struct MaskCandidate {
  saliency::BinaryMask mask;
  int sourceClass = -1;  // class whose mask was subtracted; -1 for the bare mask
  double proposalConfidence = 0.0;
};

// Crops every region proposal, resizes to the model input, evaluates, and
// returns the k most confident (class, confidence) pairs. The whole-image
// prediction y is excluded and duplicate classes collapse to max confidence.
std::vector<ClassScore> class_proposal(const nn::Model& m, const Image& img, int k,
                                       const seg::SelectiveSearchConfig& ssConfig = {},
                                       int jobs = 1);

// mask_y minus each proposed class's mask; falls back to mask_y alone when
// there are no proposals.
std::vector<MaskCandidate> mask_generation(const nn::Model& m, const Image& img, int y,
                                           const std::vector<ClassScore>& proposals,
                                           bool maskSubtraction = true,
                                           saliency::UpsampleMode mode = saliency::UpsampleMode::Bilinear);

saliency::BinaryMask gradcam_mask(const nn::Model& m, const Image& img, int classIndex,
                                  saliency::UpsampleMode mode = saliency::UpsampleMode::Bilinear);

}  // namespace pw::proposal

#endif
