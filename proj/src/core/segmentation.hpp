#ifndef PW_SEGMENTATION_HPP
#define PW_SEGMENTATION_HPP

#include <vector>

#include "data.hpp"

namespace pw::seg {

struct RegionProposal {
  int x0 = 0, y0 = 0, x1 = 0, y1 = 0;  // inclusive pixel bounds
  int area = 0;                        // pixel count of the originating region
};

struct LabelMap {
  int height = 0;
  int width = 0;
  std::vector<int> ids;  // 0..regionCount-1
  int regionCount = 0;

  int at(int r, int c) const { return ids[static_cast<size_t>(r) * width + c]; }
};

struct SelectiveSearchConfig {
  double scale = 100.0;   // Felzenszwalb k, on [0,1] pixel values
  int minSize = 8;
  double sigma = 0.8;     // Gaussian pre-smooth
  int maxProposals = 64;  // largest-area first
  bool slidingWindows = false;  // ablation alternative to selective search
};

// Graph-based over-segmentation (8-connected, adaptive threshold scale/|region|,
// stable edge order). Regions smaller than minSize are merged afterwards.
LabelMap graph_segment(const Image& img, double scale, int minSize, double sigma = 0.8);

// Bounding boxes of every region at any level of the greedy merge hierarchy,
// deduplicated, ordered by descending area, capped at maxProposals.
std::vector<RegionProposal> selective_search(const Image& img, const SelectiveSearchConfig& config = {});

std::vector<RegionProposal> sliding_windows(int height, int width);

double box_iou(const RegionProposal& a, const RegionProposal& b);

}  // namespace pw::seg

#endif
