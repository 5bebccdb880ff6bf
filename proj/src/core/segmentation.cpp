#include "segmentation.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <set>

namespace pw::seg {

namespace {

struct Edge {
  float w;
  int a, b;

  bool operator<(const Edge& o) const {
    if (w != o.w) return w < o.w;
    if (a != o.a) return a < o.a;
    return b < o.b;
  }
};

struct DisjointSet {
  std::vector<int> parent;
  std::vector<int> rank;
  std::vector<int> size;

  explicit DisjointSet(int n) : parent(n), rank(n, 0), size(n, 1) {
    std::iota(parent.begin(), parent.end(), 0);
  }

  int find(int x) {
    int root = x;
    while (parent[root] != root) root = parent[root];
    while (parent[x] != root) {
      int next = parent[x];
      parent[x] = root;
      x = next;
    }
    return root;
  }

  int join(int a, int b) {
    if (rank[a] < rank[b]) std::swap(a, b);
    parent[b] = a;
    size[a] += size[b];
    if (rank[a] == rank[b]) ++rank[a];
    return a;
  }
};

Image gaussian_smooth(const Image& img, double sigma) {
  if (sigma <= 0.0) return img;
  int radius = std::max(1, static_cast<int>(std::ceil(2.5 * sigma)));
  std::vector<double> kernel(static_cast<size_t>(2 * radius + 1));
  double sum = 0.0;
  for (int i = -radius; i <= radius; ++i) {
    kernel[static_cast<size_t>(i + radius)] = std::exp(-0.5 * (i * i) / (sigma * sigma));
    sum += kernel[static_cast<size_t>(i + radius)];
  }
  for (double& k : kernel) k /= sum;

  Image tmp(img.height, img.width, img.channels);
  for (int r = 0; r < img.height; ++r)
    for (int c = 0; c < img.width; ++c)
      for (int ch = 0; ch < img.channels; ++ch) {
        double acc = 0.0;
        for (int i = -radius; i <= radius; ++i) {
          int cc = std::clamp(c + i, 0, img.width - 1);
          acc += kernel[static_cast<size_t>(i + radius)] * img.at(r, cc, ch);
        }
        tmp.at(r, c, ch) = static_cast<float>(acc);
      }
  Image out(img.height, img.width, img.channels);
  for (int r = 0; r < img.height; ++r)
    for (int c = 0; c < img.width; ++c)
      for (int ch = 0; ch < img.channels; ++ch) {
        double acc = 0.0;
        for (int i = -radius; i <= radius; ++i) {
          int rr = std::clamp(r + i, 0, img.height - 1);
          acc += kernel[static_cast<size_t>(i + radius)] * tmp.at(rr, c, ch);
        }
        out.at(r, c, ch) = static_cast<float>(acc);
      }
  return out;
}

float pixel_diff(const Image& img, int r1, int c1, int r2, int c2) {
  double acc = 0.0;
  for (int ch = 0; ch < img.channels; ++ch) {
    double d = static_cast<double>(img.at(r1, c1, ch)) - img.at(r2, c2, ch);
    acc += d * d;
  }
  return static_cast<float>(std::sqrt(acc));
}

std::vector<Edge> build_edges(const Image& img) {
  const int H = img.height, W = img.width;
  std::vector<Edge> edges;
  edges.reserve(static_cast<size_t>(H) * W * 4);
  auto id = [W](int r, int c) { return r * W + c; };
  for (int r = 0; r < H; ++r)
    for (int c = 0; c < W; ++c) {
      if (c + 1 < W) edges.push_back({pixel_diff(img, r, c, r, c + 1), id(r, c), id(r, c + 1)});
      if (r + 1 < H) edges.push_back({pixel_diff(img, r, c, r + 1, c), id(r, c), id(r + 1, c)});
      if (r + 1 < H && c + 1 < W)
        edges.push_back({pixel_diff(img, r, c, r + 1, c + 1), id(r, c), id(r + 1, c + 1)});
      if (r + 1 < H && c > 0)
        edges.push_back({pixel_diff(img, r, c, r + 1, c - 1), id(r, c), id(r + 1, c - 1)});
    }
  return edges;
}

}  // namespace

LabelMap graph_segment(const Image& img, double scale, int minSize, double sigma) {
  if (scale <= 0.0) fail(Err::InvalidArg, "graph_segment: scale must be > 0");
  if (minSize < 1) fail(Err::InvalidArg, "graph_segment: minSize must be >= 1");
  const int H = img.height, W = img.width;
  const int N = H * W;
  Image smooth = gaussian_smooth(img, sigma);
  std::vector<Edge> edges = build_edges(smooth);
  std::sort(edges.begin(), edges.end());

  DisjointSet ds(N);
  std::vector<float> threshold(static_cast<size_t>(N), static_cast<float>(scale));
  for (const Edge& e : edges) {
    int a = ds.find(e.a);
    int b = ds.find(e.b);
    if (a == b) continue;
    if (e.w <= threshold[static_cast<size_t>(a)] && e.w <= threshold[static_cast<size_t>(b)]) {
      int root = ds.join(a, b);
      threshold[static_cast<size_t>(root)] =
          e.w + static_cast<float>(scale / ds.size[static_cast<size_t>(root)]);
    }
  }
  // merge undersized regions along remaining edges, smallest weight first
  for (const Edge& e : edges) {
    int a = ds.find(e.a);
    int b = ds.find(e.b);
    if (a != b && (ds.size[static_cast<size_t>(a)] < minSize || ds.size[static_cast<size_t>(b)] < minSize))
      ds.join(a, b);
  }

  LabelMap out;
  out.height = H;
  out.width = W;
  out.ids.assign(static_cast<size_t>(N), -1);
  std::vector<int> remap(static_cast<size_t>(N), -1);
  int next = 0;
  for (int i = 0; i < N; ++i) {
    int root = ds.find(i);
    if (remap[static_cast<size_t>(root)] < 0) remap[static_cast<size_t>(root)] = next++;
    out.ids[static_cast<size_t>(i)] = remap[static_cast<size_t>(root)];
  }
  out.regionCount = next;
  return out;
}

namespace {

constexpr int kHistBins = 25;

struct Region {
  int size = 0;
  int x0 = 0, y0 = 0, x1 = 0, y1 = 0;
  std::vector<float> hist;  // kHistBins per channel, L1-normalized over all bins
  bool alive = false;
};

double similarity(const Region& a, const Region& b, int imageArea) {
  double sColor = 0.0;
  for (size_t i = 0; i < a.hist.size(); ++i)
    sColor += std::min(a.hist[i], b.hist[i]);
  double sSize = 1.0 - static_cast<double>(a.size + b.size) / imageArea;
  long long bw = std::max(a.x1, b.x1) - std::min(a.x0, b.x0) + 1;
  long long bh = std::max(a.y1, b.y1) - std::min(a.y0, b.y0) + 1;
  double sFill = 1.0 - static_cast<double>(bw * bh - a.size - b.size) / imageArea;
  return sColor + sSize + sFill;
}

}  // namespace

std::vector<RegionProposal> selective_search(const Image& img, const SelectiveSearchConfig& config) {
  if (img.height <= 0 || img.width <= 0) fail(Err::InvalidArg, "selective_search: empty image");
  if (config.slidingWindows) return sliding_windows(img.height, img.width);

  const int imageArea = img.height * img.width;
  LabelMap labels = graph_segment(img, config.scale, config.minSize, config.sigma);

  // region stats
  std::vector<Region> regions(static_cast<size_t>(labels.regionCount));
  for (auto& r : regions) {
    r.alive = true;
    r.x0 = img.width;
    r.y0 = img.height;
    r.x1 = -1;
    r.y1 = -1;
    r.hist.assign(static_cast<size_t>(kHistBins) * img.channels, 0.0f);
  }
  for (int r = 0; r < img.height; ++r)
    for (int c = 0; c < img.width; ++c) {
      Region& reg = regions[static_cast<size_t>(labels.at(r, c))];
      ++reg.size;
      reg.x0 = std::min(reg.x0, c);
      reg.x1 = std::max(reg.x1, c);
      reg.y0 = std::min(reg.y0, r);
      reg.y1 = std::max(reg.y1, r);
      for (int ch = 0; ch < img.channels; ++ch) {
        int bin = std::min(kHistBins - 1, static_cast<int>(img.at(r, c, ch) * kHistBins));
        reg.hist[static_cast<size_t>(ch) * kHistBins + bin] += 1.0f;
      }
    }
  for (auto& reg : regions)
    for (float& h : reg.hist) h /= static_cast<float>(reg.size * img.channels);

  // adjacency from the 8-connected pixel grid
  std::set<std::pair<int, int>> adj;
  auto add_adj = [&](int a, int b) {
    if (a != b) adj.insert({std::min(a, b), std::max(a, b)});
  };
  for (int r = 0; r < img.height; ++r)
    for (int c = 0; c < img.width; ++c) {
      int id = labels.at(r, c);
      if (c + 1 < img.width) add_adj(id, labels.at(r, c + 1));
      if (r + 1 < img.height) add_adj(id, labels.at(r + 1, c));
      if (r + 1 < img.height && c + 1 < img.width) add_adj(id, labels.at(r + 1, c + 1));
      if (r + 1 < img.height && c > 0) add_adj(id, labels.at(r + 1, c - 1));
    }

  struct BoxRec {
    long long sortArea;
    int order;
    RegionProposal box;
  };
  std::vector<BoxRec> collected;
  int orderCounter = 0;
  auto collect = [&](const Region& reg) {
    collected.push_back({static_cast<long long>(reg.size), orderCounter++,
                         {reg.x0, reg.y0, reg.x1, reg.y1, reg.size}});
  };
  for (const auto& reg : regions) collect(reg);

  std::map<std::pair<int, int>, double> sims;
  for (const auto& [a, b] : adj)
    sims[{a, b}] = similarity(regions[static_cast<size_t>(a)], regions[static_cast<size_t>(b)], imageArea);

  // greedy hierarchical merging: always fuse the most similar neighbor pair
  while (!sims.empty()) {
    auto bestIt = sims.begin();
    for (auto it = std::next(sims.begin()); it != sims.end(); ++it)
      if (it->second > bestIt->second) bestIt = it;  // map order breaks ties by lowest ids
    auto [ia, ib] = bestIt->first;

    Region& ra = regions[static_cast<size_t>(ia)];
    Region& rb = regions[static_cast<size_t>(ib)];
    Region merged;
    merged.alive = true;
    merged.size = ra.size + rb.size;
    merged.x0 = std::min(ra.x0, rb.x0);
    merged.y0 = std::min(ra.y0, rb.y0);
    merged.x1 = std::max(ra.x1, rb.x1);
    merged.y1 = std::max(ra.y1, rb.y1);
    merged.hist.resize(ra.hist.size());
    for (size_t i = 0; i < ra.hist.size(); ++i)
      merged.hist[i] = (ra.hist[i] * ra.size + rb.hist[i] * rb.size) / merged.size;

    int mergedId = static_cast<int>(regions.size());
    ra.alive = false;
    rb.alive = false;
    regions.push_back(merged);
    collect(regions.back());

    // rewire neighbor links of ia/ib to mergedId
    std::set<int> neighbors;
    for (auto it = sims.begin(); it != sims.end();) {
      auto [a, b] = it->first;
      if (a == ia || a == ib || b == ia || b == ib) {
        int other = (a == ia || a == ib) ? b : a;
        if (other != ia && other != ib) neighbors.insert(other);
        it = sims.erase(it);
      } else {
        ++it;
      }
    }
    for (int nb : neighbors)
      sims[{std::min(nb, mergedId), std::max(nb, mergedId)}] =
          similarity(regions[static_cast<size_t>(nb)], regions[static_cast<size_t>(mergedId)], imageArea);
  }

  // dedupe identical boxes, order by descending area then appearance
  std::sort(collected.begin(), collected.end(), [](const BoxRec& a, const BoxRec& b) {
    if (a.sortArea != b.sortArea) return a.sortArea > b.sortArea;
    return a.order < b.order;
  });
  std::vector<RegionProposal> out;
  std::set<std::tuple<int, int, int, int>> seen;
  for (const BoxRec& rec : collected) {
    auto key = std::make_tuple(rec.box.x0, rec.box.y0, rec.box.x1, rec.box.y1);
    if (seen.count(key)) continue;
    seen.insert(key);
    out.push_back(rec.box);
    if (static_cast<int>(out.size()) >= config.maxProposals) break;
  }
  return out;
}

std::vector<RegionProposal> sliding_windows(int height, int width) {
  std::vector<RegionProposal> out;
  for (int size : {8, 16, 24}) {
    if (size > height || size > width) continue;
    int stride = size / 2;
    for (int r = 0; r + size <= height; r += stride)
      for (int c = 0; c + size <= width; c += stride)
        out.push_back({c, r, c + size - 1, r + size - 1, size * size});
  }
  std::sort(out.begin(), out.end(), [](const RegionProposal& a, const RegionProposal& b) {
    if (a.area != b.area) return a.area > b.area;
    if (a.y0 != b.y0) return a.y0 < b.y0;
    return a.x0 < b.x0;
  });
  return out;
}

double box_iou(const RegionProposal& a, const RegionProposal& b) {
  int ix0 = std::max(a.x0, b.x0), iy0 = std::max(a.y0, b.y0);
  int ix1 = std::min(a.x1, b.x1), iy1 = std::min(a.y1, b.y1);
  long long inter = 0;
  if (ix1 >= ix0 && iy1 >= iy0)
    inter = static_cast<long long>(ix1 - ix0 + 1) * (iy1 - iy0 + 1);
  long long areaA = static_cast<long long>(a.x1 - a.x0 + 1) * (a.y1 - a.y0 + 1);
  long long areaB = static_cast<long long>(b.x1 - b.x0 + 1) * (b.y1 - b.y0 + 1);
  return static_cast<double>(inter) / static_cast<double>(areaA + areaB - inter);
}

}  // namespace pw::seg
