#include "data.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace fs = std::filesystem;

namespace pw {

namespace {

struct ShapeParams {
  int shape = 0;
  int color = 0;
  int cx = 0;
  int cy = 0;
  int r = 0;
};

const float kColors[kColorKinds][3] = {
    {0.85f, 0.10f, 0.10f},
    {0.10f, 0.85f, 0.10f},
    {0.10f, 0.10f, 0.85f},
};

bool inside_shape(const ShapeParams& p, int row, int col) {
  int dx = col - p.cx;
  int dy = row - p.cy;
  int r = p.r;
  switch (p.shape) {
    case 0:  // circle
      return dx * dx + dy * dy <= r * r;
    case 1:  // square
      return std::abs(dx) <= r && std::abs(dy) <= r;
    case 2:  // triangle, apex up
      return dy >= -r && dy <= r && 2 * std::abs(dx) <= dy + r;
    case 3: {  // cross
      int w = std::max(1, r / 3);
      return (std::abs(dx) <= w && std::abs(dy) <= r) ||
             (std::abs(dy) <= w && std::abs(dx) <= r);
    }
    default:
      return false;
  }
}

// One RNG stream per item so rasters can be regenerated independently.
ShapeParams item_params(int cls, uint64_t itemSeed) {
  Rng rng(itemSeed);
  ShapeParams p;
  p.shape = cls / kColorKinds;
  p.color = cls % kColorKinds;
  p.r = 3 + rng.below(6);  // half-extent 3..6
  p.cx = p.r + 1 + rng.below(kInputSide - 2 * p.r - 2);
  p.cy = p.r + 1 + rng.below(kInputSide - 2 * p.r - 2);
  return p;
}

Image render_item(const ShapeParams& p, uint64_t itemSeed) {
  Rng rng(itemSeed ^ 0xB0D1ED5EEDULL);
  Image img(kInputSide, kInputSide, 3);
  for (int r = 0; r < kInputSide; ++r) {
    for (int c = 0; c < kInputSide; ++c) {
      float noise = rng.funiform(-0.1f, 0.1f);  // scalar per pixel, background stays gray
      float base = 0.5f + noise;
      for (int ch = 0; ch < 3; ++ch) {
        img.at(r, c, ch) = inside_shape(p, r, c) ? kColors[p.color][ch] : base;
      }
    }
  }
  return img;
}

uint64_t item_seed(uint64_t seed, int cls, int i) {
  return seed * 0x100000001B3ULL + static_cast<uint64_t>(cls) * 1000003ULL +
         static_cast<uint64_t>(i) * 8191ULL + 17ULL;
}

}  // namespace

Dataset synth_shapes(int numClasses, int perClass, uint64_t seed) {
  if (numClasses < 2 || numClasses > kMaxClasses)
    fail(Err::InvalidArg, "synth_shapes: numClasses must be in [2, 12]");
  if (perClass < 0) fail(Err::InvalidArg, "synth_shapes: perClass must be >= 0");
  Dataset ds;
  ds.numClasses = numClasses;
  ds.items.reserve(static_cast<size_t>(numClasses) * perClass);
  for (int i = 0; i < perClass; ++i) {
    for (int cls = 0; cls < numClasses; ++cls) {
      uint64_t is = item_seed(seed, cls, i);
      ShapeParams p = item_params(cls, is);
      ds.items.emplace_back(render_item(p, is), cls);
    }
  }
  return ds;
}

std::vector<uint8_t> synth_shape_raster(int numClasses, int perClass, uint64_t seed, int index) {
  if (index < 0 || index >= numClasses * perClass)
    fail(Err::InvalidArg, "synth_shape_raster: index out of range");
  int i = index / numClasses;
  int cls = index % numClasses;
  ShapeParams p = item_params(cls, item_seed(seed, cls, i));
  std::vector<uint8_t> raster(static_cast<size_t>(kInputSide) * kInputSide, 0);
  for (int r = 0; r < kInputSide; ++r)
    for (int c = 0; c < kInputSide; ++c)
      raster[static_cast<size_t>(r) * kInputSide + c] = inside_shape(p, r, c) ? 1 : 0;
  return raster;
}

// --- netpbm -----------------------------------------------------------------

namespace {

int read_pnm_token(std::istream& in) {
  // skips whitespace and '#' comments, returns nonnegative int or -1
  while (true) {
    int ch = in.peek();
    if (ch == EOF) return -1;
    if (ch == '#') {
      std::string line;
      std::getline(in, line);
      continue;
    }
    if (std::isspace(ch)) {
      in.get();
      continue;
    }
    break;
  }
  int value = 0;
  bool any = false;
  while (true) {
    int ch = in.peek();
    if (ch == EOF || !std::isdigit(ch)) break;
    value = value * 10 + (in.get() - '0');
    any = true;
    if (value > 1 << 30) return -1;
  }
  return any ? value : -1;
}

}  // namespace

Image load_image(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(Err::Io, "cannot open " + path);
  char magic[2] = {0, 0};
  in.read(magic, 2);
  int channels;
  if (magic[0] == 'P' && magic[1] == '6') {
    channels = 3;
  } else if (magic[0] == 'P' && magic[1] == '5') {
    channels = 1;
  } else {
    fail(Err::UnsupportedFormat, path + ": not a binary PPM (P6) or PGM (P5)");
  }
  int w = read_pnm_token(in);
  int h = read_pnm_token(in);
  int maxval = read_pnm_token(in);
  if (w <= 0 || h <= 0 || maxval <= 0) fail(Err::CorruptHeader, path + ": bad header");
  if (maxval != 255) fail(Err::UnsupportedFormat, path + ": only 8-bit (maxval 255) supported");
  in.get();  // single whitespace after maxval
  size_t n = static_cast<size_t>(w) * h * channels;
  std::vector<unsigned char> raw(n);
  in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(n));
  if (static_cast<size_t>(in.gcount()) != n) fail(Err::CorruptHeader, path + ": truncated pixel data");
  Image img(h, w, channels);
  for (size_t i = 0; i < n; ++i) img.pixels[i] = static_cast<float>(raw[i]) / 255.0f;
  return img;
}

void save_image(const Image& img, const std::string& path) {
  if (img.channels != 1 && img.channels != 3)
    fail(Err::UnsupportedFormat, "save_image: channels must be 1 or 3");
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(Err::Io, "cannot write " + path);
  out << (img.channels == 3 ? "P6" : "P5") << "\n"
      << img.width << " " << img.height << "\n255\n";
  std::vector<unsigned char> raw(img.size());
  for (size_t i = 0; i < img.size(); ++i) {
    float v = std::clamp(img.pixels[i], 0.0f, 1.0f);
    raw[i] = static_cast<unsigned char>(std::lround(v * 255.0f));
  }
  out.write(reinterpret_cast<const char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
  if (!out) fail(Err::Io, "write failed: " + path);
}

// --- dataset I/O --------------------------------------------------------------

void save_dataset(const Dataset& ds, const std::string& dir) {
  fs::create_directories(dir);
  std::ofstream manifest(fs::path(dir) / "manifest.txt");
  if (!manifest) fail(Err::Io, "cannot write manifest in " + dir);
  char name[32];
  for (size_t i = 0; i < ds.items.size(); ++i) {
    std::snprintf(name, sizeof(name), "img_%05zu.ppm", i);
    save_image(ds.items[i].first, (fs::path(dir) / name).string());
    manifest << name << "," << ds.items[i].second << "\n";
  }
}

Dataset load_dataset(const std::string& path) {
  fs::path manifestPath(path);
  if (fs::is_directory(manifestPath)) manifestPath /= "manifest.txt";
  std::ifstream in(manifestPath);
  if (!in) fail(Err::Io, "cannot open manifest " + manifestPath.string());
  fs::path base = manifestPath.parent_path();
  Dataset ds;
  int maxLabel = -1;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto comma = line.rfind(',');
    if (comma == std::string::npos) fail(Err::CorruptHeader, "bad manifest line: " + line);
    std::string rel = line.substr(0, comma);
    int label = std::stoi(line.substr(comma + 1));
    ds.items.emplace_back(load_image((base / rel).string()), label);
    maxLabel = std::max(maxLabel, label);
  }
  ds.numClasses = maxLabel + 1;
  return ds;
}

// --- utilities -----------------------------------------------------------------

std::pair<Dataset, Dataset> split_dataset(const Dataset& ds, double fraction, uint64_t seed) {
  if (fraction < 0.0 || fraction > 1.0) fail(Err::InvalidArg, "split fraction must be in [0,1]");
  std::vector<int> order(ds.items.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
  Rng rng(seed);
  rng.shuffle(order);
  size_t nFirst = static_cast<size_t>(std::lround(fraction * static_cast<double>(ds.items.size())));
  Dataset a, b;
  a.numClasses = b.numClasses = ds.numClasses;
  for (size_t i = 0; i < order.size(); ++i) {
    const auto& item = ds.items[static_cast<size_t>(order[i])];
    (i < nFirst ? a : b).items.push_back(item);
  }
  return {std::move(a), std::move(b)};
}

Dataset subsample_dataset(const Dataset& ds, int n, uint64_t seed) {
  if (n < 0) fail(Err::InvalidArg, "subsample size must be >= 0");
  if (static_cast<size_t>(n) >= ds.items.size()) return ds;
  std::vector<int> order(ds.items.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
  Rng rng(seed);
  rng.shuffle(order);
  order.resize(static_cast<size_t>(n));
  std::sort(order.begin(), order.end());  // keep original ordering
  Dataset out;
  out.numClasses = ds.numClasses;
  for (int idx : order) out.items.push_back(ds.items[static_cast<size_t>(idx)]);
  return out;
}

Image resize_bilinear(const Image& img, int outH, int outW) {
  if (outH <= 0 || outW <= 0) fail(Err::InvalidArg, "resize: output dims must be positive");
  Image out(outH, outW, img.channels);
  double sr = outH == 1 ? 0.0 : static_cast<double>(img.height - 1) / (outH - 1);
  double sc = outW == 1 ? 0.0 : static_cast<double>(img.width - 1) / (outW - 1);
  for (int r = 0; r < outH; ++r) {
    double fr = r * sr;
    int r0 = static_cast<int>(fr);
    int r1 = std::min(r0 + 1, img.height - 1);
    double wr = fr - r0;
    for (int c = 0; c < outW; ++c) {
      double fc = c * sc;
      int c0 = static_cast<int>(fc);
      int c1 = std::min(c0 + 1, img.width - 1);
      double wc = fc - c0;
      for (int ch = 0; ch < img.channels; ++ch) {
        double top = (1.0 - wc) * img.at(r0, c0, ch) + wc * img.at(r0, c1, ch);
        double bot = (1.0 - wc) * img.at(r1, c0, ch) + wc * img.at(r1, c1, ch);
        out.at(r, c, ch) = static_cast<float>((1.0 - wr) * top + wr * bot);
      }
    }
  }
  return out;
}

Image crop(const Image& img, int r0, int c0, int r1, int c1) {
  if (r0 < 0 || c0 < 0 || r1 >= img.height || c1 >= img.width || r0 > r1 || c0 > c1)
    fail(Err::OutOfBounds, "crop: box outside image");
  Image out(r1 - r0 + 1, c1 - c0 + 1, img.channels);
  for (int r = r0; r <= r1; ++r)
    for (int c = c0; c <= c1; ++c)
      for (int ch = 0; ch < img.channels; ++ch) out.at(r - r0, c - c0, ch) = img.at(r, c, ch);
  return out;
}

}  // namespace pw
