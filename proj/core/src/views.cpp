#include "cofidec/views.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace cofidec {

ImageGrid ImageGrid::make(int width, int height, int channels, std::vector<double> pixels,
                          int downsample_level) {
  if (width <= 0 || height <= 0 || channels <= 0)
    throw std::invalid_argument("ImageGrid: nonpositive dimensions");
  if (pixels.size() != static_cast<std::size_t>(width) * height * channels)
    throw std::invalid_argument("ImageGrid: pixel count mismatch");
  for (double v : pixels)
    if (!(v >= 0.0 && v <= 1.0))
      throw std::invalid_argument("ImageGrid: pixel value outside [0, 1]");
  ImageGrid g;
  g.width = width;
  g.height = height;
  g.channels = channels;
  g.pixels = std::move(pixels);
  g.downsample_level = downsample_level;
  return g;
}

ImageGrid ImageGrid::filled(int width, int height, int channels, double value) {
  return make(width, height, channels,
              std::vector<double>(static_cast<std::size_t>(width) * height * channels, value));
}

namespace {

// Edge-replicated sample: coordinates past the border read the border pixel.
double sample_clamped(const ImageGrid& img, int x, int y, int ch) {
  x = std::clamp(x, 0, img.width - 1);
  y = std::clamp(y, 0, img.height - 1);
  return img.at(x, y, ch);
}

int ceil_div(int a, int b) { return (a + b - 1) / b; }

}  // namespace

std::vector<ImageGrid> coarse_decompose(const ImageGrid& img, GridShape grid, int factor) {
  if (grid.rows < 1 || grid.cols < 1)
    throw std::invalid_argument("coarse_decompose: grid must be at least 1x1");
  if (factor < 1) throw std::invalid_argument("coarse_decompose: factor must be >= 1");
  if (img.width == 0 || img.height == 0)
    throw std::invalid_argument("coarse_decompose: zero-size image");

  // Pad once so every tile divides evenly by the pooling factor.
  const int tile_w = ceil_div(ceil_div(img.width, grid.cols), factor) * factor;
  const int tile_h = ceil_div(ceil_div(img.height, grid.rows), factor) * factor;
  const int out_w = tile_w / factor;
  const int out_h = tile_h / factor;
  const int level = img.downsample_level + (factor > 1 ? 1 : 0);

  std::vector<ImageGrid> patches;
  patches.reserve(static_cast<std::size_t>(grid.rows) * grid.cols);
  for (int r = 0; r < grid.rows; ++r) {
    for (int c = 0; c < grid.cols; ++c) {
      std::vector<double> px(static_cast<std::size_t>(out_w) * out_h * img.channels, 0.0);
      for (int oy = 0; oy < out_h; ++oy) {
        for (int ox = 0; ox < out_w; ++ox) {
          for (int ch = 0; ch < img.channels; ++ch) {
            double sum = 0.0;
            for (int dy = 0; dy < factor; ++dy)
              for (int dx = 0; dx < factor; ++dx)
                sum += sample_clamped(img, c * tile_w + ox * factor + dx,
                                      r * tile_h + oy * factor + dy, ch);
            px[(static_cast<std::size_t>(oy) * out_w + ox) * img.channels + ch] =
                sum / (static_cast<double>(factor) * factor);
          }
        }
      }
      patches.push_back(ImageGrid::make(out_w, out_h, img.channels, std::move(px), level));
    }
  }
  return patches;
}

SaliencyMap local_saliency(const ImageGrid& img, int window) {
  if (window < 1 || window > std::min(img.width, img.height))
    throw std::invalid_argument("local_saliency: window must fit inside the image");
  SaliencyMap map;
  map.width = img.width / window;
  map.height = img.height / window;
  map.scores.assign(static_cast<std::size_t>(map.width) * map.height, 0.0);
  const double inv_n = 1.0 / (static_cast<double>(window) * window);
  for (int cy = 0; cy < map.height; ++cy) {
    for (int cx = 0; cx < map.width; ++cx) {
      double score = 0.0;
      for (int ch = 0; ch < img.channels; ++ch) {
        double s = 0.0, s2 = 0.0;
        for (int dy = 0; dy < window; ++dy) {
          for (int dx = 0; dx < window; ++dx) {
            const double v = img.at(cx * window + dx, cy * window + dy, ch);
            s += v;
            s2 += v * v;
          }
        }
        const double mean = s * inv_n;
        score += std::max(0.0, s2 * inv_n - mean * mean);
      }
      map.scores[static_cast<std::size_t>(cy) * map.width + cx] = score;
    }
  }
  return map;
}

FineDecomposeResult fine_decompose(const ImageGrid& img, const SaliencyMap& saliency, int m,
                                   int crop_w, int crop_h) {
  if (m < 1) throw std::invalid_argument("fine_decompose: m must be >= 1");
  if (crop_w < 1 || crop_h < 1 || crop_w > img.width || crop_h > img.height)
    throw std::invalid_argument("fine_decompose: crop size must fit inside the image");
  if (saliency.width < 1 || saliency.height < 1 ||
      saliency.scores.size() != static_cast<std::size_t>(saliency.width) * saliency.height)
    throw std::invalid_argument("fine_decompose: malformed saliency map");

  const int n_windows = saliency.width * saliency.height;
  FineDecomposeResult out;
  int take = m;
  if (take > n_windows) {
    take = n_windows;
    out.clamped = true;
  }

  std::vector<int> order(n_windows);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    if (saliency.scores[a] != saliency.scores[b]) return saliency.scores[a] > saliency.scores[b];
    return a < b;  // ties: smaller row-major index first
  });

  // Saliency cells map onto a uniform pixel tiling of the image.
  const int cell_w = img.width / saliency.width;
  const int cell_h = img.height / saliency.height;

  out.crops.reserve(take);
  for (int r = 0; r < take; ++r) {
    const int idx = order[r];
    const int cx = idx % saliency.width;
    const int cy = idx / saliency.width;
    const int center_x = cx * cell_w + cell_w / 2;
    const int center_y = cy * cell_h + cell_h / 2;

    Rect region;
    region.w = crop_w;
    region.h = crop_h;
    region.x = std::clamp(center_x - crop_w / 2, 0, img.width - crop_w);
    region.y = std::clamp(center_y - crop_h / 2, 0, img.height - crop_h);

    std::vector<double> px(static_cast<std::size_t>(crop_w) * crop_h * img.channels);
    for (int y = 0; y < crop_h; ++y)
      for (int x = 0; x < crop_w; ++x)
        for (int ch = 0; ch < img.channels; ++ch)
          px[(static_cast<std::size_t>(y) * crop_w + x) * img.channels + ch] =
              img.at(region.x + x, region.y + y, ch);

    CropView crop;
    crop.region = region;
    crop.pixels = ImageGrid::make(crop_w, crop_h, img.channels, std::move(px),
                                  img.downsample_level);
    crop.saliency_score = saliency.scores[idx];
    out.crops.push_back(std::move(crop));
  }
  return out;
}

ViewSet unify(ImageGrid original, std::vector<ImageGrid> coarse, std::vector<CropView> fine,
              GridShape grid, int factor) {
  if (coarse.empty()) throw std::invalid_argument("unify: need at least one coarse patch");
  if (static_cast<std::size_t>(grid.rows) * grid.cols != coarse.size())
    throw std::invalid_argument("unify: coarse patch count does not match the grid");
  if (factor < 1) throw std::invalid_argument("unify: factor must be >= 1");

  // Expected pooled tile dimensions; anything larger would make the implied
  // tiles overlap, anything smaller would leave the image uncovered.
  const int tile_w = ceil_div(ceil_div(original.width, grid.cols), factor) * factor;
  const int tile_h = ceil_div(ceil_div(original.height, grid.rows), factor) * factor;
  const int out_w = tile_w / factor;
  const int out_h = tile_h / factor;
  for (const ImageGrid& p : coarse) {
    if (p.channels != original.channels)
      throw std::invalid_argument("unify: coarse patch channel mismatch");
    if (p.width * factor > tile_w || p.height * factor > tile_h)
      throw std::invalid_argument("unify: coarse patches overlap");
    if (p.width != out_w || p.height != out_h)
      throw std::invalid_argument("unify: coarse patches do not tile the original");
  }
  for (const CropView& c : fine) {
    if (c.region.x < 0 || c.region.y < 0 || c.region.w < 1 || c.region.h < 1 ||
        c.region.x + c.region.w > original.width || c.region.y + c.region.h > original.height)
      throw std::invalid_argument("unify: fine crop region out of bounds");
    if (c.pixels.width != c.region.w || c.pixels.height != c.region.h)
      throw std::invalid_argument("unify: fine crop pixel dimensions mismatch");
    if (!(c.saliency_score >= 0.0))
      throw std::invalid_argument("unify: negative saliency score");
  }

  ViewSet vs;
  vs.original = std::move(original);
  vs.coarse = std::move(coarse);
  vs.fine = std::move(fine);
  vs.grid = grid;
  vs.downsample_factor = factor;
  return vs;
}

ViewSet build_view_set(const ImageGrid& img, GridShape grid, int factor, int m, int crop_w,
                       int crop_h, int saliency_window) {
  std::vector<ImageGrid> coarse = coarse_decompose(img, grid, factor);
  ViewSet vs;
  if (m > 0) {
    SaliencyMap sal = local_saliency(img, saliency_window);
    FineDecomposeResult fine = fine_decompose(img, sal, m, crop_w, crop_h);
    vs = unify(img, std::move(coarse), std::move(fine.crops), grid, factor);
    vs.fine_clamped = fine.clamped;
  } else {
    vs = unify(img, std::move(coarse), {}, grid, factor);
  }
  return vs;
}

}  // namespace cofidec
