#pragma once

#include <vector>

namespace cofidec {

/// Dense pixel grid with channel values in [0, 1], row-major by (y, x, ch).
/// downsample_level counts how many pooling passes produced this grid; it is
/// runtime metadata, not part of the serialized format.
struct ImageGrid {
  int width = 0;
  int height = 0;
  int channels = 0;
  std::vector<double> pixels;
  int downsample_level = 0;

  double at(int x, int y, int ch) const {
    return pixels[(static_cast<std::size_t>(y) * width + x) * channels + ch];
  }
  double& at(int x, int y, int ch) {
    return pixels[(static_cast<std::size_t>(y) * width + x) * channels + ch];
  }

  static ImageGrid make(int width, int height, int channels, std::vector<double> pixels,
                        int downsample_level = 0);
  static ImageGrid filled(int width, int height, int channels, double value);
};

struct Rect {
  int x = 0, y = 0, w = 0, h = 0;
};

struct CropView {
  Rect region;  // in original pixel coordinates
  ImageGrid pixels;
  double saliency_score = 0.0;
};

struct SaliencyMap {
  int width = 0;   // cells
  int height = 0;  // cells
  std::vector<double> scores;  // row-major, nonnegative

  double at(int cx, int cy) const { return scores[static_cast<std::size_t>(cy) * width + cx]; }
};

struct GridShape {
  int rows = 1;
  int cols = 1;
};

/// Original image plus its coarse tiling and fine crops. The grid shape and
/// pooling factor are kept so the tiling invariant stays checkable.
struct ViewSet {
  ImageGrid original;
  std::vector<ImageGrid> coarse;
  std::vector<CropView> fine;
  GridShape grid;
  int downsample_factor = 1;
  bool fine_clamped = false;
};

struct FineDecomposeResult {
  std::vector<CropView> crops;
  bool clamped = false;  // m exceeded the number of saliency windows
};

/// Splits img into rows*cols non-overlapping tiles (edge-replicated padding
/// when dimensions do not divide) and average-pools each tile by factor.
/// Patches are returned in row-major order.
std::vector<ImageGrid> coarse_decompose(const ImageGrid& img, GridShape grid, int factor);

/// Per-window pixel variance summed over channels, on a stride-window grid.
SaliencyMap local_saliency(const ImageGrid& img, int window);

/// Top-m saliency windows (ties to the smaller row-major index), each
/// expanded to crop_size centered on the window and clamped to the image.
/// Crops come back sorted by non-increasing score at original resolution.
FineDecomposeResult fine_decompose(const ImageGrid& img, const SaliencyMap& saliency, int m,
                                   int crop_w, int crop_h);

/// Validates and assembles a ViewSet; throws on tiling or bounds violations.
ViewSet unify(ImageGrid original, std::vector<ImageGrid> coarse, std::vector<CropView> fine,
              GridShape grid, int factor);

/// coarse_decompose + local_saliency + fine_decompose + unify in one call.
ViewSet build_view_set(const ImageGrid& img, GridShape grid, int factor, int m, int crop_w,
                       int crop_h, int saliency_window);

}  // namespace cofidec
