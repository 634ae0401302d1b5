#pragma once

// Image branch: a deterministic two-scale cell-statistics descriptor with the
// same 2560-wide output as the CNN backbone it replaces.
//
// Layout: [scale][plane][cell_row][cell_col] with 2 scales (full frame, then
// the centered half-size crop), 5 planes (mean R, mean G, mean B, luminance
// std, mean gradient magnitude) and a 16x16 cell grid. Each of the 10
// (scale, plane) blocks is z-scored within the image.

#include <algorithm>
#include <array>
#include <cmath>
#include <filesystem>
#include <vector>

#include "ledger/domain.hpp"
#include "ledger/image.hpp"
#include "ledger/rng.hpp"
#include "ledger/sidecar.hpp"

namespace ledger {

inline constexpr std::size_t kCellGrid = 16;
inline constexpr std::size_t kCells = kCellGrid * kCellGrid;
inline constexpr std::size_t kPlanesPerScale = 5;
inline constexpr std::size_t kPlaneCount = 2 * kPlanesPerScale;
static_assert(kPlaneCount * kCells == kImageDim);

inline constexpr std::size_t kNoiseImageSize = 64;

enum class ImageSource { BaselineStats, Precomputed, NoisePlaceholder, ZeroPlaceholder };

enum class VideoPolicy { Noise, Zero };

struct ImageVector {
  std::vector<double> values = std::vector<double>(kImageDim, 0.0);
  ImageSource source = ImageSource::BaselineStats;
};

namespace image_detail {

struct Span1D {
  std::size_t pixel;
  double weight;
};

// Pixels overlapping [lo, hi) with their overlap lengths.
inline std::vector<Span1D> overlap(double lo, double hi, std::size_t limit) {
  std::vector<Span1D> out;
  const auto first = static_cast<std::size_t>(std::floor(lo));
  for (std::size_t p = first; p < limit && static_cast<double>(p) < hi; ++p) {
    const double w = std::min(hi, static_cast<double>(p + 1)) - std::max(lo, static_cast<double>(p));
    if (w > 0.0) out.push_back({p, w});
  }
  return out;
}

inline double luminance(double r, double g, double b) { return 0.299 * r + 0.587 * g + 0.114 * b; }

// Pixel-level planes: R, G, B, luminance, gradient magnitude.
struct PixelPlanes {
  std::size_t width = 0;
  std::size_t height = 0;
  std::array<std::vector<double>, 5> plane;
};

inline PixelPlanes pixel_planes(const Image& img) {
  PixelPlanes pp;
  pp.width = img.width;
  pp.height = img.height;
  const std::size_t n = img.width * img.height;
  for (auto& p : pp.plane) p.assign(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const double r = img.rgb[i * 3], g = img.rgb[i * 3 + 1], b = img.rgb[i * 3 + 2];
    pp.plane[0][i] = r;
    pp.plane[1][i] = g;
    pp.plane[2][i] = b;
    pp.plane[3][i] = luminance(r, g, b);
  }
  const auto& lum = pp.plane[3];
  auto L = [&](std::size_t y, std::size_t x) { return lum[y * img.width + x]; };
  // Central differences with clamped indices at the border.
  for (std::size_t y = 0; y < img.height; ++y) {
    const std::size_t ym = y == 0 ? 0 : y - 1;
    const std::size_t yp = std::min(y + 1, img.height - 1);
    for (std::size_t x = 0; x < img.width; ++x) {
      const std::size_t xm = x == 0 ? 0 : x - 1;
      const std::size_t xp = std::min(x + 1, img.width - 1);
      const double gx = 0.5 * (L(y, xp) - L(y, xm));
      const double gy = 0.5 * (L(yp, x) - L(ym, x));
      pp.plane[4][y * img.width + x] = std::sqrt(gx * gx + gy * gy);
    }
  }
  return pp;
}

// Area-averaged cell statistics over the region [x0, x0+w) x [y0, y0+h),
// written into out[plane * kCells + cell].
inline void cell_stats(const PixelPlanes& pp, double x0, double y0, double w, double h,
                       double* out) {
  const double cw = w / kCellGrid, ch = h / kCellGrid;
  std::array<std::vector<Span1D>, kCellGrid> cols, rows;
  for (std::size_t c = 0; c < kCellGrid; ++c) {
    cols[c] = overlap(x0 + c * cw, x0 + (c + 1) * cw, pp.width);
    rows[c] = overlap(y0 + c * ch, y0 + (c + 1) * ch, pp.height);
  }
  for (std::size_t ci = 0; ci < kCellGrid; ++ci) {
    for (std::size_t cj = 0; cj < kCellGrid; ++cj) {
      double area = 0.0, sr = 0.0, sg = 0.0, sb = 0.0, sl = 0.0, sgrad = 0.0;
      for (const auto& ry : rows[ci]) {
        for (const auto& rx : cols[cj]) {
          const double wt = ry.weight * rx.weight;
          const std::size_t i = ry.pixel * pp.width + rx.pixel;
          area += wt;
          sr += wt * pp.plane[0][i];
          sg += wt * pp.plane[1][i];
          sb += wt * pp.plane[2][i];
          sl += wt * pp.plane[3][i];
          sgrad += wt * pp.plane[4][i];
        }
      }
      const double mean_l = sl / area;
      double var = 0.0;
      for (const auto& ry : rows[ci]) {
        for (const auto& rx : cols[cj]) {
          const double d = pp.plane[3][ry.pixel * pp.width + rx.pixel] - mean_l;
          var += ry.weight * rx.weight * d * d;
        }
      }
      const std::size_t cell = ci * kCellGrid + cj;
      out[0 * kCells + cell] = sr / area;
      out[1 * kCells + cell] = sg / area;
      out[2 * kCells + cell] = sb / area;
      out[3 * kCells + cell] = std::sqrt(var / area);
      out[4 * kCells + cell] = sgrad / area;
    }
  }
}

// Z-score in place; a (numerically) constant block becomes all zeros.
inline void standardize(double* v, std::size_t n) {
  const auto [lo, hi] = std::minmax_element(v, v + n);
  const double scale = std::max({1.0, std::abs(*lo), std::abs(*hi)});
  if (*hi - *lo <= 1e-9 * scale) {
    std::fill(v, v + n, 0.0);
    return;
  }
  double mean = 0.0;
  for (std::size_t i = 0; i < n; ++i) mean += v[i];
  mean /= static_cast<double>(n);
  double var = 0.0;
  for (std::size_t i = 0; i < n; ++i) var += (v[i] - mean) * (v[i] - mean);
  const double sd = std::sqrt(var / static_cast<double>(n));
  for (std::size_t i = 0; i < n; ++i) v[i] = (v[i] - mean) / sd;
}

}  // namespace image_detail

inline ImageVector image_to_features(const Image& img) {
  if (img.height < 2 || img.width < 2) throw TooSmall(img.height, img.width);
  const auto pp = image_detail::pixel_planes(img);
  ImageVector out;
  out.source = ImageSource::BaselineStats;
  const double w = static_cast<double>(img.width), h = static_cast<double>(img.height);
  double* full = out.values.data();
  double* center = out.values.data() + kPlanesPerScale * kCells;
  image_detail::cell_stats(pp, 0.0, 0.0, w, h, full);
  image_detail::cell_stats(pp, w / 4.0, h / 4.0, w / 2.0, h / 2.0, center);
  for (std::size_t p = 0; p < kPlaneCount; ++p) {
    image_detail::standardize(out.values.data() + p * kCells, kCells);
  }
  return out;
}

inline ImageVector image_to_features(const std::vector<std::uint8_t>& encoded) {
  return image_to_features(decode_image(encoded));
}

inline Image noise_image(std::uint64_t seed, std::size_t size = kNoiseImageSize) {
  Rng rng(seed);
  Image img(size, size);
  for (auto& px : img.rgb) px = static_cast<std::uint8_t>(rng.next() >> 56);
  return img;
}

// Stand-in for video posts: features of a seeded uniform-noise image.
inline ImageVector video_placeholder_features(std::uint64_t seed) {
  ImageVector v = image_to_features(noise_image(seed));
  v.source = ImageSource::NoisePlaceholder;
  return v;
}

inline ImageVector image_vector_from(const EmbeddingTable& table, const std::string& post_id) {
  ImageVector v;
  v.values = table.lookup(post_id, kImageDim);
  v.source = ImageSource::Precomputed;
  return v;
}

inline ImageVector load_image_embedding(const std::filesystem::path& path, const std::string& post_id) {
  return image_vector_from(EmbeddingTable::read(path), post_id);
}

// Image branch of a post under the baseline featurizer.
inline ImageVector featurize_media(const MediaContent& media, VideoPolicy policy = VideoPolicy::Noise) {
  switch (media.kind) {
    case MediaKind::Image:
      if (media.image_bytes) return image_to_features(*media.image_bytes);
      if (media.image_path) return image_to_features(read_file_bytes(*media.image_path));
      throw ImageDecodeError("image media has neither bytes nor a path");
    case MediaKind::VideoPlaceholder:
      if (policy == VideoPolicy::Zero) {
        ImageVector v;
        v.source = ImageSource::ZeroPlaceholder;
        return v;
      }
      return video_placeholder_features(media.seed.value_or(0));
    case MediaKind::PrecomputedEmbedding: {
      if (!media.embedding || media.embedding->size() != kImageDim) {
        throw DimensionError(media.embedding ? media.embedding->size() : 0, kImageDim);
      }
      ImageVector v;
      v.values = *media.embedding;
      v.source = ImageSource::Precomputed;
      return v;
    }
  }
  return {};
}

}  // namespace ledger
