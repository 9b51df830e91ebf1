#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "pcg/types.hpp"

namespace pcg {

inline constexpr std::uint32_t kIdxImageMagic = 0x00000803;
inline constexpr std::uint32_t kIdxLabelMagic = 0x00000801;
inline constexpr int kClasses = 10;

/// Grayscale images in [0, 1], one column per image, row-major pixels.
struct ImageDataset {
  Matrix images;
  std::vector<int> labels;
  Index rows = 28;
  Index cols = 28;
  std::string split;

  Index size() const { return images.cols(); }
  Index pixels() const { return rows * cols; }

  /// First `count` images (all of them when count exceeds the size).
  ImageDataset head(Index count) const;
  /// Images whose label is in `classes`.
  ImageDataset filter(const std::vector<int>& classes) const;
  /// Pixels stacked over one-hot labels (pixels() + 10 rows).
  Matrix with_onehot_labels() const;
  /// Pixel range, count agreement, label range. Throws FormatError.
  void validate() const;
};

/// Reads an IDX image file (magic 0x803) and its IDX label file (magic 0x801).
ImageDataset load_idx(const std::string& images_path, const std::string& labels_path);

/// Writes IDX files; used to build fixtures and synthetic sets.
void write_idx(const ImageDataset& data, const std::string& images_path, const std::string& labels_path);

enum class Region { Top, Bottom };

Region parse_region(const std::string& name);
std::string to_string(Region r);

struct Corruption {
  enum class Kind { Gaussian, MaskRegion };
  Kind kind = Kind::Gaussian;
  double variance = 0.5;
  std::uint64_t seed = 0;
  double fraction = 0.5;
  Region region = Region::Top;

  static Corruption gaussian(double variance, std::uint64_t seed);
  /// Zeroes `fraction` of the rows at `region`; the kept band has ceil(rows * (1 - fraction)) rows.
  static Corruption mask_region(double fraction, Region region);

  void validate() const;
};

struct CorruptedImage {
  Vector image;
  std::vector<Index> masked;  // pixel indices that were zeroed (mask_region only)
  std::vector<Index> known;   // complement of `masked`
};

/// Gaussian: adds N(0, variance) per pixel, then clips to [0, 1].
/// MaskRegion: zeroes the rows of the masked band.
CorruptedImage corrupt(const Eigen::Ref<const Vector>& image, Index rows, Index cols, const Corruption& c);

/// Number of masked rows for a MaskRegion corruption of an image with `rows` rows.
Index masked_rows(Index rows, double fraction);

Vector onehot(int label, int classes = kClasses);

struct GridLayout {
  Index grid_rows = 1;
  Index grid_cols = 1;
  Index tile_rows = 28;
  Index tile_cols = 28;
};

/// Tiles images (columns of `states`, row-major over the grid) into a binary
/// PGM (P5, maxval 255). Values are clipped to [0, 1] before scaling.
void export_image_grid(const Eigen::Ref<const Matrix>& states, const GridLayout& layout, const std::string& path);

struct GrayImage {
  Index width = 0;
  Index height = 0;
  std::vector<std::uint8_t> pixels;
};

GrayImage read_pgm(const std::string& path);

/// Class-dependent prototype patterns with per-image noise, for smoke runs
/// that do not need real data. `prototype_seed` fixes the ten class patterns;
/// `seed` drives labels and noise, so splits drawn with different seeds share classes.
ImageDataset synthetic_digits(Index count, Index side, std::uint64_t seed, std::uint64_t prototype_seed = 0);

/// Per-column mean squared error between two image batches.
Vector mse_per_column(const Eigen::Ref<const Matrix>& a, const Eigen::Ref<const Matrix>& b);

}  // namespace pcg
