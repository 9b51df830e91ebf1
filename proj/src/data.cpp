#include "pcg/data.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iterator>
#include <random>
#include <sstream>

#include "pcg/errors.hpp"

namespace pcg {

namespace {

std::vector<std::uint8_t> read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::uint32_t big_endian_u32(const std::vector<std::uint8_t>& bytes, std::size_t offset, const std::string& path) {
  if (bytes.size() < offset + 4) throw FormatError(path + ": truncated IDX header");
  return (std::uint32_t{bytes[offset]} << 24) | (std::uint32_t{bytes[offset + 1]} << 16) |
         (std::uint32_t{bytes[offset + 2]} << 8) | std::uint32_t{bytes[offset + 3]};
}

void put_big_endian_u32(std::ostream& os, std::uint32_t v) {
  const char b[4] = {static_cast<char>(v >> 24), static_cast<char>(v >> 16), static_cast<char>(v >> 8),
                     static_cast<char>(v)};
  os.write(b, 4);
}

std::string hex(std::uint32_t v) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "0x%08X", v);
  return buf;
}

void check_magic(std::uint32_t got, std::uint32_t expected, const std::string& path) {
  if (got != expected) {
    throw FormatError(path + ": bad IDX magic " + hex(got) + ", expected " + hex(expected));
  }
}

}  // namespace

// ---------------------------------------------------------------- dataset

ImageDataset ImageDataset::head(Index count) const {
  ImageDataset out = *this;
  const Index keep = std::min(count, size());
  out.images = images.leftCols(keep);
  out.labels.assign(labels.begin(), labels.begin() + keep);
  return out;
}

ImageDataset ImageDataset::filter(const std::vector<int>& classes) const {
  std::vector<Index> cols;
  for (Index i = 0; i < size(); ++i) {
    if (std::find(classes.begin(), classes.end(), labels[static_cast<std::size_t>(i)]) != classes.end()) {
      cols.push_back(i);
    }
  }
  ImageDataset out = *this;
  out.images = images(Eigen::all, cols);
  out.labels.clear();
  for (Index i : cols) out.labels.push_back(labels[static_cast<std::size_t>(i)]);
  return out;
}

Matrix ImageDataset::with_onehot_labels() const {
  Matrix out = Matrix::Zero(pixels() + kClasses, size());
  out.topRows(pixels()) = images;
  for (Index i = 0; i < size(); ++i) out(pixels() + labels[static_cast<std::size_t>(i)], i) = 1.0;
  return out;
}

void ImageDataset::validate() const {
  if (images.rows() != pixels()) throw FormatError("image rows do not match the declared geometry");
  if (static_cast<Index>(labels.size()) != size()) throw FormatError("image and label counts differ");
  if (size() > 0 && (images.minCoeff() < 0.0 || images.maxCoeff() > 1.0)) {
    throw FormatError("pixel values outside [0, 1]");
  }
  for (int l : labels) {
    if (l < 0 || l >= kClasses) throw FormatError("label " + std::to_string(l) + " outside 0..9");
  }
}

ImageDataset load_idx(const std::string& images_path, const std::string& labels_path) {
  const auto img = read_file(images_path);
  check_magic(big_endian_u32(img, 0, images_path), kIdxImageMagic, images_path);
  const std::uint32_t count = big_endian_u32(img, 4, images_path);
  const std::uint32_t rows = big_endian_u32(img, 8, images_path);
  const std::uint32_t cols = big_endian_u32(img, 12, images_path);
  const std::size_t pixels = std::size_t{rows} * cols;
  if (img.size() < 16 + std::size_t{count} * pixels) {
    throw FormatError(images_path + ": truncated, header announces " + std::to_string(count) + " images");
  }

  const auto lab = read_file(labels_path);
  check_magic(big_endian_u32(lab, 0, labels_path), kIdxLabelMagic, labels_path);
  const std::uint32_t label_count = big_endian_u32(lab, 4, labels_path);
  if (label_count != count) {
    throw FormatError("image count " + std::to_string(count) + " != label count " + std::to_string(label_count));
  }
  if (lab.size() < 8 + std::size_t{label_count}) {
    throw FormatError(labels_path + ": truncated, header announces " + std::to_string(label_count) + " labels");
  }

  ImageDataset out;
  out.rows = rows;
  out.cols = cols;
  out.images.resize(static_cast<Index>(pixels), count);
  const std::uint8_t* base = img.data() + 16;
  for (std::uint32_t i = 0; i < count; ++i) {
    for (std::size_t p = 0; p < pixels; ++p) {
      out.images(static_cast<Index>(p), i) = base[std::size_t{i} * pixels + p] / 255.0;
    }
  }
  out.labels.assign(lab.begin() + 8, lab.begin() + 8 + label_count);
  out.validate();
  return out;
}

void write_idx(const ImageDataset& data, const std::string& images_path, const std::string& labels_path) {
  std::ofstream img(images_path, std::ios::binary);
  std::ofstream lab(labels_path, std::ios::binary);
  if (!img || !lab) throw Error("cannot write IDX files " + images_path + ", " + labels_path);
  put_big_endian_u32(img, kIdxImageMagic);
  put_big_endian_u32(img, static_cast<std::uint32_t>(data.size()));
  put_big_endian_u32(img, static_cast<std::uint32_t>(data.rows));
  put_big_endian_u32(img, static_cast<std::uint32_t>(data.cols));
  for (Index i = 0; i < data.size(); ++i) {
    for (Index p = 0; p < data.pixels(); ++p) {
      const double v = std::clamp(data.images(p, i), 0.0, 1.0);
      img.put(static_cast<char>(static_cast<std::uint8_t>(std::lround(v * 255.0))));
    }
  }
  put_big_endian_u32(lab, kIdxLabelMagic);
  put_big_endian_u32(lab, static_cast<std::uint32_t>(data.labels.size()));
  for (int l : data.labels) lab.put(static_cast<char>(l));
}

// ---------------------------------------------------------------- corruption

Region parse_region(const std::string& name) {
  if (name == "top") return Region::Top;
  if (name == "bottom") return Region::Bottom;
  throw ConfigError("unknown region '" + name + "' (expected top or bottom)");
}

std::string to_string(Region r) { return r == Region::Top ? "top" : "bottom"; }

Corruption Corruption::gaussian(double variance, std::uint64_t seed) {
  Corruption c;
  c.kind = Kind::Gaussian;
  c.variance = variance;
  c.seed = seed;
  return c;
}

Corruption Corruption::mask_region(double fraction, Region region) {
  Corruption c;
  c.kind = Kind::MaskRegion;
  c.fraction = fraction;
  c.region = region;
  return c;
}

void Corruption::validate() const {
  if (kind == Kind::Gaussian && !(variance >= 0.0)) throw ConfigError("noise variance must be >= 0");
  if (kind == Kind::MaskRegion && !(fraction > 0.0 && fraction < 1.0)) {
    throw ConfigError("mask fraction must lie in (0, 1)");
  }
}

Index masked_rows(Index rows, double fraction) {
  const auto kept = static_cast<Index>(std::ceil(static_cast<double>(rows) * (1.0 - fraction) - 1e-9));
  return rows - std::clamp<Index>(kept, 0, rows);
}

CorruptedImage corrupt(const Eigen::Ref<const Vector>& image, Index rows, Index cols, const Corruption& c) {
  c.validate();
  require_same_size(image.size(), rows * cols, "corrupt: image size vs geometry");
  CorruptedImage out;
  out.image = image;
  if (c.kind == Corruption::Kind::Gaussian) {
    if (c.variance > 0.0) {
      std::mt19937_64 rng(c.seed);
      std::normal_distribution<double> noise(0.0, std::sqrt(c.variance));
      for (Index p = 0; p < out.image.size(); ++p) out.image(p) = std::clamp(out.image(p) + noise(rng), 0.0, 1.0);
    }
    for (Index p = 0; p < out.image.size(); ++p) out.known.push_back(p);
    return out;
  }
  const Index masked = masked_rows(rows, c.fraction);
  const Index first = c.region == Region::Top ? 0 : rows - masked;
  for (Index r = 0; r < rows; ++r) {
    const bool hidden = r >= first && r < first + masked;
    for (Index col = 0; col < cols; ++col) {
      const Index p = r * cols + col;
      if (hidden) {
        out.image(p) = 0.0;
        out.masked.push_back(p);
      } else {
        out.known.push_back(p);
      }
    }
  }
  return out;
}

Vector onehot(int label, int classes) {
  if (label < 0 || label >= classes) {
    throw ConfigError("label " + std::to_string(label) + " outside 0.." + std::to_string(classes - 1));
  }
  Vector v = Vector::Zero(classes);
  v(label) = 1.0;
  return v;
}

// ---------------------------------------------------------------- PGM

void export_image_grid(const Eigen::Ref<const Matrix>& states, const GridLayout& layout, const std::string& path) {
  const Index tile = layout.tile_rows * layout.tile_cols;
  if (states.rows() < tile) {
    throw DimensionError("export_image_grid: vectors of size " + std::to_string(states.rows()) +
                         " cannot fill " + std::to_string(layout.tile_rows) + "x" + std::to_string(layout.tile_cols) +
                         " tiles");
  }
  if (states.cols() > layout.grid_rows * layout.grid_cols) {
    throw DimensionError("export_image_grid: more images than grid cells");
  }
  const Index width = layout.grid_cols * layout.tile_cols;
  const Index height = layout.grid_rows * layout.tile_rows;
  std::vector<std::uint8_t> raster(static_cast<std::size_t>(width * height), 0);
  for (Index k = 0; k < states.cols(); ++k) {
    const Index gy = k / layout.grid_cols;
    const Index gx = k % layout.grid_cols;
    for (Index r = 0; r < layout.tile_rows; ++r) {
      for (Index c = 0; c < layout.tile_cols; ++c) {
        const double v = std::clamp(states(r * layout.tile_cols + c, k), 0.0, 1.0);
        const Index y = gy * layout.tile_rows + r;
        const Index x = gx * layout.tile_cols + c;
        raster[static_cast<std::size_t>(y * width + x)] = static_cast<std::uint8_t>(std::lround(v * 255.0));
      }
    }
  }
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error("cannot open " + path + " for writing");
  os << "P5\n" << width << ' ' << height << "\n255\n";
  os.write(reinterpret_cast<const char*>(raster.data()), static_cast<std::streamsize>(raster.size()));
  if (!os) throw Error("failed writing " + path);
}

GrayImage read_pgm(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path);
  std::string magic;
  int maxval = 0;
  GrayImage img;
  in >> magic >> img.width >> img.height >> maxval;
  if (magic != "P5" || maxval != 255 || img.width <= 0 || img.height <= 0) {
    throw FormatError(path + ": not an 8-bit binary PGM");
  }
  in.get();
  img.pixels.resize(static_cast<std::size_t>(img.width * img.height));
  in.read(reinterpret_cast<char*>(img.pixels.data()), static_cast<std::streamsize>(img.pixels.size()));
  if (in.gcount() != static_cast<std::streamsize>(img.pixels.size())) throw FormatError(path + ": truncated PGM");
  return img;
}

// ---------------------------------------------------------------- synthetic

ImageDataset synthetic_digits(Index count, Index side, std::uint64_t seed, std::uint64_t prototype_seed) {
  if (side < 4) throw ConfigError("synthetic images need side >= 4");
  std::mt19937_64 proto_rng(prototype_seed);
  std::uniform_int_distribution<Index> coord(0, side - 1);

  // Each class draws three random strokes on the canvas.
  std::vector<Vector> prototypes;
  for (int c = 0; c < kClasses; ++c) {
    Vector proto = Vector::Zero(side * side);
    for (int stroke = 0; stroke < 3; ++stroke) {
      const double x0 = static_cast<double>(coord(proto_rng)), y0 = static_cast<double>(coord(proto_rng));
      const double x1 = static_cast<double>(coord(proto_rng)), y1 = static_cast<double>(coord(proto_rng));
      for (int s = 0; s <= 4 * side; ++s) {
        const double u = s / (4.0 * static_cast<double>(side));
        const auto x = static_cast<Index>(std::lround(x0 + u * (x1 - x0)));
        const auto y = static_cast<Index>(std::lround(y0 + u * (y1 - y0)));
        proto(y * side + x) = 1.0;
      }
    }
    prototypes.push_back(std::move(proto));
  }

  std::mt19937_64 rng(seed);
  ImageDataset out;
  out.rows = side;
  out.cols = side;
  out.split = "synthetic";
  out.images.resize(side * side, count);
  std::uniform_int_distribution<int> label(0, kClasses - 1);
  std::normal_distribution<double> jitter(0.0, 0.1);
  for (Index i = 0; i < count; ++i) {
    const int l = label(rng);
    out.labels.push_back(l);
    for (Index p = 0; p < side * side; ++p) {
      out.images(p, i) = std::clamp(prototypes[static_cast<std::size_t>(l)](p) + jitter(rng), 0.0, 1.0);
    }
  }
  return out;
}

Vector mse_per_column(const Eigen::Ref<const Matrix>& a, const Eigen::Ref<const Matrix>& b) {
  require_same_size(a.rows(), b.rows(), "mse rows");
  require_same_size(a.cols(), b.cols(), "mse cols");
  return (a - b).colwise().squaredNorm().transpose() / static_cast<double>(a.rows());
}

}  // namespace pcg
