#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "pcg/data.hpp"
#include "pcg/errors.hpp"

using namespace pcg;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "pcg_unit_data";
  fs::create_directories(dir);
  return dir / name;
}

ImageDataset tiny_set() {
  ImageDataset d;
  d.rows = 3;
  d.cols = 4;
  d.images.resize(12, 5);
  for (Index j = 0; j < 5; ++j)
    for (Index i = 0; i < 12; ++i) d.images(i, j) = static_cast<double>((i * 37 + j * 11) % 256) / 255.0;
  d.labels = {3, 0, 9, 9, 1};
  return d;
}

void truncate_file(const fs::path& p, std::uintmax_t drop) { fs::resize_file(p, fs::file_size(p) - drop); }

}  // namespace

TEST_SUITE("data") {
  TEST_CASE("IDX round trip is exact for 8-bit values") {
    const ImageDataset d = tiny_set();
    const auto img = scratch("rt-images.idx").string();
    const auto lab = scratch("rt-labels.idx").string();
    write_idx(d, img, lab);
    const ImageDataset back = load_idx(img, lab);
    CHECK(back.rows == 3);
    CHECK(back.cols == 4);
    CHECK(back.labels == d.labels);
    CHECK((back.images - d.images).cwiseAbs().maxCoeff() < 1e-15);
    CHECK_NOTHROW(back.validate());
  }

  TEST_CASE("IDX errors: missing file, bad magic, truncation, count mismatch") {
    const ImageDataset d = tiny_set();
    const auto img = scratch("bad-images.idx").string();
    const auto lab = scratch("bad-labels.idx").string();
    write_idx(d, img, lab);
    CHECK_THROWS_AS(load_idx(img + ".missing", lab), DataError);
    CHECK_THROWS_AS(load_idx(lab, img), FormatError);  // swapped: magics do not match

    write_idx(d, img, lab);
    truncate_file(img, 3);
    CHECK_THROWS_AS(load_idx(img, lab), FormatError);

    write_idx(d, img, lab);
    truncate_file(lab, 1);
    CHECK_THROWS_AS(load_idx(img, lab), FormatError);

    write_idx(d, img, lab);
    { std::ofstream(img, std::ios::binary) << "ab"; }
    CHECK_THROWS_AS(load_idx(img, lab), FormatError);

    ImageDataset fewer = d;
    fewer.labels.pop_back();
    CHECK_THROWS_AS(fewer.validate(), FormatError);
  }

  TEST_CASE("dataset helpers") {
    const ImageDataset d = tiny_set();
    CHECK(d.head(2).size() == 2);
    CHECK(d.head(100).size() == 5);
    const ImageDataset nines = d.filter({9});
    CHECK(nines.size() == 2);
    CHECK(nines.images.col(0) == d.images.col(2));
    const Matrix stacked = d.with_onehot_labels();
    CHECK(stacked.rows() == 22);
    CHECK(stacked.bottomRows(10).colwise().sum().isOnes());
    CHECK(stacked(12 + 3, 0) == 1.0);
    CHECK(onehot(4)(4) == 1.0);
    CHECK(onehot(4).sum() == 1.0);
    CHECK_THROWS_AS(onehot(10), ConfigError);
  }

  TEST_CASE("PGM grid export: dimensions and pixel values") {
    Matrix states(28 * 28, 10);
    for (Index k = 0; k < 10; ++k) states.col(k).setConstant(static_cast<double>(k) / 9.0);
    states(0, 0) = -3.0;  // clipped
    states(1, 0) = 7.0;
    const auto path = scratch("grid.pgm").string();
    GridLayout layout;
    layout.grid_rows = 10;
    layout.grid_cols = 1;
    export_image_grid(states, layout, path);
    const GrayImage img = read_pgm(path);
    CHECK(img.width == 28);
    CHECK(img.height == 280);
    REQUIRE(img.pixels.size() == 28u * 280u);
    CHECK(img.pixels[0] == 0);
    CHECK(img.pixels[1] == 255);
    CHECK(img.pixels[28 * 28 * 9 + 5] == 255);  // first row of tile 9
    CHECK(img.pixels[28 * 28 * 3 + 5] == static_cast<std::uint8_t>(std::lround(255.0 * 3.0 / 9.0)));

    layout.grid_rows = 2;
    layout.grid_cols = 2;
    CHECK_THROWS_AS(export_image_grid(states, layout, path), DimensionError);
    CHECK_THROWS_AS(read_pgm(path + ".missing"), DataError);
    { std::ofstream(path) << "P2\n1 1\n255\n0\n"; }
    CHECK_THROWS_AS(read_pgm(path), FormatError);
  }

  TEST_CASE("mask_region rows and region placement") {
    CHECK(masked_rows(28, 0.5) == 14);
    CHECK(masked_rows(28, 0.67) == 18);
    CHECK(masked_rows(10, 0.25) == 2);
    const Vector img = Vector::Constant(6 * 5, 0.7);
    const CorruptedImage top = corrupt(img, 6, 5, Corruption::mask_region(0.5, Region::Top));
    CHECK(top.masked.size() == 15);
    CHECK(top.known.size() == 15);
    CHECK(top.image.head(15).isZero(0.0));
    CHECK(top.image.tail(15).isConstant(0.7));
    const CorruptedImage bottom = corrupt(img, 6, 5, Corruption::mask_region(0.5, Region::Bottom));
    CHECK(bottom.masked.front() == 15);
    CHECK(bottom.image.head(15).isConstant(0.7));
    CHECK_THROWS_AS(corrupt(img, 6, 5, Corruption::mask_region(1.0, Region::Top)), ConfigError);
    CHECK_THROWS_AS(corrupt(img, 5, 5, Corruption::mask_region(0.5, Region::Top)), DimensionError);
  }

  TEST_CASE("Gaussian corruption: deterministic, clipped, zero variance is identity") {
    const Vector img = Vector::Constant(100, 0.5);
    const auto a = corrupt(img, 10, 10, Corruption::gaussian(0.5, 7));
    const auto b = corrupt(img, 10, 10, Corruption::gaussian(0.5, 7));
    const auto c = corrupt(img, 10, 10, Corruption::gaussian(0.5, 8));
    CHECK(a.image == b.image);
    CHECK(a.image != c.image);
    CHECK(a.image.minCoeff() >= 0.0);
    CHECK(a.image.maxCoeff() <= 1.0);
    CHECK(a.known.size() == 100);
    CHECK(corrupt(img, 10, 10, Corruption::gaussian(0.0, 7)).image == img);
  }

  TEST_CASE("noise variance is honoured before clipping") {
    const Vector img = Vector::Constant(20000, 0.5);
    const auto noisy = corrupt(img, 100, 200, Corruption::gaussian(0.01, 3));
    const double var = (noisy.image.array() - 0.5).square().mean();
    CHECK(var == doctest::Approx(0.01).epsilon(0.05));
  }

  TEST_CASE("synthetic digits: shared prototypes across seeds, valid range") {
    const ImageDataset a = synthetic_digits(200, 10, 1);
    const ImageDataset b = synthetic_digits(200, 10, 2);
    CHECK_NOTHROW(a.validate());
    CHECK(a.rows == 10);
    CHECK(a.pixels() == 100);
    CHECK(synthetic_digits(200, 10, 1).images == a.images);
    // Class means of two splits agree far better than means of different classes.
    auto mean_of = [](const ImageDataset& d, int label) {
      Vector m = Vector::Zero(d.pixels());
      int n = 0;
      for (Index i = 0; i < d.size(); ++i)
        if (d.labels[static_cast<std::size_t>(i)] == label) {
          m += d.images.col(i);
          ++n;
        }
      return Vector(m / std::max(n, 1));
    };
    const double same = (mean_of(a, 3) - mean_of(b, 3)).norm();
    const double other = (mean_of(a, 3) - mean_of(b, 5)).norm();
    CHECK(same < 0.5 * other);
  }

  TEST_CASE("per-column MSE") {
    Matrix a = Matrix::Zero(4, 2);
    Matrix b = Matrix::Zero(4, 2);
    b.col(1).setConstant(2.0);
    const Vector m = mse_per_column(a, b);
    CHECK(m(0) == 0.0);
    CHECK(m(1) == 4.0);
  }
}
