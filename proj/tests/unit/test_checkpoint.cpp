#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "pcg/checkpoint.hpp"
#include "pcg/dynamics.hpp"
#include "pcg/errors.hpp"
#include "pcg/topology.hpp"

using namespace pcg;

namespace {

PCGraph sample_assembly() {
  AssemblySpec spec;
  spec.cluster_sizes = {9, 7, 5};
  spec.inter_edges = chain_edges(3);
  spec.p = 0.3;
  spec.k_frac = 0.4;
  spec.pixels = 6;
  spec.labels = 2;
  spec.label_targets = {0};
  spec.pixel_sources = {2};
  spec.seed = 5;
  GraphOptions opts;
  opts.activation = Activation::Tanh;
  opts.seed = 6;
  return assembly(spec, opts);
}

}  // namespace

TEST_SUITE("checkpoint") {
  TEST_CASE("round trip preserves topology, weights and predictions bit for bit") {
    const PCGraph g = sample_assembly();
    const CheckpointMeta meta{12, 99, "abc123"};
    const Checkpoint back = decode_checkpoint(encode_checkpoint(g, meta));
    CHECK(back.meta == meta);
    CHECK(back.graph.n() == g.n());
    CHECK(back.graph.d() == g.d());
    CHECK(back.graph.activation() == g.activation());
    CHECK(back.graph.descriptor() == g.descriptor());
    CHECK(back.graph.mask().matrix() == g.mask().matrix());
    CHECK(back.graph.weights() == g.weights());
    CHECK(back.graph.clusters() == g.clusters());
    CHECK(back.graph.mask().p() == g.mask().p());
    CHECK(back.graph.mask().seed() == g.mask().seed());
    Matrix x = Matrix::Random(g.n(), 3);
    CHECK(predict(back.graph, x) == predict(g, x));
  }

  TEST_CASE("graphs without clusters round-trip too") {
    const PCGraph g = fully_connected(11, 3);
    const Checkpoint back = decode_checkpoint(encode_checkpoint(g, {}));
    CHECK_FALSE(back.graph.clusters());
    CHECK(back.graph.weights() == g.weights());
  }

  TEST_CASE("mask bits are stored row-major, least significant bit first") {
    MaskMatrix m = MaskMatrix::Zero(3, 3);
    m(0, 1) = 1;  // bit 1
    m(2, 0) = 1;  // bit 6
    m(1, 2) = 1;  // bit 5
    const PCGraph g(1, TopologyMask(m), Matrix::Zero(3, 3), Activation::Identity, "x");
    const std::string bytes = encode_checkpoint(g, {});
    // header: magic 8 + version 4 + n 8 + d 8 + activation 4 + descriptor (4 + 1)
    // + has_clusters 1 + has_p 1 + mask seed 8 + epochs 4 + seed 8 + digest 4
    const std::size_t offset = 8 + 4 + 8 + 8 + 4 + 5 + 1 + 1 + 8 + 4 + 8 + 4;
    CHECK(static_cast<unsigned char>(bytes[offset]) == ((1u << 1) | (1u << 5) | (1u << 6)));
    CHECK(static_cast<unsigned char>(bytes[offset + 1]) == 0u);
    CHECK(bytes.size() == offset + 2 + 9 * 8 + 4);
  }

  TEST_CASE("corruption, truncation and version mismatches are detected") {
    const PCGraph g = sample_assembly();
    const std::string good = encode_checkpoint(g, {1, 2, "d"});

    std::string flipped = good;
    flipped[flipped.size() / 2] = static_cast<char>(flipped[flipped.size() / 2] ^ 0x10);
    CHECK_THROWS_AS(decode_checkpoint(flipped), ChecksumError);

    CHECK_THROWS_AS(decode_checkpoint(good.substr(0, good.size() - 1)), ChecksumError);
    CHECK_THROWS_AS(decode_checkpoint(good.substr(0, 100)), ChecksumError);
    CHECK_THROWS_AS(decode_checkpoint(good.substr(0, 13)), ChecksumError);

    std::string versioned = good;
    versioned[8] = 2;
    CHECK_THROWS_AS(decode_checkpoint(versioned), VersionError);

    std::string magic = good;
    magic[0] = 'X';
    CHECK_THROWS_AS(decode_checkpoint(magic), FormatError);
    CHECK_THROWS_AS(decode_checkpoint(""), FormatError);
  }

  TEST_CASE("save and load through the filesystem") {
    const auto dir = std::filesystem::temp_directory_path() / "pcg_unit_ckpt";
    std::filesystem::create_directories(dir);
    const std::string path = (dir / "g.ckpt").string();
    const PCGraph g = sample_assembly();
    save_checkpoint(g, {3, 4, "e"}, path);
    const Checkpoint back = load_checkpoint(path);
    CHECK(back.graph.weights() == g.weights());
    CHECK(back.meta.epochs == 3);
    CHECK_THROWS_AS(load_checkpoint(path + ".missing"), DataError);
    std::filesystem::resize_file(path, std::filesystem::file_size(path) - 10);
    CHECK_THROWS_AS(load_checkpoint(path), ChecksumError);
  }
}
