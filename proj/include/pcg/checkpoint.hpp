#pragma once

#include <cstdint>
#include <string>

#include "pcg/graph.hpp"

namespace pcg {

inline constexpr char kCheckpointMagic[8] = {'P', 'C', 'G', 'R', 'A', 'P', 'H', '\0'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

struct CheckpointMeta {
  int epochs = 0;
  std::uint64_t seed = 0;
  std::string config_digest;

  friend bool operator==(const CheckpointMeta&, const CheckpointMeta&) = default;
};

struct Checkpoint {
  PCGraph graph;
  CheckpointMeta meta;
};

/// Little-endian layout:
///   magic[8] "PCGRAPH\0", u32 version,
///   u64 n, u64 d, u32 activation, str descriptor,
///   u8 has_clusters [f64 k_frac, u64 count, count x (u64 begin, u64 end)],
///   u8 has_p [f64 p], u64 mask seed,
///   u32 epochs, u64 seed, str config digest,
///   mask bitset (n*n bits, row-major, LSB first), n*n f64 weights (row-major),
///   u32 CRC-32 of every preceding byte.
/// Strings are u32 length + bytes.
std::string encode_checkpoint(const PCGraph& graph, const CheckpointMeta& meta);
Checkpoint decode_checkpoint(const std::string& bytes, const std::string& source = "<checkpoint>");

void save_checkpoint(const PCGraph& graph, const CheckpointMeta& meta, const std::string& path);

/// Throws DataError (unreadable), FormatError (bad magic or layout),
/// VersionError (other format version) or ChecksumError (corrupted or truncated).
Checkpoint load_checkpoint(const std::string& path);

}  // namespace pcg
