#include "pcg/checkpoint.hpp"

#include <boost/crc.hpp>
#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include "pcg/errors.hpp"

namespace pcg {

namespace {

std::uint32_t crc32(const char* data, std::size_t size) {
  boost::crc_32_type crc;
  crc.process_bytes(data, size);
  return crc.checksum();
}

class Writer {
 public:
  template <class T>
  void le(T v) {
    using U = std::make_unsigned_t<T>;
    auto u = static_cast<U>(v);
    for (std::size_t i = 0; i < sizeof(T); ++i) out_.push_back(static_cast<char>((u >> (8 * i)) & 0xFF));
  }
  void u8(std::uint8_t v) { out_.push_back(static_cast<char>(v)); }
  void f64(double v) { le(std::bit_cast<std::uint64_t>(v)); }
  void str(const std::string& s) {
    le(static_cast<std::uint32_t>(s.size()));
    out_ += s;
  }
  void raw(const char* p, std::size_t n) { out_.append(p, n); }
  std::string& bytes() { return out_; }

 private:
  std::string out_;
};

class Reader {
 public:
  Reader(const std::string& bytes, std::size_t end, const std::string& source)
      : bytes_(bytes), end_(end), source_(source) {}

  template <class T>
  T le() {
    need(sizeof(T));
    std::make_unsigned_t<T> u = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) {
      u |= static_cast<std::make_unsigned_t<T>>(static_cast<unsigned char>(bytes_[pos_ + i])) << (8 * i);
    }
    pos_ += sizeof(T);
    return static_cast<T>(u);
  }
  std::uint8_t u8() { return le<std::uint8_t>(); }
  double f64() { return std::bit_cast<double>(le<std::uint64_t>()); }
  std::string str() {
    const auto len = le<std::uint32_t>();
    need(len);
    std::string s = bytes_.substr(pos_, len);
    pos_ += len;
    return s;
  }
  const char* take(std::size_t n) {
    need(n);
    const char* p = bytes_.data() + pos_;
    pos_ += n;
    return p;
  }
  std::size_t pos() const { return pos_; }

 private:
  void need(std::size_t n) const {
    if (n > end_ - pos_) throw FormatError(source_ + ": checkpoint payload ends early");
  }
  const std::string& bytes_;
  std::size_t end_;
  const std::string& source_;
  std::size_t pos_ = 0;
};

}  // namespace

std::string encode_checkpoint(const PCGraph& graph, const CheckpointMeta& meta) {
  Writer w;
  w.raw(kCheckpointMagic, sizeof kCheckpointMagic);
  w.le(kCheckpointVersion);
  const Index n = graph.n();
  w.le(static_cast<std::uint64_t>(n));
  w.le(static_cast<std::uint64_t>(graph.d()));
  w.le(static_cast<std::uint32_t>(graph.activation()));
  w.str(graph.descriptor());

  const auto& clusters = graph.clusters();
  w.u8(clusters ? 1 : 0);
  if (clusters) {
    w.f64(clusters->k_frac);
    w.le(static_cast<std::uint64_t>(clusters->clusters.size()));
    for (const auto& c : clusters->clusters) {
      w.le(static_cast<std::uint64_t>(c.begin));
      w.le(static_cast<std::uint64_t>(c.end));
    }
  }
  const auto p = graph.mask().p();
  w.u8(p ? 1 : 0);
  if (p) w.f64(*p);
  w.le(graph.mask().seed());

  w.le(static_cast<std::uint32_t>(meta.epochs));
  w.le(meta.seed);
  w.str(meta.config_digest);

  const auto& mask = graph.mask().matrix();
  std::string bits(static_cast<std::size_t>((n * n + 7) / 8), '\0');
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < n; ++j) {
      if (mask(i, j)) {
        const auto k = static_cast<std::size_t>(i * n + j);
        bits[k / 8] = static_cast<char>(bits[k / 8] | (1 << (k % 8)));
      }
    }
  }
  w.raw(bits.data(), bits.size());
  const Matrix& W = graph.weights();
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < n; ++j) w.f64(W(i, j));
  }
  w.le(crc32(w.bytes().data(), w.bytes().size()));
  return std::move(w.bytes());
}

Checkpoint decode_checkpoint(const std::string& bytes, const std::string& source) {
  constexpr std::size_t kHead = sizeof kCheckpointMagic + 4;
  if (bytes.size() < sizeof kCheckpointMagic ||
      std::memcmp(bytes.data(), kCheckpointMagic, sizeof kCheckpointMagic) != 0) {
    throw FormatError(source + ": not a checkpoint (bad magic)");
  }
  if (bytes.size() < kHead + 4) throw ChecksumError(source + ": checkpoint truncated");
  {
    Reader head(bytes, kHead, source);
    head.take(sizeof kCheckpointMagic);
    const auto version = head.le<std::uint32_t>();
    if (version != kCheckpointVersion) {
      throw VersionError(source + ": checkpoint version " + std::to_string(version) + ", this build reads " +
                         std::to_string(kCheckpointVersion));
    }
  }
  const std::size_t body = bytes.size() - 4;
  Reader tail(bytes, bytes.size(), source);
  tail.take(body);
  const auto stored = tail.le<std::uint32_t>();
  if (stored != crc32(bytes.data(), body)) throw ChecksumError(source + ": checkpoint checksum mismatch");

  Reader r(bytes, body, source);
  r.take(kHead);
  const auto n = static_cast<Index>(r.le<std::uint64_t>());
  const auto d = static_cast<Index>(r.le<std::uint64_t>());
  const auto activation = r.le<std::uint32_t>();
  if (activation > static_cast<std::uint32_t>(Activation::Tanh)) {
    throw FormatError(source + ": unknown activation code " + std::to_string(activation));
  }
  std::string descriptor = r.str();

  std::optional<ClusterSpec> clusters;
  if (r.u8()) {
    ClusterSpec spec;
    spec.k_frac = r.f64();
    const auto count = r.le<std::uint64_t>();
    for (std::uint64_t c = 0; c < count; ++c) {
      ClusterRange range;
      range.begin = static_cast<Index>(r.le<std::uint64_t>());
      range.end = static_cast<Index>(r.le<std::uint64_t>());
      spec.clusters.push_back(range);
    }
    clusters = spec;
  }
  std::optional<double> p;
  if (r.u8()) p = r.f64();
  const auto mask_seed = r.le<std::uint64_t>();

  CheckpointMeta meta;
  meta.epochs = static_cast<int>(r.le<std::uint32_t>());
  meta.seed = r.le<std::uint64_t>();
  meta.config_digest = r.str();

  if (n <= 0 || n > (1 << 20)) throw FormatError(source + ": implausible vertex count " + std::to_string(n));
  const char* bits = r.take(static_cast<std::size_t>((n * n + 7) / 8));
  MaskMatrix mask(n, n);
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < n; ++j) {
      const auto k = static_cast<std::size_t>(i * n + j);
      mask(i, j) = static_cast<std::uint8_t>((static_cast<unsigned char>(bits[k / 8]) >> (k % 8)) & 1);
    }
  }
  Matrix W(n, n);
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < n; ++j) W(i, j) = r.f64();
  }
  if (r.pos() != body) throw FormatError(source + ": trailing bytes before checksum");

  TopologyMask topology(std::move(mask), std::move(clusters), p, mask_seed);
  PCGraph graph(d, std::move(topology), std::move(W), static_cast<Activation>(activation), std::move(descriptor));
  return {std::move(graph), std::move(meta)};
}

void save_checkpoint(const PCGraph& graph, const CheckpointMeta& meta, const std::string& path) {
  const std::string bytes = encode_checkpoint(graph, meta);
  std::ofstream os(path, std::ios::binary);
  if (!os) throw DataError("cannot open " + path + " for writing");
  os.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!os) throw DataError("failed writing " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open checkpoint " + path);
  const std::string bytes{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
  return decode_checkpoint(bytes, path);
}

}  // namespace pcg
