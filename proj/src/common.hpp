#pragma once

#include <array>
#include <cstdint>
#include <cstring>
#include <stdexcept>
#include <string>
#include <vector>

namespace poolforge {

enum class Errc {
  exists,
  not_found,
  bounds,
  io,
  invalid,
  read_only,
  no_space,
  permanent,
  unrecoverable,
  corrupt_stream,
  no_base,
  lineage,
  double_free,
  unlabeled,
  parse,
  busy,
  scenario_failed,
};

struct Error : std::runtime_error {
  Errc code;
  Error(Errc c, const std::string& msg) : std::runtime_error(msg), code(c) {}
};

[[noreturn]] inline void fail(Errc c, const std::string& msg) { throw Error(c, msg); }

using Digest = std::array<uint8_t, 32>;

Digest sha256(const void* data, size_t len);
inline Digest sha256(const std::vector<uint8_t>& v) { return sha256(v.data(), v.size()); }
std::string hex(const uint8_t* data, size_t len);
inline std::string hex(const Digest& d) { return hex(d.data(), d.size()); }

struct Guid {
  uint64_t hi = 0;
  uint64_t lo = 0;
  bool is_zero() const { return hi == 0 && lo == 0; }
  friend bool operator==(const Guid& a, const Guid& b) { return a.hi == b.hi && a.lo == b.lo; }
  friend bool operator!=(const Guid& a, const Guid& b) { return !(a == b); }
  std::string str() const;
};

// SplitMix64; the deterministic RNG used for fault seeds and the simulator.
uint64_t splitmix64(uint64_t& state);

struct Rng {
  uint64_t state;
  explicit Rng(uint64_t seed) : state(seed) {}
  uint64_t next() { return splitmix64(state); }
  // uniform in [0,1)
  double uniform() { return double(next() >> 11) * (1.0 / 9007199254740992.0); }
};

// Reference to one physical block: the Merkle edge of the pool. 64 bytes on disk.
struct BlockRef {
  uint64_t start_row = 0;
  uint32_t logical_size = 0;
  uint32_t physical_sectors = 0;
  uint8_t compression = 0;  // 0=raw, 1=zle
  uint64_t birth_txg = 0;
  Digest checksum{};

  bool is_null() const { return physical_sectors == 0 && logical_size == 0; }
  friend bool operator==(const BlockRef& a, const BlockRef& b) {
    return a.start_row == b.start_row && a.logical_size == b.logical_size &&
           a.physical_sectors == b.physical_sectors && a.compression == b.compression &&
           a.birth_txg == b.birth_txg && a.checksum == b.checksum;
  }
};

constexpr size_t kBlockRefSize = 64;

void put_blockref(uint8_t out[kBlockRefSize], const BlockRef& r);
BlockRef get_blockref(const uint8_t in[kBlockRefSize]);

// Byte extent of a block on one child device, in 128-bit arithmetic so pools
// past 2^64 bytes stay addressable.
struct ByteExtent {
  unsigned __int128 offset;
  unsigned __int128 length;
};
ByteExtent blockref_byte_extent(const BlockRef& r, uint32_t sector_size);

// Little-endian serialization helpers.
struct Writer {
  std::vector<uint8_t> buf;
  void u8(uint8_t v) { buf.push_back(v); }
  void u16(uint16_t v) {
    for (int i = 0; i < 2; i++) buf.push_back(uint8_t(v >> (8 * i)));
  }
  void u32(uint32_t v) {
    for (int i = 0; i < 4; i++) buf.push_back(uint8_t(v >> (8 * i)));
  }
  void u64(uint64_t v) {
    for (int i = 0; i < 8; i++) buf.push_back(uint8_t(v >> (8 * i)));
  }
  void bytes(const void* p, size_t n) {
    const uint8_t* b = static_cast<const uint8_t*>(p);
    buf.insert(buf.end(), b, b + n);
  }
  void str(const std::string& s) {
    u16(uint16_t(s.size()));
    bytes(s.data(), s.size());
  }
  void guid(const Guid& g) {
    u64(g.hi);
    u64(g.lo);
  }
  void blockref(const BlockRef& r) {
    uint8_t tmp[kBlockRefSize];
    put_blockref(tmp, r);
    bytes(tmp, sizeof tmp);
  }
  void digest(const Digest& d) { bytes(d.data(), d.size()); }
};

struct Reader {
  const uint8_t* p;
  size_t n;
  size_t pos = 0;
  Reader(const uint8_t* data, size_t len) : p(data), n(len) {}
  void need(size_t k) const {
    if (pos + k > n) fail(Errc::corrupt_stream, "truncated input");
  }
  uint8_t u8() {
    need(1);
    return p[pos++];
  }
  uint16_t u16() {
    need(2);
    uint16_t v = uint16_t(p[pos]) | uint16_t(p[pos + 1]) << 8;
    pos += 2;
    return v;
  }
  uint32_t u32() {
    need(4);
    uint32_t v = 0;
    for (int i = 0; i < 4; i++) v |= uint32_t(p[pos + i]) << (8 * i);
    pos += 4;
    return v;
  }
  uint64_t u64() {
    need(8);
    uint64_t v = 0;
    for (int i = 0; i < 8; i++) v |= uint64_t(p[pos + i]) << (8 * i);
    pos += 8;
    return v;
  }
  std::vector<uint8_t> bytes(size_t k) {
    need(k);
    std::vector<uint8_t> out(p + pos, p + pos + k);
    pos += k;
    return out;
  }
  void skip(size_t k) {
    need(k);
    pos += k;
  }
  std::string str() {
    uint16_t k = u16();
    need(k);
    std::string s(reinterpret_cast<const char*>(p + pos), k);
    pos += k;
    return s;
  }
  Guid guid() {
    Guid g;
    g.hi = u64();
    g.lo = u64();
    return g;
  }
  BlockRef blockref() {
    need(kBlockRefSize);
    BlockRef r = get_blockref(p + pos);
    pos += kBlockRefSize;
    return r;
  }
  Digest digest() {
    need(32);
    Digest d;
    std::memcpy(d.data(), p + pos, 32);
    pos += 32;
    return d;
  }
  bool eof() const { return pos == n; }
};

}  // namespace poolforge
