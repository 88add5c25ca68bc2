#include "common.hpp"

#include <openssl/sha.h>

#include <cstdio>

namespace poolforge {

Digest sha256(const void* data, size_t len) {
  Digest d;
  SHA256(static_cast<const unsigned char*>(data), len, d.data());
  return d;
}

std::string hex(const uint8_t* data, size_t len) {
  static const char* digits = "0123456789abcdef";
  std::string s;
  s.reserve(len * 2);
  for (size_t i = 0; i < len; i++) {
    s.push_back(digits[data[i] >> 4]);
    s.push_back(digits[data[i] & 0xf]);
  }
  return s;
}

std::string Guid::str() const {
  char buf[36];
  std::snprintf(buf, sizeof buf, "%016llx%016llx", (unsigned long long)hi, (unsigned long long)lo);
  return buf;
}

uint64_t splitmix64(uint64_t& state) {
  uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

void put_blockref(uint8_t out[kBlockRefSize], const BlockRef& r) {
  std::memset(out, 0, kBlockRefSize);
  auto put64 = [&](size_t off, uint64_t v) {
    for (int i = 0; i < 8; i++) out[off + i] = uint8_t(v >> (8 * i));
  };
  auto put32 = [&](size_t off, uint32_t v) {
    for (int i = 0; i < 4; i++) out[off + i] = uint8_t(v >> (8 * i));
  };
  put64(0, r.start_row);
  put32(8, r.logical_size);
  put32(12, r.physical_sectors);
  out[16] = r.compression;
  put64(24, r.birth_txg);
  std::memcpy(out + 32, r.checksum.data(), 32);
}

BlockRef get_blockref(const uint8_t in[kBlockRefSize]) {
  auto get64 = [&](size_t off) {
    uint64_t v = 0;
    for (int i = 0; i < 8; i++) v |= uint64_t(in[off + i]) << (8 * i);
    return v;
  };
  auto get32 = [&](size_t off) {
    uint32_t v = 0;
    for (int i = 0; i < 4; i++) v |= uint32_t(in[off + i]) << (8 * i);
    return v;
  };
  BlockRef r;
  r.start_row = get64(0);
  r.logical_size = get32(8);
  r.physical_sectors = get32(12);
  r.compression = in[16];
  r.birth_txg = get64(24);
  std::memcpy(r.checksum.data(), in + 32, 32);
  return r;
}

ByteExtent blockref_byte_extent(const BlockRef& r, uint32_t sector_size) {
  ByteExtent e;
  e.offset = (unsigned __int128)r.start_row * sector_size;
  e.length = (unsigned __int128)r.physical_sectors * sector_size;
  return e;
}

}  // namespace poolforge
