#pragma once

#include "common.hpp"

namespace poolforge {

// Zero-length encoding. Token stream: control byte t < 0x80 means the next
// (t+1) literal bytes follow; t >= 0x80 means (t-0x80+1) zero bytes.
// Canonical greedy encoder: every zero byte lands in a zero-run token, runs
// capped at 128.
std::vector<uint8_t> compress_zle(const uint8_t* data, size_t len);
inline std::vector<uint8_t> compress_zle(const std::vector<uint8_t>& v) {
  return compress_zle(v.data(), v.size());
}

// Decodes exactly logical_size bytes; trailing input past the final token is
// ignored (sector padding). Throws corrupt_stream on truncation or overshoot.
std::vector<uint8_t> decompress_zle(const uint8_t* data, size_t len, size_t logical_size);
inline std::vector<uint8_t> decompress_zle(const std::vector<uint8_t>& v, size_t logical_size) {
  return decompress_zle(v.data(), v.size(), logical_size);
}

}  // namespace poolforge
