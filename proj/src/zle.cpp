#include "zle.hpp"

namespace poolforge {

std::vector<uint8_t> compress_zle(const uint8_t* data, size_t len) {
  std::vector<uint8_t> out;
  if (len == 0) return out;
  out.reserve(len / 2 + 8);
  size_t i = 0;
  while (i < len) {
    if (data[i] == 0) {
      size_t run = 1;
      while (i + run < len && data[i + run] == 0 && run < 128) run++;
      out.push_back(uint8_t(0x80 + run - 1));
      i += run;
    } else {
      size_t run = 1;
      while (i + run < len && data[i + run] != 0 && run < 128) run++;
      out.push_back(uint8_t(run - 1));
      out.insert(out.end(), data + i, data + i + run);
      i += run;
    }
  }
  return out;
}

std::vector<uint8_t> decompress_zle(const uint8_t* data, size_t len, size_t logical_size) {
  std::vector<uint8_t> out;
  out.reserve(logical_size);
  size_t i = 0;
  while (out.size() < logical_size) {
    if (i >= len) fail(Errc::corrupt_stream, "zle: truncated stream");
    uint8_t t = data[i++];
    if (t < 0x80) {
      size_t k = size_t(t) + 1;
      if (i + k > len) fail(Errc::corrupt_stream, "zle: truncated literal run");
      out.insert(out.end(), data + i, data + i + k);
      i += k;
    } else {
      size_t k = size_t(t - 0x80) + 1;
      out.insert(out.end(), k, 0);
    }
    if (out.size() > logical_size) fail(Errc::corrupt_stream, "zle: output exceeds logical size");
  }
  return out;
}

}  // namespace poolforge
