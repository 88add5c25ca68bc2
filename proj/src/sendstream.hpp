#pragma once

#include "pool.hpp"

namespace poolforge {

// Bit-exact backup stream format. All integers little-endian.
//
//   header:  magic "PFSEND01" | u16 version=1 | u16 flags (bit0 incremental)
//            | to_guid (16) | from_guid (16, zero if full) | name (u16 len + UTF-8,
//            "dataset@snapshot")
//   records: kind u8
//     1 OBJECT  object_id u64 | size u64
//     2 WRITE   object_id u64 | offset u64 | logical_len u32 | compression u8
//               | physical_len u32 | payload
//     3 FREE    object_id u64 | offset u64 | len u64
//     4 END     sha-256 over every prior stream byte
//
// Record order is objects ascending, offsets ascending, so two sends of the
// same snapshot are byte-identical.
constexpr char kStreamMagic[9] = "PFSEND01";

enum : uint8_t {
  kRecObject = 1,
  kRecWrite = 2,
  kRecFree = 3,
  kRecEnd = 4,
};

std::vector<uint8_t> send_full(Pool& pool, Dataset& ds, const std::string& snap_name);
std::vector<uint8_t> send_incremental(Pool& pool, Dataset& ds, const std::string& from_snap,
                                      const std::string& to_snap);

struct ReceiveResult {
  std::string dataset;
  std::string snapshot;
  Guid snapshot_guid;
};
// Applies a stream atomically: on any failure the pool's visible state is
// untouched. force permits a full receive into an existing dataset name.
ReceiveResult receive(Pool& pool, const uint8_t* stream, size_t len, bool force = false);
inline ReceiveResult receive(Pool& pool, const std::vector<uint8_t>& v, bool force = false) {
  return receive(pool, v.data(), v.size(), force);
}

struct StreamInfo {
  bool incremental;
  Guid to_guid;
  Guid from_guid;
  std::string name;  // dataset@snapshot
  size_t header_len = 0;
};
StreamInfo stream_info(const uint8_t* stream, size_t len);

}  // namespace poolforge
