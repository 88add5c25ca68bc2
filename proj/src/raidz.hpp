#pragma once

#include "vdev.hpp"

namespace poolforge {

// RAID-Z1 over d children. Rows are horizontal slices, one sector per child;
// row r lives at device sector kLabelSectors + r on every child. Column 0 of
// each row holds the XOR parity of that row's data sectors; data fills
// columns 1..d-1 row by row. Allocation totals are padded to an even sector
// count with an explicit zeroed skip sector.
struct RaidzGeometry {
  std::vector<Device*> children;
  uint32_t sector_size = 512;
  int d() const { return int(children.size()); }
};

struct StripePos {
  uint64_t row;
  uint32_t col;
};

struct StripeMap {
  uint64_t start_row = 0;
  uint32_t data_sectors = 0;
  uint32_t parity_sectors = 0;
  uint32_t skip_sectors = 0;  // 0 or 1
  int d = 0;

  struct Row {
    uint64_t row;
    uint32_t data_count;  // data slots used in this row (columns 1..data_count)
  };
  std::vector<Row> rows;
  std::optional<StripePos> skip_pos;

  uint32_t total_sectors() const { return data_sectors + parity_sectors + skip_sectors; }
  uint64_t rows_spanned() const { return (uint64_t(total_sectors()) + d - 1) / d; }
  StripePos data_pos(uint32_t data_index) const {
    return {start_row + data_index / uint32_t(d - 1), 1 + data_index % uint32_t(d - 1)};
  }
};

StripeMap plan_stripe(uint32_t data_sectors, int d, uint64_t start_row);

// Bytewise XOR of 1..d-1 equal-length sectors.
std::vector<uint8_t> compute_parity(const std::vector<std::vector<uint8_t>>& data_sectors);

// XOR of all present row sectors (parity included) reproduces the missing one.
std::vector<uint8_t> reconstruct_row(const std::vector<std::vector<uint8_t>>& present);

void write_block(const RaidzGeometry& g, const StripeMap& m, const uint8_t* data, size_t len);
inline void write_block(const RaidzGeometry& g, const StripeMap& m,
                        const std::vector<uint8_t>& v) {
  write_block(g, m, v.data(), v.size());
}

struct BlockRead {
  std::vector<uint8_t> data;
  bool degraded = false;
  int failed_child = -1;
};
BlockRead read_block(const RaidzGeometry& g, const StripeMap& m);

struct RepairResult {
  std::vector<uint8_t> data;
  int repaired_child = -1;  // -1: no repair was needed
};
// Checksum-arbitrated combinatorial repair; never returns data that fails the
// expected checksum.
RepairResult verify_and_repair(const RaidzGeometry& g, const StripeMap& m,
                               const Digest& expected_checksum);

// Re-derives parity for each row and rewrites it when stale. Returns how many
// rows needed a parity rewrite. Call only when the data checksum verifies.
uint32_t repair_row_parity(const RaidzGeometry& g, const StripeMap& m);

}  // namespace poolforge
