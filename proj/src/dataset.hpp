#pragma once

#include <map>
#include <set>

#include "common.hpp"

namespace poolforge {

class Pool;

constexpr uint32_t kIndirectFanout = 128;

// In-memory image of one object's block tree. Leaves are record-sized logical
// blocks; null refs are holes. tree_root/meta_blocks mirror what is persisted
// on disk; dirty means the on-disk tree is stale.
struct ObjectState {
  uint64_t size = 0;
  std::vector<BlockRef> leaves;
  BlockRef tree_root;
  uint8_t tree_levels = 0;
  std::vector<BlockRef> meta_blocks;
  bool dirty = false;
};

struct Snapshot {
  std::string name;
  uint64_t txg = 0;
  Guid guid;
  BlockRef root;                    // object directory at creation, immutable
  std::vector<BlockRef> deadlist;   // freed from head, still pinned here
};

struct SpaceReport {
  uint64_t used_bytes = 0;        // allocation uniquely held by this dataset + snapshots
  uint64_t available_bytes = 0;   // pool free space
  uint64_t referenced_bytes = 0;  // allocation reachable from the head
};

struct DiffEntry {
  uint64_t object_id;
  uint64_t offset;
  uint64_t length;
  enum class Kind { Modified, Added, Freed } kind;
};

class Dataset {
 public:
  std::string name;
  Guid guid;
  Guid origin_guid;        // zero unless this is a clone
  uint64_t origin_txg = 0;
  BlockRef head_root;      // object directory block of the last persisted head
  bool head_dirty = false;
  std::map<uint64_t, ObjectState> objects;
  std::vector<Snapshot> snapshots;
  Pool* pool = nullptr;

  void write_file(uint64_t object_id, uint64_t offset, const uint8_t* data, size_t len);
  void write_file(uint64_t object_id, uint64_t offset, const std::vector<uint8_t>& v) {
    write_file(object_id, offset, v.data(), v.size());
  }
  std::vector<uint8_t> read_file(uint64_t object_id, uint64_t offset, size_t len) const;
  uint64_t object_size(uint64_t object_id) const;

  Snapshot& take_snapshot(const std::string& snap_name);  // commits the pool
  uint64_t destroy_snapshot(const std::string& snap_name);  // -> freed sectors
  // Discards the head and every snapshot newer than snap_name; does not
  // commit (frees queue behind the caller's next commit).
  void rollback_to(const std::string& snap_name);
  SpaceReport space_report() const;
  Digest content_hash() const;

  Snapshot* find_snapshot(const std::string& snap_name);
  const Snapshot* find_snapshot(const std::string& snap_name) const;
  uint64_t latest_snapshot_txg() const { return snapshots.empty() ? 0 : snapshots.back().txg; }

  // Called by the pool during commit: rewrites dirty trees and the object
  // directory copy-on-write, routing displaced refs through the free path.
  void persist_head();
  void load_head(const BlockRef& root);

  // Row sets for space accounting; leaf = object data, meta = indirects + objdir.
  void collect_rows(std::set<uint64_t>& leaf_rows, std::set<uint64_t>& meta_rows) const;

  // Frees a displaced ref, or parks it on a deadlist / leaves it to a clone
  // origin when a snapshot still references it.
  void free_or_defer(const BlockRef& ref);
};

// A read-only view over a snapshot root (or any persisted object directory).
struct SnapshotView {
  struct Entry {
    uint64_t object_id;
    uint64_t size;
    uint8_t levels;
    BlockRef root;
  };
  Pool* pool;
  std::vector<Entry> entries;

  static SnapshotView open(Pool& pool, const BlockRef& objdir_root);
  std::vector<BlockRef> leaves_of(const Entry& e) const;
  std::vector<uint8_t> read_file(uint64_t object_id, uint64_t offset, size_t len) const;
  const Entry* find(uint64_t object_id) const;
};

std::vector<uint8_t> serialize_objdir(const std::vector<SnapshotView::Entry>& entries);
std::vector<SnapshotView::Entry> parse_objdir(const std::vector<uint8_t>& bytes);

std::vector<DiffEntry> diff_snapshots(Pool& pool, const Dataset& ds, const std::string& snap_a,
                                      const std::string& snap_b);

}  // namespace poolforge
