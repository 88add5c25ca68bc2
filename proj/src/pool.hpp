#pragma once

#include <functional>
#include <list>
#include <memory>
#include <set>
#include <unordered_map>

#include "dataset.hpp"
#include "raidz.hpp"
#include "vdev.hpp"
#include "zle.hpp"

namespace poolforge {

struct PoolOptions {
  uint32_t record_size = 128 * 1024;
  size_t cache_capacity = 16 * 1024 * 1024;
  uint64_t guid_seed = 0;  // 0: seeded from the environment
};

struct ScrubReport {
  uint64_t blocks_examined = 0;
  uint64_t checksum_errors_found = 0;
  uint64_t repaired = 0;
  uint64_t permanent_errors = 0;
};

constexpr uint32_t kMinRecordSize = 8 * 1024;
constexpr uint32_t kMaxRecordSize = 128 * 1024;

// Copy-on-write transactional pool over a RAID-Z1 vdev set. One open txg at a
// time; commit_txg is the single atomicity point.
class Pool {
 public:
  static std::unique_ptr<Pool> create(std::vector<std::unique_ptr<Device>> devices,
                                      const std::string& name, PoolOptions opt = {});
  static std::unique_ptr<Pool> import(std::vector<std::unique_ptr<Device>> devices);

  // ---- block layer ----
  uint64_t alloc_rows(uint64_t rows);  // first-fit, throws no_space
  BlockRef write_logical_block(const uint8_t* data, size_t len);
  BlockRef write_logical_block(const std::vector<uint8_t>& v) {
    return write_logical_block(v.data(), v.size());
  }
  // Writes pre-compressed physical bytes unchanged (receive path).
  BlockRef write_physical_block(const std::vector<uint8_t>& physical, uint32_t logical_size,
                                uint8_t compression);
  std::vector<uint8_t> read_logical_block(const BlockRef& ref);
  std::vector<uint8_t> read_physical_block(const BlockRef& ref);  // verified, padded

  enum class FreeDisposition { FreedNow, Deferred };
  FreeDisposition free_block(const BlockRef& ref, uint64_t latest_pin_txg);
  void free_now(const BlockRef& ref);
  uint64_t block_alloc_sectors(const BlockRef& ref) const;  // rows spanned × d

  // ---- transactions ----
  uint64_t open_txg() const { return committed_txg_ + 1; }
  uint64_t committed_txg() const { return committed_txg_; }
  // after_persist runs once dirty heads are on disk, before the catalog is
  // serialized; snapshot creation hooks in here.
  uint64_t commit_txg(const std::function<void()>& after_persist = {});
  void mark_catalog_dirty() { catalog_dirty_ = true; }

  // ---- datasets ----
  Dataset& create_dataset(const std::string& name);
  Dataset* find_dataset(const std::string& name);
  Dataset& dataset(const std::string& name);
  Dataset* find_by_snapshot_guid(const Guid& g, Snapshot** snap_out = nullptr);
  Dataset& clone_snapshot(Dataset& origin, const std::string& snap_name,
                          const std::string& new_name);
  std::vector<std::unique_ptr<Dataset>>& datasets() { return datasets_; }

  // ---- integrity ----
  ScrubReport scrub();
  // Visits every live BlockRef (catalog, object directories, indirects,
  // leaves, deadlists); shared blocks may be visited more than once.
  void walk_live_refs(const std::function<void(const BlockRef&, bool is_leaf)>& fn) const;
  Digest snapshot_content_hash(const BlockRef& objdir_root);
  Digest content_hash();  // logical state of the whole pool

  struct SpaceBreakdown {
    uint64_t total_rows, free_rows, leaf_rows, meta_rows;
  };
  SpaceBreakdown space_breakdown() const;

  // ---- geometry / info ----
  int d() const { return int(devices_.size()); }
  uint32_t sector_size() const { return sector_size_; }
  uint32_t record_size() const { return record_size_; }
  uint64_t data_rows_total() const { return data_rows_; }
  uint64_t free_rows_total() const;
  const std::string& name() const { return name_; }
  const Guid& pool_guid() const { return pool_guid_; }
  bool degraded() const { return degraded_; }
  RaidzGeometry geometry() const;
  std::vector<Device*> children() const;
  uint64_t uptime_origin_ms() const { return import_time_ms_; }

  Guid next_guid();
  void set_virtual_time(uint64_t ms) { virtual_time_ms_ = ms; }
  uint64_t virtual_time() const { return virtual_time_ms_; }

  // ---- cache ----
  void set_cache_capacity(size_t bytes);
  uint64_t cache_bytes() const { return cache_bytes_; }
  uint64_t cache_evicted_bytes() const { return cache_evicted_bytes_; }

  // In-memory state capture; backs atomic receive. On-disk writes made after
  // save_state land in rows the restored free map still considers free, so a
  // restore makes them unreachable garbage, never visible state.
  struct Memento;
  std::unique_ptr<Memento> save_state() const;
  void restore_state(const Memento& m);

  struct Memento {
    std::map<uint64_t, uint64_t> free_extents;
    std::vector<std::pair<uint64_t, uint64_t>> pending_frees;
    uint64_t guid_counter;
    uint64_t committed_txg;
    BlockRef catalog_root;
    std::vector<BlockRef> catalog_refs;
    bool catalog_dirty;
    std::vector<Dataset> datasets;
  };

 private:
  Pool() = default;
  void write_labels();
  std::vector<uint8_t> serialize_catalog() const;
  void parse_catalog(const std::vector<uint8_t>& bytes);
  BlockRef persist_catalog();
  void rebuild_free_map();
  void apply_pending_frees();
  void cache_insert(uint64_t key, std::vector<uint8_t> logical);
  const std::vector<uint8_t>* cache_lookup(uint64_t key);
  void cache_invalidate(uint64_t key);
  std::vector<uint8_t> decompress_physical(const BlockRef& ref,
                                           const std::vector<uint8_t>& physical) const;

  std::vector<std::unique_ptr<Device>> devices_;
  std::string name_;
  Guid pool_guid_;
  uint32_t sector_size_ = 512;
  uint32_t record_size_ = kMaxRecordSize;
  uint64_t data_rows_ = 0;
  bool degraded_ = false;
  uint64_t committed_txg_ = 0;
  BlockRef catalog_root_;
  std::vector<BlockRef> catalog_refs_;  // index block first, then chunks
  bool catalog_dirty_ = false;
  uint64_t guid_counter_ = 0;
  uint64_t virtual_time_ms_ = 0;
  uint64_t import_time_ms_ = 0;
  std::vector<std::unique_ptr<Dataset>> datasets_;

  std::map<uint64_t, uint64_t> free_extents_;  // start row -> row count
  std::vector<std::pair<uint64_t, uint64_t>> pending_frees_;

  // clean-read LRU cache, keyed by start_row
  std::list<std::pair<uint64_t, std::vector<uint8_t>>> cache_lru_;
  std::unordered_map<uint64_t, decltype(cache_lru_)::iterator> cache_index_;
  size_t cache_capacity_ = 16 * 1024 * 1024;
  uint64_t cache_bytes_ = 0;
  uint64_t cache_evicted_bytes_ = 0;
};

}  // namespace poolforge
