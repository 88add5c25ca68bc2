#include "pool.hpp"

#include <algorithm>
#include <random>

namespace poolforge {

namespace {
constexpr uint32_t kCatalogMagic = 0x54434650;  // "PFCT"
}

// ---------------------------------------------------------------- lifecycle

std::unique_ptr<Pool> Pool::create(std::vector<std::unique_ptr<Device>> devices,
                                   const std::string& name, PoolOptions opt) {
  if (devices.size() < 2) fail(Errc::invalid, "raidz pool needs at least 2 devices");
  if (devices.size() > 16) fail(Errc::invalid, "too many children");
  if (opt.record_size < kMinRecordSize || opt.record_size > kMaxRecordSize ||
      (opt.record_size & (opt.record_size - 1)) != 0)
    fail(Errc::invalid, "record size must be a power of two in [8KiB,128KiB]");
  uint32_t ss = devices[0]->sector_size();
  uint64_t cap = devices[0]->capacity_sectors();
  for (auto& d : devices) {
    if (d->sector_size() != ss) fail(Errc::invalid, "mixed sector sizes");
    if (d->capacity_sectors() != cap) fail(Errc::invalid, "mixed capacities");
    if (d->is_labeled()) fail(Errc::exists, "device already labeled: " + d->path());
  }
  auto p = std::unique_ptr<Pool>(new Pool());
  p->devices_ = std::move(devices);
  p->name_ = name;
  p->sector_size_ = ss;
  p->record_size_ = opt.record_size;
  p->cache_capacity_ = opt.cache_capacity;
  p->data_rows_ = cap - 2 * kLabelSectors;
  uint64_t seed = opt.guid_seed;
  if (seed == 0) seed = std::random_device{}() | (uint64_t(std::random_device{}()) << 32) | 1;
  uint64_t st = seed;
  p->pool_guid_ = Guid{splitmix64(st), splitmix64(st)};
  p->guid_counter_ = st;
  p->free_extents_[0] = p->data_rows_;
  p->write_labels();
  p->catalog_dirty_ = true;
  p->commit_txg();  // txg 1, empty catalog
  return p;
}

void Pool::write_labels() {
  for (size_t i = 0; i < devices_.size(); i++) {
    if (devices_[i]->is_missing()) continue;
    LabelHeader h;
    h.pool_guid = pool_guid_;
    uint64_t st = pool_guid_.lo ^ (0x1000 + i);
    h.device_guid = Guid{splitmix64(st), splitmix64(st)};
    h.child_index = uint32_t(i);
    h.child_count = uint32_t(devices_.size());
    h.sector_size = sector_size_;
    devices_[i]->write_label(h);
  }
}

std::unique_ptr<Pool> Pool::import(std::vector<std::unique_ptr<Device>> devices) {
  if (devices.empty()) fail(Errc::invalid, "no devices");
  struct Found {
    std::unique_ptr<Device> dev;
    LabelHeader label;
  };
  std::vector<Found> found;
  for (auto& d : devices) {
    LabelHeader h = d->read_label();
    found.push_back({std::move(d), h});
  }
  Guid pg = found[0].label.pool_guid;
  uint32_t child_count = found[0].label.child_count;
  for (auto& f : found) {
    if (f.label.pool_guid != pg) fail(Errc::invalid, "devices belong to different pools");
    if (f.label.child_count != child_count) fail(Errc::invalid, "inconsistent child counts");
  }
  auto p = std::unique_ptr<Pool>(new Pool());
  p->devices_.resize(child_count);
  uint32_t ss = found[0].dev->sector_size();
  uint64_t cap = found[0].dev->capacity_sectors();
  for (auto& f : found) {
    if (f.label.child_index >= child_count) fail(Errc::invalid, "bad child index");
    if (p->devices_[f.label.child_index]) fail(Errc::invalid, "duplicate child index");
    p->devices_[f.label.child_index] = std::move(f.dev);
  }
  uint32_t missing = 0;
  for (auto& d : p->devices_) {
    if (!d) {
      d = Device::missing(cap, ss);
      missing++;
    }
  }
  if (missing > 1) fail(Errc::unrecoverable, "cannot import: more than one child missing");
  p->degraded_ = missing == 1;
  p->pool_guid_ = pg;
  p->sector_size_ = ss;
  p->data_rows_ = cap - 2 * kLabelSectors;

  std::optional<UberblockData> best;
  for (auto& d : p->devices_) {
    auto u = d->best_uberblock();
    if (u && (!best || u->txg > best->txg)) best = u;
  }
  if (!best) fail(Errc::unrecoverable, "corrupt pool: no valid uberblock");
  p->committed_txg_ = best->txg;
  p->catalog_root_ = best->catalog_root;
  p->virtual_time_ms_ = best->timestamp;
  p->import_time_ms_ = best->timestamp;

  // catalog: index block, then chunks
  p->catalog_refs_.clear();
  p->catalog_refs_.push_back(p->catalog_root_);
  std::vector<uint8_t> index = p->read_logical_block(p->catalog_root_);
  std::vector<uint8_t> bytes;
  Reader ir(index.data(), index.size());
  uint32_t nchunks = ir.u32();
  for (uint32_t i = 0; i < nchunks; i++) {
    BlockRef cref = ir.blockref();
    p->catalog_refs_.push_back(cref);
    auto chunk = p->read_logical_block(cref);
    bytes.insert(bytes.end(), chunk.begin(), chunk.end());
  }
  p->parse_catalog(bytes);
  for (auto& ds : p->datasets_) ds->load_head(ds->head_root);
  p->rebuild_free_map();
  return p;
}

std::vector<Device*> Pool::children() const {
  std::vector<Device*> out;
  for (auto& d : devices_) out.push_back(d.get());
  return out;
}

RaidzGeometry Pool::geometry() const {
  RaidzGeometry g;
  g.children = children();
  g.sector_size = sector_size_;
  return g;
}

Guid Pool::next_guid() {
  uint64_t st = pool_guid_.lo ^ (++guid_counter_ * 0x2545f4914f6cdd1dULL);
  Guid g{splitmix64(st), splitmix64(st)};
  catalog_dirty_ = true;
  return g;
}

// ---------------------------------------------------------------- allocator

uint64_t Pool::alloc_rows(uint64_t rows) {
  if (rows == 0) fail(Errc::invalid, "zero-row allocation");
  for (auto it = free_extents_.begin(); it != free_extents_.end(); ++it) {
    if (it->second >= rows) {
      uint64_t start = it->first;
      uint64_t len = it->second;
      free_extents_.erase(it);
      if (len > rows) free_extents_[start + rows] = len - rows;
      return start;
    }
  }
  fail(Errc::no_space, "out of space");
}

uint64_t Pool::free_rows_total() const {
  uint64_t n = 0;
  for (auto& [s, l] : free_extents_) n += l;
  return n;
}

uint64_t Pool::block_alloc_sectors(const BlockRef& ref) const {
  StripeMap m = plan_stripe(ref.physical_sectors, d(), ref.start_row);
  return m.rows_spanned() * uint64_t(d());
}

void Pool::free_now(const BlockRef& ref) {
  if (ref.is_null()) return;
  StripeMap m = plan_stripe(ref.physical_sectors, d(), ref.start_row);
  uint64_t start = ref.start_row, rows = m.rows_spanned();
  // double-free guard: the rows must currently be allocated and not pending
  auto it = free_extents_.upper_bound(start);
  if (it != free_extents_.begin()) {
    auto prev = std::prev(it);
    if (prev->first + prev->second > start) fail(Errc::double_free, "double free");
  }
  if (it != free_extents_.end() && it->first < start + rows)
    fail(Errc::double_free, "double free");
  for (auto& [ps, pl] : pending_frees_)
    if (ps < start + rows && start < ps + pl) fail(Errc::double_free, "double free (pending)");
  pending_frees_.push_back({start, rows});
  cache_invalidate(ref.start_row);
}

Pool::FreeDisposition Pool::free_block(const BlockRef& ref, uint64_t latest_pin_txg) {
  if (ref.is_null()) return FreeDisposition::FreedNow;
  if (ref.birth_txg <= latest_pin_txg) return FreeDisposition::Deferred;
  free_now(ref);
  return FreeDisposition::FreedNow;
}

void Pool::apply_pending_frees() {
  for (auto& [start, rows] : pending_frees_) {
    auto next = free_extents_.upper_bound(start);
    uint64_t s = start, l = rows;
    if (next != free_extents_.begin()) {
      auto prev = std::prev(next);
      if (prev->first + prev->second == s) {
        s = prev->first;
        l += prev->second;
        free_extents_.erase(prev);
      }
    }
    next = free_extents_.upper_bound(s);
    if (next != free_extents_.end() && next->first == s + l) {
      l += next->second;
      free_extents_.erase(next);
    }
    free_extents_[s] = l;
  }
  pending_frees_.clear();
}

// ---------------------------------------------------------------- block i/o

BlockRef Pool::write_physical_block(const std::vector<uint8_t>& physical, uint32_t logical_size,
                                    uint8_t compression) {
  if (physical.empty()) fail(Errc::invalid, "empty physical block");
  std::vector<uint8_t> padded = physical;
  size_t rem = padded.size() % sector_size_;
  if (rem) padded.resize(padded.size() + sector_size_ - rem, 0);
  uint32_t s = uint32_t(padded.size() / sector_size_);
  StripeMap probe = plan_stripe(s, d(), 0);
  uint64_t start = alloc_rows(probe.rows_spanned());
  StripeMap m = plan_stripe(s, d(), start);
  write_block(geometry(), m, padded);
  BlockRef ref;
  ref.start_row = start;
  ref.logical_size = logical_size;
  ref.physical_sectors = s;
  ref.compression = compression;
  ref.birth_txg = open_txg();
  ref.checksum = sha256(padded);
  return ref;
}

BlockRef Pool::write_logical_block(const uint8_t* data, size_t len) {
  if (len == 0 || len > record_size_) fail(Errc::invalid, "bad logical block size");
  uint32_t raw_sectors = uint32_t((len + sector_size_ - 1) / sector_size_);
  std::vector<uint8_t> compressed = compress_zle(data, len);
  uint32_t zle_sectors = uint32_t((compressed.size() + sector_size_ - 1) / sector_size_);
  // compression pays only when it saves at least one whole sector
  if (zle_sectors < raw_sectors) {
    return write_physical_block(compressed, uint32_t(len), 1);
  }
  return write_physical_block(std::vector<uint8_t>(data, data + len), uint32_t(len), 0);
}

std::vector<uint8_t> Pool::read_physical_block(const BlockRef& ref) {
  if (ref.is_null()) fail(Errc::invalid, "null block ref");
  StripeMap m = plan_stripe(ref.physical_sectors, d(), ref.start_row);
  RepairResult r = verify_and_repair(geometry(), m, ref.checksum);
  return std::move(r.data);
}

std::vector<uint8_t> Pool::decompress_physical(const BlockRef& ref,
                                               const std::vector<uint8_t>& physical) const {
  if (ref.compression == 1) return decompress_zle(physical, ref.logical_size);
  if (physical.size() < ref.logical_size) fail(Errc::corrupt_stream, "short raw block");
  return std::vector<uint8_t>(physical.begin(), physical.begin() + ref.logical_size);
}

std::vector<uint8_t> Pool::read_logical_block(const BlockRef& ref) {
  if (const auto* hit = cache_lookup(ref.start_row)) return *hit;
  std::vector<uint8_t> physical = read_physical_block(ref);
  std::vector<uint8_t> logical = decompress_physical(ref, physical);
  cache_insert(ref.start_row, logical);
  return logical;
}

// ---------------------------------------------------------------- cache

void Pool::set_cache_capacity(size_t bytes) {
  cache_capacity_ = bytes;
  while (cache_bytes_ > cache_capacity_ && !cache_lru_.empty()) {
    auto& victim = cache_lru_.back();
    cache_bytes_ -= victim.second.size();
    cache_evicted_bytes_ += victim.second.size();
    cache_index_.erase(victim.first);
    cache_lru_.pop_back();
  }
}

void Pool::cache_insert(uint64_t key, std::vector<uint8_t> logical) {
  if (logical.size() > cache_capacity_) return;
  cache_invalidate(key);
  cache_bytes_ += logical.size();
  cache_lru_.emplace_front(key, std::move(logical));
  cache_index_[key] = cache_lru_.begin();
  while (cache_bytes_ > cache_capacity_ && !cache_lru_.empty()) {
    auto& victim = cache_lru_.back();
    cache_bytes_ -= victim.second.size();
    cache_evicted_bytes_ += victim.second.size();
    cache_index_.erase(victim.first);
    cache_lru_.pop_back();
  }
}

const std::vector<uint8_t>* Pool::cache_lookup(uint64_t key) {
  auto it = cache_index_.find(key);
  if (it == cache_index_.end()) return nullptr;
  cache_lru_.splice(cache_lru_.begin(), cache_lru_, it->second);
  return &cache_lru_.front().second;
}

void Pool::cache_invalidate(uint64_t key) {
  auto it = cache_index_.find(key);
  if (it == cache_index_.end()) return;
  cache_bytes_ -= it->second->second.size();
  cache_lru_.erase(it->second);
  cache_index_.erase(it);
}

// ---------------------------------------------------------------- catalog

std::vector<uint8_t> Pool::serialize_catalog() const {
  Writer w;
  w.u32(kCatalogMagic);
  w.u16(1);
  w.str(name_);
  w.u32(record_size_);
  w.u64(guid_counter_);
  w.u32(uint32_t(datasets_.size()));
  for (const auto& ds : datasets_) {
    w.str(ds->name);
    w.guid(ds->guid);
    w.guid(ds->origin_guid);
    w.u64(ds->origin_txg);
    w.blockref(ds->head_root);
    w.u32(uint32_t(ds->snapshots.size()));
    for (const auto& s : ds->snapshots) {
      w.str(s.name);
      w.u64(s.txg);
      w.guid(s.guid);
      w.blockref(s.root);
      w.u32(uint32_t(s.deadlist.size()));
      for (const auto& ref : s.deadlist) w.blockref(ref);
    }
  }
  return w.buf;
}

void Pool::parse_catalog(const std::vector<uint8_t>& bytes) {
  Reader r(bytes.data(), bytes.size());
  if (r.u32() != kCatalogMagic) fail(Errc::unrecoverable, "corrupt pool catalog");
  if (r.u16() != 1) fail(Errc::unrecoverable, "unsupported catalog version");
  name_ = r.str();
  record_size_ = r.u32();
  guid_counter_ = r.u64();
  uint32_t nds = r.u32();
  datasets_.clear();
  for (uint32_t i = 0; i < nds; i++) {
    auto ds = std::make_unique<Dataset>();
    ds->pool = this;
    ds->name = r.str();
    ds->guid = r.guid();
    ds->origin_guid = r.guid();
    ds->origin_txg = r.u64();
    ds->head_root = r.blockref();
    uint32_t nsnap = r.u32();
    for (uint32_t j = 0; j < nsnap; j++) {
      Snapshot s;
      s.name = r.str();
      s.txg = r.u64();
      s.guid = r.guid();
      s.root = r.blockref();
      uint32_t ndead = r.u32();
      for (uint32_t k = 0; k < ndead; k++) s.deadlist.push_back(r.blockref());
      ds->snapshots.push_back(std::move(s));
    }
    datasets_.push_back(std::move(ds));
  }
}

BlockRef Pool::persist_catalog() {
  std::vector<uint8_t> bytes = serialize_catalog();
  std::vector<BlockRef> chunks;
  for (size_t off = 0; off < bytes.size(); off += record_size_) {
    size_t n = std::min<size_t>(record_size_, bytes.size() - off);
    chunks.push_back(write_logical_block(bytes.data() + off, n));
  }
  Writer iw;
  iw.u32(uint32_t(chunks.size()));
  for (const auto& c : chunks) iw.blockref(c);
  BlockRef index = write_logical_block(iw.buf);
  // old catalog blocks are never pinned by snapshots
  for (const auto& old : catalog_refs_) free_now(old);
  catalog_refs_.clear();
  catalog_refs_.push_back(index);
  catalog_refs_.insert(catalog_refs_.end(), chunks.begin(), chunks.end());
  return index;
}

uint64_t Pool::commit_txg(const std::function<void()>& after_persist) {
  uint64_t txg = open_txg();
  bool any_dirty = catalog_dirty_;
  for (auto& ds : datasets_) any_dirty = any_dirty || ds->head_dirty;
  for (auto& ds : datasets_)
    if (ds->head_dirty) ds->persist_head();
  if (after_persist) {
    after_persist();
    any_dirty = true;
  }
  if (any_dirty) catalog_root_ = persist_catalog();
  UberblockData u;
  u.txg = txg;
  u.timestamp = virtual_time_ms_;
  u.catalog_root = catalog_root_;
  for (auto& dev : devices_) {
    if (dev->is_missing()) continue;
    dev->write_uberblock(u);
  }
  committed_txg_ = txg;
  catalog_dirty_ = false;
  apply_pending_frees();
  return txg;
}

// ---------------------------------------------------------------- datasets

Dataset& Pool::create_dataset(const std::string& name) {
  if (name.empty() || name.find('@') != std::string::npos)
    fail(Errc::invalid, "bad dataset name");
  if (find_dataset(name)) fail(Errc::exists, "dataset exists: " + name);
  auto ds = std::make_unique<Dataset>();
  ds->pool = this;
  ds->name = name;
  ds->guid = next_guid();
  ds->head_dirty = true;
  datasets_.push_back(std::move(ds));
  catalog_dirty_ = true;
  return *datasets_.back();
}

Dataset* Pool::find_dataset(const std::string& name) {
  for (auto& ds : datasets_)
    if (ds->name == name) return ds.get();
  return nullptr;
}

Dataset& Pool::dataset(const std::string& name) {
  Dataset* ds = find_dataset(name);
  if (!ds) fail(Errc::not_found, "dataset not found: " + name);
  return *ds;
}

Dataset* Pool::find_by_snapshot_guid(const Guid& g, Snapshot** snap_out) {
  for (auto& ds : datasets_)
    for (auto& s : ds->snapshots)
      if (s.guid == g) {
        if (snap_out) *snap_out = &s;
        return ds.get();
      }
  return nullptr;
}

Dataset& Pool::clone_snapshot(Dataset& origin, const std::string& snap_name,
                              const std::string& new_name) {
  Snapshot* snap = origin.find_snapshot(snap_name);
  if (!snap) fail(Errc::not_found, "snapshot not found: " + snap_name);
  if (find_dataset(new_name)) fail(Errc::exists, "dataset exists: " + new_name);
  auto ds = std::make_unique<Dataset>();
  ds->pool = this;
  ds->name = new_name;
  ds->guid = next_guid();
  ds->origin_guid = snap->guid;
  ds->origin_txg = snap->txg;
  ds->head_root = snap->root;
  ds->load_head(snap->root);
  datasets_.push_back(std::move(ds));
  catalog_dirty_ = true;
  commit_txg();
  return *datasets_.back();
}

// ---------------------------------------------------------------- walks

void Pool::walk_live_refs(const std::function<void(const BlockRef&, bool)>& fn) const {
  for (const auto& ref : catalog_refs_) fn(ref, false);
  auto* self = const_cast<Pool*>(this);
  for (const auto& ds : datasets_) {
    if (!ds->head_root.is_null()) fn(ds->head_root, false);
    for (const auto& [id, obj] : ds->objects) {
      for (const auto& m : obj.meta_blocks) fn(m, false);
      for (const auto& l : obj.leaves)
        if (!l.is_null()) fn(l, true);
    }
    for (const auto& snap : ds->snapshots) {
      if (!snap.root.is_null()) fn(snap.root, false);
      SnapshotView view = SnapshotView::open(*self, snap.root);
      for (const auto& e : view.entries) {
        if (e.root.is_null()) continue;
        // descend the indirect chain
        std::vector<std::pair<BlockRef, uint8_t>> stack{{e.root, e.levels}};
        while (!stack.empty()) {
          auto [ref, level] = stack.back();
          stack.pop_back();
          if (level == 0) {
            fn(ref, true);
            continue;
          }
          fn(ref, false);
          auto bytes = self->read_logical_block(ref);
          for (size_t off = 0; off + kBlockRefSize <= bytes.size(); off += kBlockRefSize) {
            BlockRef child = get_blockref(bytes.data() + off);
            if (!child.is_null()) stack.push_back({child, uint8_t(level - 1)});
          }
        }
      }
      for (const auto& ref : snap.deadlist) fn(ref, true);
    }
  }
}

void Pool::rebuild_free_map() {
  std::set<uint64_t> allocated;
  walk_live_refs([&](const BlockRef& ref, bool) {
    StripeMap m = plan_stripe(ref.physical_sectors, d(), ref.start_row);
    for (uint64_t r = ref.start_row; r < ref.start_row + m.rows_spanned(); r++)
      allocated.insert(r);
  });
  free_extents_.clear();
  uint64_t run_start = 0;
  bool in_run = false;
  for (uint64_t r = 0; r < data_rows_; r++) {
    bool free = allocated.find(r) == allocated.end();
    if (free && !in_run) {
      run_start = r;
      in_run = true;
    } else if (!free && in_run) {
      free_extents_[run_start] = r - run_start;
      in_run = false;
    }
  }
  if (in_run) free_extents_[run_start] = data_rows_ - run_start;
  pending_frees_.clear();
}

Pool::SpaceBreakdown Pool::space_breakdown() const {
  std::set<uint64_t> leaf_rows, meta_rows;
  walk_live_refs([&](const BlockRef& ref, bool is_leaf) {
    StripeMap m = plan_stripe(ref.physical_sectors, d(), ref.start_row);
    auto& target = is_leaf ? leaf_rows : meta_rows;
    for (uint64_t r = ref.start_row; r < ref.start_row + m.rows_spanned(); r++)
      target.insert(r);
  });
  // a row is meta if any meta ref covers it and no leaf ref does
  for (uint64_t r : leaf_rows) meta_rows.erase(r);
  SpaceBreakdown b;
  b.total_rows = data_rows_;
  b.free_rows = free_rows_total();
  b.leaf_rows = leaf_rows.size();
  b.meta_rows = meta_rows.size();
  return b;
}

// ---------------------------------------------------------------- scrub

ScrubReport Pool::scrub() {
  ScrubReport rep;
  std::set<uint64_t> visited;
  RaidzGeometry g = geometry();
  walk_live_refs([&](const BlockRef& ref, bool) {
    if (!visited.insert(ref.start_row).second) return;
    rep.blocks_examined++;
    StripeMap m = plan_stripe(ref.physical_sectors, d(), ref.start_row);
    try {
      BlockRead plain = read_block(g, m);
      if (sha256(plain.data) == ref.checksum) {
        if (!plain.degraded && repair_row_parity(g, m) > 0) {
          rep.checksum_errors_found++;
          rep.repaired++;
        }
        return;
      }
    } catch (const Error&) {
      // fall through to combinatorial repair
    }
    rep.checksum_errors_found++;
    try {
      verify_and_repair(g, m, ref.checksum);
      rep.repaired++;
      repair_row_parity(g, m);
    } catch (const Error&) {
      rep.permanent_errors++;
    }
  });
  return rep;
}

// ---------------------------------------------------------------- hashes

Digest Pool::snapshot_content_hash(const BlockRef& objdir_root) {
  Writer w;
  SnapshotView view = SnapshotView::open(*this, objdir_root);
  w.u32(uint32_t(view.entries.size()));
  for (const auto& e : view.entries) {
    w.u64(e.object_id);
    w.u64(e.size);
    auto leaves = view.leaves_of(e);
    uint64_t nrec = (e.size + record_size_ - 1) / record_size_;
    for (uint64_t rec = 0; rec < nrec; rec++) {
      if (rec >= leaves.size() || leaves[rec].is_null()) {
        w.u8(0);
        continue;
      }
      w.u8(1);
      auto bytes = read_logical_block(leaves[rec]);
      w.u32(uint32_t(bytes.size()));
      w.bytes(bytes.data(), bytes.size());
    }
  }
  return sha256(w.buf);
}

Digest Pool::content_hash() {
  std::vector<const Dataset*> sorted;
  for (auto& ds : datasets_) sorted.push_back(ds.get());
  std::sort(sorted.begin(), sorted.end(),
            [](const Dataset* a, const Dataset* b) { return a->name < b->name; });
  Writer w;
  for (const Dataset* ds : sorted) {
    w.str(ds->name);
    w.guid(ds->origin_guid);
    w.digest(ds->content_hash());
    w.u32(uint32_t(ds->snapshots.size()));
    for (const auto& s : ds->snapshots) {
      w.str(s.name);
      w.guid(s.guid);
      w.digest(snapshot_content_hash(s.root));
    }
  }
  return sha256(w.buf);
}

// ---------------------------------------------------------------- memento

std::unique_ptr<Pool::Memento> Pool::save_state() const {
  auto m = std::make_unique<Memento>();
  m->free_extents = free_extents_;
  m->pending_frees = pending_frees_;
  m->guid_counter = guid_counter_;
  m->committed_txg = committed_txg_;
  m->catalog_root = catalog_root_;
  m->catalog_refs = catalog_refs_;
  m->catalog_dirty = catalog_dirty_;
  for (const auto& ds : datasets_) m->datasets.push_back(*ds);
  return m;
}

void Pool::restore_state(const Memento& m) {
  free_extents_ = m.free_extents;
  pending_frees_ = m.pending_frees;
  guid_counter_ = m.guid_counter;
  committed_txg_ = m.committed_txg;
  catalog_root_ = m.catalog_root;
  catalog_refs_ = m.catalog_refs;
  catalog_dirty_ = m.catalog_dirty;
  datasets_.clear();
  for (const auto& ds : m.datasets) {
    datasets_.push_back(std::make_unique<Dataset>(ds));
    datasets_.back()->pool = this;
  }
  // cached rows may now be stale (restored free map can hand them out again)
  cache_lru_.clear();
  cache_index_.clear();
  cache_bytes_ = 0;
}

}  // namespace poolforge
