#include "dataset.hpp"

#include <algorithm>

#include "pool.hpp"

namespace poolforge {

// ------------------------------------------------------------- object dirs

std::vector<uint8_t> serialize_objdir(const std::vector<SnapshotView::Entry>& entries) {
  Writer w;
  w.u32(uint32_t(entries.size()));
  for (const auto& e : entries) {
    w.u64(e.object_id);
    w.u64(e.size);
    w.u8(e.levels);
    w.blockref(e.root);
  }
  return w.buf;
}

std::vector<SnapshotView::Entry> parse_objdir(const std::vector<uint8_t>& bytes) {
  Reader r(bytes.data(), bytes.size());
  uint32_t n = r.u32();
  std::vector<SnapshotView::Entry> out;
  out.reserve(n);
  for (uint32_t i = 0; i < n; i++) {
    SnapshotView::Entry e;
    e.object_id = r.u64();
    e.size = r.u64();
    e.levels = r.u8();
    e.root = r.blockref();
    out.push_back(e);
  }
  return out;
}

SnapshotView SnapshotView::open(Pool& pool, const BlockRef& objdir_root) {
  SnapshotView v;
  v.pool = &pool;
  if (!objdir_root.is_null()) v.entries = parse_objdir(pool.read_logical_block(objdir_root));
  return v;
}

const SnapshotView::Entry* SnapshotView::find(uint64_t object_id) const {
  for (const auto& e : entries)
    if (e.object_id == object_id) return &e;
  return nullptr;
}

std::vector<BlockRef> SnapshotView::leaves_of(const Entry& e) const {
  std::vector<BlockRef> leaves;
  if (e.root.is_null()) return leaves;
  // depth-first, left-to-right, preserving leaf index order
  std::function<void(const BlockRef&, uint8_t)> walk = [&](const BlockRef& ref, uint8_t level) {
    if (level == 0) {
      leaves.push_back(ref);
      return;
    }
    if (ref.is_null()) fail(Errc::invalid, "null indirect block");
    auto bytes = pool->read_logical_block(ref);
    for (size_t off = 0; off + kBlockRefSize <= bytes.size(); off += kBlockRefSize) {
      BlockRef child = get_blockref(bytes.data() + off);
      if (level == 1) {
        leaves.push_back(child);
      } else {
        if (child.is_null())
          fail(Errc::invalid, "null interior indirect block");
        walk(child, uint8_t(level - 1));
      }
    }
  };
  walk(e.root, e.levels);
  return leaves;
}

std::vector<uint8_t> SnapshotView::read_file(uint64_t object_id, uint64_t offset,
                                             size_t len) const {
  const Entry* e = find(object_id);
  if (!e) fail(Errc::not_found, "object not found: " + std::to_string(object_id));
  if (offset >= e->size) return {};
  len = size_t(std::min<uint64_t>(len, e->size - offset));
  uint32_t rs = pool->record_size();
  auto leaves = leaves_of(*e);
  std::vector<uint8_t> out(len, 0);
  for (size_t done = 0; done < len;) {
    uint64_t pos = offset + done;
    uint64_t rec = pos / rs;
    uint64_t in_rec = pos % rs;
    size_t chunk = size_t(std::min<uint64_t>(len - done, rs - in_rec));
    if (rec < leaves.size() && !leaves[rec].is_null()) {
      auto bytes = pool->read_logical_block(leaves[rec]);
      for (size_t i = 0; i < chunk; i++)
        if (in_rec + i < bytes.size()) out[done + i] = bytes[in_rec + i];
    }
    done += chunk;
  }
  return out;
}

// ------------------------------------------------------------------- heads

void Dataset::free_or_defer(const BlockRef& ref) {
  if (ref.is_null()) return;
  if (!snapshots.empty() && ref.birth_txg <= snapshots.back().txg) {
    snapshots.back().deadlist.push_back(ref);
    pool->mark_catalog_dirty();
    return;
  }
  if (!origin_guid.is_zero() && ref.birth_txg <= origin_txg) {
    // shared with the clone origin; the origin keeps it alive
    return;
  }
  pool->free_now(ref);
}

void Dataset::write_file(uint64_t object_id, uint64_t offset, const uint8_t* data, size_t len) {
  if (len == 0) return;
  uint32_t rs = pool->record_size();
  ObjectState& obj = objects[object_id];
  uint64_t end = offset + len;
  uint64_t new_size = std::max(obj.size, end);
  uint64_t first_rec = offset / rs;
  uint64_t last_rec = (end - 1) / rs;
  if (last_rec + 1 > obj.leaves.size()) obj.leaves.resize(size_t(last_rec + 1));
  for (uint64_t rec = first_rec; rec <= last_rec; rec++) {
    uint32_t leaf_len = uint32_t(std::min<uint64_t>(rs, new_size - rec * rs));
    std::vector<uint8_t> buf(leaf_len, 0);
    if (!obj.leaves[rec].is_null()) {
      auto old = pool->read_logical_block(obj.leaves[rec]);
      std::copy(old.begin(), old.begin() + std::min<size_t>(old.size(), leaf_len), buf.begin());
    }
    uint64_t lo = std::max<uint64_t>(offset, rec * rs);
    uint64_t hi = std::min<uint64_t>(end, (rec + 1) * rs);
    std::copy(data + (lo - offset), data + (hi - offset), buf.begin() + size_t(lo - rec * rs));
    BlockRef fresh = pool->write_logical_block(buf);
    free_or_defer(obj.leaves[rec]);
    obj.leaves[rec] = fresh;
  }
  obj.size = new_size;
  obj.dirty = true;
  head_dirty = true;
}

std::vector<uint8_t> Dataset::read_file(uint64_t object_id, uint64_t offset, size_t len) const {
  auto it = objects.find(object_id);
  if (it == objects.end())
    fail(Errc::not_found, "object not found: " + std::to_string(object_id));
  if (offset >= it->second.size) return {};
  const ObjectState& obj = it->second;
  len = size_t(std::min<uint64_t>(len, obj.size - offset));
  uint32_t rs = pool->record_size();
  std::vector<uint8_t> out(len, 0);
  for (size_t done = 0; done < len;) {
    uint64_t pos = offset + done;
    uint64_t rec = pos / rs;
    uint64_t in_rec = pos % rs;
    size_t chunk = size_t(std::min<uint64_t>(len - done, rs - in_rec));
    if (rec < obj.leaves.size() && !obj.leaves[rec].is_null()) {
      auto bytes = pool->read_logical_block(obj.leaves[rec]);
      for (size_t i = 0; i < chunk; i++)
        if (in_rec + i < bytes.size()) out[done + i] = bytes[in_rec + i];
    }
    done += chunk;
  }
  return out;
}

uint64_t Dataset::object_size(uint64_t object_id) const {
  auto it = objects.find(object_id);
  return it == objects.end() ? 0 : it->second.size;
}

void Dataset::persist_head() {
  std::vector<SnapshotView::Entry> entries;
  for (auto& [id, obj] : objects) {
    if (obj.dirty) {
      for (const auto& m : obj.meta_blocks) free_or_defer(m);
      obj.meta_blocks.clear();
      if (obj.leaves.empty()) {
        obj.tree_root = BlockRef{};
        obj.tree_levels = 0;
      } else {
        std::vector<BlockRef> level = obj.leaves;
        uint8_t levels = 0;
        do {
          std::vector<BlockRef> next;
          for (size_t off = 0; off < level.size(); off += kIndirectFanout) {
            size_t n = std::min<size_t>(kIndirectFanout, level.size() - off);
            Writer w;
            for (size_t i = 0; i < n; i++) w.blockref(level[off + i]);
            BlockRef ib = pool->write_logical_block(w.buf);
            obj.meta_blocks.push_back(ib);
            next.push_back(ib);
          }
          level = std::move(next);
          levels++;
        } while (level.size() > 1);
        obj.tree_root = level[0];
        obj.tree_levels = levels;
      }
      obj.dirty = false;
    }
    entries.push_back({id, obj.size, obj.tree_levels, obj.tree_root});
  }
  auto bytes = serialize_objdir(entries);
  if (bytes.size() > pool->record_size())
    fail(Errc::no_space, "too many objects for one object directory block");
  BlockRef fresh = pool->write_logical_block(bytes);
  free_or_defer(head_root);
  head_root = fresh;
  head_dirty = false;
  pool->mark_catalog_dirty();
}

void Dataset::load_head(const BlockRef& root) {
  objects.clear();
  head_root = root;
  head_dirty = false;
  if (root.is_null()) return;
  SnapshotView view = SnapshotView::open(*pool, root);
  for (const auto& e : view.entries) {
    ObjectState obj;
    obj.size = e.size;
    obj.tree_root = e.root;
    obj.tree_levels = e.levels;
    obj.leaves = view.leaves_of(e);
    // collect the indirect chain
    if (!e.root.is_null()) {
      std::function<void(const BlockRef&, uint8_t)> walk = [&](const BlockRef& ref,
                                                               uint8_t level) {
        if (level == 0) return;
        obj.meta_blocks.push_back(ref);
        if (level == 1) return;
        auto bytes = pool->read_logical_block(ref);
        for (size_t off = 0; off + kBlockRefSize <= bytes.size(); off += kBlockRefSize)
          walk(get_blockref(bytes.data() + off), uint8_t(level - 1));
      };
      walk(e.root, e.levels);
    }
    objects[e.object_id] = std::move(obj);
  }
}

// --------------------------------------------------------------- snapshots

Snapshot& Dataset::take_snapshot(const std::string& snap_name) {
  if (snap_name.empty()) fail(Errc::invalid, "empty snapshot name");
  if (find_snapshot(snap_name)) fail(Errc::exists, "snapshot exists: " + snap_name);
  pool->commit_txg([&] {
    Snapshot s;
    s.name = snap_name;
    s.txg = pool->open_txg();
    s.guid = pool->next_guid();
    s.root = head_root;
    snapshots.push_back(std::move(s));
  });
  return snapshots.back();
}

Snapshot* Dataset::find_snapshot(const std::string& snap_name) {
  for (auto& s : snapshots)
    if (s.name == snap_name) return &s;
  return nullptr;
}

const Snapshot* Dataset::find_snapshot(const std::string& snap_name) const {
  for (auto& s : snapshots)
    if (s.name == snap_name) return &s;
  return nullptr;
}

uint64_t Dataset::destroy_snapshot(const std::string& snap_name) {
  auto it = std::find_if(snapshots.begin(), snapshots.end(),
                         [&](const Snapshot& s) { return s.name == snap_name; });
  if (it == snapshots.end()) fail(Errc::not_found, "snapshot not found: " + snap_name);
  for (const auto& other : pool->datasets())
    if (other->origin_guid == it->guid)
      fail(Errc::busy, "snapshot has a dependent clone: " + other->name);
  Snapshot* prev = it == snapshots.begin() ? nullptr : &*std::prev(it);
  uint64_t freed_sectors = 0;
  for (const auto& ref : it->deadlist) {
    if (prev && ref.birth_txg <= prev->txg) {
      prev->deadlist.push_back(ref);  // still pinned by the older snapshot
    } else if (!prev && !origin_guid.is_zero() && ref.birth_txg <= origin_txg) {
      // shared with the clone origin; nothing to do here
    } else {
      freed_sectors += pool->block_alloc_sectors(ref);
      pool->free_now(ref);
    }
  }
  snapshots.erase(it);
  pool->mark_catalog_dirty();
  pool->commit_txg();
  return freed_sectors;
}

void Dataset::rollback_to(const std::string& snap_name) {
  auto it = std::find_if(snapshots.begin(), snapshots.end(),
                         [&](const Snapshot& s) { return s.name == snap_name; });
  if (it == snapshots.end()) fail(Errc::not_found, "snapshot not found: " + snap_name);
  size_t keep = size_t(it - snapshots.begin()) + 1;
  for (size_t i = keep; i < snapshots.size(); i++)
    for (const auto& other : pool->datasets())
      if (other->origin_guid == snapshots[i].guid)
        fail(Errc::busy, "snapshot has a dependent clone: " + other->name);

  // Everything born after the rollback point dies: refs with an older birth
  // sit in the target snapshot's tree and stay live. Deduplicate by start
  // row; a block can appear in several newer snapshots and the head at once.
  uint64_t pin = it->txg;
  std::map<uint64_t, BlockRef> doomed;
  auto condemn = [&](const BlockRef& ref) {
    if (!ref.is_null() && ref.birth_txg > pin) doomed.emplace(ref.start_row, ref);
  };
  condemn(head_root);
  for (const auto& [id, obj] : objects) {
    for (const auto& m : obj.meta_blocks) condemn(m);
    for (const auto& l : obj.leaves) condemn(l);
  }
  for (size_t i = keep; i < snapshots.size(); i++) {
    const Snapshot& s = snapshots[i];
    condemn(s.root);
    SnapshotView view = SnapshotView::open(*pool, s.root);
    for (const auto& e : view.entries) {
      if (e.root.is_null()) continue;
      std::function<void(const BlockRef&, uint8_t)> walk = [&](const BlockRef& ref,
                                                               uint8_t level) {
        condemn(ref);
        if (level == 0) return;
        auto bytes = pool->read_logical_block(ref);
        for (size_t off = 0; off + kBlockRefSize <= bytes.size(); off += kBlockRefSize) {
          BlockRef child = get_blockref(bytes.data() + off);
          if (!child.is_null()) walk(child, uint8_t(level - 1));
        }
      };
      walk(e.root, e.levels);
    }
    // deadlist entries born before the pin are back in the live tree
    for (const auto& ref : s.deadlist) condemn(ref);
  }
  for (const auto& [row, ref] : doomed) pool->free_now(ref);

  snapshots.resize(keep);
  // blocks on the target's deadlist were freed from a head that no longer
  // exists; they are live again under the restored root
  snapshots.back().deadlist.clear();
  load_head(it->root);
  head_dirty = false;
  pool->mark_catalog_dirty();
}

// ------------------------------------------------------------------- space

void Dataset::collect_rows(std::set<uint64_t>& leaf_rows, std::set<uint64_t>& meta_rows) const {
  auto add = [&](const BlockRef& ref, bool leaf) {
    if (ref.is_null()) return;
    StripeMap m = plan_stripe(ref.physical_sectors, pool->d(), ref.start_row);
    auto& target = leaf ? leaf_rows : meta_rows;
    for (uint64_t r = ref.start_row; r < ref.start_row + m.rows_spanned(); r++) target.insert(r);
  };
  add(head_root, false);
  for (const auto& [id, obj] : objects) {
    for (const auto& m : obj.meta_blocks) add(m, false);
    for (const auto& l : obj.leaves) add(l, true);
  }
  for (const auto& s : snapshots) {
    add(s.root, false);
    SnapshotView view = SnapshotView::open(*pool, s.root);
    for (const auto& e : view.entries) {
      if (e.root.is_null()) continue;
      std::function<void(const BlockRef&, uint8_t)> walk = [&](const BlockRef& ref,
                                                               uint8_t level) {
        if (level == 0) {
          add(ref, true);
          return;
        }
        add(ref, false);
        auto bytes = pool->read_logical_block(ref);
        for (size_t off = 0; off + kBlockRefSize <= bytes.size(); off += kBlockRefSize) {
          BlockRef child = get_blockref(bytes.data() + off);
          if (!child.is_null()) walk(child, uint8_t(level - 1));
        }
      };
      walk(e.root, e.levels);
    }
    for (const auto& ref : s.deadlist) add(ref, true);
  }
}

SpaceReport Dataset::space_report() const {
  std::set<uint64_t> mine_leaf, mine_meta;
  collect_rows(mine_leaf, mine_meta);
  std::set<uint64_t> mine;
  mine.insert(mine_leaf.begin(), mine_leaf.end());
  mine.insert(mine_meta.begin(), mine_meta.end());
  std::set<uint64_t> others;
  for (const auto& other : pool->datasets()) {
    if (other.get() == this) continue;
    std::set<uint64_t> ol, om;
    other->collect_rows(ol, om);
    others.insert(ol.begin(), ol.end());
    others.insert(om.begin(), om.end());
  }
  uint64_t unique_rows = 0;
  for (uint64_t r : mine)
    if (others.find(r) == others.end()) unique_rows++;
  uint64_t row_bytes = uint64_t(pool->d()) * pool->sector_size();
  // referenced: reachable from the head only
  std::set<uint64_t> head_rows;
  {
    auto add = [&](const BlockRef& ref) {
      if (ref.is_null()) return;
      StripeMap m = plan_stripe(ref.physical_sectors, pool->d(), ref.start_row);
      for (uint64_t r = ref.start_row; r < ref.start_row + m.rows_spanned(); r++)
        head_rows.insert(r);
    };
    add(head_root);
    for (const auto& [id, obj] : objects) {
      for (const auto& m : obj.meta_blocks) add(m);
      for (const auto& l : obj.leaves) add(l);
    }
  }
  SpaceReport rep;
  rep.used_bytes = unique_rows * row_bytes;
  rep.available_bytes = pool->free_rows_total() * row_bytes;
  rep.referenced_bytes = head_rows.size() * row_bytes;
  return rep;
}

Digest Dataset::content_hash() const {
  Writer w;
  w.u32(uint32_t(objects.size()));
  uint32_t rs = pool->record_size();
  for (const auto& [id, obj] : objects) {
    w.u64(id);
    w.u64(obj.size);
    uint64_t nrec = (obj.size + rs - 1) / rs;
    for (uint64_t rec = 0; rec < nrec; rec++) {
      if (rec >= obj.leaves.size() || obj.leaves[rec].is_null()) {
        w.u8(0);
        continue;
      }
      w.u8(1);
      auto bytes = pool->read_logical_block(obj.leaves[rec]);
      w.u32(uint32_t(bytes.size()));
      w.bytes(bytes.data(), bytes.size());
    }
  }
  return sha256(w.buf);
}

// -------------------------------------------------------------------- diff

std::vector<DiffEntry> diff_snapshots(Pool& pool, const Dataset& ds, const std::string& snap_a,
                                      const std::string& snap_b) {
  const Snapshot* a = ds.find_snapshot(snap_a);
  const Snapshot* b = ds.find_snapshot(snap_b);
  if (!a || !b) fail(Errc::not_found, "snapshot not found");
  if (a->txg > b->txg) fail(Errc::lineage, "base snapshot is newer than target");
  std::vector<DiffEntry> out;
  uint32_t rs = pool.record_size();
  SnapshotView va = SnapshotView::open(pool, a->root);
  SnapshotView vb = SnapshotView::open(pool, b->root);
  for (const auto& e : vb.entries) {
    const auto* ea = va.find(e.object_id);
    uint64_t size_a = ea ? ea->size : 0;
    auto leaves = vb.leaves_of(e);
    for (size_t rec = 0; rec < leaves.size(); rec++) {
      if (leaves[rec].is_null() || leaves[rec].birth_txg <= a->txg) continue;
      uint64_t off = uint64_t(rec) * rs;
      if (off >= e.size) continue;
      uint64_t len = std::min<uint64_t>(rs, e.size - off);
      auto kind = (!ea || off >= size_a) ? DiffEntry::Kind::Added : DiffEntry::Kind::Modified;
      if (!out.empty() && out.back().object_id == e.object_id && out.back().kind == kind &&
          out.back().offset + out.back().length == off) {
        out.back().length += len;
      } else {
        out.push_back({e.object_id, off, len, kind});
      }
    }
    if (e.size < size_a) out.push_back({e.object_id, e.size, size_a - e.size,
                                        DiffEntry::Kind::Freed});
  }
  for (const auto& ea : va.entries)
    if (!vb.find(ea.object_id))
      out.push_back({ea.object_id, 0, ea.size, DiffEntry::Kind::Freed});
  return out;
}

}  // namespace poolforge
