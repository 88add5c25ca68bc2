#include "sendstream.hpp"

#include <algorithm>

namespace poolforge {

namespace {

void emit_header(Writer& w, uint16_t flags, const Guid& to, const Guid& from,
                 const std::string& name) {
  w.bytes(kStreamMagic, 8);
  w.u16(1);
  w.u16(flags);
  w.guid(to);
  w.guid(from);
  w.str(name);
}

void emit_end(Writer& w) {
  Digest d = sha256(w.buf.data(), w.buf.size());
  // digest covers everything up to and including the END kind byte's absence:
  // it is computed over all prior bytes, then the END record is appended
  w.u8(kRecEnd);
  w.digest(d);
}

void emit_object_writes(Pool& pool, Writer& w, const SnapshotView& view,
                        const SnapshotView::Entry& e, uint64_t prune_birth_txg) {
  auto leaves = view.leaves_of(e);
  uint32_t rs = pool.record_size();
  for (size_t rec = 0; rec < leaves.size(); rec++) {
    const BlockRef& ref = leaves[rec];
    if (ref.is_null() || ref.birth_txg <= prune_birth_txg) continue;
    uint64_t off = uint64_t(rec) * rs;
    if (off >= e.size) continue;
    std::vector<uint8_t> physical = pool.read_physical_block(ref);
    w.u8(kRecWrite);
    w.u64(e.object_id);
    w.u64(off);
    w.u32(ref.logical_size);
    w.u8(ref.compression);
    w.u32(uint32_t(physical.size()));
    w.bytes(physical.data(), physical.size());
  }
}

}  // namespace

std::vector<uint8_t> send_full(Pool& pool, Dataset& ds, const std::string& snap_name) {
  const Snapshot* snap = ds.find_snapshot(snap_name);
  if (!snap) fail(Errc::not_found, "snapshot not found: " + snap_name);
  Writer w;
  emit_header(w, 0, snap->guid, Guid{}, ds.name + "@" + snap->name);
  SnapshotView view = SnapshotView::open(pool, snap->root);
  for (const auto& e : view.entries) {
    w.u8(kRecObject);
    w.u64(e.object_id);
    w.u64(e.size);
    emit_object_writes(pool, w, view, e, 0);
  }
  emit_end(w);
  return w.buf;
}

std::vector<uint8_t> send_incremental(Pool& pool, Dataset& ds, const std::string& from_snap,
                                      const std::string& to_snap) {
  const Snapshot* base = ds.find_snapshot(from_snap);
  const Snapshot* target = ds.find_snapshot(to_snap);
  if (!base || !target) fail(Errc::not_found, "snapshot not found");
  if (base->txg >= target->txg)
    fail(Errc::lineage, "base snapshot is not an ancestor of the target");
  Writer w;
  emit_header(w, 1, target->guid, base->guid, ds.name + "@" + target->name);
  SnapshotView vb = SnapshotView::open(pool, base->root);
  SnapshotView vt = SnapshotView::open(pool, target->root);
  for (const auto& e : vt.entries) {
    const auto* eb = vb.find(e.object_id);
    bool changed = !eb || eb->size != e.size;
    auto leaves = vt.leaves_of(e);
    if (!changed)
      for (const auto& ref : leaves)
        if (!ref.is_null() && ref.birth_txg > base->txg) {
          changed = true;
          break;
        }
    if (!changed) continue;
    w.u8(kRecObject);
    w.u64(e.object_id);
    w.u64(e.size);
    emit_object_writes(pool, w, vt, e, base->txg);
    if (eb && e.size < eb->size) {
      w.u8(kRecFree);
      w.u64(e.object_id);
      w.u64(e.size);
      w.u64(eb->size - e.size);
    }
  }
  for (const auto& eb : vb.entries)
    if (!vt.find(eb.object_id)) {
      w.u8(kRecFree);
      w.u64(eb.object_id);
      w.u64(0);
      w.u64(eb.size);
    }
  emit_end(w);
  return w.buf;
}

StreamInfo stream_info(const uint8_t* stream, size_t len) {
  Reader r(stream, len);
  auto magic = r.bytes(8);
  if (std::memcmp(magic.data(), kStreamMagic, 8) != 0)
    fail(Errc::corrupt_stream, "bad stream magic");
  uint16_t version = r.u16();
  if (version != 1) fail(Errc::corrupt_stream, "unsupported stream version");
  uint16_t flags = r.u16();
  StreamInfo info;
  info.to_guid = r.guid();
  info.from_guid = r.guid();
  info.name = r.str();
  info.incremental = (flags & 1) != 0;
  if (info.incremental != !info.from_guid.is_zero())
    fail(Errc::corrupt_stream, "incremental flag disagrees with from_guid");
  info.header_len = r.pos;
  return info;
}

ReceiveResult receive(Pool& pool, const uint8_t* stream, size_t len, bool force) {
  StreamInfo info = stream_info(stream, len);
  auto at = info.name.find('@');
  if (at == std::string::npos || at == 0 || at + 1 == info.name.size())
    fail(Errc::corrupt_stream, "stream carries no dataset@snapshot name");
  std::string ds_name = info.name.substr(0, at);
  std::string snap_name = info.name.substr(at + 1);

  if (pool.find_by_snapshot_guid(info.to_guid))
    fail(Errc::exists, "receiver already holds snapshot guid " + info.to_guid.str());

  auto saved = pool.save_state();
  Dataset* ds = nullptr;
  try {
    if (info.incremental) {
      Snapshot* base = nullptr;
      ds = pool.find_by_snapshot_guid(info.from_guid, &base);
      if (!ds) fail(Errc::no_base, "receiver does not hold the base snapshot");
      bool diverged = ds->snapshots.back().guid != info.from_guid || ds->head_dirty ||
                      !(ds->head_root == base->root);
      if (diverged) {
        if (!force) fail(Errc::no_base, "receiver diverged from the base snapshot");
        ds->rollback_to(base->name);
      }
    } else {
      if (pool.find_dataset(ds_name)) {
        if (!force) fail(Errc::exists, "dataset exists: " + ds_name);
        // a forced full receive replaces the dataset wholesale
        auto& list = pool.datasets();
        list.erase(std::remove_if(list.begin(), list.end(),
                                  [&](const std::unique_ptr<Dataset>& d) {
                                    return d->name == ds_name;
                                  }),
                   list.end());
        pool.mark_catalog_dirty();
      }
      ds = &pool.create_dataset(ds_name);
    }

    // apply records; the stream digest is checked at END before anything
    // becomes visible
    Reader r(stream, len);
    r.skip(info.header_len);
    bool saw_end = false;
    while (!r.eof()) {
      uint8_t kind = r.u8();
      if (kind == kRecObject) {
        uint64_t id = r.u64();
        uint64_t size = r.u64();
        ObjectState& obj = ds->objects[id];
        obj.size = size;
        obj.dirty = true;
        ds->head_dirty = true;
      } else if (kind == kRecWrite) {
        uint64_t id = r.u64();
        uint64_t off = r.u64();
        uint32_t logical_len = r.u32();
        uint8_t compression = r.u8();
        uint32_t physical_len = r.u32();
        auto payload = r.bytes(physical_len);
        if (logical_len == 0 || logical_len > pool.record_size() || compression > 1)
          fail(Errc::corrupt_stream, "bad WRITE record");
        if (off % pool.record_size() != 0)
          fail(Errc::corrupt_stream, "WRITE offset not record-aligned");
        // every record occupies at least one row, so a valid offset can
        // never index past the pool's row count
        if (off / pool.record_size() >= pool.data_rows_total())
          fail(Errc::corrupt_stream, "WRITE offset beyond pool capacity");
        // payload must decompress cleanly to the stated logical length
        std::vector<uint8_t> logical;
        if (compression == 1) {
          logical = decompress_zle(payload, logical_len);
        } else {
          if (payload.size() < logical_len) fail(Errc::corrupt_stream, "short raw payload");
          logical.assign(payload.begin(), payload.begin() + logical_len);
        }
        BlockRef ref = pool.write_physical_block(payload, logical_len, compression);
        ObjectState& obj = ds->objects[id];
        uint64_t rec = off / pool.record_size();
        if (rec + 1 > obj.leaves.size()) obj.leaves.resize(size_t(rec + 1));
        if (!obj.leaves[rec].is_null()) ds->free_or_defer(obj.leaves[rec]);
        obj.leaves[rec] = ref;
        obj.size = std::max(obj.size, off + logical_len);
        obj.dirty = true;
        ds->head_dirty = true;
      } else if (kind == kRecFree) {
        uint64_t id = r.u64();
        uint64_t off = r.u64();
        uint64_t flen = r.u64();
        auto it = ds->objects.find(id);
        if (it != ds->objects.end()) {
          ObjectState& obj = it->second;
          uint64_t new_size = off;
          uint32_t rs = pool.record_size();
          uint64_t keep = (new_size + rs - 1) / rs;
          for (size_t rec = size_t(keep); rec < obj.leaves.size(); rec++) {
            if (obj.leaves[rec].is_null()) continue;
            ds->free_or_defer(obj.leaves[rec]);
            obj.leaves[rec] = BlockRef{};
          }
          if (keep < obj.leaves.size()) obj.leaves.resize(size_t(keep));
          if (off == 0 && flen >= obj.size) {
            ds->objects.erase(it);
          } else {
            obj.size = std::min(obj.size, new_size);
            obj.dirty = true;
          }
          ds->head_dirty = true;
        }
      } else if (kind == kRecEnd) {
        size_t digest_pos = r.pos - 1;  // position of the END kind byte
        Digest want = r.digest();
        if (!r.eof()) fail(Errc::corrupt_stream, "bytes after END record");
        Digest got = sha256(stream, digest_pos);
        if (got != want) fail(Errc::corrupt_stream, "stream digest mismatch");
        saw_end = true;
      } else {
        fail(Errc::corrupt_stream, "unknown record kind");
      }
    }
    if (!saw_end) fail(Errc::corrupt_stream, "truncated stream: missing END");

    // commit: new snapshot adopts the sender's guid
    pool.commit_txg([&] {
      Snapshot s;
      s.name = snap_name;
      s.txg = pool.open_txg();
      s.guid = info.to_guid;
      s.root = ds->head_root;
      ds->snapshots.push_back(std::move(s));
    });
  } catch (...) {
    pool.restore_state(*saved);
    throw;
  }
  ReceiveResult res;
  res.dataset = ds_name;
  res.snapshot = snap_name;
  res.snapshot_guid = info.to_guid;
  return res;
}

}  // namespace poolforge
