#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <map>

#include "util.hpp"

using namespace poolforge;
using namespace testutil;

namespace {

struct Rig {
  TempDir dir;
  std::vector<std::string> paths;
  std::unique_ptr<Pool> pool;
  explicit Rig(int d = 4, uint64_t cap = 16384, uint32_t rs = 16 * 1024) {
    paths = make_device_files(dir, d, cap);
    PoolOptions opt;
    opt.record_size = rs;
    opt.guid_seed = 0xabc;
    pool = Pool::create(open_all(paths), "tank", opt);
  }
};

// Shadow model: plain in-memory copies of every object and snapshot.
struct Shadow {
  std::map<uint64_t, std::vector<uint8_t>> head;
  std::map<std::string, std::map<uint64_t, std::vector<uint8_t>>> snaps;
  void write(uint64_t obj, uint64_t off, const std::vector<uint8_t>& data) {
    auto& v = head[obj];
    if (v.size() < off + data.size()) v.resize(off + data.size(), 0);
    std::copy(data.begin(), data.end(), v.begin() + std::ptrdiff_t(off));
  }
};

}  // namespace

TEST_CASE("write, read back, holes read as zeros") {
  Rig rig;
  Dataset& ds = rig.pool->create_dataset("d");
  Rng rng(1);
  auto data = random_bytes(rng, 40000);
  ds.write_file(7, 100000, data);  // leading hole of 100000 bytes
  CHECK(ds.object_size(7) == 140000);
  CHECK(ds.read_file(7, 0, 1000) == std::vector<uint8_t>(1000, 0));
  CHECK(ds.read_file(7, 100000, data.size()) == data);
  // read past eof clamps
  CHECK(ds.read_file(7, 139000, 5000).size() == 1000);
  // unknown object and dataset
  CHECK_THROWS_AS(ds.read_file(8, 0, 10), Error);
  CHECK_THROWS_AS(rig.pool->dataset("nope"), Error);
}

TEST_CASE("overwrite is copy-on-write: snapshot keeps the old bytes") {
  Rig rig;
  Dataset& ds = rig.pool->create_dataset("d");
  Rng rng(2);
  auto v1 = random_bytes(rng, 60000);
  ds.write_file(1, 0, v1);
  ds.take_snapshot("s1");
  auto v2 = random_bytes(rng, 60000);
  ds.write_file(1, 0, v2);
  rig.pool->commit_txg();

  CHECK(ds.read_file(1, 0, v2.size()) == v2);
  SnapshotView view = SnapshotView::open(*rig.pool, ds.find_snapshot("s1")->root);
  CHECK(view.read_file(1, 0, v1.size()) == v1);
}

TEST_CASE("snapshot names must be unique; destroy frees unique blocks") {
  Rig rig;
  Dataset& ds = rig.pool->create_dataset("d");
  Rng rng(3);
  ds.write_file(1, 0, random_bytes(rng, 50000));
  ds.take_snapshot("s1");
  CHECK_THROWS_AS(ds.take_snapshot("s1"), Error);
  uint64_t free_before = rig.pool->free_rows_total();
  ds.write_file(1, 0, random_bytes(rng, 50000));  // s1 now pins old blocks
  rig.pool->commit_txg();
  CHECK(rig.pool->free_rows_total() < free_before);
  uint64_t freed = ds.destroy_snapshot("s1");
  CHECK(freed > 0);
  CHECK(ds.snapshots.empty());
  CHECK_THROWS_AS(ds.destroy_snapshot("s1"), Error);
}

TEST_CASE("deadlist transfer: destroying the middle snapshot keeps older reads intact") {
  Rig rig;
  Dataset& ds = rig.pool->create_dataset("d");
  Rng rng(4);
  auto v1 = random_bytes(rng, 48000);
  ds.write_file(1, 0, v1);
  ds.take_snapshot("s1");
  auto v2 = random_bytes(rng, 48000);
  ds.write_file(1, 0, v2);
  ds.take_snapshot("s2");
  auto v3 = random_bytes(rng, 48000);
  ds.write_file(1, 0, v3);
  rig.pool->commit_txg();

  ds.destroy_snapshot("s2");
  SnapshotView s1 = SnapshotView::open(*rig.pool, ds.find_snapshot("s1")->root);
  CHECK(s1.read_file(1, 0, v1.size()) == v1);
  CHECK(ds.read_file(1, 0, v3.size()) == v3);
  // after a scrub everything is still reachable and clean
  auto rep = rig.pool->scrub();
  CHECK(rep.permanent_errors == 0);
  CHECK(rep.checksum_errors_found == 0);
}

TEST_CASE("clone shares blocks, diverges on write, blocks origin destroy") {
  Rig rig;
  Dataset& ds = rig.pool->create_dataset("d");
  Rng rng(5);
  auto v1 = random_bytes(rng, 64000);
  ds.write_file(1, 0, v1);
  ds.take_snapshot("s1");

  uint64_t free_before = rig.pool->free_rows_total();
  Dataset& cl = rig.pool->clone_snapshot(ds, "s1", "copy");
  // cloning costs metadata only, not a data copy
  CHECK(free_before - rig.pool->free_rows_total() < 8);
  CHECK(cl.read_file(1, 0, v1.size()) == v1);

  auto patch = random_bytes(rng, 16000);
  cl.write_file(1, 8000, patch);
  rig.pool->commit_txg();
  CHECK(ds.read_file(1, 0, v1.size()) == v1);  // origin untouched
  auto got = cl.read_file(1, 0, v1.size());
  CHECK(std::equal(patch.begin(), patch.end(), got.begin() + 8000));

  CHECK_THROWS_AS(ds.destroy_snapshot("s1"), Error);  // clone depends on it
  try {
    ds.destroy_snapshot("s1");
  } catch (const Error& e) {
    CHECK(e.code == Errc::busy);
  }
}

TEST_CASE("space report: clone shares until it diverges") {
  Rig rig;
  Dataset& ds = rig.pool->create_dataset("d");
  Rng rng(6);
  ds.write_file(1, 0, random_bytes(rng, 64000));
  ds.take_snapshot("s1");
  rig.pool->commit_txg();
  Dataset& cl = rig.pool->clone_snapshot(ds, "s1", "copy");
  auto before = cl.space_report();
  CHECK(before.referenced_bytes > 0);
  cl.write_file(2, 0, random_bytes(rng, 32000));
  rig.pool->commit_txg();
  auto after = cl.space_report();
  CHECK(after.used_bytes > before.used_bytes);
  CHECK(after.available_bytes < before.available_bytes);
  auto origin_rep = ds.space_report();
  CHECK(origin_rep.referenced_bytes >= 64000);
}

TEST_CASE("randomized history agrees with the shadow full-copy model") {
  Rig rig(4, 32768);
  Dataset& ds = rig.pool->create_dataset("d");
  Shadow model;
  Rng rng(0xfeed);
  std::vector<std::string> live_snaps;
  int snap_counter = 0;

  for (int step = 0; step < 400; step++) {
    uint64_t dice = rng.next() % 100;
    if (dice < 60) {
      uint64_t obj = 1 + rng.next() % 4;
      uint64_t off = rng.next() % 100000;
      auto data = lumpy_bytes(rng, 1 + size_t(rng.next() % 30000));
      ds.write_file(obj, off, data);
      model.write(obj, off, data);
    } else if (dice < 75) {
      std::string name = "s" + std::to_string(snap_counter++);
      ds.take_snapshot(name);
      model.snaps[name] = model.head;
      live_snaps.push_back(name);
    } else if (dice < 85 && !live_snaps.empty()) {
      size_t k = size_t(rng.next() % live_snaps.size());
      ds.destroy_snapshot(live_snaps[k]);
      model.snaps.erase(live_snaps[k]);
      live_snaps.erase(live_snaps.begin() + std::ptrdiff_t(k));
    } else {
      rig.pool->commit_txg();
    }

    if (step % 40 == 39) {
      for (const auto& [obj, bytes] : model.head) {
        CHECK(ds.object_size(obj) == bytes.size());
        CHECK(ds.read_file(obj, 0, bytes.size()) == bytes);
      }
      for (const auto& name : live_snaps) {
        SnapshotView view = SnapshotView::open(*rig.pool, ds.find_snapshot(name)->root);
        for (const auto& [obj, bytes] : model.snaps[name]) {
          auto got = view.read_file(obj, 0, bytes.size());
          CHECK(got == bytes);
        }
      }
    }
  }
  // a final scrub proves no leaked or double-freed rows corrupted anything
  auto rep = rig.pool->scrub();
  CHECK(rep.checksum_errors_found == 0);
  CHECK(rep.permanent_errors == 0);
}

TEST_CASE("diff reports added, modified, and freed ranges") {
  Rig rig;
  Dataset& ds = rig.pool->create_dataset("d");
  Rng rng(8);
  auto base = random_bytes(rng, 64000);
  ds.write_file(1, 0, base);
  ds.write_file(2, 0, random_bytes(rng, 20000));
  ds.take_snapshot("a");
  ds.write_file(1, 32000, random_bytes(rng, 16000));  // modify obj 1
  ds.write_file(3, 0, random_bytes(rng, 5000));       // add obj 3
  ds.take_snapshot("b");

  auto entries = diff_snapshots(*rig.pool, ds, "a", "b");
  bool saw_mod = false, saw_add = false;
  for (const auto& e : entries) {
    if (e.object_id == 1) {
      CHECK(e.kind == DiffEntry::Kind::Modified);
      CHECK(e.offset >= 16 * 1024);  // record-aligned, before 32000
      saw_mod = true;
    }
    if (e.object_id == 3) {
      CHECK(e.kind == DiffEntry::Kind::Added);
      saw_add = true;
    }
    CHECK(e.object_id != 2);  // untouched object never appears
  }
  CHECK(saw_mod);
  CHECK(saw_add);
  // reversed order is a lineage error
  CHECK_THROWS_AS(diff_snapshots(*rig.pool, ds, "b", "a"), Error);
}

TEST_CASE("rollback discards newer snapshots and head changes") {
  Rig rig;
  Dataset& ds = rig.pool->create_dataset("d");
  Rng rng(9);
  auto v1 = random_bytes(rng, 50000);
  ds.write_file(1, 0, v1);
  ds.take_snapshot("keep");
  uint64_t free_at_keep = rig.pool->free_rows_total();
  ds.write_file(1, 0, random_bytes(rng, 50000));
  ds.take_snapshot("later");
  ds.write_file(1, 0, random_bytes(rng, 50000));
  rig.pool->commit_txg();

  ds.rollback_to("keep");
  rig.pool->commit_txg();
  CHECK(ds.snapshots.size() == 1);
  CHECK(ds.read_file(1, 0, v1.size()) == v1);
  CHECK(rig.pool->free_rows_total() == free_at_keep);
  auto rep = rig.pool->scrub();
  CHECK(rep.checksum_errors_found == 0);
  // the rolled-back state survives an import
  Digest h = rig.pool->content_hash();
  rig.pool.reset();
  auto re = import_pool(rig.paths);
  CHECK(re->content_hash() == h);
}
