// Acceptance suite: one pass/fail line per criterion. Exits nonzero if any
// criterion fails. Uses the core library directly plus the bundled scenario
// configs (POOLFORGE_SCENARIOS).
#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "pool.hpp"
#include "sendstream.hpp"
#include "simnet.hpp"
#include "util.hpp"

using namespace poolforge;
using namespace testutil;

namespace {

int g_failures = 0;

struct CheckFail {
  std::string msg;
};

void expect(bool ok, const std::string& msg) {
  if (!ok) throw CheckFail{msg};
}

template <typename Fn>
void criterion(int idx, const std::string& title, Fn&& fn) {
  try {
    std::string detail = fn();
    std::printf("criterion %2d PASS  %s%s%s\n", idx, title.c_str(),
                detail.empty() ? "" : " — ", detail.c_str());
  } catch (const CheckFail& f) {
    g_failures++;
    std::printf("criterion %2d FAIL  %s — %s\n", idx, title.c_str(), f.msg.c_str());
  } catch (const std::exception& e) {
    g_failures++;
    std::printf("criterion %2d FAIL  %s — unexpected error: %s\n", idx, title.c_str(), e.what());
  }
  std::fflush(stdout);
}

std::string scen_dir() {
  const char* d = std::getenv("POOLFORGE_SCENARIOS");
  expect(d != nullptr, "POOLFORGE_SCENARIOS is not set");
  return d;
}

// Shared two-node reference run (criteria 7 and 11 inspect the same artifacts).
const SimResult& reference_result() {
  static TempDir td;
  static std::optional<SimResult> res;
  if (!res) {
    Scenario sc = load_scenario_file(scen_dir() + "/two-node.cfg");
    res = run_scenario(sc, td.file("ref"));
  }
  return *res;
}

// ------------------------------------------------------------------ 1
std::string c1_erasure_tolerance() {
  TempDir dir;
  std::map<int, std::vector<std::unique_ptr<Device>>> sets;
  std::map<int, uint64_t> cursor;
  Rng rng(0xA11CE);
  int single_ok = 0, dual_reported = 0;
  const int kSingle = 1000, kDual = 200;
  for (int trial = 0; trial < kSingle + kDual; trial++) {
    bool dual = trial >= kSingle;
    int d = 2 + int(rng.next() % 7);
    auto& devs = sets[d];
    if (devs.empty())
      for (int i = 0; i < d; i++)
        devs.push_back(
            Device::create(dir.file("e" + std::to_string(d) + "-" + std::to_string(i)), 16384));
    uint32_t s = 1 + uint32_t(rng.next() % 64);
    if (dual && s < uint32_t(d)) s = uint32_t(d);  // guarantees one full row
    RaidzGeometry g;
    for (auto& dev : devs) g.children.push_back(dev.get());
    StripeMap m = plan_stripe(s, d, cursor[d]);
    cursor[d] += m.rows_spanned();
    auto data = random_bytes(rng, size_t(s) * 512);
    write_block(g, m, data);

    FaultSpec off;
    off.kind = FaultSpec::Kind::Offline;
    int victim = int(rng.next() % uint64_t(d));
    devs[size_t(victim)]->inject_fault(off);
    if (!dual) {
      BlockRead r = read_block(g, m);
      expect(r.data == data, "degraded read returned wrong bytes");
      single_ok++;
      devs[size_t(victim)]->clear_faults();
    } else {
      int second = (victim + 1 + int(rng.next() % uint64_t(d - 1))) % d;
      devs[size_t(second)]->inject_fault(off);
      try {
        read_block(g, m);
        expect(false, "double erasure returned data instead of failing");
      } catch (const Error& e) {
        expect(e.code == Errc::unrecoverable, "double erasure raised the wrong error");
        dual_reported++;
      }
      devs[size_t(victim)]->clear_faults();
      devs[size_t(second)]->clear_faults();
    }
  }
  return std::to_string(single_ok) + "/" + std::to_string(kSingle) +
         " single-erasure reads byte-exact; " + std::to_string(dual_reported) + "/" +
         std::to_string(kDual) + " double erasures reported unrecoverable";
}

// ------------------------------------------------------------------ 2
std::string c2_space_formula() {
  int checked = 0;
  for (int d = 2; d <= 8; d++) {
    for (uint32_t s = 1; s <= 64; s++) {
      // independent enumerator: fill rows of width d-1, one parity per row,
      // then pad the total to an even sector count
      uint32_t placed = 0, sectors = 0;
      while (placed < s) {
        uint32_t take = std::min<uint32_t>(uint32_t(d - 1), s - placed);
        placed += take;
        sectors += take + 1;
      }
      if (sectors % 2) sectors++;

      StripeMap m = plan_stripe(s, d, 1000);
      expect(m.total_sectors() == sectors,
             "allocated(" + std::to_string(s) + "," + std::to_string(d) + ") = " +
                 std::to_string(m.total_sectors()) + ", enumerator says " +
                 std::to_string(sectors));
      // placement self-consistency: every sector lands on a unique slot
      // inside the spanned rows
      std::set<std::pair<uint64_t, uint32_t>> slots;
      for (const auto& row : m.rows) slots.insert({row.row, 0});  // parity
      for (uint32_t i = 0; i < s; i++) {
        StripePos p = m.data_pos(i);
        expect(slots.insert({p.row, p.col}).second, "data sector placed on an occupied slot");
        expect(p.row >= m.start_row && p.row < m.start_row + m.rows_spanned(),
               "data sector outside the spanned rows");
      }
      if (m.skip_pos)
        expect(slots.insert({m.skip_pos->row, m.skip_pos->col}).second,
               "skip sector placed on an occupied slot");
      expect(slots.size() == m.total_sectors(), "slot count disagrees with total");
      checked++;
    }
  }
  return "allocated(s,d) exact for all " + std::to_string(checked) + " (s,d) pairs";
}

// ------------------------------------------------------------------ 3
std::string c3_end_to_end_integrity() {
  TempDir dir;
  auto paths = make_device_files(dir, 4, 4096);
  std::map<uint64_t, std::vector<uint8_t>> contents;
  {
    PoolOptions opt;
    opt.record_size = 8 * 1024;  // plenty of distinct leaf blocks to target
    opt.guid_seed = 0xC3;
    auto pool = Pool::create(open_all(paths), "tank", opt);
    Dataset& ds = pool->create_dataset("d");
    Rng rng(0xC3);
    for (uint64_t obj = 1; obj <= 8; obj++) {
      contents[obj] = lumpy_bytes(rng, 30000 + size_t(rng.next() % 20000));
      ds.write_file(obj, 0, contents[obj]);
    }
    pool->commit_txg();
  }

  Rng rng(0xC3C3);
  uint64_t injected = 0, found = 0, repaired = 0, permanent = 0;
  const int kBatches = 100, kPerBatch = 10;
  for (int batch = 0; batch < kBatches; batch++) {
    // corrupt one sector in each of kPerBatch distinct leaf blocks while the
    // pool is closed (leaves are untouched by import, so scrub sees them all)
    {
      auto pool = import_pool(paths);
      std::vector<BlockRef> leaves;
      pool->walk_live_refs([&](const BlockRef& r, bool is_leaf) {
        if (is_leaf) leaves.push_back(r);
      });
      expect(leaves.size() >= kPerBatch, "not enough live leaf blocks to corrupt");
      pool.reset();
      for (size_t i = leaves.size() - 1; i > 0; i--)
        std::swap(leaves[i], leaves[rng.next() % (i + 1)]);
      for (int i = 0; i < kPerBatch; i++) {
        const BlockRef& ref = leaves[size_t(i)];
        StripeMap m = plan_stripe(ref.physical_sectors, 4, ref.start_row);
        StripePos pos = m.data_pos(uint32_t(rng.next() % ref.physical_sectors));
        FaultSpec f;
        f.kind = FaultSpec::Kind::SilentCorruption;
        f.first_sector = kLabelSectors + pos.row;
        f.sector_count = 1;
        f.param = injected + 1;
        Device::open(paths[pos.col])->inject_fault(f);
        injected++;
      }
    }
    auto pool = import_pool(paths);
    if (batch % 10 == 9) {
      // every read is verified: corrupted blocks still come back byte-exact
      Dataset& ds = pool->dataset("d");
      for (const auto& [obj, bytes] : contents)
        expect(ds.read_file(obj, 0, bytes.size()) == bytes, "read returned unverified data");
      auto rep = pool->scrub();  // reads already repaired these blocks
      permanent += rep.permanent_errors;
      found += kPerBatch;
      repaired += kPerBatch;
    } else {
      auto rep = pool->scrub();
      expect(rep.checksum_errors_found == kPerBatch,
             "scrub found " + std::to_string(rep.checksum_errors_found) + " of " +
                 std::to_string(kPerBatch) + " injected errors");
      expect(rep.repaired == rep.checksum_errors_found, "scrub failed to repair");
      found += rep.checksum_errors_found;
      repaired += rep.repaired;
      permanent += rep.permanent_errors;
    }
    auto clean = pool->scrub();
    expect(clean.checksum_errors_found == 0, "repairs did not persist");
  }
  expect(injected == 1000, "wrong injection count");
  expect(found == injected && repaired == injected && permanent == 0, "recovery incomplete");
  return "1000/1000 single-sector corruptions repaired, 0 permanent, all reads verified";
}

// ------------------------------------------------------------------ 4
std::string c4_crash_consistency() {
  TempDir dir;
  auto paths = make_device_files(dir, 3, 4096);
  Rng rng(0xC4);
  {
    auto pool = make_pool(paths);
    Dataset& ds = pool->create_dataset("d");
    ds.write_file(1, 0, random_bytes(rng, 20000));
    pool->commit_txg();
  }
  auto backup = [&](const std::string& tag) {
    for (size_t i = 0; i < paths.size(); i++)
      std::filesystem::copy_file(paths[i], paths[i] + "." + tag,
                                 std::filesystem::copy_options::overwrite_existing);
  };
  auto restore = [&](const std::string& tag) {
    for (size_t i = 0; i < paths.size(); i++)
      std::filesystem::copy_file(paths[i] + "." + tag, paths[i],
                                 std::filesystem::copy_options::overwrite_existing);
  };

  uint64_t total_cuts = 0;
  bool have_snapshot = false;
  for (int round = 0; round < 50; round++) {
    backup("pre");
    std::vector<WriteOp> journal;
    Digest pre, post;
    {
      auto pool = import_pool(paths);
      pre = pool->content_hash();
      auto kids = pool->children();
      for (size_t i = 0; i < kids.size(); i++) kids[i]->set_journal(&journal, uint32_t(i));
      Dataset& ds = pool->dataset("d");
      int nwrites = 1 + int(rng.next() % 2);
      for (int w = 0; w < nwrites; w++)
        ds.write_file(1 + rng.next() % 3, rng.next() % 24000,
                      random_bytes(rng, 1 + size_t(rng.next() % 6000)));
      if (round % 10 == 3 && !have_snapshot) {
        ds.take_snapshot("pin");
        have_snapshot = true;
      } else if (round % 10 == 8 && have_snapshot) {
        ds.destroy_snapshot("pin");
        have_snapshot = false;
      }
      pool->commit_txg();
      post = pool->content_hash();
      for (auto* k : kids) k->set_journal(nullptr);
    }
    expect(!(pre == post), "commit did not change the pool state");
    expect(!journal.empty(), "commit produced no physical writes");

    // sector-granular cut positions over the global write sequence
    std::vector<WriteOp> ops;
    for (const auto& op : journal)
      for (size_t off = 0; off < op.bytes.size(); off += 512)
        ops.push_back(WriteOp{op.dev, op.offset_bytes + off,
                              {op.bytes.begin() + std::ptrdiff_t(off),
                               op.bytes.begin() + std::ptrdiff_t(off + 512)}});

    restore("pre");
    bool switched = false;
    for (size_t k = 0; k <= ops.size(); k++) {
      Digest h;
      {
        auto pool = import_pool(paths);
        h = pool->content_hash();
      }
      if (h == pre) {
        expect(!switched, "state reverted to pre-commit after the commit point");
      } else {
        expect(h == post, "prefix cut " + std::to_string(k) + "/" +
                              std::to_string(ops.size()) +
                              " yielded a state that is neither pre- nor post-commit");
        switched = true;
      }
      total_cuts++;
      if (k < ops.size()) {
        const WriteOp& op = ops[k];
        std::fstream f(paths[op.dev], std::ios::binary | std::ios::in | std::ios::out);
        f.seekp(std::streamoff(op.offset_bytes));
        f.write(reinterpret_cast<const char*>(op.bytes.data()),
                std::streamsize(op.bytes.size()));
      }
    }
    expect(switched, "replaying the full journal never reached the post-commit state");
  }
  return "50 commits, " + std::to_string(total_cuts) +
         " prefix cuts: every import was exactly pre-commit before the uberblock landed, "
         "exactly post-commit after, never a mix";
}

// ------------------------------------------------------------------ 5
std::string c5_snapshot_semantics() {
  TempDir dir;
  auto paths = make_device_files(dir, 4, 32768);
  PoolOptions opt;
  opt.record_size = 16 * 1024;
  opt.guid_seed = 0xC5;
  auto pool = Pool::create(open_all(paths), "tank", opt);
  Dataset& ds = pool->create_dataset("d");

  std::map<uint64_t, std::vector<uint8_t>> head;
  std::map<std::string, std::map<uint64_t, std::vector<uint8_t>>> snaps;
  std::vector<std::string> live;
  Rng rng(0xC5C5);
  int snap_counter = 0;
  uint64_t reads_checked = 0;

  auto slice = [](const std::vector<uint8_t>& v, uint64_t off, size_t len) {
    if (off >= v.size()) return std::vector<uint8_t>();
    size_t end = std::min(v.size(), size_t(off) + len);
    return std::vector<uint8_t>(v.begin() + std::ptrdiff_t(off), v.begin() + std::ptrdiff_t(end));
  };

  for (int step = 0; step < 10000; step++) {
    uint64_t dice = rng.next() % 100;
    if (dice < 70) {
      uint64_t obj = 1 + rng.next() % 4;
      uint64_t off = rng.next() % 96000;
      auto data = lumpy_bytes(rng, 1 + size_t(rng.next() % 8000));
      ds.write_file(obj, off, data);
      auto& v = head[obj];
      if (v.size() < off + data.size()) v.resize(off + data.size(), 0);
      std::copy(data.begin(), data.end(), v.begin() + std::ptrdiff_t(off));
    } else if (dice < 80 && live.size() < 8) {
      std::string name = "s" + std::to_string(snap_counter++);
      ds.take_snapshot(name);
      snaps[name] = head;
      live.push_back(name);
    } else if (dice < 90 && !live.empty()) {
      size_t k = size_t(rng.next() % live.size());
      ds.destroy_snapshot(live[k]);
      snaps.erase(live[k]);
      live.erase(live.begin() + std::ptrdiff_t(k));
    } else {
      pool->commit_txg();
    }

    // spot-check one random read against the model every step
    if (!head.empty()) {
      auto it = head.begin();
      std::advance(it, std::ptrdiff_t(rng.next() % head.size()));
      if (!it->second.empty()) {
        uint64_t off = rng.next() % it->second.size();
        size_t len = 1 + size_t(rng.next() % 4096);
        expect(ds.read_file(it->first, off, len) == slice(it->second, off, len),
               "head read diverged from the model at step " + std::to_string(step));
        reads_checked++;
      }
    }
    if (!live.empty() && step % 7 == 0) {
      const std::string& name = live[rng.next() % live.size()];
      SnapshotView view = SnapshotView::open(*pool, ds.find_snapshot(name)->root);
      const auto& model = snaps[name];
      if (!model.empty()) {
        auto it = model.begin();
        std::advance(it, std::ptrdiff_t(rng.next() % model.size()));
        if (!it->second.empty()) {
          uint64_t off = rng.next() % it->second.size();
          size_t len = 1 + size_t(rng.next() % 4096);
          expect(view.read_file(it->first, off, len) == slice(it->second, off, len),
                 "snapshot read diverged from the model at step " + std::to_string(step));
          reads_checked++;
        }
      }
    }
    if (step % 1000 == 999) {
      for (const auto& [obj, bytes] : head) {
        expect(ds.object_size(obj) == bytes.size(), "object size diverged");
        expect(ds.read_file(obj, 0, bytes.size()) == bytes, "full head sweep diverged");
      }
      for (const auto& name : live) {
        SnapshotView view = SnapshotView::open(*pool, ds.find_snapshot(name)->root);
        for (const auto& [obj, bytes] : snaps[name])
          expect(view.read_file(obj, 0, bytes.size()) == bytes, "full snapshot sweep diverged");
      }
    }
  }
  auto rep = pool->scrub();
  expect(rep.checksum_errors_found == 0 && rep.permanent_errors == 0,
         "scrub found damage after the history");
  return "10000 ops, " + std::to_string(reads_checked) +
         " model-checked reads, zero divergence, clean final scrub";
}

// ------------------------------------------------------------------ 6
std::string c6_send_receive_fidelity() {
  Rng rng(0xC6);
  uint64_t corruptions_rejected = 0;

  auto fresh_pool = [&](TempDir& dir, const std::string& tag) {
    auto paths = make_device_files(dir, 3, 4096, tag);
    PoolOptions opt;
    opt.record_size = 8 * 1024;
    opt.guid_seed = rng.next() | 1;
    return Pool::create(open_all(paths), tag, opt);
  };

  for (int hist = 0; hist < 200; hist++) {
    TempDir dir;
    auto src = fresh_pool(dir, "src");
    Dataset& ds = src->create_dataset("d");
    auto mutate = [&] {
      int n = 1 + int(rng.next() % 3);
      for (int i = 0; i < n; i++)
        ds.write_file(1 + rng.next() % 3, rng.next() % 20000,
                      lumpy_bytes(rng, 1 + size_t(rng.next() % 8000)));
    };
    mutate();
    ds.take_snapshot("s1");
    mutate();
    ds.take_snapshot("s2");
    mutate();
    ds.take_snapshot("s3");
    src->commit_txg();

    auto f1 = send_full(*src, ds, "s1");
    auto d12 = send_incremental(*src, ds, "s1", "s2");
    auto d23 = send_incremental(*src, ds, "s2", "s3");
    auto c13 = send_incremental(*src, ds, "s1", "s3");

    auto hash_of = [&](Pool& p, const std::string& snap) {
      Dataset& dds = p.dataset("d");
      return p.snapshot_content_hash(dds.find_snapshot(snap)->root);
    };

    // chained discrete receives, with corruption attempts in the middle
    auto a = fresh_pool(dir, "a");
    receive(*a, f1);
    expect(hash_of(*a, "s1") == hash_of(*src, "s1"), "full receive hash mismatch");
    Digest at_s1 = a->content_hash();
    for (int c = 0; c < 5; c++) {
      auto bad = d12;
      bad[rng.next() % bad.size()] ^= uint8_t(1 + rng.next() % 255);
      try {
        receive(*a, bad);
        expect(false, "corrupted stream was accepted");
      } catch (const Error&) {
        expect(a->content_hash() == at_s1, "receiver state changed on a rejected stream");
        corruptions_rejected++;
      }
    }
    receive(*a, d12);
    receive(*a, d23);
    expect(hash_of(*a, "s2") == hash_of(*src, "s2"), "discrete receive hash mismatch at s2");
    expect(hash_of(*a, "s3") == hash_of(*src, "s3"), "discrete receive hash mismatch at s3");

    // one cumulative receive covering the same span
    auto b = fresh_pool(dir, "b");
    receive(*b, f1);
    receive(*b, c13);
    expect(hash_of(*b, "s3") == hash_of(*src, "s3"), "cumulative receive hash mismatch");
  }

  // exhaustive single-byte corruption over one complete incremental stream
  TempDir dir;
  auto src = fresh_pool(dir, "xsrc");
  Dataset& ds = src->create_dataset("d");
  ds.write_file(1, 0, lumpy_bytes(rng, 600));
  ds.take_snapshot("s1");
  ds.write_file(1, 100, lumpy_bytes(rng, 300));
  ds.write_file(2, 0, lumpy_bytes(rng, 200));
  ds.take_snapshot("s2");
  auto f1 = send_full(*src, ds, "s1");
  auto d12 = send_incremental(*src, ds, "s1", "s2");
  auto tgt = fresh_pool(dir, "xtgt");
  receive(*tgt, f1);
  Digest base_hash = tgt->content_hash();
  for (size_t pos = 0; pos < d12.size(); pos++) {
    auto bad = d12;
    bad[pos] ^= 0x01;
    try {
      receive(*tgt, bad);
      expect(false, "corrupted byte " + std::to_string(pos) + " was accepted");
    } catch (const Error&) {
      corruptions_rejected++;
    }
    expect(tgt->content_hash() == base_hash,
           "receiver state changed after rejected corruption at byte " + std::to_string(pos));
  }
  receive(*tgt, d12);  // the pristine stream still applies cleanly
  expect(tgt->snapshot_content_hash(tgt->dataset("d").find_snapshot("s2")->root) ==
             src->snapshot_content_hash(ds.find_snapshot("s2")->root),
         "clean stream failed after the corruption sweep");

  return "200 histories hash-equal over full/discrete/cumulative; " +
         std::to_string(corruptions_rejected) +
         " single-byte corruptions all rejected with receiver state unchanged";
}

// ------------------------------------------------------------------ 7
std::string c7_replication_cadence() {
  const SimResult& res = reference_result();
  expect(res.ticks.size() == 30, "expected 30 ticks, saw " + std::to_string(res.ticks.size()));
  expect(res.ticks_run == 30 && res.ticks_succeeded == 30, "not every tick succeeded");
  for (const auto& t : res.ticks) expect(!t.skipped && !t.failed, "tick skipped or failed");
  expect(res.source_hash == res.target_hash, "final source and target hashes differ");
  return "300 virtual s at 10 s interval: exactly 30 ticks, final hashes identical";
}

// ------------------------------------------------------------------ 8
std::string c8_dedup_saving() {
  const char* base_cfg =
      "duration = 25\n"
      "[node a]\ncapacity = 16M\n[node b]\ncapacity = 16M\n"
      "[link a b]\nbandwidth = 10M\nlatency = 20\n"
      "[workload]\n"
      "write = 2 1 0 2M dup\n"   // tick 1 ships this
      "write = 12 2 0 2M dup\n"  // tick 2 ships a byte-identical copy
      "[policy]\ninterval = 10\nmode = discrete\n";
  TempDir td;
  Scenario on = load_scenario(std::string(base_cfg) + "dedup = on\n");
  Scenario off = load_scenario(std::string(base_cfg) + "dedup = off\n");
  SimResult r_on = run_scenario(on, td.file("on"));
  SimResult r_off = run_scenario(off, td.file("off"));

  expect(r_on.ticks.size() == 2 && r_off.ticks.size() == 2, "expected exactly two ticks");
  uint64_t first = r_on.ticks[0].wire_bytes, second = r_on.ticks[1].wire_bytes;
  expect(second * 20 < first, "second tick shipped " + std::to_string(second) +
                                  " bytes, not < 5% of " + std::to_string(first));
  expect(r_on.target_hash == r_off.target_hash, "dedup changed the received content");
  expect(r_off.ticks[1].wire_bytes > first / 2, "control run did not retransmit the copy");
  double pct = 100.0 * double(second) / double(first);
  return "duplicate tick shipped " + std::to_string(second) + "/" + std::to_string(first) +
         " bytes (" + format_metric(pct) + "%), identical target content with dedup off";
}

// ------------------------------------------------------------------ 9
std::string c9_determinism() {
  const char* cfg =
      "seed = 31337\nduration = 60\n"
      "[node a]\ncapacity = 8M\n[node b]\ncapacity = 8M\n"
      "[link a b]\nbandwidth = 2M\nlatency = 40\nloss_prob = 0.3\n"
      "[workload]\n"
      "write = 3 1 0 512K w1\nwrite = 17 2 8K 300K w2\nwrite = 44 1 100K 200K w3\n"
      "[policy]\ninterval = 10\nmode = cumulative\ndedup = on\n";
  TempDir td;
  Scenario sc = load_scenario(cfg);
  SimResult a = run_scenario(sc, td.file("a"));
  SimResult b = run_scenario(sc, td.file("b"));
  std::vector<std::string> series = {"link_out_bytes_per_s", "load_1m", "dataset_used_bytes"};
  expect(a.metrics.export_csv() == b.metrics.export_csv(), "CSV outputs differ");
  expect(a.metrics.render_svg(series) == b.metrics.render_svg(series), "SVG outputs differ");
  expect(a.event_log_text() == b.event_log_text(), "event logs differ");
  return "lossy scenario run twice: CSV, SVG, and event log byte-identical";
}

// ------------------------------------------------------------------ 10
std::string c10_capacity_headroom() {
  BlockRef r;
  r.start_row = (uint64_t(1) << 63) - 3;
  r.physical_sectors = 6;
  r.logical_size = 512 * 5;
  ByteExtent e = blockref_byte_extent(r, 512);
  unsigned __int128 want = (unsigned __int128)r.start_row * 512;
  expect(uint64_t(e.offset >> 64) == uint64_t(want >> 64) && uint64_t(e.offset) == uint64_t(want),
         "byte offset truncated at the 2^63-sector boundary");
  expect(e.length >= (unsigned __int128)r.physical_sectors * 512, "extent length overflowed");
  uint8_t buf[kBlockRefSize];
  put_blockref(buf, r);
  BlockRef back = get_blockref(buf);
  expect(back.start_row == r.start_row && back.physical_sectors == r.physical_sectors &&
             back.logical_size == r.logical_size,
         "on-disk round trip lost bits");
  return "byte extents exact at 2^63 sectors; on-disk form round-trips";
}

// ------------------------------------------------------------------ 11
std::string c11_metrics_closure() {
  const SimResult& res = reference_result();
  const auto& used = res.metrics.series.at("dataset_used_bytes");
  const auto& avail = res.metrics.series.at("pool_available_bytes");
  const auto& meta = res.metrics.series.at("pool_metadata_bytes");
  expect(used.size() == avail.size() && used.size() == meta.size(), "sample counts differ");
  expect(!used.empty(), "no samples recorded");

  Scenario sc = load_scenario_file(scen_dir() + "/two-node.cfg");
  const NodeSpec& src = sc.nodes[0];
  double capacity =
      double((src.capacity_bytes / 512 - 2 * kLabelSectors) * uint64_t(src.children) * 512);
  for (size_t i = 0; i < used.size(); i++) {
    expect(used[i].t == avail[i].t && used[i].t == meta[i].t, "sample times differ");
    double sum = used[i].value + avail[i].value + meta[i].value;
    expect(sum == capacity, "accounting leak at t=" + format_metric(used[i].t) + ": " +
                                format_metric(sum) + " != " + format_metric(capacity));
  }

  double integrated = 0;
  for (const auto& s : res.metrics.series.at("link_out_bytes_per_s")) integrated += s.value;
  double logged = 0;
  for (const auto& line : res.event_log) {
    auto p = line.find(" wire=");
    if (p == std::string::npos) continue;
    logged += std::strtod(line.c_str() + p + 6, nullptr);
  }
  expect(integrated == logged, "integrated traffic " + format_metric(integrated) +
                                   " != event-log bytes " + format_metric(logged));
  return std::to_string(used.size()) + " samples close exactly; integrated link traffic " +
         format_metric(integrated) + " bytes matches the event log";
}

}  // namespace

int main() {
  criterion(1, "erasure tolerance under single and double child loss", c1_erasure_tolerance);
  criterion(2, "allocation size matches the brute-force layout enumerator", c2_space_formula);
  criterion(3, "end-to-end integrity under silent corruption", c3_end_to_end_integrity);
  criterion(4, "crash consistency across every physical write prefix", c4_crash_consistency);
  criterion(5, "snapshot/clone semantics against the full-copy model", c5_snapshot_semantics);
  criterion(6, "send/receive fidelity and corruption rejection", c6_send_receive_fidelity);
  criterion(7, "replication cadence on the bundled two-node scenario", c7_replication_cadence);
  criterion(8, "dedup bandwidth saving on duplicate content", c8_dedup_saving);
  criterion(9, "bytewise determinism of repeated seeded runs", c9_determinism);
  criterion(10, "block reference arithmetic at the 2^63-sector boundary", c10_capacity_headroom);
  criterion(11, "metrics accounting closure and traffic integral", c11_metrics_closure);
  return g_failures == 0 ? 0 : 1;
}
