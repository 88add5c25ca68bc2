#include "simnet.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <queue>
#include <set>

#include "sendstream.hpp"

namespace poolforge {

uint64_t link_transfer(const LinkSpec& link, uint64_t nbytes, uint64_t start_ms, Rng& rng) {
  if (nbytes == 0) fail(Errc::invalid, "zero-byte transfer");
  constexpr uint64_t kSegment = 64 * 1024;
  double ms = double(link.latency_ms) + double(nbytes) * 1000.0 / double(link.bandwidth);
  if (link.loss_prob > 0.0) {
    for (uint64_t off = 0; off < nbytes; off += kSegment) {
      uint64_t seg = std::min(kSegment, nbytes - off);
      while (rng.uniform() < link.loss_prob)
        ms += double(link.latency_ms) + double(seg) * 1000.0 / double(link.bandwidth);
    }
  }
  return start_ms + uint64_t(std::ceil(ms));
}

namespace {

// Walks a stream's WRITE payloads without touching any pool.
void for_each_payload(const std::vector<uint8_t>& stream,
                      const std::function<void(const uint8_t*, size_t)>& fn) {
  StreamInfo info = stream_info(stream.data(), stream.size());
  Reader r(stream.data(), stream.size());
  r.skip(info.header_len);
  while (!r.eof()) {
    uint8_t kind = r.u8();
    if (kind == kRecObject) {
      r.skip(16);
    } else if (kind == kRecWrite) {
      r.skip(21);
      uint32_t plen = r.u32();
      r.need(plen);
      fn(r.p + r.pos, plen);
      r.skip(plen);
    } else if (kind == kRecFree) {
      r.skip(24);
    } else if (kind == kRecEnd) {
      r.skip(32);
      return;
    } else {
      fail(Errc::corrupt_stream, "unknown record kind");
    }
  }
}

// Dedup-by-reference: a WRITE payload the receiver already holds travels as
// its 32-byte digest and is expanded back to the identical bytes on arrival,
// so the logical stream (and its END digest) is unchanged.
uint64_t dedup_wire_bytes(const std::vector<uint8_t>& stream, const std::set<Digest>& held) {
  uint64_t saved = 0;
  for_each_payload(stream, [&](const uint8_t* p, size_t n) {
    if (n > 32 && held.count(sha256(p, n))) saved += n - 32;
  });
  return stream.size() - saved;
}

struct Ev {
  uint64_t t;
  uint64_t seq;
  int kind;  // 0 workload write, 1 replication tick, 2 transfer complete
  size_t arg;
};
struct EvLater {
  bool operator()(const Ev& a, const Ev& b) const {
    return a.t != b.t ? a.t > b.t : a.seq > b.seq;
  }
};

}  // namespace

std::string SimResult::event_log_text() const {
  std::string out;
  for (const auto& line : event_log) out += line + "\n";
  return out;
}

SimResult run_scenario(const Scenario& sc, const std::string& workdir) {
  namespace fs = std::filesystem;
  fs::create_directories(workdir);

  SimResult res;
  const LinkSpec& link = sc.links.front();

  // one pool per node; device files live under workdir
  std::vector<std::unique_ptr<Pool>> pools;
  std::vector<std::string> node_names;
  for (size_t ni = 0; ni < sc.nodes.size(); ni++) {
    const NodeSpec& node = sc.nodes[ni];
    std::vector<std::unique_ptr<Device>> devs;
    for (int i = 0; i < node.children; i++) {
      std::string path = workdir + "/" + node.name + "." + std::to_string(i) + ".dev";
      fs::remove(path);
      fs::remove(path + ".faults");
      devs.push_back(Device::create(path, node.capacity_bytes / 512, 512));
    }
    PoolOptions opt;
    opt.record_size = node.record_size;
    uint64_t gs = sc.seed + 0x9E3779B97F4A7C15ull * (ni + 1);
    opt.guid_seed = splitmix64(gs) | 1;
    pools.push_back(Pool::create(std::move(devs), node.name, opt));
    node_names.push_back(node.name);
  }
  auto pool_of = [&](const std::string& name) -> Pool& {
    for (size_t i = 0; i < node_names.size(); i++)
      if (node_names[i] == name) return *pools[i];
    fail(Errc::not_found, "no such node: " + name);
  };
  Pool& src = pool_of(link.src);
  Pool& dst = pool_of(link.dst);
  Dataset& ds = src.create_dataset("data");
  src.commit_txg();

  uint64_t rng_seed = sc.seed + 0x9E3779B97F4A7C15ull;
  Rng link_rng(splitmix64(rng_seed));

  std::priority_queue<Ev, std::vector<Ev>, EvLater> q;
  uint64_t seq = 0;
  uint64_t duration_ms = sc.duration_s * 1000;
  for (size_t i = 0; i < sc.writes.size(); i++) {
    if (sc.writes[i].t_ms <= duration_ms) q.push({sc.writes[i].t_ms, seq++, 0, i});
  }
  uint64_t nticks = sc.duration_s / sc.policy.interval_s;
  for (uint64_t k = 1; k <= nticks; k++)
    q.push({k * sc.policy.interval_s * 1000, seq++, 1, size_t(k)});

  // replication state
  struct InFlight {
    std::vector<uint8_t> stream;  // as delivered (possibly sabotaged)
    uint64_t wire_bytes;
    size_t report;
  };
  std::unique_ptr<InFlight> flight;
  std::set<Digest> dst_digests;
  std::string last_common;  // snapshot the target is known to hold
  std::string origin_snap;  // fixed base for cumulative mode
  std::vector<uint64_t> sabotage = sc.corrupt_at_ms;
  std::sort(sabotage.begin(), sabotage.end());
  size_t sabotage_next = 0;

  // metrics accumulators
  double busy_ms = 0;
  std::map<std::string, uint64_t> disk_bytes;  // per node, current second
  std::map<uint64_t, uint64_t> wire_by_second;
  double load1 = 0, load5 = 0, load15 = 0;
  uint64_t end_s = sc.duration_s;
  uint64_t next_sample = 1;
  uint64_t row_bytes = uint64_t(src.d()) * src.sector_size();

  auto logf = [&](uint64_t t, const std::string& s) {
    res.event_log.push_back("t=" + std::to_string(t) + " " + s);
  };
  auto emit_sample = [&](uint64_t t) {
    double tt = double(t);
    double qdepth = double(q.size()) + (flight ? 1.0 : 0.0);
    res.metrics.record("engine_busy_fraction", tt, std::min(1.0, busy_ms / 1000.0));
    busy_ms = 0;
    load1 = load_average_update(load1, qdepth, 1);
    load5 = load_average_update(load5, qdepth, 5);
    load15 = load_average_update(load15, qdepth, 15);
    res.metrics.record("load_1m", tt, load1);
    res.metrics.record("load_5m", tt, load5);
    res.metrics.record("load_15m", tt, load15);
    for (const auto& name : node_names) {
      double frac = std::min(1.0, double(disk_bytes[name]) / double(256ull << 20));
      res.metrics.record("disk_busy_fraction." + name, tt, frac);
      disk_bytes[name] = 0;
    }
    uint64_t cb = 0, ce = 0;
    for (const auto& p : pools) {
      cb += p->cache_bytes();
      ce += p->cache_evicted_bytes();
    }
    res.metrics.record("cache_bytes", tt, double(cb));
    res.metrics.record("cache_evicted_bytes", tt, double(ce));
    uint64_t wire = 0;
    if (auto it = wire_by_second.find(t); it != wire_by_second.end()) wire = it->second;
    res.metrics.record("link_out_bytes_per_s", tt, double(wire));
    res.metrics.record("link_in_bytes_per_s", tt, double(wire));
    auto sp = src.space_breakdown();
    res.metrics.record("dataset_used_bytes", tt, double(sp.leaf_rows * row_bytes));
    res.metrics.record("pool_metadata_bytes", tt, double(sp.meta_rows * row_bytes));
    res.metrics.record("pool_available_bytes", tt, double(sp.free_rows * row_bytes));
    res.metrics.record("inflight_running", tt, flight ? 1.0 : 0.0);
    res.metrics.record("inflight_waiting", tt, double(q.size()));
    res.metrics.record("uptime_s", tt, tt);
  };

  std::string final_snapshot_guid;  // latest snapshot the target received
  while (!q.empty()) {
    Ev ev = q.top();
    while (next_sample <= end_s && next_sample * 1000 < ev.t) emit_sample(next_sample++);
    q.pop();
    for (auto& p : pools) p->set_virtual_time(ev.t);

    if (ev.kind == 0) {
      const WriteOpSpec& op = sc.writes[ev.arg];
      ds.write_file(op.object_id, op.offset, pattern_bytes(op.pattern, op.offset, op.length));
      busy_ms += 1 + double(op.length) / 65536.0;
      disk_bytes[link.src] += op.length;
      logf(ev.t, "write obj=" + std::to_string(op.object_id) + " off=" +
                     std::to_string(op.offset) + " len=" + std::to_string(op.length));
    } else if (ev.kind == 1) {
      if (flight) {
        TickReport rep;
        rep.index = ev.arg;
        rep.t_ms = ev.t;
        rep.skipped = true;
        res.ticks.push_back(rep);
        logf(ev.t, "tick " + std::to_string(ev.arg) + " skipped (transfer in flight)");
        continue;
      }
      res.ticks_run++;
      TickReport rep;
      rep.index = ev.arg;
      rep.t_ms = ev.t;
      rep.snapshot = "auto-" + std::to_string(ev.t / 1000);
      ds.take_snapshot(rep.snapshot);
      std::vector<uint8_t> stream;
      if (last_common.empty())
        stream = send_full(src, ds, rep.snapshot);
      else if (sc.policy.cumulative)
        stream = send_incremental(src, ds, origin_snap, rep.snapshot);
      else
        stream = send_incremental(src, ds, last_common, rep.snapshot);
      rep.stream_bytes = stream.size();
      rep.wire_bytes =
          sc.policy.dedup ? dedup_wire_bytes(stream, dst_digests) : stream.size();
      bool sabotaged = false;
      if (sabotage_next < sabotage.size() && sabotage[sabotage_next] <= ev.t) {
        sabotage_next++;
        stream[stream.size() / 2] ^= 0x01;
        sabotaged = true;
      }
      uint64_t done = link_transfer(link, rep.wire_bytes, ev.t, link_rng);
      rep.completion_ms = done;
      rep.lag_ms = done - ev.t;
      busy_ms += 2 + double(rep.stream_bytes) / double(1 << 20);
      end_s = std::max(end_s, (done + 999) / 1000);
      size_t report_idx = res.ticks.size();
      res.ticks.push_back(rep);
      flight = std::make_unique<InFlight>(
          InFlight{std::move(stream), rep.wire_bytes, report_idx});
      q.push({done, seq++, 2, 0});
      logf(ev.t, "tick " + std::to_string(ev.arg) + " snapshot=" + rep.snapshot +
                     " stream=" + std::to_string(rep.stream_bytes) + " wire=" +
                     std::to_string(rep.wire_bytes) +
                     (sabotaged ? " (corrupted in transit)" : ""));
    } else {
      TickReport& rep = res.ticks[flight->report];
      uint64_t sec = std::max<uint64_t>(1, (ev.t + 999) / 1000);
      wire_by_second[sec] += flight->wire_bytes;
      busy_ms += 1 + double(flight->stream.size()) / double(1 << 20);
      disk_bytes[link.dst] += flight->stream.size();
      try {
        receive(dst, flight->stream, /*force=*/sc.policy.cumulative);
        for_each_payload(flight->stream, [&](const uint8_t* p, size_t n) {
          dst_digests.insert(sha256(p, n));
        });
        res.ticks_succeeded++;
        last_common = rep.snapshot;
        if (origin_snap.empty()) origin_snap = rep.snapshot;
        res.final_snapshot = rep.snapshot;
        logf(ev.t, "recv ok snapshot=" + rep.snapshot + " lag_ms=" +
                       std::to_string(rep.lag_ms));
      } catch (const Error& e) {
        rep.failed = true;
        rep.error = e.what();
        logf(ev.t, "recv fail snapshot=" + rep.snapshot + ": " + e.what());
      }
      flight.reset();
    }
  }
  while (next_sample <= end_s) emit_sample(next_sample++);

  // end-of-run consistency check: the last snapshot the target acknowledged
  // must hash identically on both sides
  if (!res.final_snapshot.empty()) {
    const Snapshot* s_src = ds.find_snapshot(res.final_snapshot);
    Dataset* dds = dst.find_dataset("data");
    const Snapshot* s_dst = dds ? dds->find_snapshot(res.final_snapshot) : nullptr;
    if (!s_src || !s_dst) fail(Errc::scenario_failed, "replicated snapshot missing");
    res.source_hash = src.snapshot_content_hash(s_src->root);
    res.target_hash = dst.snapshot_content_hash(s_dst->root);
    if (!(res.source_hash == res.target_hash))
      fail(Errc::scenario_failed, "replica diverged from source at " + res.final_snapshot);
  } else if (res.ticks_run > 0 && sabotage.empty()) {
    fail(Errc::scenario_failed, "no replication tick ever completed");
  }
  return res;
}

}  // namespace poolforge
