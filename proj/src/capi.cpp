#include "../include/poolforge.h"

#include <cstdlib>
#include <cstring>
#include <fstream>

#include <json.hpp>

#include "pool.hpp"
#include "sendstream.hpp"
#include "simnet.hpp"

using json = nlohmann::ordered_json;
using namespace poolforge;

struct pf_pool {
  std::unique_ptr<Pool> pool;
};

namespace {

thread_local std::string g_last_error;

int errc_to_c(Errc c) {
  switch (c) {
    case Errc::exists: return PF_ERR_EXISTS;
    case Errc::not_found: return PF_ERR_NOT_FOUND;
    case Errc::bounds: return PF_ERR_BOUNDS;
    case Errc::io: return PF_ERR_IO;
    case Errc::invalid: return PF_ERR_INVALID;
    case Errc::read_only: return PF_ERR_READ_ONLY;
    case Errc::no_space: return PF_ERR_NO_SPACE;
    case Errc::permanent: return PF_ERR_PERMANENT;
    case Errc::unrecoverable: return PF_ERR_UNRECOVERABLE;
    case Errc::corrupt_stream: return PF_ERR_CORRUPT_STREAM;
    case Errc::no_base: return PF_ERR_NO_BASE;
    case Errc::lineage: return PF_ERR_LINEAGE;
    case Errc::double_free: return PF_ERR_DOUBLE_FREE;
    case Errc::unlabeled: return PF_ERR_UNLABELED;
    case Errc::parse: return PF_ERR_PARSE;
    case Errc::busy: return PF_ERR_BUSY;
    case Errc::scenario_failed: return PF_ERR_SCENARIO_FAILED;
  }
  return PF_ERR_UNKNOWN;
}

template <typename F>
int guarded(F&& f) {
  try {
    f();
    return PF_OK;
  } catch (const Error& e) {
    g_last_error = e.what();
    return errc_to_c(e.code);
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return PF_ERR_UNKNOWN;
  }
}

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

std::vector<std::unique_ptr<Device>> open_devices(const char* const* paths, size_t n) {
  std::vector<std::unique_ptr<Device>> devs;
  for (size_t i = 0; i < n; i++) devs.push_back(Device::open(paths[i]));
  return devs;
}

Dataset& need_dataset(pf_pool* p, const char* name) { return p->pool->dataset(name); }

}  // namespace

extern "C" {

const char* pf_last_error(void) { return g_last_error.c_str(); }
void pf_free(void* p) { std::free(p); }

int pf_device_create(const char* path, uint64_t capacity_sectors, uint32_t sector_size) {
  return guarded([&] { Device::create(path, capacity_sectors, sector_size ? sector_size : 512); });
}

int pf_fault_inject(const char* path, const char* kind, uint64_t first_sector,
                    uint64_t sector_count, uint64_t param) {
  return guarded([&] {
    FaultSpec f;
    std::string k = kind ? kind : "";
    if (k == "corrupt") f.kind = FaultSpec::Kind::SilentCorruption;
    else if (k == "offline") f.kind = FaultSpec::Kind::Offline;
    else if (k == "read-error") f.kind = FaultSpec::Kind::ReadError;
    else if (k == "latency") f.kind = FaultSpec::Kind::Latency;
    else fail(Errc::invalid, "unknown fault kind: " + k);
    f.first_sector = first_sector;
    f.sector_count = sector_count;
    f.param = param;
    Device::open(path)->inject_fault(f);
  });
}

int pf_fault_clear(const char* path) {
  return guarded([&] { Device::open(path)->clear_faults(); });
}

int pf_pool_create(const char* const* dev_paths, size_t ndev, const char* name,
                   uint32_t record_size, uint64_t guid_seed, pf_pool** out) {
  return guarded([&] {
    PoolOptions opt;
    if (record_size) opt.record_size = record_size;
    opt.guid_seed = guid_seed;
    auto pool = Pool::create(open_devices(dev_paths, ndev), name, opt);
    *out = new pf_pool{std::move(pool)};
  });
}

int pf_pool_import(const char* const* dev_paths, size_t ndev, pf_pool** out) {
  return guarded([&] {
    std::vector<std::unique_ptr<Device>> devs;
    for (size_t i = 0; i < ndev; i++) devs.push_back(Device::open(dev_paths[i]));
    *out = new pf_pool{Pool::import(std::move(devs))};
  });
}

void pf_pool_close(pf_pool* p) { delete p; }

int pf_pool_status(pf_pool* p, char** json_out) {
  return guarded([&] {
    Pool& pool = *p->pool;
    json j;
    j["name"] = pool.name();
    j["guid"] = pool.pool_guid().str();
    j["children"] = pool.d();
    j["sector_size"] = pool.sector_size();
    j["record_size"] = pool.record_size();
    j["committed_txg"] = pool.committed_txg();
    j["state"] = pool.degraded() ? "degraded" : "healthy";
    json devs = json::array();
    for (Device* d : pool.children()) {
      json jd;
      jd["path"] = d->path();
      jd["capacity_sectors"] = d->capacity_sectors();
      jd["missing"] = d->is_missing();
      devs.push_back(jd);
    }
    j["devices"] = devs;
    auto sp = pool.space_breakdown();
    uint64_t row = uint64_t(pool.d()) * pool.sector_size();
    j["space"] = {{"capacity_bytes", sp.total_rows * row},
                  {"used_bytes", sp.leaf_rows * row},
                  {"metadata_bytes", sp.meta_rows * row},
                  {"available_bytes", sp.free_rows * row}};
    json dsets = json::array();
    for (const auto& ds : pool.datasets()) {
      json jd;
      jd["name"] = ds->name;
      jd["guid"] = ds->guid.str();
      if (!ds->origin_guid.is_zero()) jd["origin_guid"] = ds->origin_guid.str();
      jd["head_hash"] = hex(ds->content_hash());
      json snaps = json::array();
      for (const auto& s : ds->snapshots) {
        snaps.push_back({{"name", s.name},
                         {"txg", s.txg},
                         {"guid", s.guid.str()},
                         {"hash", hex(pool.snapshot_content_hash(s.root))}});
      }
      jd["snapshots"] = snaps;
      dsets.push_back(jd);
    }
    j["datasets"] = dsets;
    *json_out = dup_string(j.dump(2));
  });
}

int pf_pool_scrub(pf_pool* p, uint64_t out[4]) {
  return guarded([&] {
    ScrubReport r = p->pool->scrub();
    out[0] = r.blocks_examined;
    out[1] = r.checksum_errors_found;
    out[2] = r.repaired;
    out[3] = r.permanent_errors;
  });
}

int pf_fs_create(pf_pool* p, const char* dataset) {
  return guarded([&] {
    p->pool->create_dataset(dataset);
    p->pool->commit_txg();
  });
}

int pf_fs_write(pf_pool* p, const char* dataset, uint64_t object_id, uint64_t offset,
                const void* data, size_t len) {
  return guarded([&] {
    need_dataset(p, dataset).write_file(object_id, offset,
                                        static_cast<const uint8_t*>(data), len);
    p->pool->commit_txg();
  });
}

int pf_fs_read(pf_pool* p, const char* dataset, uint64_t object_id, uint64_t offset,
               size_t len, uint8_t** data_out, size_t* len_out) {
  return guarded([&] {
    auto bytes = need_dataset(p, dataset).read_file(object_id, offset, len);
    *data_out = static_cast<uint8_t*>(std::malloc(bytes.size() ? bytes.size() : 1));
    std::memcpy(*data_out, bytes.data(), bytes.size());
    *len_out = bytes.size();
  });
}

int pf_fs_snapshot(pf_pool* p, const char* dataset, const char* snapshot) {
  return guarded([&] { need_dataset(p, dataset).take_snapshot(snapshot); });
}

int pf_fs_clone(pf_pool* p, const char* dataset, const char* snapshot, const char* new_name) {
  return guarded([&] { p->pool->clone_snapshot(need_dataset(p, dataset), snapshot, new_name); });
}

int pf_fs_destroy_snapshot(pf_pool* p, const char* dataset, const char* snapshot,
                           uint64_t* freed_sectors_out) {
  return guarded([&] {
    uint64_t freed = need_dataset(p, dataset).destroy_snapshot(snapshot);
    if (freed_sectors_out) *freed_sectors_out = freed;
  });
}

int pf_fs_space(pf_pool* p, const char* dataset, char** json_out) {
  return guarded([&] {
    SpaceReport r = need_dataset(p, dataset).space_report();
    json j = {{"dataset", dataset},
              {"used_bytes", r.used_bytes},
              {"referenced_bytes", r.referenced_bytes},
              {"available_bytes", r.available_bytes}};
    *json_out = dup_string(j.dump(2));
  });
}

int pf_diff(pf_pool* p, const char* dataset, const char* snap_a, const char* snap_b,
            char** json_out) {
  return guarded([&] {
    auto entries = diff_snapshots(*p->pool, need_dataset(p, dataset), snap_a, snap_b);
    json arr = json::array();
    for (const auto& e : entries) {
      const char* kind = e.kind == DiffEntry::Kind::Added      ? "added"
                         : e.kind == DiffEntry::Kind::Modified ? "modified"
                                                               : "freed";
      arr.push_back({{"object", e.object_id},
                     {"offset", e.offset},
                     {"length", e.length},
                     {"kind", kind}});
    }
    *json_out = dup_string(arr.dump(2));
  });
}

int pf_send(pf_pool* p, const char* dataset, const char* snapshot, const char* from_snapshot,
            uint8_t** data_out, size_t* len_out) {
  return guarded([&] {
    Dataset& ds = need_dataset(p, dataset);
    std::vector<uint8_t> stream = from_snapshot
                                      ? send_incremental(*p->pool, ds, from_snapshot, snapshot)
                                      : send_full(*p->pool, ds, snapshot);
    *data_out = static_cast<uint8_t*>(std::malloc(stream.size()));
    std::memcpy(*data_out, stream.data(), stream.size());
    *len_out = stream.size();
  });
}

int pf_recv(pf_pool* p, const uint8_t* stream, size_t len, int force, char** json_out) {
  return guarded([&] {
    ReceiveResult r = receive(*p->pool, stream, len, force != 0);
    if (json_out) {
      json j = {{"dataset", r.dataset},
                {"snapshot", r.snapshot},
                {"guid", r.snapshot_guid.str()}};
      *json_out = dup_string(j.dump(2));
    }
  });
}

int pf_stream_info(const uint8_t* stream, size_t len, char** json_out) {
  return guarded([&] {
    StreamInfo info = stream_info(stream, len);
    json j = {{"name", info.name},
              {"incremental", info.incremental},
              {"to_guid", info.to_guid.str()},
              {"from_guid", info.from_guid.str()}};
    *json_out = dup_string(j.dump(2));
  });
}

int pf_sim_run(const char* scenario_path, int use_seed, uint64_t seed, const char* workdir,
               const char* csv_path, const char* svg_path, const char* svg_series,
               const char* eventlog_path, char** json_out) {
  return guarded([&] {
    Scenario sc = load_scenario_file(scenario_path);
    if (use_seed) sc.seed = seed;
    SimResult res = run_scenario(sc, workdir);
    if (csv_path) res.metrics.export_csv(csv_path);
    if (svg_path) {
      std::vector<std::string> names;
      if (svg_series && *svg_series) {
        std::string list = svg_series;
        size_t start = 0;
        while (start <= list.size()) {
          size_t comma = list.find(',', start);
          if (comma == std::string::npos) comma = list.size();
          if (comma > start) names.push_back(list.substr(start, comma - start));
          start = comma + 1;
        }
      } else {
        names = {"link_out_bytes_per_s", "dataset_used_bytes", "pool_available_bytes"};
      }
      res.metrics.render_svg(names, svg_path);
    }
    if (eventlog_path) {
      std::ofstream f(eventlog_path, std::ios::binary | std::ios::trunc);
      if (!f) fail(Errc::io, std::string("cannot write ") + eventlog_path);
      f << res.event_log_text();
    }
    json ticks = json::array();
    for (const auto& t : res.ticks) {
      json jt = {{"index", t.index},       {"t_ms", t.t_ms},
                 {"snapshot", t.snapshot}, {"stream_bytes", t.stream_bytes},
                 {"wire_bytes", t.wire_bytes}, {"completion_ms", t.completion_ms},
                 {"lag_ms", t.lag_ms},     {"skipped", t.skipped},
                 {"failed", t.failed}};
      if (t.failed) jt["error"] = t.error;
      ticks.push_back(jt);
    }
    json j = {{"ticks_run", res.ticks_run},
              {"ticks_succeeded", res.ticks_succeeded},
              {"final_snapshot", res.final_snapshot},
              {"source_hash", hex(res.source_hash)},
              {"target_hash", hex(res.target_hash)},
              {"ticks", ticks}};
    if (json_out) *json_out = dup_string(j.dump(2));
  });
}

}  // extern "C"
