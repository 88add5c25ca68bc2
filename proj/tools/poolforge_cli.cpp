// poolforge: single CLI entry point over the C API.
//
// Exit codes: 0 success, 1 usage error, 2 operational error, 3 scenario failed.

#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "poolforge.h"

namespace {

int exit_code_for(int rc) { return rc == PF_ERR_SCENARIO_FAILED ? 3 : 2; }

[[noreturn]] void die(int rc) {
  std::cerr << "error: " << pf_last_error() << "\n";
  std::exit(exit_code_for(rc));
}

void check(int rc) {
  if (rc != PF_OK) die(rc);
}

std::vector<const char*> cptrs(const std::vector<std::string>& v) {
  std::vector<const char*> out;
  for (const auto& s : v) out.push_back(s.c_str());
  return out;
}

struct PoolHandle {
  pf_pool* p = nullptr;
  ~PoolHandle() { pf_pool_close(p); }
};

void import_pool(const std::vector<std::string>& devs, PoolHandle& h) {
  auto ptrs = cptrs(devs);
  check(pf_pool_import(ptrs.data(), ptrs.size(), &h.p));
}

// splits "dataset@snapshot"; snapshot may be empty when allow_bare is set
std::pair<std::string, std::string> split_at(const std::string& s, bool allow_bare = false) {
  auto at = s.find('@');
  if (at == std::string::npos) {
    if (allow_bare) return {s, ""};
    std::cerr << "error: expected dataset@snapshot, got: " << s << "\n";
    std::exit(1);
  }
  return {s.substr(0, at), s.substr(at + 1)};
}

std::vector<uint8_t> read_input(const std::string& path) {
  std::vector<uint8_t> data;
  if (path.empty() || path == "-") {
    char buf[65536];
    size_t n;
    while ((n = std::fread(buf, 1, sizeof(buf), stdin)) > 0)
      data.insert(data.end(), buf, buf + n);
  } else {
    std::ifstream f(path, std::ios::binary);
    if (!f) {
      std::cerr << "error: cannot read " << path << "\n";
      std::exit(2);
    }
    std::ostringstream ss;
    ss << f.rdbuf();
    std::string s = ss.str();
    data.assign(s.begin(), s.end());
  }
  return data;
}

void write_output(const std::string& path, const uint8_t* data, size_t len) {
  if (path.empty() || path == "-") {
    std::fwrite(data, 1, len, stdout);
    std::fflush(stdout);
    return;
  }
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) {
    std::cerr << "error: cannot write " << path << "\n";
    std::exit(2);
  }
  f.write(reinterpret_cast<const char*>(data), std::streamsize(len));
}

uint64_t env_seed(bool* present) {
  const char* s = std::getenv("POOLFORGE_SEED");
  if (present) *present = s != nullptr;
  return s ? std::strtoull(s, nullptr, 0) : 0;
}

struct FreeOnExit {
  void* p;
  ~FreeOnExit() { pf_free(p); }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"poolforge: pooled copy-on-write storage engine"};
  app.require_subcommand(1);
  std::string format = "text";
  app.add_option("--format", format, "output format: text or json")
      ->check(CLI::IsMember({"text", "json"}));

  std::vector<std::string> devs;
  auto add_devs = [&](CLI::App* cmd) {
    cmd->add_option("--dev", devs, "device files (comma-separated or repeated)")
        ->required()
        ->delimiter(',')
        ->allow_extra_args(false);
  };

  // ---- pool ----
  auto* pool = app.add_subcommand("pool", "pool lifecycle");
  pool->require_subcommand(1);

  std::string pool_name;
  uint64_t create_capacity = 0;
  uint32_t record_size = 0;
  uint64_t guid_seed = 0;
  auto* pool_create = pool->add_subcommand("create", "create a pool on blank devices");
  add_devs(pool_create);
  pool_create->add_option("name", pool_name, "pool name")->required();
  pool_create->add_option("--size", create_capacity,
                          "create missing device files with this many 512-byte sectors");
  pool_create->add_option("--record-size", record_size, "record size in bytes");
  pool_create->add_option("--guid-seed", guid_seed, "deterministic guid seed");

  auto* pool_import = pool->add_subcommand("import", "import and report");
  add_devs(pool_import);
  auto* pool_status = pool->add_subcommand("status", "pool health and space");
  add_devs(pool_status);
  auto* pool_scrub = pool->add_subcommand("scrub", "verify and repair every block");
  add_devs(pool_scrub);

  // ---- fs ----
  auto* fs = app.add_subcommand("fs", "datasets and snapshots");
  fs->require_subcommand(1);
  std::string ds_arg, arg2;
  uint64_t object_id = 0, offset = 0, length = 0;
  std::string io_path;

  auto* fs_create = fs->add_subcommand("create", "create a dataset");
  add_devs(fs_create);
  fs_create->add_option("dataset", ds_arg)->required();

  auto* fs_write = fs->add_subcommand("write", "write bytes into an object");
  add_devs(fs_write);
  fs_write->add_option("dataset", ds_arg)->required();
  fs_write->add_option("object", object_id)->required();
  fs_write->add_option("offset", offset)->required();
  fs_write->add_option("--input", io_path, "data file ('-' or absent: stdin)");

  auto* fs_read = fs->add_subcommand("read", "read bytes from an object");
  add_devs(fs_read);
  fs_read->add_option("dataset", ds_arg)->required();
  fs_read->add_option("object", object_id)->required();
  fs_read->add_option("offset", offset)->required();
  fs_read->add_option("length", length)->required();
  fs_read->add_option("--output", io_path, "output file ('-' or absent: stdout)");

  auto* fs_snapshot = fs->add_subcommand("snapshot", "take dataset@snapshot");
  add_devs(fs_snapshot);
  fs_snapshot->add_option("snapshot", ds_arg, "dataset@snapshot")->required();

  auto* fs_clone = fs->add_subcommand("clone", "writable dataset from a snapshot");
  add_devs(fs_clone);
  fs_clone->add_option("snapshot", ds_arg, "dataset@snapshot")->required();
  fs_clone->add_option("name", arg2, "new dataset name")->required();

  auto* fs_destroy = fs->add_subcommand("destroy-snapshot", "remove a snapshot");
  add_devs(fs_destroy);
  fs_destroy->add_option("snapshot", ds_arg, "dataset@snapshot")->required();

  auto* fs_space = fs->add_subcommand("space", "dataset space accounting");
  add_devs(fs_space);
  fs_space->add_option("dataset", ds_arg)->required();

  // ---- send / recv / diff ----
  bool send_full_flag = false, recv_force = false;
  std::string from_snap;
  auto* send = app.add_subcommand("send", "emit a backup stream");
  add_devs(send);
  send->add_option("snapshot", ds_arg, "dataset@snapshot")->required();
  send->add_flag("--full", send_full_flag, "full stream (default)");
  send->add_option("--from", from_snap, "incremental base snapshot");
  send->add_option("--output", io_path, "stream file ('-' or absent: stdout)");

  auto* recv = app.add_subcommand("recv", "apply a backup stream");
  add_devs(recv);
  recv->add_flag("--force", recv_force, "replace existing dataset / roll back to base");
  recv->add_option("--input", io_path, "stream file ('-' or absent: stdin)");

  auto* diff = app.add_subcommand("diff", "changed ranges between two snapshots");
  add_devs(diff);
  diff->add_option("dataset", ds_arg)->required();
  diff->add_option("snap_a", arg2)->required();
  std::string snap_b;
  diff->add_option("snap_b", snap_b)->required();

  // ---- fault ----
  auto* fault = app.add_subcommand("fault", "inject or clear device faults");
  fault->require_subcommand(1);
  std::string fault_dev, fault_kind = "corrupt";
  uint64_t fault_first = 0, fault_count = 1, fault_param = 0;
  auto* finject = fault->add_subcommand("inject", "inject a fault");
  finject->add_option("device", fault_dev, "device file")->required();
  finject->add_option("--kind", fault_kind, "corrupt|offline|read-error|latency");
  finject->add_option("--first", fault_first, "first sector")->required();
  finject->add_option("--count", fault_count, "sector count");
  finject->add_option("--param", fault_param, "seed or latency ms");
  auto* fclear = fault->add_subcommand("clear", "clear persistent faults");
  fclear->add_option("device", fault_dev, "device file")->required();

  // ---- sim / metrics ----
  std::string scenario_path, workdir = "simwork", out_csv, out_svg, out_events, series;
  uint64_t seed = 0;
  bool seed_set = false;
  auto add_sim_opts = [&](CLI::App* cmd, bool need_scenario = true) {
    if (need_scenario) cmd->add_option("scenario", scenario_path)->required();
    cmd->add_option("--seed", seed)->each([&](const std::string&) { seed_set = true; });
    cmd->add_option("--workdir", workdir, "directory for simulated device files");
  };
  auto* sim = app.add_subcommand("sim", "deterministic replication simulation");
  auto* sim_run = sim->add_subcommand("run", "run a scenario");
  add_sim_opts(sim_run);
  sim_run->add_option("--out-csv", out_csv, "write wide metrics CSV");
  sim_run->add_option("--out-svg", out_svg, "write SVG plot");
  sim_run->add_option("--series", series, "comma-separated series for the plot");
  sim_run->add_option("--out-events", out_events, "write the event log");

  auto* metrics = app.add_subcommand("metrics", "run a scenario, export its metrics");
  auto* mexport = metrics->add_subcommand("export", "metrics CSV");
  add_sim_opts(mexport);
  mexport->add_option("--output", out_csv, "CSV path")->required();
  auto* mplot = metrics->add_subcommand("plot", "metrics SVG");
  add_sim_opts(mplot);
  mplot->add_option("--output", out_svg, "SVG path")->required();
  mplot->add_option("--series", series, "comma-separated series list");

  // let --format (and future globals) appear after the subcommand name
  std::function<void(CLI::App*)> allow_fallthrough = [&](CLI::App* a) {
    for (auto* sub : a->get_subcommands({})) {
      sub->fallthrough();
      allow_fallthrough(sub);
    }
  };
  allow_fallthrough(&app);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) ? 1 : 0;
  }
  bool json_fmt = format == "json";

  if (*pool_create) {
    if (create_capacity) {
      for (const auto& d : devs) {
        std::ifstream probe(d);
        if (!probe.good()) check(pf_device_create(d.c_str(), create_capacity, 512));
      }
    }
    if (!guid_seed) {
      bool have = false;
      uint64_t es = env_seed(&have);
      if (have) guid_seed = es;
    }
    PoolHandle h;
    auto ptrs = cptrs(devs);
    check(pf_pool_create(ptrs.data(), ptrs.size(), pool_name.c_str(), record_size, guid_seed,
                         &h.p));
    std::cout << "created pool '" << pool_name << "' with " << devs.size() << " devices\n";
    return 0;
  }
  if (*pool_import || *pool_status) {
    PoolHandle h;
    import_pool(devs, h);
    char* js = nullptr;
    check(pf_pool_status(h.p, &js));
    FreeOnExit fj{js};
    if (json_fmt) {
      std::cout << js << "\n";
    } else {
      // terse human summary pulled from the JSON fields we just produced
      std::string s = js;
      auto field = [&](const std::string& key) {
        auto pos = s.find("\"" + key + "\"");
        if (pos == std::string::npos) return std::string();
        pos = s.find(':', pos) + 1;
        auto end = s.find_first_of(",\n}", pos);
        std::string v = s.substr(pos, end - pos);
        while (!v.empty() && (v.front() == ' ' || v.front() == '"')) v.erase(v.begin());
        while (!v.empty() && (v.back() == ' ' || v.back() == '"')) v.pop_back();
        return v;
      };
      std::cout << "pool: " << field("name") << "\nstate: " << field("state")
                << "\nchildren: d=" << field("children") << "\ntxg: " << field("committed_txg")
                << "\n";
    }
    return 0;
  }
  if (*pool_scrub) {
    PoolHandle h;
    import_pool(devs, h);
    uint64_t r[4];
    check(pf_pool_scrub(h.p, r));
    if (json_fmt)
      std::cout << "{\n  \"examined\": " << r[0] << ",\n  \"errors_found\": " << r[1]
                << ",\n  \"repaired\": " << r[2] << ",\n  \"permanent\": " << r[3] << "\n}\n";
    else
      std::cout << "scrub: examined " << r[0] << " blocks, found " << r[1] << " errors, repaired "
                << r[2] << ", permanent " << r[3] << "\n";
    return r[3] == 0 ? 0 : 2;
  }

  if (*fs_create) {
    PoolHandle h;
    import_pool(devs, h);
    check(pf_fs_create(h.p, ds_arg.c_str()));
    std::cout << "created dataset '" << ds_arg << "'\n";
    return 0;
  }
  if (*fs_write) {
    PoolHandle h;
    import_pool(devs, h);
    auto data = read_input(io_path);
    check(pf_fs_write(h.p, ds_arg.c_str(), object_id, offset, data.data(), data.size()));
    std::cout << "wrote " << data.size() << " bytes\n";
    return 0;
  }
  if (*fs_read) {
    PoolHandle h;
    import_pool(devs, h);
    uint8_t* data = nullptr;
    size_t n = 0;
    check(pf_fs_read(h.p, ds_arg.c_str(), object_id, offset, length, &data, &n));
    FreeOnExit fd{data};
    write_output(io_path, data, n);
    return 0;
  }
  if (*fs_snapshot) {
    auto [ds, snap] = split_at(ds_arg);
    PoolHandle h;
    import_pool(devs, h);
    check(pf_fs_snapshot(h.p, ds.c_str(), snap.c_str()));
    std::cout << "snapshot " << ds_arg << "\n";
    return 0;
  }
  if (*fs_clone) {
    auto [ds, snap] = split_at(ds_arg);
    PoolHandle h;
    import_pool(devs, h);
    check(pf_fs_clone(h.p, ds.c_str(), snap.c_str(), arg2.c_str()));
    std::cout << "cloned " << ds_arg << " -> " << arg2 << "\n";
    return 0;
  }
  if (*fs_destroy) {
    auto [ds, snap] = split_at(ds_arg);
    PoolHandle h;
    import_pool(devs, h);
    uint64_t freed = 0;
    check(pf_fs_destroy_snapshot(h.p, ds.c_str(), snap.c_str(), &freed));
    std::cout << "destroyed " << ds_arg << ", freed " << freed << " sectors\n";
    return 0;
  }
  if (*fs_space) {
    PoolHandle h;
    import_pool(devs, h);
    char* js = nullptr;
    check(pf_fs_space(h.p, ds_arg.c_str(), &js));
    FreeOnExit fj{js};
    std::cout << js << "\n";
    return 0;
  }

  if (*send) {
    auto [ds, snap] = split_at(ds_arg);
    if (send_full_flag && !from_snap.empty()) {
      std::cerr << "error: --full and --from are mutually exclusive\n";
      return 1;
    }
    PoolHandle h;
    import_pool(devs, h);
    uint8_t* data = nullptr;
    size_t n = 0;
    check(pf_send(h.p, ds.c_str(), snap.c_str(), from_snap.empty() ? nullptr : from_snap.c_str(),
                  &data, &n));
    FreeOnExit fd{data};
    write_output(io_path, data, n);
    return 0;
  }
  if (*recv) {
    auto data = read_input(io_path);
    PoolHandle h;
    import_pool(devs, h);
    char* js = nullptr;
    check(pf_recv(h.p, data.data(), data.size(), recv_force ? 1 : 0, &js));
    FreeOnExit fj{js};
    if (json_fmt) std::cout << js << "\n";
    else std::cout << "received " << data.size() << " bytes\n";
    return 0;
  }
  if (*diff) {
    PoolHandle h;
    import_pool(devs, h);
    char* js = nullptr;
    check(pf_diff(h.p, ds_arg.c_str(), arg2.c_str(), snap_b.c_str(), &js));
    FreeOnExit fj{js};
    std::cout << js << "\n";
    return 0;
  }

  if (*finject) {
    check(pf_fault_inject(fault_dev.c_str(), fault_kind.c_str(), fault_first, fault_count,
                          fault_param));
    std::cout << "injected " << fault_kind << " at sector " << fault_first << "+" << fault_count
              << "\n";
    return 0;
  }
  if (*fclear) {
    check(pf_fault_clear(fault_dev.c_str()));
    std::cout << "faults cleared\n";
    return 0;
  }

  if (*sim_run || *mexport || *mplot) {
    if (!seed_set) {
      bool have = false;
      uint64_t es = env_seed(&have);
      if (have) {
        seed = es;
        seed_set = true;
      }
    }
    char* js = nullptr;
    int rc = pf_sim_run(scenario_path.c_str(), seed_set ? 1 : 0, seed, workdir.c_str(),
                        out_csv.empty() ? nullptr : out_csv.c_str(),
                        out_svg.empty() ? nullptr : out_svg.c_str(),
                        series.empty() ? nullptr : series.c_str(),
                        out_events.empty() ? nullptr : out_events.c_str(), &js);
    if (rc != PF_OK) die(rc);
    FreeOnExit fj{js};
    if (*mexport) std::cout << "metrics written to " << out_csv << "\n";
    else if (*mplot) std::cout << "plot written to " << out_svg << "\n";
    else if (json_fmt) std::cout << js << "\n";
    else std::cout << "scenario complete\n" << js << "\n";
    return 0;
  }

  std::cerr << "error: no subcommand\n";
  return 1;
}
