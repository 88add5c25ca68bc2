#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "common.hpp"

namespace poolforge {

// Scenario config grammar (INI-style, UTF-8, '#' or ';' comments):
//
//   seed = 7                     # top level, before any section
//   duration = 300               # virtual seconds
//
//   [node <name>]
//   children = 4                 # vdev count, 2..16
//   capacity = 32M               # bytes per child (K/M/G suffixes)
//   record_size = 128K           # optional, default 128K
//
//   [link <src> <dst>]
//   bandwidth = 10M              # bytes per virtual second, > 0
//   latency = 50                 # ms
//   loss_prob = 0.0              # [0, 1)
//
//   [workload]
//   write = <t_s> <object_id> <offset> <length> <pattern>
//   corrupt = <t_s>              # flip one byte of the next replication stream
//
//   [policy]
//   interval = 10                # seconds between replication ticks
//   mode = discrete              # or cumulative
//   dedup = off                  # or on
//
// Numeric values accept K/M/G binary suffixes. Unknown keys, missing
// sections, and out-of-range values are parse errors carrying a line number.

struct NodeSpec {
  std::string name;
  int children = 4;
  uint64_t capacity_bytes = 32 * 1024 * 1024;  // per child
  uint32_t record_size = 128 * 1024;
};

struct LinkSpec {
  std::string src, dst;
  uint64_t bandwidth = 0;  // bytes per virtual second
  uint64_t latency_ms = 0;
  double loss_prob = 0.0;
};

struct WriteOpSpec {
  uint64_t t_ms;
  uint64_t object_id;
  uint64_t offset;
  uint64_t length;
  std::string pattern;  // seeds a deterministic byte generator
};

struct ReplicationPolicy {
  uint64_t interval_s = 10;
  bool cumulative = false;
  bool dedup = false;
};

struct Scenario {
  uint64_t seed = 0;
  uint64_t duration_s = 300;
  std::vector<NodeSpec> nodes;
  std::vector<LinkSpec> links;
  std::vector<WriteOpSpec> writes;
  std::vector<uint64_t> corrupt_at_ms;  // sabotage the next stream after t
  ReplicationPolicy policy;
};

Scenario load_scenario(const std::string& text);
Scenario load_scenario_file(const std::string& path);

// Deterministic workload payload: same pattern string -> same bytes at every
// offset, independent of write splitting.
std::vector<uint8_t> pattern_bytes(const std::string& pattern, uint64_t offset, size_t len);

}  // namespace poolforge
