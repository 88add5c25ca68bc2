#pragma once

#include <memory>
#include <string>
#include <vector>

#include "metrics.hpp"
#include "pool.hpp"
#include "scenario.hpp"

namespace poolforge {

// Transfer model: latency + nbytes/bandwidth, sent as 64 KiB segments that
// are lost independently with loss_prob; each retry of a segment charges the
// link latency plus the segment's transmission time again.
uint64_t link_transfer(const LinkSpec& link, uint64_t nbytes, uint64_t start_ms, Rng& rng);

struct TickReport {
  uint64_t index = 0;          // 1-based
  uint64_t t_ms = 0;           // tick (and snapshot) time
  std::string snapshot;
  uint64_t stream_bytes = 0;   // logical stream size
  uint64_t wire_bytes = 0;     // after dedup stubs
  uint64_t completion_ms = 0;
  uint64_t lag_ms = 0;
  bool skipped = false;        // previous transfer still in flight
  bool failed = false;
  std::string error;
};

struct SimResult {
  MetricsBundle metrics;
  std::vector<std::string> event_log;
  std::vector<TickReport> ticks;
  uint64_t ticks_run = 0;        // attempted (skipped ones excluded)
  uint64_t ticks_succeeded = 0;
  Digest source_hash{};          // final replicated snapshot, both sides
  Digest target_hash{};
  std::string final_snapshot;

  std::string event_log_text() const;
};

// Runs a scenario on file-backed pools created under workdir (existing device
// files there are replaced). Throws scenario_failed if the end-of-run
// consistency check fails.
SimResult run_scenario(const Scenario& sc, const std::string& workdir);

}  // namespace poolforge
